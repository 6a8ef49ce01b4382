import zipfile

import numpy as np
import pytest
import scipy.sparse as sp

from canonical_io import CORA_FIXTURE, MUTAG_FIXTURE, read_canonical


@pytest.fixture(scope="session")
def cora_npz(tmp_path_factory):
    """npz bundle in the citation-network format, built from the bundled
    fixture so the published Cora shape statistics hold."""
    meta, nodes, features, edges, _ = read_canonical(CORA_FIXTURE)
    n = meta["num_nodes"]
    rows = [u for u, v in edges] + [v for u, v in edges]
    cols = [v for u, v in edges] + [u for u, v in edges]
    adj = sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
    attr = sp.csr_matrix(features)
    labels = np.array([label for _, _, label in nodes], dtype=np.int64)
    path = tmp_path_factory.mktemp("npz") / "cora.npz"
    np.savez(
        path,
        adj_data=adj.data, adj_indices=adj.indices, adj_indptr=adj.indptr,
        adj_shape=np.array(adj.shape),
        attr_data=attr.data, attr_indices=attr.indices, attr_indptr=attr.indptr,
        attr_shape=np.array(attr.shape),
        labels=labels,
    )
    return path


@pytest.fixture(scope="session")
def mutag_zip(tmp_path_factory):
    """TU-format zip built from the bundled molecular fixture; node labels
    are recovered from the one-hot features, graph labels are shifted to
    {1, 2} to exercise the label remapping."""
    meta, nodes, features, edges, graphs = read_canonical(MUTAG_FIXTURE)
    node_labels = np.argmax(features, axis=1)
    assert len(set(node_labels.tolist())) == meta["feature_dim"]

    a_lines = []
    for u, v in edges:
        a_lines.append(f"{u + 1}, {v + 1}")
        a_lines.append(f"{v + 1}, {u + 1}")
    indicator = [str(gid + 1) for _, gid, _ in nodes]
    graph_labels = [str(label + 1) for _, label in graphs]
    node_label_lines = [str(int(l)) for l in node_labels]

    path = tmp_path_factory.mktemp("tu") / "MUTAG.zip"
    with zipfile.ZipFile(path, "w") as zf:
        zf.writestr("MUTAG/MUTAG_A.txt", "\n".join(a_lines) + "\n")
        zf.writestr("MUTAG/MUTAG_graph_indicator.txt", "\n".join(indicator) + "\n")
        zf.writestr("MUTAG/MUTAG_graph_labels.txt", "\n".join(graph_labels) + "\n")
        zf.writestr("MUTAG/MUTAG_node_labels.txt", "\n".join(node_label_lines) + "\n")
    return path


@pytest.fixture
def geomgcn_dir(tmp_path):
    """Tiny webpage-network pair of files in the two-file text format."""
    (tmp_path / "out1_graph_edges.txt").write_text(
        "id1\tid2\n0\t1\n1\t2\n2\t0\n3\t1\n3\t3\n"  # includes a self-loop to drop
    )
    (tmp_path / "out1_node_feature_label.txt").write_text(
        "node_id\tfeature\tlabel\n"
        "0\t1,0,0,1\t0\n"
        "1\t0,1,0,0\t1\n"
        "2\t1,1,0,0\t0\n"
        "3\t0,0,1,1\t2\n"
    )
    return tmp_path
