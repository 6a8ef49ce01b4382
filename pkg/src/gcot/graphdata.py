"""Graph data model and the canonical on-disk dataset format.

A dataset directory holds meta.json, nodes.tsv, features.tsv, edges.tsv
and (for multi-graph datasets) graphs.tsv.  Node ids are global and
contiguous in file order; edges are undirected and stored once.  Loading
validates the files against the counts declared in meta.json.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .errors import DataError, DimensionError
from .numcore import Tensor


@dataclass
class DatasetMeta:
    name: str
    num_nodes: int
    num_graphs: int
    feature_dim: int
    node_classes: int | None
    graph_classes: int | None
    task: str  # "node" or "graph"
    edge_convention: str = "undirected-once"


@dataclass
class GraphRecord:
    """One graph: dense features, undirected edge list, optional labels.

    Nodes are 0..n-1 locally.  Edges carry no self-loops and no duplicates
    (self-loops appear only inside adjacency normalization).
    """

    features: Tensor
    edges: list[tuple[int, int]]
    node_labels: np.ndarray | None = None
    graph_label: int | None = None
    _adjacency_sets: list[set[int]] | None = field(default=None, repr=False)

    @property
    def num_nodes(self) -> int:
        return self.features.rows

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def validate(self):
        n = self.num_nodes
        seen = set()
        for u, v in self.edges:
            if not (0 <= u < n and 0 <= v < n):
                raise DataError(f"edge ({u},{v}) references a node outside 0..{n - 1}")
            if u == v:
                raise DataError(f"self-loop on node {u} is not allowed in stored edges")
            key = (min(u, v), max(u, v))
            if key in seen:
                raise DataError(f"duplicate edge ({u},{v})")
            seen.add(key)
        if self.node_labels is not None and len(self.node_labels) != n:
            raise DataError("node_labels length does not match node count")

    def neighbor_sets(self) -> list[set[int]]:
        if self._adjacency_sets is None:
            sets: list[set[int]] = [set() for _ in range(self.num_nodes)]
            for u, v in self.edges:
                sets[u].add(v)
                sets[v].add(u)
            object.__setattr__(self, "_adjacency_sets", sets)
        return self._adjacency_sets


@dataclass
class GraphCollection:
    graphs: list[GraphRecord]
    meta: DatasetMeta

    @property
    def num_graphs(self) -> int:
        return len(self.graphs)

    def single(self) -> GraphRecord:
        if len(self.graphs) != 1:
            raise DataError(f"expected a single-graph dataset, found {len(self.graphs)}")
        return self.graphs[0]


# ---------------------------------------------------------------------------
# adjacency and readout
# ---------------------------------------------------------------------------


def _adjacency_csr(g: GraphRecord) -> sp.csr_matrix:
    """Symmetric D^-1/2 (A + I) D^-1/2 as a sparse matrix."""
    n = g.num_nodes
    rows = [np.arange(n)]
    cols = [np.arange(n)]
    for u, v in g.edges:
        rows.append([u, v])
        cols.append([v, u])
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    data = np.ones(len(rows))
    a = sp.csr_matrix((data, (rows, cols)), shape=(n, n))
    deg = np.asarray(a.sum(axis=1)).reshape(-1)
    inv_sqrt = 1.0 / np.sqrt(deg)
    d = sp.diags(inv_sqrt)
    return (d @ a @ d).tocsr()


def normalized_adjacency(g: GraphRecord) -> Tensor:
    """Dense symmetric-normalized adjacency with self-loops."""
    return Tensor(_adjacency_csr(g).toarray())


def adjacency_operator(g: GraphRecord) -> sp.csr_matrix:
    """Same matrix as normalized_adjacency, kept sparse for large graphs."""
    return _adjacency_csr(g)


def readout_sum(h: Tensor, g: GraphRecord) -> Tensor:
    """Graph embedding: column-wise sum of the node embedding rows."""
    if h.rows != g.num_nodes:
        raise DimensionError(
            f"readout row count {h.rows} != node count {g.num_nodes}"
        )
    from .numcore import const_mm

    return const_mm(np.ones((1, h.rows)), h)


# ---------------------------------------------------------------------------
# union graph for multi-graph collections
# ---------------------------------------------------------------------------


@dataclass
class UnionGraph:
    """All graphs of a collection stacked into one disconnected graph.

    Encoding the union equals encoding each graph separately because no
    edge crosses a block; membership is a sparse (num_graphs x num_nodes)
    0/1 matrix used for per-graph sum readout.
    """

    record: GraphRecord
    offsets: np.ndarray  # start index of each graph's node block
    membership: sp.csr_matrix
    graph_labels: np.ndarray | None

    @property
    def num_graphs(self) -> int:
        return len(self.offsets)


def build_union(collection: GraphCollection) -> UnionGraph:
    feats = []
    edges: list[tuple[int, int]] = []
    offsets = []
    labels = []
    offset = 0
    for g in collection.graphs:
        offsets.append(offset)
        feats.append(g.features.data)
        edges.extend((u + offset, v + offset) for u, v in g.edges)
        labels.append(-1 if g.graph_label is None else g.graph_label)
        offset += g.num_nodes
    record = GraphRecord(features=Tensor(np.vstack(feats)), edges=edges)
    rows = np.repeat(np.arange(len(offsets)), [g.num_nodes for g in collection.graphs])
    membership = sp.csr_matrix(
        (np.ones(offset), (rows, np.arange(offset))),
        shape=(len(offsets), offset),
    )
    graph_labels = np.array(labels) if any(l >= 0 for l in labels) else None
    return UnionGraph(record, np.array(offsets), membership, graph_labels)


# ---------------------------------------------------------------------------
# canonical dataset directory
# ---------------------------------------------------------------------------

_REQUIRED_FILES = ("meta.json", "nodes.tsv", "features.tsv", "edges.tsv")


def _fmt(x: float) -> str:
    return str(int(x)) if x == int(x) and abs(x) < 1e15 else repr(float(x))


def load_dataset(path: str | Path) -> GraphCollection:
    """Load and validate a canonical dataset directory."""
    root = Path(path)
    if not root.is_dir():
        raise DataError(f"dataset directory not found: {root}")
    for name in _REQUIRED_FILES:
        if not (root / name).is_file():
            raise DataError(f"missing dataset file: {root / name}")

    try:
        raw = json.loads((root / "meta.json").read_text())
    except json.JSONDecodeError as err:
        raise DataError(f"meta.json is not valid JSON: {err}") from err
    try:
        meta = DatasetMeta(
            name=raw["name"],
            num_nodes=int(raw["num_nodes"]),
            num_graphs=int(raw["num_graphs"]),
            feature_dim=int(raw["feature_dim"]),
            node_classes=raw.get("node_classes"),
            graph_classes=raw.get("graph_classes"),
            task=raw["task"],
            edge_convention=raw.get("edge_convention", "undirected-once"),
        )
    except KeyError as err:
        raise DataError(f"meta.json missing key {err}") from err
    if meta.task not in ("node", "graph"):
        raise DataError(f"meta.json task must be 'node' or 'graph', got {meta.task!r}")

    node_graph = np.empty(meta.num_nodes, dtype=np.int64)
    node_label = np.empty(meta.num_nodes, dtype=np.int64)
    lines = (root / "nodes.tsv").read_text().splitlines()
    if len(lines) != meta.num_nodes:
        raise DataError(
            f"nodes.tsv has {len(lines)} rows, meta declares {meta.num_nodes}"
        )
    for i, line in enumerate(lines):
        parts = line.split("\t")
        if len(parts) != 3:
            raise DataError(f"nodes.tsv line {i + 1}: expected 3 columns")
        nid, gid, label = (int(p) for p in parts)
        if nid != i:
            raise DataError(f"nodes.tsv line {i + 1}: node ids must be contiguous 0..n-1")
        node_graph[i] = gid
        node_label[i] = label

    features = np.empty((meta.num_nodes, meta.feature_dim))
    lines = (root / "features.tsv").read_text().splitlines()
    if len(lines) != meta.num_nodes:
        raise DataError(
            f"features.tsv has {len(lines)} rows, meta declares {meta.num_nodes}"
        )
    for i, line in enumerate(lines):
        parts = line.split("\t")
        if len(parts) != meta.feature_dim + 1:
            raise DataError(
                f"features.tsv line {i + 1}: expected {meta.feature_dim + 1} columns"
            )
        if int(parts[0]) != i:
            raise DataError(f"features.tsv line {i + 1}: node id out of order")
        try:
            features[i] = [float(p) for p in parts[1:]]
        except ValueError as err:
            raise DataError(f"features.tsv line {i + 1}: non-numeric feature") from err
    if not np.isfinite(features).all():
        raise DataError("features.tsv holds non-finite values")

    edges = []
    for i, line in enumerate((root / "edges.tsv").read_text().splitlines()):
        parts = line.split("\t")
        if len(parts) != 2:
            raise DataError(f"edges.tsv line {i + 1}: expected 2 columns")
        u, v = int(parts[0]), int(parts[1])
        for x in (u, v):
            if not 0 <= x < meta.num_nodes:
                raise DataError(f"edges.tsv line {i + 1}: node {x} does not exist")
        if node_graph[u] != node_graph[v]:
            raise DataError(f"edges.tsv line {i + 1}: edge crosses graphs")
        edges.append((u, v))

    graph_labels: dict[int, int] = {}
    if meta.num_graphs > 1 or (root / "graphs.tsv").is_file():
        if not (root / "graphs.tsv").is_file():
            raise DataError(f"missing dataset file: {root / 'graphs.tsv'}")
        lines = (root / "graphs.tsv").read_text().splitlines()
        if len(lines) != meta.num_graphs:
            raise DataError(
                f"graphs.tsv has {len(lines)} rows, meta declares {meta.num_graphs}"
            )
        for i, line in enumerate(lines):
            parts = line.split("\t")
            if len(parts) != 2:
                raise DataError(f"graphs.tsv line {i + 1}: expected 2 columns")
            gid, label = int(parts[0]), int(parts[1])
            if gid != i:
                raise DataError(f"graphs.tsv line {i + 1}: graph ids must be contiguous")
            graph_labels[gid] = label

    gids = sorted(set(node_graph.tolist()))
    if gids != list(range(meta.num_graphs)):
        raise DataError(
            f"nodes.tsv references graph ids {gids}, meta declares {meta.num_graphs} graphs"
        )

    graphs = []
    for gid in range(meta.num_graphs):
        idx = np.flatnonzero(node_graph == gid)
        if len(idx) == 0:
            raise DataError(f"graph {gid} has no nodes")
        if not np.array_equal(idx, np.arange(idx[0], idx[0] + len(idx))):
            raise DataError(f"graph {gid}: node block must be contiguous in file order")
        local = {int(n): int(n - idx[0]) for n in idx}
        g_edges = [
            (local[u], local[v]) for u, v in edges if int(node_graph[u]) == gid
        ]
        record = GraphRecord(
            features=Tensor(features[idx]),
            edges=g_edges,
            node_labels=node_label[idx].copy(),
            graph_label=graph_labels.get(gid),
        )
        record.validate()
        graphs.append(record)

    collection = GraphCollection(graphs=graphs, meta=meta)
    _check_counts(collection)
    return collection


def _check_counts(c: GraphCollection):
    total_nodes = sum(g.num_nodes for g in c.graphs)
    if total_nodes != c.meta.num_nodes:
        raise DataError(
            f"node count {total_nodes} does not match meta {c.meta.num_nodes}"
        )
    for g in c.graphs:
        if g.features.cols != c.meta.feature_dim:
            raise DataError(
                f"feature dim {g.features.cols} does not match meta {c.meta.feature_dim}"
            )
    if c.meta.num_graphs > 1:
        if any(g.graph_label is None for g in c.graphs):
            raise DataError("multi-graph dataset requires a graph_label on every record")


def write_dataset(collection: GraphCollection, path: str | Path) -> Path:
    """Write a collection back in canonical form (load/write round-trips)."""
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    meta = collection.meta
    (root / "meta.json").write_text(
        json.dumps(
            {
                "name": meta.name,
                "num_nodes": meta.num_nodes,
                "num_graphs": meta.num_graphs,
                "feature_dim": meta.feature_dim,
                "node_classes": meta.node_classes,
                "graph_classes": meta.graph_classes,
                "task": meta.task,
                "edge_convention": meta.edge_convention,
            },
            indent=2,
        )
        + "\n"
    )
    node_lines, feat_lines, edge_lines, graph_lines = [], [], [], []
    offset = 0
    for gid, g in enumerate(collection.graphs):
        labels = g.node_labels if g.node_labels is not None else [-1] * g.num_nodes
        for i in range(g.num_nodes):
            node_lines.append(f"{offset + i}\t{gid}\t{int(labels[i])}")
            feat_lines.append(
                f"{offset + i}\t" + "\t".join(_fmt(x) for x in g.features.data[i])
            )
        for u, v in g.edges:
            edge_lines.append(f"{offset + u}\t{offset + v}")
        if g.graph_label is not None:
            graph_lines.append(f"{gid}\t{g.graph_label}")
        offset += g.num_nodes
    (root / "nodes.tsv").write_text("\n".join(node_lines) + "\n")
    (root / "features.tsv").write_text("\n".join(feat_lines) + "\n")
    (root / "edges.tsv").write_text("\n".join(edge_lines) + ("\n" if edge_lines else ""))
    if graph_lines:
        (root / "graphs.tsv").write_text("\n".join(graph_lines) + "\n")
    return root
