"""Parsers for the upstream archive formats and the canonical writer.

Three source formats are supported: the npz citation/co-purchase bundles
(CSR adjacency and attributes), the TU molecular zip archives (edge list,
graph indicator, labels), and the two-file heterophily text format (edge
list plus per-node feature/label lines).  All of them reduce to one parsed
form that a single writer turns into a canonical dataset directory:
meta.json, nodes.tsv, features.tsv, edges.tsv and graphs.tsv.

Edges are symmetrized, deduplicated, stripped of self-loops and stored
once with the smaller endpoint first; the convention is recorded in
meta.json so published edge counts can be compared knowingly.
"""

from __future__ import annotations

import io
import json
import zipfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .sources import SourceSpec


class ArchiveError(RuntimeError):
    pass


@dataclass
class ParsedDataset:
    name: str
    task: str
    features: np.ndarray          # n x d
    node_labels: np.ndarray       # n, -1 where absent
    node_graph: np.ndarray        # n, graph id per node (all 0 for single graph)
    edges: list[tuple[int, int]]  # canonical: u < v, unique, no self-loops
    graph_labels: np.ndarray | None  # per graph, or None for single-graph


def canonical_edges(pairs) -> list[tuple[int, int]]:
    seen = set()
    for u, v in pairs:
        u, v = int(u), int(v)
        if u == v:
            continue
        seen.add((min(u, v), max(u, v)))
    return sorted(seen)


# ---------------------------------------------------------------------------
# npz bundles (citation and co-purchase networks)
# ---------------------------------------------------------------------------


def parse_npz(path: Path, spec: SourceSpec) -> ParsedDataset:
    # only the numeric arrays are touched; auxiliary object arrays (name
    # lists) stay unloaded, so pickle support stays off for safety
    try:
        loader = np.load(path, allow_pickle=False)
    except Exception as err:
        raise ArchiveError(f"unreadable npz archive {path}: {err}") from err
    try:
        adj = sp.csr_matrix(
            (loader["adj_data"], loader["adj_indices"], loader["adj_indptr"]),
            shape=tuple(loader["adj_shape"]),
        )
        if "attr_data" in loader:
            attrs = sp.csr_matrix(
                (loader["attr_data"], loader["attr_indices"], loader["attr_indptr"]),
                shape=tuple(loader["attr_shape"]),
            ).toarray()
        else:
            attrs = np.asarray(loader["attr_matrix"])
        labels = np.asarray(loader["labels"], dtype=np.int64)
    except KeyError as err:
        raise ArchiveError(f"npz archive {path} is missing array {err}") from err
    except Exception as err:
        raise ArchiveError(f"unreadable npz archive {path}: {err}") from err
    n = adj.shape[0]
    if attrs.shape[0] != n or labels.shape[0] != n:
        raise ArchiveError("npz arrays disagree on the node count")
    coo = adj.tocoo()
    return ParsedDataset(
        name=spec.name,
        task="node",
        features=attrs.astype(np.float64),
        node_labels=labels,
        node_graph=np.zeros(n, dtype=np.int64),
        edges=canonical_edges(zip(coo.row, coo.col)),
        graph_labels=None,
    )


# ---------------------------------------------------------------------------
# TU molecular archives
# ---------------------------------------------------------------------------


def _tu_member(zf: zipfile.ZipFile, suffix: str) -> list[str] | None:
    for name in zf.namelist():
        if name.endswith(suffix):
            with zf.open(name) as f:
                return io.TextIOWrapper(f).read().splitlines()
    return None


def parse_tu(path: Path, spec: SourceSpec) -> ParsedDataset:
    try:
        zf = zipfile.ZipFile(path)
    except (OSError, zipfile.BadZipFile) as err:
        raise ArchiveError(f"unreadable zip archive {path}: {err}") from err
    with zf:
        edges_raw = _tu_member(zf, "_A.txt")
        indicator = _tu_member(zf, "_graph_indicator.txt")
        graph_labels_raw = _tu_member(zf, "_graph_labels.txt")
        node_labels_raw = _tu_member(zf, "_node_labels.txt")
        node_attrs_raw = _tu_member(zf, "_node_attributes.txt")
    if edges_raw is None or indicator is None or graph_labels_raw is None:
        raise ArchiveError(
            f"{path} is not a TU archive (needs _A.txt, _graph_indicator.txt, "
            f"_graph_labels.txt)"
        )

    node_graph_1b = np.array([int(x) for x in indicator if x.strip()])
    n = len(node_graph_1b)
    # order nodes graph-contiguously, preserving original order inside a graph
    order = np.argsort(node_graph_1b, kind="stable")
    remap = np.empty(n, dtype=np.int64)
    remap[order] = np.arange(n)
    node_graph = node_graph_1b[order] - node_graph_1b.min()

    pairs = []
    for line in edges_raw:
        if not line.strip():
            continue
        u, v = (int(p) for p in line.replace(",", " ").split())
        pairs.append((remap[u - 1], remap[v - 1]))
    edges = canonical_edges(pairs)

    raw_graph_labels = np.array([int(float(x)) for x in graph_labels_raw if x.strip()])
    classes = {c: i for i, c in enumerate(sorted(set(raw_graph_labels.tolist())))}
    graph_labels = np.array([classes[c] for c in raw_graph_labels])

    blocks: list[np.ndarray] = []
    if node_labels_raw is not None:
        raw = np.array([int(float(x)) for x in node_labels_raw if x.strip()])[order]
        vocab = sorted(set(raw.tolist()))
        onehot = np.zeros((n, len(vocab)))
        col = {c: i for i, c in enumerate(vocab)}
        onehot[np.arange(n), [col[c] for c in raw]] = 1.0
        blocks.append(onehot)
    if node_attrs_raw is not None:
        attrs = np.array(
            [[float(p) for p in line.replace(",", " ").split()]
             for line in node_attrs_raw if line.strip()]
        )[order]
        blocks.append(attrs)
    if not blocks:
        # degree as the fallback feature when the archive carries nothing
        deg = np.zeros((n, 1))
        for u, v in edges:
            deg[u, 0] += 1
            deg[v, 0] += 1
        blocks.append(deg)
    features = np.hstack(blocks)

    return ParsedDataset(
        name=spec.name,
        task="graph",
        features=features.astype(np.float64),
        node_labels=np.full(n, -1, dtype=np.int64),
        node_graph=node_graph.astype(np.int64),
        edges=edges,
        graph_labels=graph_labels,
    )


# ---------------------------------------------------------------------------
# heterophily webpage networks (two text files)
# ---------------------------------------------------------------------------


def parse_geomgcn(edge_path: Path, feature_path: Path, spec: SourceSpec) -> ParsedDataset:
    def data_lines(path):
        lines = Path(path).read_text().splitlines()
        out = []
        for i, line in enumerate(lines):
            if not line.strip():
                continue
            if i == 0 and not line.split()[0].isdigit():
                continue  # header
            out.append(line)
        return out

    feats, labels = {}, {}
    for line in data_lines(feature_path):
        try:
            nid, feat, label = line.split("\t")
            feats[int(nid)] = [float(x) for x in feat.split(",")]
            labels[int(nid)] = int(label)
        except ValueError as err:
            raise ArchiveError(f"bad feature line in {feature_path}: {line!r}") from err
    if not feats:
        raise ArchiveError(f"{feature_path} holds no nodes")
    n = max(feats) + 1
    if sorted(feats) != list(range(n)):
        raise ArchiveError(f"{feature_path} node ids are not contiguous")
    dim = len(next(iter(feats.values())))
    features = np.zeros((n, dim))
    node_labels = np.full(n, -1, dtype=np.int64)
    for nid in range(n):
        if len(feats[nid]) != dim:
            raise ArchiveError(f"{feature_path} has inconsistent feature lengths")
        features[nid] = feats[nid]
        node_labels[nid] = labels[nid]

    pairs = []
    for line in data_lines(edge_path):
        try:
            u, v = (int(p) for p in line.split())
        except ValueError as err:
            raise ArchiveError(f"bad edge line in {edge_path}: {line!r}") from err
        if not (0 <= u < n and 0 <= v < n):
            raise ArchiveError(f"edge ({u}, {v}) references a missing node")
        pairs.append((u, v))

    return ParsedDataset(
        name=spec.name,
        task="node",
        features=features,
        node_labels=node_labels,
        node_graph=np.zeros(n, dtype=np.int64),
        edges=canonical_edges(pairs),
        graph_labels=None,
    )


# ---------------------------------------------------------------------------
# canonical writer
# ---------------------------------------------------------------------------


def _fmt(x: float) -> str:
    return str(int(x)) if x == int(x) and abs(x) < 1e15 else repr(float(x))


def write_canonical(parsed: ParsedDataset, out_dir: str | Path) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    n, dim = parsed.features.shape
    num_graphs = int(parsed.node_graph.max()) + 1
    node_classes = (
        int(parsed.node_labels.max()) + 1 if (parsed.node_labels >= 0).any() else None
    )
    graph_classes = (
        int(parsed.graph_labels.max()) + 1 if parsed.graph_labels is not None else None
    )
    meta = {
        "name": parsed.name,
        "num_nodes": n,
        "num_graphs": num_graphs,
        "feature_dim": dim,
        "node_classes": node_classes,
        "graph_classes": graph_classes,
        "task": parsed.task,
        "edge_convention": "undirected-once",
    }
    (out / "meta.json").write_text(json.dumps(meta, indent=2) + "\n")

    node_lines = [
        f"{i}\t{int(parsed.node_graph[i])}\t{int(parsed.node_labels[i])}"
        for i in range(n)
    ]
    (out / "nodes.tsv").write_text("\n".join(node_lines) + "\n")
    feat_lines = [
        f"{i}\t" + "\t".join(_fmt(x) for x in parsed.features[i]) for i in range(n)
    ]
    (out / "features.tsv").write_text("\n".join(feat_lines) + "\n")
    edge_lines = [f"{u}\t{v}" for u, v in parsed.edges]
    (out / "edges.tsv").write_text(
        "\n".join(edge_lines) + ("\n" if edge_lines else "")
    )
    if parsed.graph_labels is not None:
        graph_lines = [
            f"{g}\t{int(parsed.graph_labels[g])}" for g in range(num_graphs)
        ]
        (out / "graphs.tsv").write_text("\n".join(graph_lines) + "\n")
    return out


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def fetch_convert(
    spec: SourceSpec,
    out_dir: str | Path,
    archive: str | Path | None = None,
    cache_dir: str | Path | None = None,
) -> Path:
    """Obtain the raw archive(s) and write the canonical directory.

    ``archive`` short-circuits the download: a file path for single-archive
    sources, a directory holding the expected file names for multi-file
    sources.  Conversion is deterministic, so rerunning reproduces the
    output byte for byte.
    """
    from .cache import fetch

    if spec.kind in ("npz", "tu"):
        if archive is not None:
            path = Path(archive)
            if not path.is_file():
                raise ArchiveError(f"archive not found: {path}")
        else:
            path = fetch(spec.urls[0], cache_dir, spec.sha256[0])
        parsed = parse_npz(path, spec) if spec.kind == "npz" else parse_tu(path, spec)
    elif spec.kind == "geomgcn":
        if archive is not None:
            root = Path(archive)
            edge_path = root / Path(spec.urls[0]).name
            feature_path = root / Path(spec.urls[1]).name
            for p in (edge_path, feature_path):
                if not p.is_file():
                    raise ArchiveError(f"archive member not found: {p}")
        else:
            edge_path = fetch(spec.urls[0], cache_dir, spec.sha256[0])
            feature_path = fetch(spec.urls[1], cache_dir, spec.sha256[1])
        parsed = parse_geomgcn(edge_path, feature_path, spec)
    else:
        raise ArchiveError(f"unknown source kind {spec.kind!r}")
    return write_canonical(parsed, out_dir)
