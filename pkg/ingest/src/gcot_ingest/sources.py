"""Registry of supported benchmark datasets and their published statistics.

Expected values follow the benchmark summary table that the downstream
experiments reference; where the literature reports two figures (directed
vs undirected edge counting, pruned vs raw node sets), both are kept and
verification echoes them instead of asserting one.
"""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class ExpectedStats:
    num_nodes: int | None = None        # single-graph datasets
    num_graphs: int | None = None       # multi-graph datasets
    feature_dim: int | None = None
    node_classes: int | None = None
    graph_classes: int | None = None
    edges_reported: int | None = None   # as published; counting convention varies
    alt_num_nodes: int | None = None    # secondary published figure, if any
    alt_edges_reported: int | None = None
    avg_nodes: float | None = None      # multi-graph datasets
    avg_edges: float | None = None


@dataclass(frozen=True)
class SourceSpec:
    name: str
    kind: str                   # npz | tu | geomgcn
    urls: tuple[str, ...]
    expected: ExpectedStats
    task: str                   # node | graph
    sha256: tuple[str | None, ...] = field(default=None)

    def __post_init__(self):
        if self.sha256 is None:
            object.__setattr__(self, "sha256", tuple(None for _ in self.urls))


_NPZ_BASE = "https://github.com/shchur/gnn-benchmark/raw/master/data/npz"
_TU_BASE = "https://www.chrsmrrs.com/graphkerneldatasets"
_GEOM_BASE = (
    "https://raw.githubusercontent.com/graphdml-uiuc-jlu/geom-gcn/master/new_data"
)

SOURCES: dict[str, SourceSpec] = {
    "cora": SourceSpec(
        "cora", "npz", (f"{_NPZ_BASE}/cora.npz",),
        ExpectedStats(num_nodes=2708, feature_dim=1433, node_classes=7,
                      edges_reported=5429),
        task="node",
    ),
    "citeseer": SourceSpec(
        "citeseer", "npz", (f"{_NPZ_BASE}/citeseer.npz",),
        ExpectedStats(num_nodes=3327, feature_dim=3703, node_classes=6,
                      edges_reported=4732, alt_num_nodes=3312),
        task="node",
    ),
    "pubmed": SourceSpec(
        "pubmed", "npz", (f"{_NPZ_BASE}/pubmed.npz",),
        ExpectedStats(num_nodes=19717, feature_dim=500, node_classes=3,
                      edges_reported=88648, alt_edges_reported=44338),
        task="node",
    ),
    "photo": SourceSpec(
        "photo", "npz", (f"{_NPZ_BASE}/amazon_electronics_photo.npz",),
        ExpectedStats(num_nodes=7650, feature_dim=745, node_classes=8,
                      edges_reported=238162, alt_num_nodes=7487,
                      alt_edges_reported=119043),
        task="node",
    ),
    "mutag": SourceSpec(
        "mutag", "tu", (f"{_TU_BASE}/MUTAG.zip",),
        ExpectedStats(num_graphs=188, graph_classes=2, feature_dim=7,
                      avg_nodes=17.9, avg_edges=18.9),
        task="graph",
    ),
    "cox2": SourceSpec(
        "cox2", "tu", (f"{_TU_BASE}/COX2.zip",),
        ExpectedStats(num_graphs=467, graph_classes=2, feature_dim=3,
                      avg_nodes=41.2, avg_edges=43.5),
        task="graph",
    ),
    "bzr": SourceSpec(
        "bzr", "tu", (f"{_TU_BASE}/BZR.zip",),
        ExpectedStats(num_graphs=405, graph_classes=2, feature_dim=3,
                      avg_nodes=35.8, avg_edges=38.4),
        task="graph",
    ),
    "proteins": SourceSpec(
        "proteins", "tu", (f"{_TU_BASE}/PROTEINS.zip",),
        ExpectedStats(num_graphs=1113, graph_classes=2, feature_dim=4,
                      node_classes=3, avg_nodes=39.1, avg_edges=72.8),
        task="graph",
    ),
    "wisconsin": SourceSpec(
        "wisconsin", "geomgcn",
        (f"{_GEOM_BASE}/wisconsin/out1_graph_edges.txt",
         f"{_GEOM_BASE}/wisconsin/out1_node_feature_label.txt"),
        ExpectedStats(num_nodes=251, node_classes=5, edges_reported=199),
        task="node",
    ),
    "squirrel": SourceSpec(
        "squirrel", "geomgcn",
        (f"{_GEOM_BASE}/squirrel/out1_graph_edges.txt",
         f"{_GEOM_BASE}/squirrel/out1_node_feature_label.txt"),
        ExpectedStats(num_nodes=5201, node_classes=5, edges_reported=217073),
        task="node",
    ),
}


class UnknownDatasetError(ValueError):
    pass


def get_source(name: str) -> SourceSpec:
    try:
        return SOURCES[name.lower()]
    except KeyError:
        supported = ", ".join(sorted(SOURCES))
        raise UnknownDatasetError(
            f"unknown dataset {name!r}; supported: {supported}"
        ) from None
