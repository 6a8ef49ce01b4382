"""Verification of a converted directory against the published statistics.

Counts that the literature states unambiguously (nodes, graphs, feature
dim, classes) become PASS/FAIL checks.  Edge counts depend on the counting
convention, so the report echoes the stored-once count next to every
published figure instead of failing on them.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .sources import SourceSpec


@dataclass
class Check:
    stat: str
    status: str  # PASS | FAIL | INFO
    actual: object
    expected: object = None

    def line(self) -> str:
        if self.status == "INFO":
            return f"  INFO {self.stat}: {self.actual} (published: {self.expected})"
        return f"  {self.status} {self.stat}: {self.actual} (expected {self.expected})"


@dataclass
class Report:
    name: str
    checks: list[Check]

    @property
    def passed(self) -> bool:
        return all(c.status != "FAIL" for c in self.checks)

    def render(self) -> str:
        head = f"{self.name}: {'PASS' if self.passed else 'FAIL'}"
        return "\n".join([head] + [c.line() for c in self.checks])


def _read_counts(directory: Path) -> dict:
    meta = json.loads((directory / "meta.json").read_text())
    nodes = (directory / "nodes.tsv").read_text().splitlines()
    edges = [l for l in (directory / "edges.tsv").read_text().splitlines() if l]
    feature_cols = len(
        (directory / "features.tsv").read_text().splitlines()[0].split("\t")
    ) - 1
    per_graph_nodes: dict[int, int] = {}
    per_graph_edges: dict[int, int] = {}
    node_graph = {}
    for line in nodes:
        nid, gid, _ = line.split("\t")
        node_graph[int(nid)] = int(gid)
        per_graph_nodes[int(gid)] = per_graph_nodes.get(int(gid), 0) + 1
    for line in edges:
        u, _ = line.split("\t")
        gid = node_graph[int(u)]
        per_graph_edges[gid] = per_graph_edges.get(gid, 0) + 1
    return {
        "meta": meta,
        "num_nodes": len(nodes),
        "num_edges": len(edges),
        "feature_dim": feature_cols,
        "per_graph_nodes": per_graph_nodes,
        "per_graph_edges": per_graph_edges,
    }


def verify_stats(directory: str | Path, spec: SourceSpec) -> Report:
    directory = Path(directory)
    for required in ("meta.json", "nodes.tsv", "features.tsv", "edges.tsv"):
        if not (directory / required).is_file():
            raise FileNotFoundError(f"missing canonical file: {directory / required}")
    counts = _read_counts(directory)
    meta = counts["meta"]
    exp = spec.expected
    checks: list[Check] = []

    def check(stat, actual, expected):
        if expected is None:
            return
        status = "PASS" if actual == expected else "FAIL"
        checks.append(Check(stat, status, actual, expected))

    check("nodes", counts["num_nodes"], exp.num_nodes)
    check("graphs", meta["num_graphs"], exp.num_graphs)
    check("feature_dim", counts["feature_dim"], exp.feature_dim)
    check("node_classes", meta.get("node_classes"), exp.node_classes)
    check("graph_classes", meta.get("graph_classes"), exp.graph_classes)
    if counts["feature_dim"] != meta["feature_dim"]:
        checks.append(Check("meta feature_dim", "FAIL", meta["feature_dim"],
                            counts["feature_dim"]))

    published = [x for x in (exp.edges_reported, exp.alt_edges_reported) if x]
    if published:
        checks.append(Check(
            f"edges ({meta.get('edge_convention', 'undirected-once')})",
            "INFO", counts["num_edges"], " / ".join(str(p) for p in published),
        ))
    if exp.alt_num_nodes:
        checks.append(Check("nodes (alternate published figure)", "INFO",
                            counts["num_nodes"], exp.alt_num_nodes))

    if meta["num_graphs"] > 1:
        avg_nodes = counts["num_nodes"] / meta["num_graphs"]
        avg_edges = counts["num_edges"] / meta["num_graphs"]
        checks.append(Check("avg nodes/graph", "INFO", round(avg_nodes, 2),
                            exp.avg_nodes))
        checks.append(Check("avg edges/graph", "INFO", round(avg_edges, 2),
                            exp.avg_edges))
    return Report(spec.name, checks)
