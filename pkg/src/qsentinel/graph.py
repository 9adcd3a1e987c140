"""Directed trust graph over validators, PageRank and degree statistics."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .model import NetworkSnapshot, ValidatorId, flatten_members

DEFAULT_DAMPING = 0.85
DEFAULT_TOL = 1e-9
DEFAULT_MAX_ITER = 10_000


@dataclass(frozen=True)
class TrustGraph:
    """Edge (a, b) means a's declared slice contains b."""

    nodes: tuple[ValidatorId, ...]
    edges: frozenset[tuple[ValidatorId, ValidatorId]]

    @property
    def in_degree(self) -> dict[ValidatorId, int]:
        deg = dict.fromkeys(self.nodes, 0)
        for _, b in self.edges:
            deg[b] += 1
        return deg

    @property
    def out_degree(self) -> dict[ValidatorId, int]:
        deg = dict.fromkeys(self.nodes, 0)
        for a, _ in self.edges:
            deg[a] += 1
        return deg

    @classmethod
    def from_edges(cls, nodes, edges) -> "TrustGraph":
        nodes = tuple(sorted(set(nodes)))
        known = set(nodes)
        clean = frozenset((a, b) for a, b in edges if a != b and a in known and b in known)
        return cls(nodes, clean)


@dataclass(frozen=True)
class ScoreVector:
    metric: str
    scores: Mapping[ValidatorId, float]
    iterations: int = 0
    residual: float = 0.0
    converged: bool = True
    normalization: str = "sum"
    raw: Mapping[ValidatorId, float] | None = None
    warnings: tuple[str, ...] = ()

    def __getitem__(self, vid: ValidatorId) -> float:
        return self.scores[vid]

    def ranked(self) -> list[tuple[ValidatorId, float]]:
        return sorted(self.scores.items(), key=lambda kv: (-kv[1], kv[0]))

    def to_dict(self) -> dict:
        d = {
            "metric": self.metric,
            "normalization": self.normalization,
            "iterations": self.iterations,
            "residual": self.residual,
            "converged": self.converged,
            "scores": {k: self.scores[k] for k in sorted(self.scores)},
            "warnings": list(self.warnings),
        }
        if self.raw is not None:
            d["raw"] = {k: self.raw[k] for k in sorted(self.raw)}
        return d


@dataclass(frozen=True)
class DegreeStats:
    in_degree: Mapping[ValidatorId, int]
    out_degree: Mapping[ValidatorId, int]
    max_in: int
    max_out: int
    mean_in: float
    mean_out: float
    in_histogram: Mapping[int, int] = field(default_factory=dict)
    out_histogram: Mapping[int, int] = field(default_factory=dict)


def build_trust_graph(snapshot: NetworkSnapshot) -> TrustGraph:
    edges = set()
    for vid, qs in snapshot.slices.items():
        for u in flatten_members(qs):
            if u != vid and u in snapshot:
                edges.add((vid, u))
    return TrustGraph(tuple(snapshot.ids), frozenset(edges))


def pagerank(graph: TrustGraph, damping: float = DEFAULT_DAMPING,
             tolerance: float = DEFAULT_TOL,
             max_iterations: int = DEFAULT_MAX_ITER) -> ScoreVector:
    """Power-iteration PageRank with a uniform teleport vector.

    Dangling nodes spread their mass uniformly over all nodes. Iteration
    stops once the L1 change drops below ``tolerance``.
    """
    n = len(graph.nodes)
    if n == 0:
        raise ValueError("pagerank of an empty graph is undefined")
    if not 0.0 < damping < 1.0:
        raise ValueError(f"damping must lie in (0, 1), got {damping}")
    index = {v: i for i, v in enumerate(graph.nodes)}
    pairs = sorted(graph.edges)
    src = np.fromiter((index[a] for a, _ in pairs), dtype=np.int64, count=len(pairs))
    dst = np.fromiter((index[b] for _, b in pairs), dtype=np.int64, count=len(pairs))
    outdeg = np.bincount(src, minlength=n).astype(float)
    dangling = outdeg == 0
    share = np.zeros(n)
    share[~dangling] = 1.0 / outdeg[~dangling]

    x = np.full(n, 1.0 / n)
    residual = np.inf
    it = 0
    while it < max_iterations:
        it += 1
        flow = np.bincount(dst, weights=x[src] * share[src], minlength=n)
        nxt = damping * (flow + x[dangling].sum() / n) + (1.0 - damping) / n
        residual = float(np.abs(nxt - x).sum())
        x = nxt
        if residual < tolerance:
            break
    x = x / x.sum()
    converged = residual < tolerance
    warnings = () if converged else (f"stopped at max_iterations={max_iterations}",)
    return ScoreVector("pr", {v: float(x[i]) for v, i in index.items()},
                       iterations=it, residual=residual, converged=converged,
                       warnings=warnings)


def degree_stats(graph: TrustGraph) -> DegreeStats:
    ind, outd = graph.in_degree, graph.out_degree
    n = max(len(graph.nodes), 1)
    return DegreeStats(
        in_degree=ind,
        out_degree=outd,
        max_in=max(ind.values(), default=0),
        max_out=max(outd.values(), default=0),
        mean_in=sum(ind.values()) / n,
        mean_out=sum(outd.values()) / n,
        in_histogram=dict(sorted(Counter(ind.values()).items())),
        out_histogram=dict(sorted(Counter(outd.values()).items())),
    )
