"""Rendering of analysis results as JSON, CSV, plain tables and markdown."""

from __future__ import annotations

import csv
import io
import json
from typing import Any, Sequence

from .graph import ScoreVector, build_trust_graph, degree_stats, pagerank
from .influence import noderank
from .model import NetworkSnapshot
from .quorums import QuorumCheckReport
from .resilience import CascadeResult, FtReport, ScanRow

FORMATS = ("table", "csv", "json")


def num(x: float) -> str:
    return f"{x:.6g}"


def to_json(obj: Any) -> str:
    return json.dumps(obj, indent=2) + "\n"


def to_csv(header: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def to_table(header: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    cells = [list(header)] + [[num(c) if isinstance(c, float) else str(c) for c in r]
                              for r in rows]
    widths = [max(len(row[i]) for row in cells) for i in range(len(header))]
    lines = ["  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip() for row in cells]
    return "\n".join(lines) + "\n"


def rank_rows(snapshot: NetworkSnapshot, damping: float, tol: float, max_iter: int,
              sort: str = "nr") -> tuple[ScoreVector, ScoreVector, list[dict]]:
    graph = build_trust_graph(snapshot)
    pr = pagerank(graph, damping, tol, max_iter)
    nr = noderank(snapshot, pr)
    deg = degree_stats(graph)
    rows = [{"id": v, "name": snapshot.label(v), "pr": pr[v], "nr": nr[v],
             "in_degree": deg.in_degree[v], "out_degree": deg.out_degree[v]}
            for v in snapshot.ids]
    rows.sort(key=lambda r: (-r[sort], r["id"]))
    return pr, nr, rows


def render_rank(pr: ScoreVector, nr: ScoreVector, rows: list[dict], fmt: str,
                sort: str) -> str:
    if fmt == "json":
        return to_json({"sort": sort, "pr": pr.to_dict(), "nr": nr.to_dict(), "rows": rows})
    if fmt == "csv":
        cols = ["id", "name", "pr", "nr", "in_degree", "out_degree"]
        return to_csv(cols, [[r[c] for c in cols] for r in rows])
    cols = ["id", "name", "pr", "nr", "in_degree"]
    return to_table(cols, [[r[c] for c in cols] for r in rows])


def render_cascade(snapshot: NetworkSnapshot, res: CascadeResult, fmt: str) -> str:
    if fmt == "json":
        return to_json(res.to_dict())
    if fmt == "csv":
        return to_csv(["round", "id", "name"],
                      [[r, v, snapshot.label(v)] for r, ids in enumerate(res.rounds, 1)
                       for v in ids])
    lines = []
    total = 0
    for r, ids in enumerate(res.rounds, 1):
        total += len(ids)
        names = ", ".join(snapshot.label(v) for v in ids) or "-"
        lines.append(f"round {r}: +{len(ids)} (total {total}): {names}")
    g = res.groups
    lines.append(f"groups: A={len(g['A'])} B={len(g['B'])} "
                 f"(offline {len(res.offline_blocked)}) C={len(g['C'])}")
    lines.append(f"failure_ratio={res.failure_ratio:.2f}% ({res.n_failed}/{res.n_declaring})")
    return "\n".join(lines) + "\n"


def render_scan(rows: list[ScanRow], fmt: str, meta: dict) -> str:
    if fmt == "json":
        return to_json({**meta, "count": len(rows), "rows": [r.to_dict() for r in rows]})
    if fmt == "csv":
        return to_csv(["subset", "failure_ratio", "rounds"],
                      [["+".join(r.subset), r.failure_ratio, r.rounds] for r in rows])
    body = to_table(["subset", "failure_ratio", "rounds"],
                    [["+".join(r.subset), r.failure_ratio, r.rounds] for r in rows])
    return body + f"rows: {len(rows)}\n"


def ft_summary(rep: FtReport) -> str:
    if not rep.found:
        return f"no breaking set ≤ {rep.search_bound} (N_active={rep.n_active})"
    return f"f={rep.f} x={rep.x:.2f}% (N_active={rep.n_active})"


def render_ft(rep: FtReport, fmt: str) -> str:
    if fmt == "json":
        return to_json(rep.to_dict())
    if fmt == "csv":
        d = rep.to_dict()
        head = [d["f"], d["x"], d["x_fraction"], rep.n_active]
        return to_csv(["f", "x", "x_fraction", "n_active", "witness"],
                      [head + ["+".join(w)] for w in rep.witness_sets] or [head + [""]])
    lines = [ft_summary(rep)]
    if rep.found:
        lines.append(f"(f, x) = ({rep.f}, {rep.x_fraction})")
        lines.append(f"witness sets ({rep.witness_count}, method {rep.method}):")
        lines.extend("  " + " + ".join(w) for w in rep.witness_sets)
    return "\n".join(lines) + "\n"


def render_quorum(rep: QuorumCheckReport, fmt: str) -> str:
    if fmt == "json":
        return to_json(rep.to_dict())
    if fmt == "csv":
        return to_csv(["index", "members"],
                      [[i, "+".join(q)] for i, q in enumerate(rep.minimal_quorums)])
    lines = [f"minimal_quorums={len(rep.minimal_quorums)}",
             f"intersection_ok={str(rep.intersection_ok).lower()}",
             f"availability_ok={str(rep.availability_ok).lower()}"]
    if rep.violating_pair:
        a, b = rep.violating_pair
        lines.append(f"violating_pair: {{{', '.join(a)}}} / {{{', '.join(b)}}}")
    return "\n".join(lines) + "\n"
