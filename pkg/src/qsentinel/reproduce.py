"""Markdown report chaining rank, scan, cascade, ft and quorum checks."""

from __future__ import annotations

from .generators import generate_topology, load_fixture
from .quorums import check_quorum_conditions
from .report import num, rank_rows
from .resilience import cascade, compile_network, compute_ft, scan_subsets


def _md_table(header, rows) -> list[str]:
    out = ["| " + " | ".join(header) + " |", "|" + "---|" * len(header)]
    out += ["| " + " | ".join(num(c) if isinstance(c, float) else str(c) for c in r) + " |"
            for r in rows]
    return out + [""]


def _ft_cell(rep) -> tuple[str, str]:
    if not rep.found:
        return "-", "-"
    return str(rep.f), f"{rep.x:.2f} ({rep.x_fraction})"


def build_report(k_max: int = 3) -> str:
    lines = ["# qsentinel report", ""]

    fixture = compile_network(load_fixture())
    snap = fixture.snapshot
    lines += ["## Bundled fixture: influence", ""]
    _, _, rows = rank_rows(snap, 0.85, 1e-9, 10_000, "nr")
    lines += _md_table(["id", "name", "pr", "nr", "in_degree"],
                       [[r["id"], r["name"], r["pr"], r["nr"], r["in_degree"]] for r in rows])

    lines += ["## Bundled fixture: pairwise scan (failure >= 90%)", ""]
    scan = scan_subsets(fixture, 2, 90.0)
    lines += _md_table(["subset", "failure %", "rounds"],
                       [[" + ".join(r.subset), f"{r.failure_ratio:.1f}", r.rounds] for r in scan])

    ft = compute_ft(fixture, k_max)
    lines += ["## Bundled fixture: fault tolerance", ""]
    f_txt, x_txt = _ft_cell(ft)
    lines += [f"f = {f_txt}, x = {x_txt} over {ft.n_active} active validators", ""]
    if ft.witness_sets:
        res = cascade(fixture, ft.witness_sets[0])
        lines += [f"Cascade after failing {' + '.join(ft.witness_sets[0])}:", ""]
        total = 0
        for i, ids in enumerate(res.rounds, 1):
            total += len(ids)
            lines.append(f"- round {i}: +{len(ids)} (total {total})")
        lines += ["", f"failure ratio {res.failure_ratio:.1f}%", ""]

    lines += ["## Range of x across topologies", ""]
    sweep = []
    for kind, ns in (("star", (5, 20, 100)), ("pbft", (4, 7, 10, 100, 1000))):
        for n in ns:
            rep = compute_ft(generate_topology(kind, n), k_max=n)
            sweep.append([kind, n, *_ft_cell(rep), rep.method])
    lines += _md_table(["kind", "n", "f", "x %", "method"], sweep)

    lines += ["## Tiered 62-validator network, 18 offline", ""]
    tiered = compile_network(generate_topology("tiered", 62, slices=50, offline=18))
    scan = scan_subsets(tiered, 2, 90.0)
    ft = compute_ft(tiered, k_max)
    f_txt, x_txt = _ft_cell(ft)
    base = cascade(tiered)
    lines += [f"- baseline failure ratio (offline only): {base.failure_ratio:.1f}%",
              f"- pairs at or above 90%: {len(scan)} of {len(tiered.pool) * (len(tiered.pool) - 1) // 2}",
              f"- f = {f_txt}, x = {x_txt}, witnesses: {ft.witness_count}", ""]

    lines += ["## Quorum formation conditions", ""]
    qrows = []
    for kind, n, bad in (("pbft", 4, ()), ("pbft", 4, ("v0", "v1")), ("clique-pair", 6, ())):
        rep = check_quorum_conditions(generate_topology(kind, n), bad)
        qrows.append([f"{kind} n={n}", ",".join(bad) or "-", len(rep.minimal_quorums),
                      rep.intersection_ok, rep.availability_ok])
    lines += _md_table(["topology", "malicious", "minimal quorums", "intersection", "availability"],
                       qrows)
    return "\n".join(lines)
