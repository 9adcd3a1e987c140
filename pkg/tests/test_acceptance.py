"""Acceptance suite: one PASS/FAIL line per criterion, with its time budget.

Run with ``pytest tests/test_acceptance.py -s`` (the lines also appear without ``-s``).
Kernel JIT compilation is done once up front and is not charged to any budget.
"""

import itertools
import json
import math
import random
import shutil
import subprocess
import sys
import time
from contextlib import contextmanager
from fractions import Fraction

import pytest

from qsentinel import _kernels
from qsentinel.cli import main
from qsentinel.generators import generate_topology, load_fixture
from qsentinel.graph import ScoreVector, TrustGraph, build_trust_graph, pagerank
from qsentinel.influence import noderank_raw
from qsentinel.model import QuorumSet, nesting_depths, snapshot_from_dict
from qsentinel.quorums import check_quorum_conditions, enumerate_minimal_quorums
from qsentinel.resilience import cascade, compile_network, compute_ft, scan_subsets

from . import oracles


@pytest.fixture(scope="module", autouse=True)
def warm_kernels():
    net = compile_network(generate_topology("pbft", 4))
    scan_subsets(net, 2, 0)
    cascade(net, ["v0"])
    enumerate_minimal_quorums(net)


@pytest.fixture
def criterion(capsys):
    @contextmanager
    def run(n, title, budget):
        ok = False
        t0 = time.perf_counter()
        try:
            yield
            ok = True
        finally:
            elapsed = time.perf_counter() - t0
            ok = ok and elapsed < budget
            with capsys.disabled():
                print(f"\nAC{n:02d} {'PASS' if ok else 'FAIL'}  {title}  "
                      f"[{elapsed * 1000:.2f} ms / budget {budget * 1000:g} ms]")
        assert elapsed < budget, f"criterion {n} took {elapsed:.4f}s, budget {budget}s"
    return run


def test_01_noderank_worked_example(criterion):
    qs = QuorumSet(3, ("n1", "n2", QuorumSet(1, ("v", "n3"))))
    snap = snapshot_from_dict({
        "validators": [{"id": v} for v in ("g1", "g2", "n1", "n2", "n3", "v")],
        "quorum_sets": {"g1": qs.to_dict(), "g2": qs.to_dict()},
    })
    pr = ScoreVector("pr", {"g1": 0.01, "g2": 0.02, "n1": 0.25, "n2": 0.25, "n3": 0.25,
                            "v": 0.22})
    with criterion(1, "raw NR of nested member equals 0.015", 1e-3):
        raw = noderank_raw(snap, pr)
        assert abs(raw["v"] - 0.015) < 1e-12


def test_02_nesting_depths(criterion):
    qs = QuorumSet(1, ("n1", QuorumSet(1, ("n2",)), QuorumSet(1, (QuorumSet(1, ("n3",)),))))
    with criterion(2, "nesting depths 1, 2, 3", 1e-3):
        assert [nesting_depths(qs, v) for v in ("n1", "n2", "n3")] == [[1], [2], [3]]


def test_03_star_minimum(criterion):
    with criterion(3, "star n=5,20,100: f=1, x=100/n, decreasing", 1.0):
        xs = []
        for n in (5, 20, 100):
            snap = generate_topology("star", n)
            for method in ("auto", "exhaustive"):
                rep = compute_ft(snap, k_max=1, method=method)
                assert rep.f == 1 and rep.x_fraction == Fraction(100, n)
            xs.append(rep.x_fraction)
        assert xs[0] > xs[1] > xs[2] > 0


def test_04_pbft_maximum(criterion):
    with criterion(4, "pbft n=4..1000: f=floor((n-1)/3)+1, x -> 100/3", 10.0):
        xs = []
        for n in (4, 7, 10, 100, 1000):
            f_expected = (n - 1) // 3 + 1
            snap = generate_topology("pbft", n)
            rep = compute_ft(snap, k_max=f_expected)
            assert rep.f == f_expected
            assert rep.x_fraction == Fraction(100 * f_expected, n)
            if n <= 10:
                brute = compute_ft(snap, k_max=f_expected, method="exhaustive")
                assert brute.method == "exhaustive" and brute.f == f_expected
                assert brute.witness_count == math.comb(n, f_expected) == rep.witness_count
            xs.append(rep.x)
        assert all(a > b for a, b in zip(xs, xs[1:]))
        assert abs(xs[-1] - 100 / 3) < 0.1


def test_05_fixture_collapse(criterion, capsys):
    oracle = json.loads(oracles.FIXTURE_ORACLE.read_text())
    with criterion(5, "fixture: f=2, 3 witness pairs, cascade exits 3 at 100%", 1.0):
        rep = compute_ft(load_fixture(), k_max=3)
        assert rep.f == 2 == oracle["f"]
        witnesses = ["+".join(w) for w in rep.witness_sets]
        assert len(witnesses) == 3 and witnesses == oracle["witnesses"]
        for w in rep.witness_sets:
            code = main(["cascade", "--gen", "fixture", "--fail", ",".join(w),
                         "--format", "json", "--quiet"])
            out = json.loads(capsys.readouterr().out)
            assert code == 3 and out["failure_ratio"] == 100.0


def test_06_oracle_equivalence(criterion):
    rng = random.Random(2019)
    cases = [oracles.random_snapshot(rng, max_depth=3) for _ in range(200)]
    checked = 0
    with criterion(6, "cascade == rescan oracle on 200 snapshots, all singletons and pairs", 60.0):
        for d in cases:
            snap = snapshot_from_dict(d)
            assert len(snap) <= 12 and all(q.depth() <= 3 for q in snap.slices.values())
            net = compile_network(snap)
            declaring = set(snap.declaring)
            for ill in itertools.chain(itertools.combinations(snap.ids, 1),
                                       itertools.combinations(snap.ids, 2)):
                got = cascade(net, ill).final_failed & declaring
                assert got == oracles.final_failed(d, set(ill)), (d, ill)
                checked += 1
        assert checked > 200


def test_07_monotonicity(criterion):
    rng = random.Random(31)
    triples = []
    while len(triples) < 100:
        d = oracles.random_snapshot(rng)
        ids = [v["id"] for v in d["validators"]]
        if len(ids) < 2:
            continue
        big = rng.sample(ids, rng.randint(1, len(ids)))
        small = rng.sample(big, rng.randint(0, len(big) - 1))
        triples.append((snapshot_from_dict(d), small, big))
    with criterion(7, "final_failed(S) subset of final_failed(S') on 100 triples", 30.0):
        for snap, small, big in triples:
            assert set(small) < set(big)
            assert cascade(snap, small).final_failed <= cascade(snap, big).final_failed


def test_08_pagerank_invariants(criterion):
    rng = random.Random(8)
    graphs = []
    for _ in range(50):
        n = rng.randint(1, 40)
        nodes = [f"p{i}" for i in range(n)]
        p = rng.random()
        graphs.append(TrustGraph.from_edges(
            nodes, [(a, b) for a in nodes for b in nodes if rng.random() < p]))
    k4 = TrustGraph.from_edges("abcd", [(a, b) for a in "abcd" for b in "abcd"])
    star = build_trust_graph(generate_topology("star", 20))
    with criterion(8, "PR sums to 1, K4 uniform, star hub matches linear solve", 5.0):
        for g in graphs:
            assert abs(sum(pagerank(g).scores.values()) - 1) <= 1e-9
        assert all(abs(s - 0.25) <= 1e-9 for s in pagerank(k4).scores.values())
        exact = oracles.pagerank_solve(list(star.nodes), set(star.edges))
        assert abs(pagerank(star)["hub"] - exact["hub"]) <= 1e-8


def _exhaustive(snap, malicious=()):
    d = snap.to_dict()
    return oracles.minimal_quorums(d), oracles.quorum_conditions(d, set(malicious))


def test_09_quorum_conditions(criterion):
    pbft4 = generate_topology("pbft", 4)
    pair = generate_topology("clique-pair", 6)
    with criterion(9, "pbft n=4 passes, fails with shared pair malicious; clique-pair fails", 5.0):
        rep = check_quorum_conditions(pbft4)
        mins, conds = _exhaustive(pbft4)
        assert rep.intersection_ok and rep.availability_ok and conds == (True, True)
        assert [frozenset(q) for q in rep.minimal_quorums] == mins
        for a, b in itertools.combinations(rep.minimal_quorums, 2):
            shared = sorted(set(a) & set(b))
            assert len(shared) == 2
            bad = check_quorum_conditions(pbft4, shared)
            assert not bad.intersection_ok
            assert (bad.intersection_ok, bad.availability_ok) == _exhaustive(pbft4, shared)[1]
        rep = check_quorum_conditions(pair)
        mins, conds = _exhaustive(pair)
        assert not rep.intersection_ok and conds[0] is False
        assert (rep.intersection_ok, rep.availability_ok) == conds
        assert [frozenset(q) for q in rep.minimal_quorums] == mins


@pytest.mark.parametrize("backend_name", ["numba", "numpy"])
def test_10_scan_throughput(criterion, monkeypatch, backend_name):
    chosen = _kernels.NUMBA if backend_name == "numba" else _kernels.NUMPY
    if chosen is None:
        pytest.skip("numba unavailable")
    monkeypatch.setattr(_kernels, "ACTIVE", chosen)
    snap = generate_topology("tiered", 62, slices=50)
    assert len(snap) == 62 and len(set(snap.slices.values())) == 50
    with criterion(10, f"k=2 scan over 62 validators, 50 slices ({backend_name})", 5.0):
        rows = scan_subsets(snap, 2, 0.0)
        assert len(rows) == math.comb(62, 2)


def test_11_reproduce_deterministic(criterion):
    exe = shutil.which("qsentinel")
    cmd = [exe] if exe else [sys.executable, "-m", "qsentinel"]
    with criterion(11, "two reproduce runs are byte-identical", 120.0):
        a = subprocess.run(cmd + ["reproduce", "--quiet"], capture_output=True, check=True)
        b = subprocess.run(cmd + ["reproduce", "--quiet"], capture_output=True, check=True)
        assert a.stdout and a.stdout == b.stdout and a.stderr == b.stderr == b""
