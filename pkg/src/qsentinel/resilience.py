"""Cascading failure, failure ratios, subset scans and the (f, x) fault-tolerance number."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Iterator

import numpy as np

from . import _kernels
from .influence import group_slices
from .model import NetworkSnapshot, QuorumSet, ValidatorId

DEFAULT_K_MAX = 3
SCAN_CHUNK = 1 << 15


def is_slice_satisfied(qs: QuorumSet, live: set[ValidatorId] | frozenset[ValidatorId]) -> bool:
    count = 0
    for m in qs.members:
        if isinstance(m, str):
            count += m in live
        else:
            count += is_slice_satisfied(m, live)
    return count >= qs.threshold


class CompiledNetwork:
    """Array form of a snapshot consumed by the kernels.

    Validators are indexed in sorted-id order. Leaves referencing unknown ids
    are dropped; they could never be live, so thresholds are unaffected.
    """

    def __init__(self, snapshot: NetworkSnapshot):
        self.snapshot = snapshot
        self.ids = snapshot.ids
        self.index = {v: i for i, v in enumerate(self.ids)}
        n = len(self.ids)
        thr: list[int] = []
        leaf_ptr, leaf_idx = [0], []
        child_ptr, child_idx = [0], []

        def emit(q: QuorumSet) -> int:
            kids = [emit(m) for m in q.inner]
            thr.append(q.threshold)
            leaf_idx.extend(self.index[m] for m in q.leaves if m in self.index)
            leaf_ptr.append(len(leaf_idx))
            child_idx.extend(kids)
            child_ptr.append(len(child_idx))
            return len(thr) - 1

        root = np.full(n, -1, dtype=np.int64)
        for vid in snapshot.declaring:
            root[self.index[vid]] = emit(snapshot.slices[vid])
        self.thr = np.asarray(thr, dtype=np.int64)
        self.leaf_ptr = np.asarray(leaf_ptr, dtype=np.int64)
        self.leaf_idx = np.asarray(leaf_idx, dtype=np.int64)
        self.child_ptr = np.asarray(child_ptr, dtype=np.int64)
        self.child_idx = np.asarray(child_idx, dtype=np.int64)
        self.root = root
        self.declaring = root >= 0
        self.offline = np.array([not snapshot[v].online for v in self.ids], dtype=bool)
        self.n_declaring = int(self.declaring.sum())

    @property
    def arrays(self) -> tuple:
        return (self.thr, self.leaf_ptr, self.leaf_idx, self.child_ptr, self.child_idx,
                self.root)

    def mask(self, ids: Iterable[ValidatorId]) -> np.ndarray:
        m = np.zeros(len(self.ids), dtype=bool)
        for v in ids:
            m[self.index[v]] = True
        return m

    @cached_property
    def pool(self) -> list[ValidatorId]:
        """Candidates for ill-behaved sets: online, slice-declaring validators."""
        return self.snapshot.active


def compile_network(snapshot: NetworkSnapshot) -> CompiledNetwork:
    return CompiledNetwork(snapshot)


@dataclass(frozen=True)
class CascadeResult:
    ill_behaved: frozenset[ValidatorId]
    initial_failed: frozenset[ValidatorId]
    rounds: tuple[tuple[ValidatorId, ...], ...]
    final_failed: frozenset[ValidatorId]
    groups: dict[str, frozenset[ValidatorId]]
    offline_blocked: frozenset[ValidatorId]
    n_declaring: int
    failure_ratio: float

    @property
    def collapsed(self) -> bool:
        return not self.groups["C"] and self.n_declaring > 0

    @property
    def n_failed(self) -> int:
        return len(self.groups["A"]) + len(self.groups["B"])

    def to_dict(self) -> dict:
        return {
            "ill_behaved": sorted(self.ill_behaved),
            "initial_failed": sorted(self.initial_failed),
            "rounds": [list(r) for r in self.rounds],
            "final_failed": sorted(self.final_failed),
            "groups": {k: sorted(v) for k, v in self.groups.items()},
            "offline_blocked": sorted(self.offline_blocked),
            "n_declaring": self.n_declaring,
            "n_failed": self.n_failed,
            "failure_ratio": self.failure_ratio,
        }


def _as_compiled(net: NetworkSnapshot | CompiledNetwork) -> CompiledNetwork:
    return net if isinstance(net, CompiledNetwork) else CompiledNetwork(net)


def _check_ids(net: CompiledNetwork, ids: Iterable[ValidatorId]) -> frozenset[ValidatorId]:
    ids = frozenset(ids)
    unknown = sorted(ids - set(net.index))
    if unknown:
        raise KeyError(f"unknown validator id(s): {', '.join(unknown)}")
    return ids


def cascade(snapshot: NetworkSnapshot | CompiledNetwork,
            ill_behaved: Iterable[ValidatorId] = ()) -> CascadeResult:
    """Run synchronous blocking rounds to a fixpoint.

    Round 1 holds the ill-behaved nodes, offline validators and unknown ids
    referenced by slices. Each later round removes, all at once, every live
    slice-declaring validator whose slice is no longer satisfied.
    """
    net = _as_compiled(snapshot)
    snap = net.snapshot
    ill = _check_ids(net, ill_behaved)
    init = net.mask(ill) | net.offline
    round_of = _kernels.ACTIVE.cascade_rounds(*net.arrays, net.declaring, init)

    unknown = snap.unknown_ids()
    n_rounds = int(round_of.max(initial=1))
    rounds = []
    for r in range(1, n_rounds + 1):
        members = [net.ids[i] for i in np.flatnonzero(round_of == r)]
        if r == 1:
            members = sorted(members + unknown)
        rounds.append(tuple(members))
    failed_known = {net.ids[i] for i in np.flatnonzero(round_of > 0)}
    declaring = set(snap.slices)
    a = frozenset(ill & declaring)
    b = frozenset((failed_known & declaring) - a)
    c = frozenset(declaring - failed_known)
    offline = frozenset(snap.offline)
    n_dec = net.n_declaring
    ratio = 100.0 * (len(a) + len(b)) / n_dec if n_dec else 0.0
    return CascadeResult(
        ill_behaved=ill,
        initial_failed=frozenset(rounds[0]),
        rounds=tuple(rounds),
        final_failed=frozenset(failed_known) | frozenset(unknown),
        groups={"A": a, "B": b, "C": c},
        offline_blocked=frozenset(b & offline),
        n_declaring=n_dec,
        failure_ratio=ratio,
    )


def classify_groups(snapshot: NetworkSnapshot | CompiledNetwork,
                    ill_behaved: Iterable[ValidatorId] = ()) -> dict[str, frozenset[ValidatorId]]:
    """Groups A (ill-behaved), B (blocked) and C (unaffected).

    ``B_offline`` and ``B_cascaded`` split B into validators that were
    already offline and those blocked by the cascade.
    """
    res = cascade(snapshot, ill_behaved)
    groups = dict(res.groups)
    groups["B_offline"] = res.offline_blocked
    groups["B_cascaded"] = res.groups["B"] - res.offline_blocked
    return groups


@dataclass(frozen=True)
class ScanRow:
    subset: tuple[ValidatorId, ...]
    failure_ratio: float
    n_failed: int
    rounds: int

    def to_dict(self) -> dict:
        return {"subset": list(self.subset), "failure_ratio": self.failure_ratio,
                "n_failed": self.n_failed, "rounds": self.rounds}


def _chunks(pool_size: int, k: int) -> Iterator[np.ndarray]:
    combos = itertools.combinations(range(pool_size), k)
    while True:
        block = list(itertools.islice(combos, SCAN_CHUNK))
        if not block:
            return
        yield np.asarray(block, dtype=np.int64).reshape(len(block), k)


def _scan_counts(net: CompiledNetwork, k: int) -> Iterator[tuple[np.ndarray, np.ndarray, np.ndarray]]:
    """Yield (subsets as validator indices, failed counts, rounds) chunk by chunk."""
    pool_idx = np.array([net.index[v] for v in net.pool], dtype=np.int64)
    base = net.offline.copy()
    for block in _chunks(len(pool_idx), k):
        subsets = pool_idx[block]
        failed, rounds = _kernels.ACTIVE.cascade_batch(*net.arrays, net.declaring, base, subsets)
        yield subsets, failed, rounds


def scan_subsets(snapshot: NetworkSnapshot | CompiledNetwork, k: int,
                 min_failure: float = 0.0) -> list[ScanRow]:
    """Cascade every k-subset of active validators; keep rows at or above ``min_failure``%."""
    net = _as_compiled(snapshot)
    if k < 1:
        raise ValueError("k must be at least 1")
    if k > len(net.pool):
        raise ValueError(f"k={k} exceeds the {len(net.pool)} active validators")
    rows = []
    n_dec = net.n_declaring
    for subsets, failed, rounds in _scan_counts(net, k):
        ratio = 100.0 * failed / n_dec
        for j in np.flatnonzero(ratio >= min_failure):
            rows.append(ScanRow(tuple(net.ids[i] for i in subsets[j]), float(ratio[j]),
                                int(failed[j]), int(rounds[j])))
    rows.sort(key=lambda r: (-r.failure_ratio, r.subset))
    return rows


@dataclass(frozen=True)
class FtReport:
    f: int | None
    n_active: int
    n_declaring: int
    witness_sets: tuple[tuple[ValidatorId, ...], ...]
    witness_count: int
    search_bound: int
    method: str
    breaking_ratio: float = 100.0
    notes: tuple[str, ...] = field(default=())

    @property
    def found(self) -> bool:
        return self.f is not None

    @property
    def x_fraction(self) -> Fraction | None:
        return None if self.f is None else Fraction(100 * self.f, self.n_active)

    @property
    def x(self) -> float | None:
        frac = self.x_fraction
        return None if frac is None else float(frac)

    def to_dict(self) -> dict:
        frac = self.x_fraction
        return {
            "found": self.found,
            "f": self.f,
            "x": self.x,
            "x_fraction": None if frac is None else str(frac),
            "n_active": self.n_active,
            "n_declaring": self.n_declaring,
            "witness_sets": [list(w) for w in self.witness_sets],
            "witness_count": self.witness_count,
            "search_bound": self.search_bound,
            "method": self.method,
            "breaking_ratio": self.breaking_ratio,
            "notes": list(self.notes),
        }


def uniform_flat_slice(snapshot: NetworkSnapshot) -> QuorumSet | None:
    """The shared slice if every declared slice is one identical flat set without repeats."""
    groups = group_slices(snapshot)
    if len(groups) != 1:
        return None
    qs = groups[0].representative
    if qs.inner or len(set(qs.leaves)) != len(qs.leaves):
        return None
    return qs


def _ft_analytic(net: CompiledNetwork, qs: QuorumSet, k_max: int) -> FtReport:
    common = dict(n_active=len(net.pool), n_declaring=net.n_declaring, search_bound=k_max,
                  method="analytic")
    if not net.pool:
        return FtReport(None, witness_sets=(), witness_count=0, **common)
    pool = set(net.pool)
    eligible = sorted(v for v in qs.leaves if v in pool)
    if len(eligible) < qs.threshold:
        # already unsatisfiable: any single removal is a total collapse
        f, witness, count = 1, (net.pool[0],), len(net.pool)
    else:
        f = len(eligible) - qs.threshold + 1
        witness, count = tuple(eligible[:f]), math.comb(len(eligible), f)
    if f > k_max:
        return FtReport(None, witness_sets=(), witness_count=0, **common)
    return FtReport(f, witness_sets=(witness,), witness_count=count,
                    notes=("single representative witness; all "
                           f"{count} sets of size {f} are equivalent",), **common)


def compute_ft(snapshot: NetworkSnapshot | CompiledNetwork, k_max: int = DEFAULT_K_MAX,
               method: str = "auto", breaking_ratio: float = 100.0) -> FtReport:
    """Smallest number f of active validators whose failure breaks the system.

    The system counts as broken when the failure ratio reaches
    ``breaking_ratio`` (100 means every slice-declaring validator is blocked).
    ``method="auto"`` takes a closed form when every validator declares the same
    flat slice and otherwise searches all subsets of size 1..k_max.
    """
    net = _as_compiled(snapshot)
    if k_max < 1:
        raise ValueError("k_max must be at least 1")
    if method not in ("auto", "exhaustive", "analytic"):
        raise ValueError(f"unknown method {method!r}")
    if method != "exhaustive" and breaking_ratio == 100.0:
        qs = uniform_flat_slice(net.snapshot)
        if qs is not None:
            return _ft_analytic(net, qs, k_max)
        if method == "analytic":
            raise ValueError("analytic method needs one shared flat slice")

    n_dec = net.n_declaring
    need = math.ceil(breaking_ratio * n_dec / 100.0 - 1e-9)
    bound = min(k_max, len(net.pool))
    for k in range(1, bound + 1):
        witnesses = []
        for subsets, failed, _ in _scan_counts(net, k):
            for j in np.flatnonzero(failed >= need):
                witnesses.append(tuple(net.ids[i] for i in subsets[j]))
        if witnesses:
            witnesses.sort()
            return FtReport(k, len(net.pool), n_dec, tuple(witnesses), len(witnesses),
                            k_max, "exhaustive", breaking_ratio)
    return FtReport(None, len(net.pool), n_dec, (), 0, k_max, "exhaustive", breaking_ratio)
