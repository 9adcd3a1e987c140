"""Minimal quorum enumeration and the two quorum-formation conditions.

Quorums are enumerated over bitmasks of slice-declaring validators. After
every mask is classified, a subset-closure pass marks the masks that contain
some quorum; a quorum is minimal exactly when no mask obtained by dropping
one of its members contains a quorum.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from . import _kernels
from .model import NetworkSnapshot, ValidatorId
from .resilience import CompiledNetwork, _as_compiled, _check_ids

DEFAULT_N_LIMIT = 20
N_LIMIT_ENV = "QSENTINEL_N_LIMIT"
MASK_CHUNK = 1 << 16


class EnumerationLimitError(ValueError):
    pass


def default_n_limit() -> int:
    raw = os.environ.get(N_LIMIT_ENV)
    return int(raw) if raw else DEFAULT_N_LIMIT


@dataclass(frozen=True)
class QuorumCheckReport:
    minimal_quorums: tuple[tuple[ValidatorId, ...], ...]
    intersection_ok: bool | None = None
    availability_ok: bool | None = None
    violating_pair: tuple[tuple[ValidatorId, ...], tuple[ValidatorId, ...]] | None = None
    malicious: tuple[ValidatorId, ...] = ()

    @property
    def ok(self) -> bool:
        return bool(self.intersection_ok and self.availability_ok)

    def to_dict(self) -> dict:
        return {
            "minimal_quorum_count": len(self.minimal_quorums),
            "minimal_quorums": [list(q) for q in self.minimal_quorums],
            "malicious": list(self.malicious),
            "intersection_ok": self.intersection_ok,
            "availability_ok": self.availability_ok,
            "violating_pair": None if self.violating_pair is None
            else [list(q) for q in self.violating_pair],
        }


class QuorumLattice:
    """Quorum flags for every subset of the slice-declaring validators."""

    def __init__(self, net: CompiledNetwork, n_limit: int | None = None):
        n_limit = default_n_limit() if n_limit is None else n_limit
        self.net = net
        self.universe = np.flatnonzero(net.declaring).astype(np.int64)
        self.members = [net.ids[i] for i in self.universe]
        u = len(self.members)
        if u > n_limit:
            raise EnumerationLimitError(
                f"{u} slice-declaring validators exceed the enumeration limit of {n_limit} "
                f"(raise it with --n-limit or {N_LIMIT_ENV})")
        self.size = u
        self.full = (1 << u) - 1
        total = 1 << u
        is_q = np.zeros(total, dtype=bool)
        for lo in range(0, total, MASK_CHUNK):
            hi = min(total, lo + MASK_CHUNK)
            is_q[lo:hi] = _kernels.ACTIVE.quorum_masks(*net.arrays, self.universe, lo, hi)
        self.is_quorum = is_q
        self.contains = _superset_closure(is_q, u)
        self.minimal = is_q & ~_strict_subset_hit(self.contains, u)

    def bit_of(self, ids: Iterable[ValidatorId]) -> int:
        pos = {v: b for b, v in enumerate(self.members)}
        mask = 0
        for v in ids:
            if v in pos:
                mask |= 1 << pos[v]
        return mask

    def ids_of(self, mask: int) -> tuple[ValidatorId, ...]:
        return tuple(sorted(v for b, v in enumerate(self.members) if mask >> b & 1))

    def minimal_masks(self) -> np.ndarray:
        return np.flatnonzero(self.minimal)

    def has_quorum_within(self, mask: int) -> bool:
        return bool(self.contains[mask])


def _superset_closure(flags: np.ndarray, u: int) -> np.ndarray:
    """out[m] is True iff flags[s] holds for some s subset of m."""
    out = flags.copy()
    for b in range(u):
        view = out.reshape(-1, 2, 1 << b)
        view[:, 1, :] |= view[:, 0, :]
    return out


def _strict_subset_hit(contains: np.ndarray, u: int) -> np.ndarray:
    """out[m] is True iff contains[m without b] for some member b of m."""
    out = np.zeros_like(contains)
    for b in range(u):
        c = contains.reshape(-1, 2, 1 << b)
        o = out.reshape(-1, 2, 1 << b)
        o[:, 1, :] |= c[:, 0, :]
    return out


def _mask_order(masks: np.ndarray, lattice: QuorumLattice) -> list[int]:
    return sorted((int(m) for m in masks), key=lambda m: (bin(m).count("1"), lattice.ids_of(m)))


def enumerate_minimal_quorums(snapshot: NetworkSnapshot | CompiledNetwork,
                              n_limit: int | None = None) -> QuorumCheckReport:
    lattice = QuorumLattice(_as_compiled(snapshot), n_limit)
    quorums = tuple(lattice.ids_of(m) for m in _mask_order(lattice.minimal_masks(), lattice))
    return QuorumCheckReport(quorums)


def check_quorum_conditions(snapshot: NetworkSnapshot | CompiledNetwork,
                            malicious: Iterable[ValidatorId] = (),
                            n_limit: int | None = None) -> QuorumCheckReport:
    """Check quorum intersection and quorum availability against ``malicious``.

    Intersection fails when two minimal quorums share no honest node;
    availability fails when no quorum avoids every malicious node.
    """
    net = _as_compiled(snapshot)
    bad = _check_ids(net, malicious)
    lattice = QuorumLattice(net, n_limit)
    honest = lattice.full & ~lattice.bit_of(bad)
    ordered = _mask_order(lattice.minimal_masks(), lattice)

    violating = None
    for a in ordered:
        if lattice.has_quorum_within(lattice.full & ~(a & honest)):
            b = next(m for m in ordered if m & a & honest == 0)
            violating = (lattice.ids_of(a), lattice.ids_of(b))
            break
    return QuorumCheckReport(
        minimal_quorums=tuple(lattice.ids_of(m) for m in ordered),
        intersection_ok=violating is None,
        availability_ok=lattice.has_quorum_within(honest),
        violating_pair=violating,
        malicious=tuple(sorted(bad)),
    )
