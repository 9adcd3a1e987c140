"""NodeRank: slice-aware influence built on top of PageRank."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction

from .graph import ScoreVector
from .model import NetworkSnapshot, QuorumSet, ValidatorId, canonical_hash, flatten_members, short_id


@dataclass(frozen=True)
class SliceGroup:
    hash: str
    representative: QuorumSet
    generators: frozenset[ValidatorId]

    @property
    def short_id(self) -> str:
        return short_id(self.hash)


def group_slices(snapshot: NetworkSnapshot) -> list[SliceGroup]:
    """Partition declared slices into groups of structurally equal slices."""
    members: dict[str, list[str]] = defaultdict(list)
    for vid in snapshot.declaring:
        members[canonical_hash(snapshot.slices[vid])].append(vid)
    groups = [SliceGroup(h, snapshot.slices[gens[0]], frozenset(gens))
              for h, gens in members.items()]
    groups.sort(key=lambda g: (-len(g.generators), min(g.generators)))
    return groups


def attenuation(qs: QuorumSet, v: ValidatorId) -> Fraction:
    """Product of threshold/size ratios from ``qs`` down to each leaf ``v``.

    Occurrences at different positions are summed.
    """
    total = Fraction(0)

    def walk(q: QuorumSet, acc: Fraction) -> None:
        nonlocal total
        acc = acc * Fraction(q.threshold, q.size)
        for m in q.members:
            if isinstance(m, str):
                if m == v:
                    total += acc
            else:
                walk(m, acc)

    walk(qs, Fraction(1))
    return total


def noderank_raw(snapshot: NetworkSnapshot, pr: ScoreVector) -> dict[ValidatorId, float]:
    missing = [vid for vid in snapshot.ids if vid not in pr.scores]
    if missing:
        raise ValueError(f"PageRank scores missing for validator {missing[0]}")
    raw = dict.fromkeys(snapshot.ids, 0.0)
    for group in group_slices(snapshot):
        weight = sum(pr.scores[g] for g in sorted(group.generators))
        for v in sorted(flatten_members(group.representative)):
            if v in raw:
                raw[v] += weight * float(attenuation(group.representative, v))
    return raw


def noderank(snapshot: NetworkSnapshot, pr: ScoreVector) -> ScoreVector:
    raw = noderank_raw(snapshot, pr)
    total = sum(raw.values())
    if total > 0:
        scores = {v: r / total for v, r in raw.items()}
        warnings: tuple[str, ...] = ()
    else:
        scores = dict.fromkeys(raw, 0.0)
        warnings = ("all raw NodeRank values are zero",)
    return ScoreVector("nr", scores, normalization="sum", raw=raw, warnings=warnings)
