"""Quorum-set data model, snapshot parsing and structural queries."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import IO, Any, Iterator, Mapping, Union

ValidatorId = str
Member = Union[str, "QuorumSet"]


class SnapshotError(ValueError):
    """Base class for snapshot loading problems."""


class SnapshotParseError(SnapshotError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset


class SnapshotValidationError(SnapshotError):
    pass


@dataclass(frozen=True)
class QuorumSet:
    """A threshold over an ordered list of members.

    Members are validator ids (leaves) or nested quorum sets. A nested set
    counts as exactly one member toward ``size``.
    """

    threshold: int
    members: tuple[Member, ...]

    def __post_init__(self) -> None:
        if not isinstance(self.members, tuple):
            object.__setattr__(self, "members", tuple(self.members))
        problem = _threshold_problem(self.threshold, len(self.members))
        if problem:
            raise SnapshotValidationError(problem)

    @property
    def size(self) -> int:
        return len(self.members)

    @property
    def leaves(self) -> tuple[str, ...]:
        return tuple(m for m in self.members if isinstance(m, str))

    @property
    def inner(self) -> tuple["QuorumSet", ...]:
        return tuple(m for m in self.members if isinstance(m, QuorumSet))

    def depth(self) -> int:
        return 1 + max((q.depth() for q in self.inner), default=0)

    def to_dict(self) -> dict[str, Any]:
        return {
            "t": self.threshold,
            "v": [m if isinstance(m, str) else m.to_dict() for m in self.members],
        }

    @classmethod
    def from_dict(cls, data: Any, owner: str = "?") -> "QuorumSet":
        return _quorum_set_from_obj(data, owner)


def _threshold_problem(threshold: Any, n_members: int) -> str | None:
    if isinstance(threshold, bool) or not isinstance(threshold, int):
        return f"threshold must be an integer, got {threshold!r}"
    if n_members == 0:
        return "quorum set has no members"
    if threshold < 1:
        return f"threshold {threshold} is below 1"
    if threshold > n_members:
        return f"threshold {threshold} exceeds member count {n_members}"
    return None


def _quorum_set_from_obj(data: Any, owner: str) -> QuorumSet:
    if not isinstance(data, dict) or "t" not in data or "v" not in data:
        raise SnapshotValidationError(
            f"quorum set for {owner} must be an object with 't' and 'v'")
    raw_members = data["v"]
    if not isinstance(raw_members, list):
        raise SnapshotValidationError(f"'v' of quorum set for {owner} must be a list")
    problem = _threshold_problem(data["t"], len(raw_members))
    if problem:
        raise SnapshotValidationError(f"{problem} for {owner}")
    members: list[Member] = []
    for m in raw_members:
        if isinstance(m, str):
            if not m:
                raise SnapshotValidationError(f"empty member id in quorum set for {owner}")
            members.append(m)
        else:
            members.append(_quorum_set_from_obj(m, owner))
    return QuorumSet(data["t"], tuple(members))


@dataclass(frozen=True)
class Validator:
    id: ValidatorId
    name: str | None = None
    org: str | None = None
    online: bool = True

    @property
    def label(self) -> str:
        return self.name or self.id

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {"id": self.id}
        if self.name is not None:
            d["name"] = self.name
        if self.org is not None:
            d["org"] = self.org
        d["online"] = self.online
        return d


@dataclass(frozen=True)
class NetworkSnapshot:
    """Immutable view of a validator network at one point in time."""

    timestamp: str
    validators: tuple[Validator, ...]
    slices: Mapping[ValidatorId, QuorumSet]
    warnings: tuple[str, ...] = ()
    _by_id: Mapping[ValidatorId, Validator] = field(
        init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        by_id: dict[str, Validator] = {}
        for v in self.validators:
            if not v.id:
                raise SnapshotValidationError("validator id must be non-empty")
            if v.id in by_id:
                raise SnapshotValidationError(f"duplicate validator id {v.id}")
            by_id[v.id] = v
        for vid in self.slices:
            if vid not in by_id:
                raise SnapshotValidationError(
                    f"quorum set declared for unknown validator {vid}")
        object.__setattr__(self, "validators", tuple(self.validators))
        object.__setattr__(self, "slices", MappingProxyType(dict(self.slices)))
        object.__setattr__(self, "warnings", tuple(self.warnings))
        object.__setattr__(self, "_by_id", MappingProxyType(by_id))

    def __getitem__(self, vid: ValidatorId) -> Validator:
        return self._by_id[vid]

    def __contains__(self, vid: object) -> bool:
        return vid in self._by_id

    def __iter__(self) -> Iterator[Validator]:
        return iter(self.validators)

    def __len__(self) -> int:
        return len(self.validators)

    @property
    def ids(self) -> list[ValidatorId]:
        return sorted(self._by_id)

    @property
    def declaring(self) -> list[ValidatorId]:
        """Validators with a declared slice, sorted by id."""
        return sorted(self.slices)

    @property
    def watchers(self) -> list[ValidatorId]:
        return sorted(set(self._by_id) - set(self.slices))

    @property
    def offline(self) -> list[ValidatorId]:
        return sorted(v.id for v in self.validators if not v.online)

    @property
    def active(self) -> list[ValidatorId]:
        """Online validators with a declared slice."""
        return [vid for vid in self.declaring if self._by_id[vid].online]

    def unknown_ids(self) -> list[ValidatorId]:
        """Ids referenced by some slice that are not validators of this snapshot."""
        seen: set[str] = set()
        for qs in self.slices.values():
            seen |= flatten_members(qs)
        return sorted(seen - set(self._by_id))

    def label(self, vid: ValidatorId) -> str:
        v = self._by_id.get(vid)
        return v.label if v else vid

    def to_dict(self) -> dict[str, Any]:
        return {
            "timestamp": self.timestamp,
            "validators": [v.to_dict() for v in self.validators],
            "quorum_sets": {vid: self.slices[vid].to_dict() for vid in self.declaring},
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


def snapshot_from_dict(data: Any) -> NetworkSnapshot:
    if not isinstance(data, dict):
        raise SnapshotValidationError("snapshot must be a JSON object")
    raw_validators = data.get("validators")
    if not isinstance(raw_validators, list):
        raise SnapshotValidationError("'validators' must be a list")
    validators = []
    seen: set[str] = set()
    for entry in raw_validators:
        if not isinstance(entry, dict) or not isinstance(entry.get("id"), str) or not entry["id"]:
            raise SnapshotValidationError(f"validator entry needs a non-empty string id: {entry!r}")
        vid = entry["id"]
        if vid in seen:
            raise SnapshotValidationError(f"duplicate validator id {vid}")
        seen.add(vid)
        online = entry.get("online", True)
        if not isinstance(online, bool):
            raise SnapshotValidationError(f"'online' of {vid} must be a boolean")
        validators.append(Validator(vid, entry.get("name"), entry.get("org"), online))

    raw_sets = data.get("quorum_sets", {})
    if not isinstance(raw_sets, dict):
        raise SnapshotValidationError("'quorum_sets' must be an object")
    slices: dict[str, QuorumSet] = {}
    for vid, raw in raw_sets.items():
        if vid not in seen:
            raise SnapshotValidationError(f"quorum set declared for unknown validator {vid}")
        slices[vid] = _quorum_set_from_obj(raw, vid)

    warnings = []
    for vid in sorted(slices):
        missing = sorted(flatten_members(slices[vid]) - seen)
        if missing:
            warnings.append(
                f"slice of {vid} references unknown validators: {', '.join(missing)}")
    return NetworkSnapshot(
        timestamp=str(data.get("timestamp", "")),
        validators=tuple(validators),
        slices=slices,
        warnings=tuple(warnings),
    )


def parse_snapshot(source: bytes | str | IO[bytes] | IO[str]) -> NetworkSnapshot:
    """Parse snapshot JSON from bytes, text or a readable stream."""
    if hasattr(source, "read"):
        source = source.read()  # type: ignore[union-attr]
    if isinstance(source, bytes):
        try:
            text = source.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise SnapshotParseError("input is not valid UTF-8", exc.start) from exc
    else:
        text = source  # type: ignore[assignment]
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        offset = len(text[: exc.pos].encode("utf-8"))
        raise SnapshotParseError(f"malformed JSON: {exc.msg}", offset) from exc
    return snapshot_from_dict(data)


def load_snapshot(path: str) -> NetworkSnapshot:
    with open(path, "rb") as fh:
        return parse_snapshot(fh.read())


def flatten_members(qs: QuorumSet) -> set[ValidatorId]:
    out: set[str] = set()
    stack = [qs]
    while stack:
        q = stack.pop()
        for m in q.members:
            if isinstance(m, str):
                out.add(m)
            else:
                stack.append(m)
    return out


def nesting_depths(qs: QuorumSet, v: ValidatorId) -> list[int]:
    """Depth of every leaf occurrence of ``v``; members of ``qs`` itself are depth 1."""
    depths: list[int] = []

    def walk(q: QuorumSet, depth: int) -> None:
        for m in q.members:
            if isinstance(m, str):
                if m == v:
                    depths.append(depth)
            else:
                walk(m, depth + 1)

    walk(qs, 1)
    return depths


def _canonical_form(qs: QuorumSet) -> str:
    nested = sorted(canonical_hash(q) for q in qs.inner)
    return json.dumps({"t": qs.threshold, "v": sorted(qs.leaves), "n": nested},
                      separators=(",", ":"))


def canonical_hash(qs: QuorumSet) -> str:
    """SHA-256 hex digest, invariant under member reordering at any depth."""
    return hashlib.sha256(_canonical_form(qs).encode("utf-8")).hexdigest()


def short_id(digest: str) -> str:
    return digest[:6]
