"""Synthetic topologies and the bundled fixture."""

from __future__ import annotations

import json
from importlib import resources

import numpy as np

from .model import NetworkSnapshot, QuorumSet, Validator, canonical_hash, snapshot_from_dict

KINDS = ("pbft", "star", "ring", "clique-pair", "tiered")
GEN_TIMESTAMP = "2000-01-01T00:00:00Z"
FIXTURE_NAME = "fixture12.json"


def _ids(prefix: str, n: int) -> list[str]:
    width = len(str(max(n - 1, 0)))
    return [f"{prefix}{i:0{width}d}" for i in range(n)]


def _snapshot(ids, slices, names=None, orgs=None, offline=()) -> NetworkSnapshot:
    names = names or {}
    orgs = orgs or {}
    validators = tuple(Validator(v, names.get(v), orgs.get(v), v not in offline) for v in ids)
    return NetworkSnapshot(GEN_TIMESTAMP, validators, slices)


def pbft_threshold(n: int) -> int:
    return n - (n - 1) // 3


def pbft(n: int) -> NetworkSnapshot:
    if n < 4:
        raise ValueError("pbft topology needs n >= 4")
    ids = _ids("v", n)
    qs = QuorumSet(pbft_threshold(n), tuple(ids))
    return _snapshot(ids, {v: qs for v in ids})


def star(n: int, hubs: int = 1) -> NetworkSnapshot:
    """Every validator, hubs included, requires all ``hubs`` hub validators."""
    if n < 1 or not 1 <= hubs <= n:
        raise ValueError("star topology needs n >= 1 and 1 <= hubs <= n")
    hub_ids = ["hub"] if hubs == 1 else _ids("hub", hubs)
    ids = hub_ids + _ids("leaf", n - hubs)
    qs = QuorumSet(hubs, tuple(hub_ids))
    return _snapshot(ids, {v: qs for v in ids})


def ring(n: int) -> NetworkSnapshot:
    if n < 1:
        raise ValueError("ring topology needs n >= 1")
    ids = _ids("v", n)
    return _snapshot(ids, {v: QuorumSet(1, (ids[(i + 1) % n],)) for i, v in enumerate(ids)})


def clique_pair(n: int) -> NetworkSnapshot:
    """Two halves, each fully trusting itself and ignoring the other."""
    if n < 2:
        raise ValueError("clique-pair topology needs n >= 2")
    left, right = _ids("a", n // 2), _ids("b", n - n // 2)
    slices = {}
    for half in (left, right):
        qs = QuorumSet(pbft_threshold(len(half)) if len(half) >= 4 else len(half), tuple(half))
        slices.update({v: qs for v in half})
    return _snapshot(left + right, slices)


def tiered(n: int = 62, slices: int = 50, hubs: int = 3, offline: int = 0,
           seed: int = 0) -> NetworkSnapshot:
    """Seeded network where every slice nests a 2-of-``hubs`` core set.

    Each of ``slices`` distinct slices combines the hub core with a random peer
    group; validators beyond the first ``slices`` reuse an existing slice.
    """
    if not (hubs >= 2 and n > hubs and 1 <= slices <= n and 0 <= offline < n - hubs):
        raise ValueError("invalid tiered parameters")
    rng = np.random.default_rng(seed)
    hub_ids = _ids("hub", hubs)
    peers = _ids("node", n - hubs)
    ids = hub_ids + peers
    core = QuorumSet(2, tuple(hub_ids))
    templates: list[QuorumSet] = []
    seen: set[str] = set()
    while len(templates) < slices:
        size = int(rng.integers(2, min(7, len(peers)) + 1))
        group = sorted(rng.choice(peers, size=size, replace=False).tolist())
        inner = QuorumSet(int(rng.integers(1, size + 1)), tuple(group))
        if rng.random() < 0.5:
            qs = QuorumSet(2, (core, inner))
        else:
            qs = QuorumSet(int(rng.integers(1, 3)), (core, inner, str(rng.choice(hub_ids))))
        h = canonical_hash(qs)
        if h not in seen:
            seen.add(h)
            templates.append(qs)
    assignment = {v: templates[i] if i < slices else templates[int(rng.integers(slices))]
                  for i, v in enumerate(ids)}
    down = set(rng.choice(peers, size=offline, replace=False).tolist()) if offline else set()
    return _snapshot(ids, assignment, offline=down)


def generate_topology(kind: str, n: int, **params) -> NetworkSnapshot:
    builders = {"pbft": pbft, "star": star, "ring": ring, "clique-pair": clique_pair,
                "tiered": tiered}
    if kind not in builders:
        raise ValueError(f"unknown topology kind {kind!r}; choose from {', '.join(KINDS)}")
    if not isinstance(n, int) or n < 1:
        raise ValueError(f"invalid n={n!r}")
    return builders[kind](n, **params)


def parse_gen_spec(spec: str) -> NetworkSnapshot:
    """Build a snapshot from ``KIND:N`` or ``KIND:N:key=value,...``."""
    kind, _, rest = spec.partition(":")
    n_text, _, extra = rest.partition(":")
    try:
        n = int(n_text)
    except ValueError:
        raise ValueError(f"bad generator spec {spec!r}; expected KIND:N") from None
    params = {}
    for item in filter(None, extra.split(",")):
        key, _, value = item.partition("=")
        params[key.strip().replace("-", "_")] = int(value)
    return generate_topology(kind, n, **params)


def fixture_text() -> str:
    return resources.files("qsentinel.data").joinpath(FIXTURE_NAME).read_text("utf-8")


def load_fixture() -> NetworkSnapshot:
    """Twelve validators: three hubs, nine members in three organizations."""
    return snapshot_from_dict(json.loads(fixture_text()))
