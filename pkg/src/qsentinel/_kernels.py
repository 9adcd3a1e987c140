"""Hot loops of the resilience engine.

Quorum sets are compiled to flat arrays (see ``resilience.CompiledNetwork``):
quorum set ``q`` has threshold ``thr[q]``, validator leaves
``leaf_idx[leaf_ptr[q]:leaf_ptr[q+1]]`` and nested children
``child_idx[child_ptr[q]:child_ptr[q+1]]``. Children always carry a lower
index than their parent, so one ascending sweep evaluates every set.

Two interchangeable backends exist: numba-compiled scalar loops and a
vectorized numpy path that evaluates a whole batch of scenarios at once.
Set ``QSENTINEL_DISABLE_NUMBA=1`` to force the numpy path.
"""

from __future__ import annotations

import os
from types import SimpleNamespace

import numpy as np

DISABLE_ENV = "QSENTINEL_DISABLE_NUMBA"

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None


# -- scalar loops (compiled by numba) ----------------------------------------

def _eval_sat(thr, leaf_ptr, leaf_idx, child_ptr, child_idx, live, sat):
    for q in range(thr.shape[0]):
        c = 0
        for j in range(leaf_ptr[q], leaf_ptr[q + 1]):
            if live[leaf_idx[j]]:
                c += 1
        for j in range(child_ptr[q], child_ptr[q + 1]):
            if sat[child_idx[j]]:
                c += 1
        sat[q] = c >= thr[q]


def _cascade_rounds(thr, leaf_ptr, leaf_idx, child_ptr, child_idx, root, declaring,
                    init_failed):
    n = root.shape[0]
    round_of = np.zeros(n, np.int64)
    live = np.zeros(n, np.bool_)
    for i in range(n):
        if init_failed[i]:
            round_of[i] = 1
        elif declaring[i]:
            live[i] = True
    sat = np.zeros(thr.shape[0], np.bool_)
    r = 1
    while True:
        _eval_sat(thr, leaf_ptr, leaf_idx, child_ptr, child_idx, live, sat)
        r += 1
        changed = False
        for i in range(n):
            if live[i] and not sat[root[i]]:
                round_of[i] = r
                changed = True
        if not changed:
            break
        for i in range(n):
            if round_of[i] == r:
                live[i] = False
    return round_of


def _cascade_batch(thr, leaf_ptr, leaf_idx, child_ptr, child_idx, root, declaring,
                   base_failed, subsets):
    m = subsets.shape[0]
    n = root.shape[0]
    failed = np.zeros(m, np.int64)
    rounds = np.zeros(m, np.int64)
    init = np.zeros(n, np.bool_)
    for s in range(m):
        for i in range(n):
            init[i] = base_failed[i]
        for j in range(subsets.shape[1]):
            init[subsets[s, j]] = True
        round_of = _cascade_rounds(thr, leaf_ptr, leaf_idx, child_ptr, child_idx, root,
                                   declaring, init)
        c = 0
        mx = 0
        for i in range(n):
            if round_of[i] > 0 and declaring[i]:
                c += 1
            if round_of[i] > mx:
                mx = round_of[i]
        failed[s] = c
        rounds[s] = mx
    return failed, rounds


def _quorum_masks(thr, leaf_ptr, leaf_idx, child_ptr, child_idx, root, universe, lo, hi):
    n = root.shape[0]
    u = universe.shape[0]
    out = np.zeros(hi - lo, np.bool_)
    live = np.zeros(n, np.bool_)
    sat = np.zeros(thr.shape[0], np.bool_)
    for mask in range(lo, hi):
        if mask == 0:
            continue
        for b in range(u):
            live[universe[b]] = (mask >> b) & 1 == 1
        _eval_sat(thr, leaf_ptr, leaf_idx, child_ptr, child_idx, live, sat)
        ok = True
        for b in range(u):
            if (mask >> b) & 1 == 1 and not sat[root[universe[b]]]:
                ok = False
                break
        out[mask - lo] = ok
    return out


# -- vectorized numpy path -----------------------------------------------------

def _segments(ptr, idx):
    return [idx[ptr[q]:ptr[q + 1]] for q in range(ptr.shape[0] - 1)]


def _eval_sat_np(thr, leaves, children, live):
    sat = np.zeros((live.shape[0], thr.shape[0]), dtype=bool)
    for q in range(thr.shape[0]):
        cnt = live[:, leaves[q]].sum(axis=1)
        if children[q].size:
            cnt = cnt + sat[:, children[q]].sum(axis=1)
        sat[:, q] = cnt >= thr[q]
    return sat


def _cascade_rounds_batch_np(thr, leaf_ptr, leaf_idx, child_ptr, child_idx, root,
                             declaring, init_failed):
    leaves, children = _segments(leaf_ptr, leaf_idx), _segments(child_ptr, child_idx)
    root_safe = np.where(root >= 0, root, 0)
    round_of = np.where(init_failed, 1, 0).astype(np.int64)
    live = declaring[None, :] & ~init_failed
    rows = np.arange(init_failed.shape[0])
    r = 1
    while rows.size:
        r += 1
        sub = live[rows]
        if thr.shape[0]:
            sat = _eval_sat_np(thr, leaves, children, sub)
            newly = sub & ~sat[:, root_safe]
        else:
            newly = np.zeros_like(sub)
        hit = newly.any(axis=1)
        rows, newly = rows[hit], newly[hit]
        block = round_of[rows]
        block[newly] = r
        round_of[rows] = block
        live[rows] &= ~newly
    return round_of


def _cascade_rounds_np(thr, leaf_ptr, leaf_idx, child_ptr, child_idx, root, declaring,
                       init_failed):
    return _cascade_rounds_batch_np(thr, leaf_ptr, leaf_idx, child_ptr, child_idx, root,
                                    declaring, init_failed[None, :])[0]


def _cascade_batch_np(thr, leaf_ptr, leaf_idx, child_ptr, child_idx, root, declaring,
                      base_failed, subsets):
    m = subsets.shape[0]
    init = np.repeat(base_failed[None, :], m, axis=0)
    if subsets.size:
        init[np.arange(m)[:, None], subsets] = True
    round_of = _cascade_rounds_batch_np(thr, leaf_ptr, leaf_idx, child_ptr, child_idx,
                                        root, declaring, init)
    failed = ((round_of > 0) & declaring[None, :]).sum(axis=1).astype(np.int64)
    return failed, round_of.max(axis=1, initial=0).astype(np.int64)


def _quorum_masks_np(thr, leaf_ptr, leaf_idx, child_ptr, child_idx, root, universe,
                     lo, hi):
    leaves, children = _segments(leaf_ptr, leaf_idx), _segments(child_ptr, child_idx)
    masks = np.arange(lo, hi, dtype=np.int64)
    bits = ((masks[:, None] >> np.arange(universe.shape[0])) & 1).astype(bool)
    live = np.zeros((masks.shape[0], root.shape[0]), dtype=bool)
    live[:, universe] = bits
    sat = _eval_sat_np(thr, leaves, children, live)
    member_ok = sat[:, root[universe]] | ~bits
    return member_ok.all(axis=1) & (masks != 0)


NUMPY = SimpleNamespace(
    name="numpy",
    cascade_rounds=_cascade_rounds_np,
    cascade_batch=_cascade_batch_np,
    quorum_masks=_quorum_masks_np,
)

if numba is not None:
    _jit = numba.njit(cache=True)
    _eval_sat_nb = _jit(_eval_sat)
    # rebind so the compiled callers resolve the compiled helper
    _eval_sat = _eval_sat_nb
    _cascade_rounds_nb = _jit(_cascade_rounds)
    _cascade_rounds = _cascade_rounds_nb
    NUMBA = SimpleNamespace(
        name="numba",
        cascade_rounds=_cascade_rounds_nb,
        cascade_batch=_jit(_cascade_batch),
        quorum_masks=_jit(_quorum_masks),
    )
else:  # pragma: no cover
    NUMBA = None


def select(disabled: bool | None = None) -> SimpleNamespace:
    if disabled is None:
        disabled = os.environ.get(DISABLE_ENV, "").strip().lower() not in ("", "0", "false", "no")
    if disabled or NUMBA is None:
        return NUMPY
    return NUMBA


ACTIVE = select()
BACKEND = ACTIVE.name
