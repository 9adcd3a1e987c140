import pytest

from qsentinel import _kernels
from qsentinel.model import snapshot_from_dict


@pytest.fixture(params=["numba", "numpy"])
def backend(request, monkeypatch):
    """Run a test once per kernel backend."""
    chosen = _kernels.NUMBA if request.param == "numba" else _kernels.NUMPY
    if chosen is None:
        pytest.skip("numba unavailable")
    monkeypatch.setattr(_kernels, "ACTIVE", chosen)
    return request.param


def snap(quorum_sets, validators=None, offline=()):
    """Snapshot from a {id: {"t", "v"}} mapping; validators default to every id mentioned."""
    if validators is None:
        ids = set(quorum_sets)
        for qs in quorum_sets.values():
            stack = [qs]
            while stack:
                q = stack.pop()
                for m in q["v"]:
                    (ids.add if isinstance(m, str) else stack.append)(m)
        validators = sorted(ids)
    return snapshot_from_dict({
        "timestamp": "t",
        "validators": [{"id": v, "online": v not in offline} for v in validators],
        "quorum_sets": quorum_sets,
    })
