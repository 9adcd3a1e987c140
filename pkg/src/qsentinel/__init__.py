"""Robustness and centralization analysis for federated Byzantine agreement networks."""

from ._kernels import BACKEND
from .generators import generate_topology, load_fixture
from .graph import ScoreVector, TrustGraph, build_trust_graph, degree_stats, pagerank
from .influence import SliceGroup, attenuation, group_slices, noderank, noderank_raw
from .model import (
    NetworkSnapshot,
    QuorumSet,
    SnapshotError,
    SnapshotParseError,
    SnapshotValidationError,
    Validator,
    canonical_hash,
    flatten_members,
    load_snapshot,
    nesting_depths,
    parse_snapshot,
    short_id,
)
from .quorums import QuorumCheckReport, check_quorum_conditions, enumerate_minimal_quorums
from .resilience import (
    CascadeResult,
    FtReport,
    cascade,
    classify_groups,
    compute_ft,
    is_slice_satisfied,
    scan_subsets,
)

__version__ = "0.1.0"
