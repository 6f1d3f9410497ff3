"""Brascamp-Lieb constants: scaling solver, finiteness polytopes and geometric checks."""

from .datum import (
    BLDatum,
    EquivalenceTransform,
    GaussianInput,
    GridSpec,
    apply_equivalence,
    bl_supremum_bruteforce,
    check_datum,
    equivalence_factor,
    lieb_objective,
    validate,
)
from .finiteness import build_polytope, check_subspace, find_violation, membership
from .geometric import (
    FrameDatum,
    UniformCover,
    cover_to_datum,
    frame_to_datum,
    is_geometric,
    loomis_whitney_datum,
    young_datum,
)
from .io import dumps_datum, loads_datum
from .matcore import NotPositiveDefinite, Subspace, ValidationError
from .scaling import BrascampLiebScaler, ScalingConfig, solve_bl

__version__ = "0.1.0"
