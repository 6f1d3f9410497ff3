"""Geometric Brascamp-Lieb data: frames, John-type decompositions, covers and subspace structure."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .datum import BLDatum, as_exponent
from .matcore import (
    Subspace,
    ValidationError,
    image,
    intersect,
    orthocomplement,
    subspace_sum,
)

FRAME_TOL = 1e-9
MAX_PATTERN_MAPS = 20


@dataclass
class GeometricReport:
    projection_residuals: list
    isotropy_residual: float
    tol: float

    @property
    def projection_ok(self) -> bool:
        return all(r <= self.tol for r in self.projection_residuals)

    @property
    def isotropy_ok(self) -> bool:
        return self.isotropy_residual <= self.tol

    @property
    def geometric(self) -> bool:
        return self.projection_ok and self.isotropy_ok


def projection_residuals(d: BLDatum) -> list:
    return [float(np.linalg.norm(B @ B.T - np.eye(B.shape[0]))) for B in d.maps]


def isotropy_residual(d: BLDatum) -> float:
    C = sum(q * B.T @ B for q, B in zip(d.p, d.maps))
    return float(np.linalg.norm(C - np.eye(d.n)))


def is_geometric(d: BLDatum, tol=FRAME_TOL) -> GeometricReport:
    """Check ``B_i B_i^T = I`` for every map and ``sum p_i B_i^T B_i = I``."""
    return GeometricReport(projection_residuals(d), isotropy_residual(d), tol)


@dataclass(frozen=True, eq=False)
class FrameDatum:
    """Unit vectors ``u_i`` (rows of ``units``) with positive weights ``p_i``."""

    units: np.ndarray
    weights: tuple

    def __post_init__(self):
        U = np.array(self.units, dtype=float)
        if U.ndim != 2 or U.shape[0] == 0:
            raise ValidationError("units must be a nonempty (k, n) array")
        w = tuple(as_exponent(q) for q in self.weights)
        if len(w) != U.shape[0]:
            raise ValidationError(f"{U.shape[0]} vectors but {len(w)} weights")
        if any(q <= 0 for q in w):
            raise ValidationError("frame weights must be positive")
        norms = np.linalg.norm(U, axis=1)
        if np.abs(norms - 1.0).max() > 1e-12:
            raise ValidationError("frame vectors must have unit length")
        U.setflags(write=False)
        object.__setattr__(self, "units", U)
        object.__setattr__(self, "weights", w)

    @property
    def n(self) -> int:
        return self.units.shape[1]

    @property
    def p(self) -> np.ndarray:
        return np.array([float(q) for q in self.weights])

    @property
    def isotropy_residual(self) -> float:
        S = (self.units.T * self.p) @ self.units
        return float(np.linalg.norm(S - np.eye(self.n)))

    @property
    def valid(self) -> bool:
        return self.isotropy_residual < FRAME_TOL


def frame_to_datum(f: FrameDatum, tol=FRAME_TOL) -> BLDatum:
    """Rank-one datum with rows ``B_i = u_i^T``; warns when the frame is not isotropic."""
    res = f.isotropy_residual
    if res >= tol:
        warnings.warn(f"frame isotropy residual {res:.3e} exceeds {tol:.0e}; datum is not geometric",
                      stacklevel=2)
    return BLDatum(tuple(u.reshape(1, -1) for u in f.units), f.weights)


def john_checks(f: FrameDatum):
    """Return ``(isotropy_residual, barycenter_residual, trace_gap)``."""
    bary = float(np.linalg.norm(f.p @ f.units))
    trace_gap = float(abs(sum(f.weights) - f.n))
    return f.isotropy_residual, bary, trace_gap


def simplex_lift(f: FrameDatum, w=None, tol=FRAME_TOL) -> FrameDatum:
    """Lift a John decomposition in R^n to an isotropic frame in R^{n+1}.

    ``R^n`` is identified with ``w^perp`` (default ``w = e_{n+1}``); vectors
    become ``-sqrt(n/(n+1)) u_i + sqrt(1/(n+1)) w`` with weights
    ``(n+1)/n * p_i``.
    """
    iso, bary, _ = john_checks(f)
    if iso > tol:
        raise ValidationError(f"isotropy condition fails (residual {iso:.3e})")
    if bary > tol:
        raise ValidationError(f"zero-barycenter condition fails (residual {bary:.3e})")
    n = f.n
    if w is None:
        w = np.zeros(n + 1)
        w[n] = 1.0
        embed = np.eye(n + 1)[:, :n]
    else:
        w = np.asarray(w, dtype=float)
        w = w / np.linalg.norm(w)
        embed = orthocomplement(Subspace.span(w)).basis
    lifted = -math.sqrt(n / (n + 1)) * (f.units @ embed.T) + math.sqrt(1 / (n + 1)) * w
    # renormalise to absorb rounding in the embedding
    lifted /= np.linalg.norm(lifted, axis=1, keepdims=True)
    return FrameDatum(lifted, tuple(Fraction(n + 1, n) * q for q in f.weights))


def regular_polygon_frame(m: int) -> FrameDatum:
    """``m >= 2`` equally spaced directions on the circle with weights ``2/m``."""
    ang = 2 * np.pi * np.arange(m) / m
    return FrameDatum(np.column_stack([np.cos(ang), np.sin(ang)]), (Fraction(2, m),) * m)


def regular_simplex_frame(n: int) -> FrameDatum:
    """The ``n+1`` unit vectors pointing at the vertices of a regular simplex, weights ``n/(n+1)``."""
    E = np.eye(n + 1) - 1.0 / (n + 1)
    basis = orthocomplement(Subspace.span(np.ones(n + 1))).basis
    U = E @ basis
    U /= np.linalg.norm(U, axis=1, keepdims=True)
    return FrameDatum(U, (Fraction(n, n + 1),) * (n + 1))


def cube_frame(n: int) -> FrameDatum:
    """Contact points ``+-e_j`` of the cube, weight 1/2 each."""
    E = np.eye(n)
    return FrameDatum(np.vstack([E, -E]), (Fraction(1, 2),) * (2 * n))


def orthonormal_frame(n: int) -> FrameDatum:
    return FrameDatum(np.eye(n), (Fraction(1),) * n)


@dataclass(frozen=True)
class UniformCover:
    """Subsets ``sigma_i`` of ``{1..n}`` covering every coordinate exactly ``s`` times.

    ``s`` is inferred when omitted. Sets are 1-based.
    """

    n: int
    sets: tuple
    s: int | None = None

    def __post_init__(self):
        sets = tuple(frozenset(int(j) for j in sigma) for sigma in self.sets)
        if not sets:
            raise ValidationError("a cover needs at least one set")
        for i, sigma in enumerate(sets):
            if not sigma:
                raise ValidationError(f"set {i} is empty")
            bad = [j for j in sigma if not 1 <= j <= self.n]
            if bad:
                raise ValidationError(f"set {i} has coordinates outside 1..{self.n}: {sorted(bad)}")
        counts = [sum(j in sigma for sigma in sets) for j in range(1, self.n + 1)]
        s = counts[0] if self.s is None else self.s
        off = [j + 1 for j, c in enumerate(counts) if c != s]
        if off:
            raise ValidationError(
                f"not a {s}-uniform cover: coordinate(s) {off} covered "
                f"{[counts[j - 1] for j in off]} times")
        object.__setattr__(self, "sets", sets)
        object.__setattr__(self, "s", s)

    @classmethod
    def loomis_whitney(cls, n):
        full = set(range(1, n + 1))
        return cls(n, tuple(full - {i} for i in range(1, n + 1)))


def cover_to_datum(c: UniformCover) -> BLDatum:
    """Coordinate projections onto ``E_sigma`` with exponents ``1/s``."""
    maps = []
    for sigma in c.sets:
        B = np.zeros((len(sigma), c.n))
        for r, j in enumerate(sorted(sigma)):
            B[r, j - 1] = 1.0
        maps.append(B)
    return BLDatum(tuple(maps), (Fraction(1, c.s),) * len(maps))


def loomis_whitney_datum(n: int) -> BLDatum:
    return cover_to_datum(UniformCover.loomis_whitney(n))


def induced_one_cover(c: UniformCover) -> UniformCover:
    """The partition of ``{1..n}`` into the nonempty atoms ``cap_i sigma_i^{eps(i)}``."""
    atoms = {}
    for j in range(1, c.n + 1):
        signature = tuple(j not in sigma for sigma in c.sets)
        atoms.setdefault(signature, set()).add(j)
    parts = sorted((sorted(a) for a in atoms.values()))
    return UniformCover(c.n, tuple(parts), 1)


def _row_spaces(d: BLDatum):
    return [image(B.T) for B in d.maps]


def _require_geometric(d, tol):
    rep = is_geometric(d, tol)
    if not rep.geometric:
        raise ValidationError("datum is not geometric (projection/isotropy residuals "
                              f"{max(rep.projection_residuals):.2e}/{rep.isotropy_residual:.2e})")


def critical_subspace_test(d: BLDatum, V: Subspace, tol=FRAME_TOL):
    """Compare ``sum p_i dim(E_i cap V)`` with ``dim V`` where ``E_i = im B_i^T``.

    Returns ``(lhs, verdict)``; ``lhs`` is an exact rational.
    """
    _require_geometric(d, tol)
    if V.ambient_dim != d.n:
        raise ValidationError("subspace lives in the wrong ambient space")
    lhs = sum((q * intersect(E, V).dim for q, E in zip(d.exponents, _row_spaces(d))), Fraction(0))
    if lhs < V.dim:
        verdict = "subcritical"
    elif lhs == V.dim:
        verdict = "critical"
    else:
        verdict = "supercritical"
    return lhs, verdict


def independent_patterns(d: BLDatum, tol=FRAME_TOL):
    """All ``(eps, F_eps)`` with ``F_eps = cap_i E_i^{(eps_i)}`` nonzero, ``eps`` in lexicographic order."""
    _require_geometric(d, tol)
    if d.k > MAX_PATTERN_MAPS:
        raise ValidationError(f"k = {d.k} maps exceeds the pattern enumeration limit {MAX_PATTERN_MAPS}")
    spaces = [(E, orthocomplement(E)) for E in _row_spaces(d)]
    found = []

    def walk(i, eps, F):
        if F.dim == 0:
            return
        if i == d.k:
            found.append((tuple(eps), F))
            return
        for bit in (0, 1):
            walk(i + 1, eps + [bit], intersect(F, spaces[i][bit]))

    walk(0, [], Subspace.full(d.n))
    return found


def independent_subspace_decomposition(d: BLDatum, tol=FRAME_TOL):
    """Return ``(independents, F_dep)`` with ``R^n = (+) F_eps (+) F_dep``."""
    independents = [F for _, F in independent_patterns(d, tol)]
    total = Subspace.zero(d.n)
    for F in independents:
        total = subspace_sum(total, F)
    return independents, orthocomplement(total)


def hoelder_datum(n: int, exponents) -> BLDatum:
    return BLDatum(tuple(np.eye(n) for _ in exponents), tuple(exponents))


def young_datum(exponents=("2/3", "2/3", "2/3")) -> BLDatum:
    """Young's convolution maps ``(x, y) -> y, x - y, x``."""
    return BLDatum(([[0.0, 1.0]], [[1.0, -1.0]], [[1.0, 0.0]]), tuple(exponents))

