"""Numerical checks of the inequality and its reverse form on concrete inputs.

Gaussians use the ``exp(-pi <A x, x>)`` normalization, so a Gaussian on
``R^m`` integrates to ``det(A)^{-1/2}``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import ConvexHull, Delaunay, QhullError

from .datum import BLDatum, GaussianInput, check_datum, gaussian_matrix
from .matcore import ValidationError, as_matrix, det
from .scaling import ScalingConfig, solve_bl

MAX_QUAD_DIM = 3
CHUNK = 1 << 16


def gaussian_two_sides(d: BLDatum, g):
    """Closed-form both sides of the inequality for centered Gaussian inputs.

    Returns ``(lhs, rhs_unit, ratio)`` where ``lhs = det(sum p_i B_i^T A_i B_i)^{-1/2}``,
    ``rhs_unit = prod det(A_i)^{-p_i/2}`` and ``ratio = lhs / rhs_unit``.
    """
    g = g if isinstance(g, GaussianInput) else GaussianInput(tuple(g))
    M = gaussian_matrix(d, g)
    dM = det(M)
    if not dM > 0:
        raise ValidationError("sum p_i B_i^T A_i B_i is not positive definite")
    lhs = dM ** -0.5
    rhs = math.prod(det(A) ** (-0.5 * q) for A, q in zip(g.As, d.p))
    return lhs, rhs, lhs / rhs


def indicator_box(lo, hi):
    lo, hi = np.atleast_1d(np.asarray(lo, float)), np.atleast_1d(np.asarray(hi, float))

    def f(x):
        return np.all((x >= lo) & (x <= hi), axis=-1).astype(float)

    return f


def gaussian_density(A):
    A = as_matrix(A)

    def f(x):
        return np.exp(-np.pi * np.einsum("...i,ij,...j->...", x, A, x))

    return f


def gaussian_box(d: BLDatum, g, nsigma=6.0):
    """Symmetric box covering ``nsigma`` standard deviations of the LHS integrand."""
    M = gaussian_matrix(d, g)
    cov = np.linalg.inv(2 * np.pi * M)
    half = nsigma * np.sqrt(np.diag(cov))
    return -half, half


def _midpoint(d, fs, lo, hi, h):
    counts = np.maximum(np.ceil((hi - lo) / h).astype(int), 1)
    steps = (hi - lo) / counts
    axes = [lo[j] + (np.arange(counts[j]) + 0.5) * steps[j] for j in range(d.n)]
    total = []
    grid = itertools.product(*axes)
    p = d.p
    while True:
        pts = np.array(list(itertools.islice(grid, CHUNK)))
        if pts.size == 0:
            break
        vals = np.ones(len(pts))
        for B, f, q in zip(d.maps, fs, p):
            vals *= np.asarray(f(pts @ B.T), dtype=float) ** q
        total.append(float(np.sum(vals)))
    return math.fsum(total) * float(np.prod(steps))


def quadrature_lhs(d: BLDatum, fs, box, h, richardson_order=1):
    """Midpoint-rule estimate of ``int prod f_i(B_i x)^{p_i} dx`` over ``box``.

    ``fs`` are vectorised callables on ``R^{n_i}``; ``box = (lo, hi)``.
    Two grids (``h`` and ``h/2``) are combined by Richardson extrapolation
    assuming an ``O(h^richardson_order)`` error; ``richardson_order=None``
    returns the fine-grid value.
    """
    if d.n > MAX_QUAD_DIM:
        raise ValidationError(f"quadrature supports n <= {MAX_QUAD_DIM}, got n = {d.n}")
    if len(fs) != d.k:
        raise ValidationError(f"need {d.k} functions, got {len(fs)}")
    lo = np.broadcast_to(np.asarray(box[0], float), (d.n,))
    hi = np.broadcast_to(np.asarray(box[1], float), (d.n,))
    if np.any(hi <= lo):
        raise ValidationError("empty quadrature box")
    fine = _midpoint(d, fs, lo, hi, h / 2)
    if richardson_order is None:
        return fine
    coarse = _midpoint(d, fs, lo, hi, h)
    r = 2.0 ** richardson_order
    return (r * fine - coarse) / (r - 1)


def box_vertices(lo, hi):
    lo, hi = np.atleast_1d(np.asarray(lo, float)), np.atleast_1d(np.asarray(hi, float))
    return np.array(list(itertools.product(*zip(lo, hi))), dtype=float)


def cross_polytope_vertices(lambdas):
    lam = np.atleast_1d(np.asarray(lambdas, float))
    E = np.diag(lam)
    return np.vstack([E, -E])


def _hull_points(P):
    P = np.unique(np.round(P, 12), axis=0)
    if P.shape[1] == 1:
        return np.array([[P.min()], [P.max()]])
    try:
        return P[ConvexHull(P).vertices]
    except QhullError:
        return P  # lower-dimensional so far; keep everything


def minkowski_sum_vertices(d: BLDatum, bodies):
    """Vertices of ``sum_i p_i B_i^T K_i`` for polytopes given by their vertices."""
    if len(bodies) != d.k:
        raise ValidationError(f"need {d.k} bodies, got {len(bodies)}")
    S = np.zeros((1, d.n))
    for B, V, q in zip(d.maps, bodies, d.p):
        V = np.atleast_2d(np.asarray(V, float))
        if V.shape[1] != B.shape[0]:
            raise ValidationError("body dimension does not match the map codomain")
        pts = q * V @ B
        S = _hull_points((S[:, None, :] + pts[None, :, :]).reshape(-1, d.n))
    return S


def polytope_volume(vertices) -> float:
    V = np.asarray(vertices, float)
    if V.shape[1] == 1:
        return float(V.max() - V.min())
    try:
        return float(ConvexHull(V).volume)
    except QhullError:
        return 0.0


def barthe_indicator_lhs(d: BLDatum, bodies, h=0.01) -> float:
    """Volume of ``sum_i p_i B_i^T K_i`` by counting grid cells; the reverse-form LHS for indicators.

    For indicator inputs the sup-convolution integrand is exactly the
    indicator of this weighted Minkowski sum. Bodies are convex polytopes
    given by vertex arrays.
    """
    if d.n > MAX_QUAD_DIM:
        raise ValidationError(f"indicator volumes support n <= {MAX_QUAD_DIM}")
    V = minkowski_sum_vertices(d, bodies)
    lo, hi = V.min(axis=0), V.max(axis=0)
    if np.any(hi - lo <= 0):
        return 0.0
    # cells tile the bounding box exactly; steps are at most h
    counts = np.maximum(np.ceil((hi - lo) / h).astype(int), 1)
    steps = (hi - lo) / counts
    if d.n == 1:
        return float(hi[0] - lo[0])
    try:
        tri = Delaunay(V)
    except QhullError:
        return 0.0
    axes = [lo[j] + (np.arange(counts[j]) + 0.5) * steps[j] for j in range(d.n)]
    count = 0
    grid = itertools.product(*axes)
    while True:
        pts = np.array(list(itertools.islice(grid, CHUNK)))
        if pts.size == 0:
            break
        count += int(np.sum(tri.find_simplex(pts) >= 0))
    return count * float(np.prod(steps))


def rbl_from_bl(bl: float) -> float:
    if not bl > 0:
        raise ValidationError(f"BL must be positive, got {bl}")
    return 1.0 / bl


@dataclass
class ContinuityReport:
    deltas: list
    estimates: list
    max_jump: float


def continuity_probe(d: BLDatum, direction, deltas, cfg: ScalingConfig = ScalingConfig()):
    """Solve along ``B + delta * direction``; divergent or degenerate probes give ``inf``."""
    check_datum(d)
    D = [as_matrix(M) for M in direction]
    if len(D) != d.k or any(M.shape != B.shape for M, B in zip(D, d.maps)):
        raise ValidationError("perturbation must match the datum's map shapes")
    estimates = []
    for delta in deltas:
        probe = d.with_maps([B + delta * M for B, M in zip(d.maps, D)])
        try:
            res = solve_bl(probe, cfg)
        except ValidationError:
            estimates.append(math.inf)
            continue
        estimates.append(res.estimate if res.converged else math.inf)
    jumps = [abs(a - b) for a, b in zip(estimates, estimates[1:]) if math.isfinite(a) and math.isfinite(b)]
    if any(not math.isfinite(e) for e in estimates):
        jumps.append(math.inf)
    return ContinuityReport(list(deltas), estimates, max(jumps, default=0.0))
