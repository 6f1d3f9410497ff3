"""Alternating projection/isotropy normalization for approximating BL(B, p).

Each step replaces the datum by an equivalent one,

    projection:  B_i <- (B_i B_i^T)^{-1/2} B_i
    isotropy:    B_i <- B_i (sum_j p_j B_j^T B_j)^{-1/2}

and multiplies the constant by a known factor. When both conditions hold
the datum is geometric, its constant is 1, and the product of the inverse
step factors is the constant of the input.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .datum import BLDatum, EquivalenceTransform, apply_equivalence, check_datum
from .matcore import Subspace, ValidationError, inv_sqrt_pd, slogdet, sym_eig

PROJECTION = "projection"
ISOTROPY = "isotropy"


@dataclass(frozen=True)
class ScalingConfig:
    max_iters: int = 10000
    tol_geometric: float = 1e-10
    divergence_window: int = 200
    divergence_eigen_floor: float = 1e-13

    def __post_init__(self):
        for name in ("max_iters", "tol_geometric", "divergence_window", "divergence_eigen_floor"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"{name} must be positive")

    @classmethod
    def from_accuracy(cls, eps, n, k, **kw):
        """Heuristic map from a requested relative accuracy to the residual tolerance."""
        return cls(tol_geometric=eps / (10.0 * n * k), **kw)


@dataclass(frozen=True)
class StepRecord:
    iter: int
    kind: str
    step_factor: float
    projection_residual: float
    isotropy_residual: float
    running_estimate: float


@dataclass
class ScalingTrace:
    steps: list = field(default_factory=list)

    def __len__(self):
        return len(self.steps)

    def kinds(self):
        return [s.kind for s in self.steps]

    def to_tsv(self, header=True) -> str:
        out = io.StringIO()
        if header:
            out.write("iter\tkind\tfactor\tproj_res\tiso_res\testimate\n")
        for s in self.steps:
            out.write(f"{s.iter}\t{s.kind}\t{s.step_factor:.17g}\t{s.projection_residual:.17g}\t"
                      f"{s.isotropy_residual:.17g}\t{s.running_estimate:.17g}\n")
        return out.getvalue()


@dataclass
class SolveResult:
    status: str  # "Converged" | "Diverged" | "MaxIters"
    estimate: float
    trace: ScalingTrace
    violation_hint: Subspace | None = None
    hints: list = field(default_factory=list)
    transform: EquivalenceTransform | None = None
    datum: BLDatum | None = None

    @property
    def converged(self) -> bool:
        return self.status == "Converged"


def residuals(d: BLDatum):
    """``(sum_i ||B_i B_i^T - I||_F, ||sum_i p_i B_i^T B_i - I||_F)``."""
    return _residuals(d.maps, d.p)


def _residuals(maps, p):
    proj = sum(float(np.linalg.norm(B @ B.T - np.eye(B.shape[0]))) for B in maps)
    C = sum(q * B.T @ B for q, B in zip(p, maps))
    return proj, float(np.linalg.norm(C - np.eye(maps[0].shape[1])))


def _projection_step(maps, p):
    new, Rs, log_factor = [], [], 0.0
    for B, q in zip(maps, p):
        C = B @ B.T
        R = inv_sqrt_pd(C)
        new.append(R @ B)
        Rs.append(R)
        log_factor += 0.5 * q * slogdet(C)[1]
    return new, Rs, log_factor


def _isotropy_matrix(maps, p):
    return sum(q * B.T @ B for q, B in zip(p, maps))


def projection_normalize(d: BLDatum):
    """Return ``(d', factor)`` with ``d'`` projection-normalized and ``BL(d') = factor * BL(d)``."""
    maps, _, log_factor = _projection_step(d.maps, d.p)
    return d.with_maps(maps), math.exp(log_factor)


def isotropy_normalize(d: BLDatum, eigen_floor=None):
    """Return ``(d', factor)`` with ``d'`` isotropic and ``BL(d') = factor * BL(d)``.

    Raises :class:`~blineq.matcore.NotPositiveDefinite` when the isotropy
    matrix is (numerically) singular; its eigenvector points along the
    degenerate direction.
    """
    C = _isotropy_matrix(d.maps, d.p)
    R = inv_sqrt_pd(C, eigen_floor)
    return d.with_maps([B @ R for B in d.maps]), math.exp(0.5 * slogdet(C)[1])


def _hints_from(phi, small_vectors):
    """Candidate violating subspaces, expressed in the input coordinates."""
    hints = []
    n = phi.shape[0]
    if small_vectors is not None and small_vectors.shape[1]:
        hints.append(Subspace.span(phi @ small_vectors))
    U, _, _ = np.linalg.svd(phi)
    for r in range(1, n):
        hints.append(Subspace.span(U[:, :r]))
        hints.append(Subspace.span(U[:, n - r:]))
    return hints


def solve_bl(d: BLDatum, cfg: ScalingConfig = ScalingConfig()) -> SolveResult:
    """Approximate BL(B, p) by alternating normalization, or report divergence.

    The cumulative log factor ``log F`` satisfies ``BL(d) = F * BL(current)``
    throughout; on convergence the current datum is geometric so the
    estimate is ``F``.
    """
    check_datum(d)
    p = d.p
    maps = list(d.maps)
    psi_inv = [np.eye(m) for m in d.dims]
    phi = np.eye(d.n)
    log_F = 0.0
    trace = ScalingTrace()
    iso_after_projection = []

    def finish(status, hints=()):
        hints = list(hints)
        # current maps are psi_inv_i B_i phi, so the transform has Psi_i = psi_inv_i^{-1}
        try:
            T = EquivalenceTransform(phi, tuple(np.linalg.inv(R) for R in psi_inv))
        except (ValidationError, np.linalg.LinAlgError):
            T = None  # degenerate after a divergent run
        return SolveResult(status, math.exp(log_F) if status == "Converged" else math.nan, trace,
                           hints[0] if hints else None, hints, T, d.with_maps(maps))

    for it in range(1, cfg.max_iters + 1):
        if it % 2 == 1:
            kind = PROJECTION
            try:
                maps, Rs, log_step = _projection_step(maps, p)
            except np.linalg.LinAlgError:
                return finish("Diverged", _hints_from(phi, None))
            psi_inv = [R @ P for R, P in zip(Rs, psi_inv)]
        else:
            kind = ISOTROPY
            C = _isotropy_matrix(maps, p)
            w, Q = sym_eig(C)
            if w[0] < cfg.divergence_eigen_floor:
                small = Q[:, w < max(cfg.divergence_eigen_floor, 1e-8 * w[-1])]
                return finish("Diverged", _hints_from(phi, small))
            R = (Q / np.sqrt(w)) @ Q.T
            maps = [B @ R for B in maps]
            phi = phi @ R
            log_step = 0.5 * float(np.sum(np.log(w)))
        log_F -= log_step
        proj_res, iso_res = _residuals(maps, p)
        trace.steps.append(StepRecord(it, kind, math.exp(log_step), proj_res, iso_res, math.exp(log_F)))
        if proj_res < cfg.tol_geometric and iso_res < cfg.tol_geometric:
            return finish("Converged")
        if kind == PROJECTION:
            iso_after_projection.append(iso_res)
            window = cfg.divergence_window
            if len(iso_after_projection) > window:
                old = iso_after_projection[-window - 1]
                if iso_res > 0.99 * old:
                    C = _isotropy_matrix(maps, p)
                    w, Q = sym_eig(C)
                    return finish("Diverged", _hints_from(phi, Q[:, :1]))
    return finish("MaxIters")


class BrascampLiebScaler(TransformerMixin, BaseEstimator):
    """Estimator wrapper around :func:`solve_bl`.

    ``fit`` learns the equivalence transform taking the datum to a geometric
    one; ``transform`` applies that transform to a datum with the same
    shapes. Fitted attributes: ``estimate_``, ``status_``, ``trace_``,
    ``transform_``, ``geometric_datum_``, ``violation_hints_``, ``n_iter_``.
    """

    def __init__(self, max_iters=10000, tol=1e-10, divergence_window=200,
                 divergence_eigen_floor=1e-13):
        self.max_iters = max_iters
        self.tol = tol
        self.divergence_window = divergence_window
        self.divergence_eigen_floor = divergence_eigen_floor

    def _config(self):
        return ScalingConfig(self.max_iters, self.tol, self.divergence_window,
                             self.divergence_eigen_floor)

    def fit(self, X, y=None):
        res = solve_bl(check_datum(X), self._config())
        self.estimate_ = res.estimate
        self.status_ = res.status
        self.trace_ = res.trace
        self.transform_ = res.transform
        self.geometric_datum_ = res.datum if res.converged else None
        self.violation_hints_ = res.hints
        self.n_iter_ = len(res.trace)
        return self

    def transform(self, X):
        check_is_fitted(self, "transform_")
        if self.transform_ is None:
            raise ValidationError(f"no equivalence transform available (status {self.status_})")
        return apply_equivalence(X, self.transform_)

