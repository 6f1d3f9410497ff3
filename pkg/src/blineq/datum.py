"""Brascamp-Lieb data, equivalence transforms and Lieb's Gaussian objective."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational

import numpy as np
from scipy.optimize import minimize_scalar

from .matcore import ValidationError, as_matrix, rank, slogdet

DENOMINATOR_BOUND = 10**6
SCALING_TOL = 1e-12


class InternalContradiction(RuntimeError):
    """A datum invariant that should hold by construction turned out false."""


def as_exponent(x) -> Fraction:
    """Coerce an exponent to an exact rational.

    Accepts ``Fraction``/``int``, strings such as ``"2/3"`` or ``"0.2"`` and
    floats. Decimals and floats are snapped to the nearest rational with
    denominator at most 10**6.
    """
    if isinstance(x, Rational):
        return Fraction(x)
    if isinstance(x, str):
        s = x.strip()
        try:
            q = Fraction(s)
        except (ValueError, ZeroDivisionError) as exc:
            raise ValidationError(f"bad exponent {x!r}") from exc
        return q if "/" in s else q.limit_denominator(DENOMINATOR_BOUND)
    xf = float(x)
    if not math.isfinite(xf):
        raise ValidationError(f"exponent must be finite, got {x!r}")
    return Fraction(xf).limit_denominator(DENOMINATOR_BOUND)


@dataclass(frozen=True, eq=False)
class BLDatum:
    """A Brascamp-Lieb datum: linear maps ``B_i: R^n -> R^{n_i}`` with exponents ``p_i > 0``.

    Construction only checks shapes and positivity; use :func:`validate` or
    :func:`check_datum` for surjectivity, the common kernel and the scaling
    condition.
    """

    maps: tuple
    exponents: tuple

    def __post_init__(self):
        maps = tuple(as_matrix(B, f"B[{i}]") for i, B in enumerate(self.maps))
        exps = tuple(as_exponent(p) for p in self.exponents)
        if not maps:
            raise ValidationError("a datum needs at least one map")
        if len(maps) != len(exps):
            raise ValidationError(f"{len(maps)} maps but {len(exps)} exponents")
        n = maps[0].shape[1]
        for i, B in enumerate(maps):
            if B.shape[1] != n:
                raise ValidationError(f"B[{i}] has {B.shape[1]} columns, expected {n}")
            B.setflags(write=False)
        for i, p in enumerate(exps):
            if p <= 0:
                raise ValidationError(f"exponent p[{i}] = {p} must be positive")
        object.__setattr__(self, "maps", maps)
        object.__setattr__(self, "exponents", exps)

    @classmethod
    def from_entries(cls, entries, n=None):
        """Build from ``[(B, p), ...]``; ``n`` is checked when given."""
        entries = list(entries)
        d = cls(tuple(B for B, _ in entries), tuple(p for _, p in entries))
        if n is not None and d.n != n:
            raise ValidationError(f"declared n={n} but maps have {d.n} columns")
        return d

    @property
    def n(self) -> int:
        return self.maps[0].shape[1]

    @property
    def k(self) -> int:
        return len(self.maps)

    @property
    def dims(self) -> tuple:
        return tuple(B.shape[0] for B in self.maps)

    @property
    def p(self) -> np.ndarray:
        return np.array([float(q) for q in self.exponents])

    @property
    def scaling_residual(self) -> float:
        return float(abs(sum(q * m for q, m in zip(self.exponents, self.dims)) - self.n))

    def with_maps(self, maps) -> "BLDatum":
        return BLDatum(tuple(maps), self.exponents)

    def with_exponents(self, exponents) -> "BLDatum":
        return BLDatum(self.maps, tuple(exponents))

    def stacked(self) -> np.ndarray:
        return np.vstack(self.maps)

    def __repr__(self):
        ps = ", ".join(str(q) for q in self.exponents)
        return f"BLDatum(n={self.n}, dims={self.dims}, p=({ps}))"


@dataclass
class ValidationReport:
    surjective: list
    trivial_common_kernel: bool
    scaling_residual: float
    messages: list = field(default_factory=list)

    @property
    def scaling_ok(self) -> bool:
        return self.scaling_residual <= SCALING_TOL

    @property
    def ok(self) -> bool:
        return all(self.surjective) and self.trivial_common_kernel and self.scaling_ok


def validate(d: BLDatum) -> ValidationReport:
    surj = [rank(B) == B.shape[0] for B in d.maps]
    msgs = [f"B[{i}] ({B.shape[0]}x{B.shape[1]}) is not surjective" for i, (B, ok) in
            enumerate(zip(d.maps, surj)) if not ok]
    common = rank(d.stacked()) == d.n
    if not common:
        msgs.append("the maps have a nontrivial common kernel")
    res = d.scaling_residual
    if res > SCALING_TOL:
        msgs.append(f"scaling condition sum p_i n_i = n fails by {res:.3g}")
    return ValidationReport(surj, common, res, msgs)


def check_datum(d, require_scaling=True) -> BLDatum:
    """Validate and return ``d``; raise :class:`ValidationError` with the report's messages."""
    if not isinstance(d, BLDatum):
        raise ValidationError(f"expected a BLDatum, got {type(d).__name__}")
    report = validate(d)
    problems = [m for m in report.messages if require_scaling or "scaling" not in m]
    if problems:
        raise ValidationError("; ".join(problems))
    return d


@dataclass(frozen=True, eq=False)
class EquivalenceTransform:
    """``B_i' = Psi_i^{-1} B_i Phi`` with ``Phi`` in GL(n) and ``Psi_i`` in GL(n_i)."""

    phi: np.ndarray
    psis: tuple

    def __post_init__(self):
        phi = as_matrix(self.phi, "Phi")
        psis = tuple(as_matrix(P, f"Psi[{i}]") for i, P in enumerate(self.psis))
        for name, M in [("Phi", phi)] + [(f"Psi[{i}]", P) for i, P in enumerate(psis)]:
            if M.shape[0] != M.shape[1]:
                raise ValidationError(f"{name} must be square")
            if slogdet(M)[0] == 0 or rank(M) < M.shape[0]:
                raise ValidationError(f"{name} is singular")
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "psis", psis)

    @classmethod
    def identity(cls, d: BLDatum):
        return cls(np.eye(d.n), tuple(np.eye(m) for m in d.dims))

    def inverse(self) -> "EquivalenceTransform":
        # B = Psi B' Phi^{-1}
        return EquivalenceTransform(np.linalg.inv(self.phi), tuple(np.linalg.inv(P) for P in self.psis))


def apply_equivalence(d: BLDatum, T: EquivalenceTransform) -> BLDatum:
    if len(T.psis) != d.k or T.phi.shape[0] != d.n:
        raise ValidationError("transform shape does not match the datum")
    maps = []
    for i, (B, P) in enumerate(zip(d.maps, T.psis)):
        if P.shape[0] != B.shape[0]:
            raise ValidationError(f"Psi[{i}] is {P.shape[0]}x{P.shape[0]}, B[{i}] has {B.shape[0]} rows")
        maps.append(np.linalg.solve(P, B) @ T.phi)
    return d.with_maps(maps)


def log_equivalence_factor(T: EquivalenceTransform, p) -> float:
    p = [float(as_exponent(q)) for q in p]
    if len(p) != len(T.psis):
        raise ValidationError("need one exponent per Psi")
    return sum(q * slogdet(P)[1] for q, P in zip(p, T.psis)) - slogdet(T.phi)[1]


def equivalence_factor(T: EquivalenceTransform, p) -> float:
    """``prod |det Psi_i|^{p_i} / |det Phi|``, so that ``BL(T(d)) = factor * BL(d)``."""
    return math.exp(log_equivalence_factor(T, p))


@dataclass(frozen=True, eq=False)
class GaussianInput:
    """Centered Gaussians ``exp(-pi <A_i x, x>)``, one PD matrix per map."""

    As: tuple

    def __post_init__(self):
        As = []
        for i, A in enumerate(self.As):
            A = as_matrix(A, f"A[{i}]")
            if A.shape[0] != A.shape[1] or np.abs(A - A.T).max() > 1e-10 * max(np.abs(A).max(), 1.0):
                raise ValidationError(f"A[{i}] must be symmetric")
            try:
                np.linalg.cholesky(A)
            except np.linalg.LinAlgError:
                raise ValidationError(f"A[{i}] is not positive definite") from None
            As.append(0.5 * (A + A.T))
        object.__setattr__(self, "As", tuple(As))

    def scaled(self, lam) -> "GaussianInput":
        return GaussianInput(tuple(lam * A for A in self.As))


def _as_gaussians(g) -> GaussianInput:
    return g if isinstance(g, GaussianInput) else GaussianInput(tuple(g))


def gaussian_matrix(d: BLDatum, g) -> np.ndarray:
    """``sum_i p_i B_i^T A_i B_i``."""
    g = _as_gaussians(g)
    if len(g.As) != d.k:
        raise ValidationError(f"need {d.k} Gaussians, got {len(g.As)}")
    M = np.zeros((d.n, d.n))
    for B, A, q in zip(d.maps, g.As, d.p):
        if A.shape[0] != B.shape[0]:
            raise ValidationError("Gaussian dimension does not match map codomain")
        M += q * B.T @ A @ B
    return M


def log_lieb_objective(d: BLDatum, g) -> float:
    g = _as_gaussians(g)
    M = gaussian_matrix(d, g)
    try:
        L = np.linalg.cholesky(M)
    except np.linalg.LinAlgError:
        raise InternalContradiction("sum p_i B_i^T A_i B_i is not positive definite; "
                                    "the maps have a common kernel") from None
    logdet_M = 2.0 * np.sum(np.log(np.diag(L)))
    num = sum(q * slogdet(A)[1] for q, A in zip(d.p, g.As))
    return 0.5 * (num - logdet_M)


def lieb_objective(d: BLDatum, g) -> float:
    """``sqrt(prod det(A_i)^{p_i} / det(sum p_i B_i^T A_i B_i))``."""
    return math.exp(log_lieb_objective(d, g))


@dataclass(frozen=True)
class GridSpec:
    """Search settings for :func:`bl_supremum_bruteforce`.

    ``max_grid`` caps the number of grid points; with many parameters the
    per-axis count drops below ``points`` to respect it.
    """

    low: float = 1e-3
    high: float = 1e3
    points: int = 25
    sweeps: int = 200
    max_params: int = 6
    max_grid: int = 200_000


def _param_layout(dims):
    layout = []
    for i, m in enumerate(dims):
        for r in range(m):
            for c in range(r + 1):
                layout.append((i, r, c))
    return layout


def _gaussians_from_params(dims, layout, theta):
    Ls = [np.zeros((m, m)) for m in dims]
    for (i, r, c), t in zip(layout, theta):
        Ls[i][r, c] = math.exp(t) if r == c else t
    return [L @ L.T for L in Ls]


def bl_supremum_bruteforce(d: BLDatum, grid: GridSpec = GridSpec()) -> float:
    """Lower bound on BL(B, p) by maximizing Lieb's objective directly.

    Each ``A_i`` is parameterised by a Cholesky factor with log-diagonal.
    A log-uniform grid over the diagonal seeds coordinate ascent, where each
    coordinate step is an exact 1-D maximisation over a shrinking window.
    """
    check_datum(d)
    dims = d.dims
    layout = _param_layout(dims)
    m = len(layout)
    if any(x > 1 for x in dims) and m > grid.max_params:
        raise ValidationError(
            f"{m} Gaussian parameters exceed the brute-force limit of {grid.max_params} "
            "(matrix-valued Gaussians)")

    def f(theta):
        try:
            return log_lieb_objective(d, _gaussians_from_params(dims, layout, theta))
        except InternalContradiction:
            return -math.inf

    # scale invariance: the first diagonal parameter is pinned at 0
    diag_idx = [j for j, (_, r, c) in enumerate(layout) if r == c][1:]
    theta0 = np.zeros(m)
    best = _grid_seed(d, layout, diag_idx, grid, theta0)
    theta, val = best, f(best)

    step = 1.0
    free = [j for j in range(m) if j != 0]
    for _ in range(grid.sweeps if free else 0):
        prev = val
        for j in free:
            x0 = theta[j]

            def g(x, j=j):
                t = theta.copy()
                t[j] = x
                return -f(t)

            # g may be -inf near degenerate angles; Brent then falls back to golden section
            with np.errstate(invalid="ignore"):
                res = minimize_scalar(g, bounds=(x0 - step, x0 + step), method="bounded",
                                      options={"xatol": 1e-13, "maxiter": 200})
            if -res.fun > val:
                theta[j], val = res.x, -res.fun
        if val - prev < 1e-15:
            step *= 0.25
            if step < 1e-9:
                break
    return math.exp(val)


def _grid_seed(d, layout, diag_idx, grid, theta0):
    """Best point of the log-uniform grid over the (non-pinned) diagonal entries."""
    if not diag_idx:
        return theta0.copy()
    npts = grid.points
    while npts > 2 and npts ** len(diag_idx) > grid.max_grid:
        npts -= 1
    axis = np.linspace(0.5 * math.log(grid.low), 0.5 * math.log(grid.high), npts)
    best_val, best = -math.inf, theta0.copy()
    # chunked evaluation of the batch of diagonal Gaussians
    combos = itertools.product(axis, repeat=len(diag_idx))
    p = d.p
    while True:
        chunk = np.array(list(itertools.islice(combos, 4096)))
        if chunk.size == 0:
            break
        T = np.zeros((len(chunk), len(layout)))
        T[:, diag_idx] = chunk
        M = np.zeros((len(chunk), d.n, d.n))
        num = np.zeros(len(chunk))
        for i, B in enumerate(d.maps):
            cols = [j for j, (ii, r, c) in enumerate(layout) if ii == i and r == c]
            a = np.exp(2.0 * T[:, cols])  # diagonal of A_i
            M += p[i] * np.einsum("ra,nr,rb->nab", B, a, B)
            num += p[i] * np.sum(2.0 * T[:, cols], axis=1)
        sign, logdet = np.linalg.slogdet(M)
        vals = np.where(sign > 0, 0.5 * (num - logdet), -np.inf)
        j = int(np.argmax(vals))
        if vals[j] > best_val:
            best_val, best = vals[j], T[j].copy()
    return best
