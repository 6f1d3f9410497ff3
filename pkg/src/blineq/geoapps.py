"""Exact convex-geometry identities behind the inequality, with voxel cross-checks.

Boxes and cross-polytopes have closed-form volumes, projections and
sections, so the classical inequalities can be checked as identities over
the rationals. Voxel routines are independent oracles only.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from fractions import Fraction

import numpy as np
from skimage import measure

from .geometric import UniformCover
from .matcore import ValidationError

LE = "<="
GE = ">="
VOXEL_REL_TOL = 0.03


def _rational(x) -> Fraction:
    if isinstance(x, (int, Fraction)):
        return Fraction(x)
    if isinstance(x, str):
        try:
            return Fraction(x.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ValidationError(f"bad number {x!r}") from exc
    xf = float(x)
    if not math.isfinite(xf):
        raise ValidationError(f"non-finite value {x!r}")
    return Fraction(xf)


@dataclass(frozen=True)
class BoxBody:
    """Axis-parallel box ``prod_j [a_j, b_j]`` with exact rational sides."""

    bounds: tuple

    def __post_init__(self):
        b = tuple((_rational(lo), _rational(hi)) for lo, hi in self.bounds)
        if not b:
            raise ValidationError("a box needs at least one side")
        bad = [j + 1 for j, (lo, hi) in enumerate(b) if not lo < hi]
        if bad:
            raise ValidationError(f"empty side interval in coordinate(s) {bad}")
        object.__setattr__(self, "bounds", b)

    @classmethod
    def from_sides(cls, sides):
        return cls(tuple((0, s) for s in sides))

    @property
    def n(self) -> int:
        return len(self.bounds)

    @property
    def sides(self) -> tuple:
        return tuple(hi - lo for lo, hi in self.bounds)

    def volume(self) -> Fraction:
        return math.prod(self.sides, start=Fraction(1))

    def projection_volume(self, coords) -> Fraction:
        """Volume of the projection onto ``E_sigma`` (1-based coordinates)."""
        return math.prod((self.sides[j - 1] for j in coords), start=Fraction(1))


@dataclass(frozen=True)
class CrossPolytope:
    """``conv{+-lam_j e_j}``."""

    lam: tuple

    def __post_init__(self):
        lam = tuple(_rational(x) for x in self.lam)
        if not lam:
            raise ValidationError("a cross-polytope needs n >= 1")
        if any(x <= 0 for x in lam):
            raise ValidationError("cross-polytope radii must be positive")
        object.__setattr__(self, "lam", lam)

    @property
    def n(self) -> int:
        return len(self.lam)

    def volume(self) -> Fraction:
        return self.section_volume(range(1, self.n + 1))

    def section_volume(self, coords) -> Fraction:
        """``|K cap E_sigma| = 2^m prod_{j in sigma} lam_j / m!`` with ``m = |sigma|``."""
        coords = list(coords)
        m = len(coords)
        return Fraction(2**m, math.factorial(m)) * math.prod((self.lam[j - 1] for j in coords), start=1)


@dataclass(frozen=True)
class IdentityCheck:
    """One side-by-side comparison; ``gap >= 0`` means the inequality holds."""

    quantity: str
    lhs: object
    rhs: object
    relation: str
    gap: object

    @property
    def verdict(self) -> str:
        if self.gap == 0:
            return "equality"
        return "holds" if self.gap > 0 else "fails"


def _check(quantity, lhs, rhs, relation, slack=0):
    gap = (rhs - lhs) if relation == LE else (lhs - rhs)
    if gap < 0 and -gap <= slack:
        gap = 0 * gap
    return IdentityCheck(quantity, lhs, rhs, relation, gap)


def _voxel_lw(V, h):
    V = np.asarray(V, dtype=bool)
    n = V.ndim
    if n < 2 or n > 4:
        raise ValidationError(f"voxel sets are supported for 2 <= n <= 4, got n = {n}")
    if not V.any():
        raise ValidationError("empty body")
    h = _rational(h)
    vol = int(V.sum()) * h**n
    rhs = math.prod((int(V.any(axis=j).sum()) * h ** (n - 1) for j in range(n)), start=Fraction(1))
    return vol ** (n - 1), rhs


def loomis_whitney_check(K, h=1) -> IdentityCheck:
    """``|K|^{n-1} <= prod_j |P_{e_j^perp} K|`` for a box (exact) or a boolean voxel array of cell size ``h``."""
    if isinstance(K, BoxBody):
        n = K.n
        lhs = K.volume() ** (n - 1)
        rhs = math.prod((K.projection_volume(set(range(1, n + 1)) - {j}) for j in range(1, n + 1)),
                        start=Fraction(1))
    else:
        lhs, rhs = _voxel_lw(K, h)
    return _check("loomis-whitney", lhs, rhs, LE)


def meyer_dual_check(K: CrossPolytope) -> IdentityCheck:
    """``|K|^{n-1} >= (n!/n^n) prod_j |K cap e_j^perp|``; equality for cross-polytopes."""
    n = K.n
    if n < 2:
        raise ValidationError("the dual Loomis-Whitney inequality needs n >= 2")
    lhs = K.volume() ** (n - 1)
    c = Fraction(math.factorial(n), n**n)
    rhs = c * math.prod((K.section_volume(set(range(1, n + 1)) - {j}) for j in range(1, n + 1)), start=1)
    return _check("meyer", lhs, rhs, GE)


def _cover_for(K, c):
    if not isinstance(c, UniformCover):
        raise ValidationError("expected a UniformCover")
    if c.n != K.n:
        raise ValidationError(f"cover is on {{1..{c.n}}} but the body lives in R^{K.n}")


def bollobas_thomason_check(K: BoxBody, c: UniformCover) -> IdentityCheck:
    """``|K|^s <= prod_i |P_{E_sigma_i} K|``; equality for boxes."""
    _cover_for(K, c)
    lhs = K.volume() ** c.s
    rhs = math.prod((K.projection_volume(sigma) for sigma in c.sets), start=Fraction(1))
    return _check("bollobas-thomason", lhs, rhs, LE)


def liakopoulos_constant(c: UniformCover) -> Fraction:
    return Fraction(math.prod(math.factorial(len(sigma)) for sigma in c.sets), math.factorial(c.n) ** c.s)


def liakopoulos_check(K: CrossPolytope, c: UniformCover) -> IdentityCheck:
    """``|K|^s >= (prod |sigma_i|! / (n!)^s) prod_i |K cap E_sigma_i|``; equality for cross-polytopes."""
    _cover_for(K, c)
    lhs = K.volume() ** c.s
    rhs = liakopoulos_constant(c) * math.prod((K.section_volume(sigma) for sigma in c.sets), start=1)
    return _check("liakopoulos", lhs, rhs, GE)


def ball_volume(n: int) -> float:
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1)


def _require_dim(n):
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise ValidationError(f"dimension must be a positive integer, got {n!r}")


def volume_ratio_constants(n: int):
    """``(simplex, cube)`` volume ratios relative to the inscribed John ball."""
    _require_dim(n)
    w = ball_volume(n)
    simplex = math.exp(0.5 * n * math.log(n) + 0.5 * (n + 1) * math.log(n + 1) - math.lgamma(n + 1)) / w
    return simplex, 2.0**n / w


def reverse_iso_quotients(n: int):
    """``(simplex, cube)`` values of ``S(K)^n / |K|^{n-1}`` for the bodies circumscribed about the unit ball.

    For ``n = 1`` the surface measure of a segment is taken to be its two
    endpoints, so both values are 2.
    """
    _require_dim(n)
    simplex = math.exp(1.5 * n * math.log(n) + 0.5 * (n + 1) * math.log(n + 1) - math.lgamma(n + 1))
    return simplex, float(cube_reverse_iso_exact(n))


def cube_reverse_iso_exact(n: int) -> int:
    """``2^n n^n`` in integers."""
    _require_dim(n)
    return 2**n * n**n


def cube_reverse_iso_direct(n: int) -> Fraction:
    """``S(W^n)^n / |W^n|^{n-1}`` for ``W^n = [-1, 1]^n``: 2n facets of area 2^{n-1}."""
    _require_dim(n)
    return Fraction((2 * n * 2 ** (n - 1)) ** n, (2**n) ** (n - 1))


@dataclass(frozen=True)
class SurfaceBound:
    surface: float
    bound: float
    volume: float
    holds: bool


def _occupancy(inside, bounds, h, supersample):
    """Fractional cell coverage from ``supersample^n`` samples per cell; padded with empty cells."""
    lo = np.array([b[0] for b in bounds], float)
    hi = np.array([b[1] for b in bounds], float)
    n = len(bounds)
    counts = np.ceil((hi - lo) / h).astype(int)
    s = supersample
    sub = (np.arange(s) + 0.5) / s
    axes = [lo[j] + (np.arange(counts[j])[:, None] + sub[None, :]).ravel() * h for j in range(n)]
    occ = np.zeros(tuple(counts))
    # one slab of cells along the first axis at a time
    for i in range(counts[0]):
        slab = [axes[0][i * s:(i + 1) * s]] + axes[1:]
        pts = np.stack(np.meshgrid(*slab, indexing="ij"), axis=-1).reshape(-1, n)
        hit = np.asarray(inside(pts), dtype=float).reshape([s] + [c * s for c in counts[1:]])
        for j in range(1, n):
            shape = hit.shape[:j] + (counts[j], s) + hit.shape[j + 1:]
            hit = hit.reshape(shape).mean(axis=j + 1)
        occ[i] = hit.mean(axis=0)
    return np.pad(occ, 1), lo


def _ball_contained(inside, bounds, r, h):
    n = len(bounds)
    m = int(np.ceil(r / h))
    ax = np.arange(-m, m + 1) * h
    pts = np.stack(np.meshgrid(*([ax] * n), indexing="ij"), axis=-1).reshape(-1, n)
    pts = pts[np.linalg.norm(pts, axis=1) <= r]
    # also probe the sphere itself along the coordinate directions
    pts = np.vstack([pts, r * np.eye(n), -r * np.eye(n)])
    return bool(np.all(inside(pts)))


def inradius_surface_bound(inside, bounds, r, h=0.02, supersample=4) -> SurfaceBound:
    """Check ``S(K) <= (n/r)|K|`` for a convex body containing ``r B^n``.

    ``inside`` is a vectorised (closed) membership test on ``(m, n)`` points,
    ``bounds`` a bounding box ``[(lo, hi), ...]``. The surface is measured on
    the iso-contour at level 1/2 of the supersampled occupancy (marching
    squares for n = 2, marching cubes for n = 3).
    """
    n = len(bounds)
    if n not in (2, 3):
        raise ValidationError(f"surface estimates support n in (2, 3), got n = {n}")
    if not r > 0:
        raise ValidationError("inradius must be positive")
    if not _ball_contained(inside, bounds, r, h):
        raise ValidationError(f"the ball of radius {r} is not contained in the body")
    occ, _ = _occupancy(inside, bounds, h, supersample)
    volume = float(occ.sum()) * h**n
    if n == 2:
        surface = sum(float(np.sum(np.linalg.norm(np.diff(c, axis=0), axis=1)))
                      for c in measure.find_contours(occ, 0.5)) * h
    else:
        verts, faces, _, _ = measure.marching_cubes(occ, 0.5, spacing=(h, h, h))
        surface = float(measure.mesh_surface_area(verts, faces))
    bound = n / r * volume
    return SurfaceBound(surface, bound, volume, surface <= bound * (1 + VOXEL_REL_TOL))


def box_predicate(lo, hi):
    lo, hi = np.asarray(lo, float), np.asarray(hi, float)
    return lambda x: np.all((x >= lo) & (x <= hi), axis=1)


def ball_predicate(radius=1.0):
    return lambda x: np.linalg.norm(x, axis=1) <= radius


def _fmt(x):
    if isinstance(x, Fraction):
        return str(x)
    return f"{x:.12g}"


def format_table(checks) -> str:
    """Aligned text table with columns quantity, lhs, rel, rhs, gap, verdict."""
    header = ("quantity", "lhs", "rel", "rhs", "gap", "verdict")
    rows = [header] + [(c.quantity, _fmt(c.lhs), c.relation, _fmt(c.rhs), _fmt(c.gap), c.verdict)
                       for c in checks]
    widths = [max(len(r[j]) for r in rows) for j in range(len(header))]
    return "\n".join("  ".join(cell.ljust(w) for cell, w in zip(r, widths)).rstrip() for r in rows) + "\n"


def checks_to_json(checks) -> str:
    out = []
    for c in checks:
        row = asdict(c)
        for key in ("lhs", "rhs", "gap"):
            row[key] = _fmt(row[key])
        row["verdict"] = c.verdict
        out.append(row)
    return json.dumps(out, indent=2, sort_keys=True)


def geometry_report(n=3, seed=0):
    """Identity checks on a few random boxes, cross-polytopes and covers of ``{1..n}``."""
    rng = np.random.default_rng(seed)
    checks = []
    sides = [Fraction(int(x), 4) for x in rng.integers(1, 13, size=n)]
    box = BoxBody.from_sides(sides)
    checks.append(loomis_whitney_check(box))
    lam = tuple(Fraction(int(x), 3) for x in rng.integers(1, 10, size=n))
    K = CrossPolytope(lam)
    lw = UniformCover.loomis_whitney(n)
    if n >= 2:
        checks.append(meyer_dual_check(K))
        checks.append(bollobas_thomason_check(box, lw))
    checks.append(liakopoulos_check(K, lw))
    for m in range(1, min(n, 4) + 1):
        checks.append(_check(f"cube S^n/|K|^(n-1), n={m}", cube_reverse_iso_direct(m),
                             Fraction(cube_reverse_iso_exact(m)), LE))
    return checks


def random_cover(n, s, k=None, rng=None):
    """A random ``s``-uniform cover by stacking ``s`` random set partitions of ``{1..n}``."""
    rng = np.random.default_rng(rng)
    sets = []
    for _ in range(s):
        labels = rng.integers(0, n if k is None else k, size=n)
        sets += [frozenset(int(j) + 1 for j in np.flatnonzero(labels == b)) for b in np.unique(labels)]
    return UniformCover(n, tuple(sets), s)
