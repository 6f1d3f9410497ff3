"""Subspace dimension conditions, violation search and the Brascamp-Lieb polytope.

For fixed maps the constant is finite exactly when

    dim V <= sum_i p_i dim(B_i V)     for every subspace V,

together with ``p >= 0`` and ``sum p_i n_i = n``. Only finitely many
dimension vectors occur, but there is no constructive finite family of
witnesses for general data; the candidate family used here is a desk-scale
heuristic (complete for rank-one data via kernel intersections).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .datum import BLDatum, as_exponent
from .matcore import (
    RANK_TOL,
    Subspace,
    ValidationError,
    intersect,
    kernel,
    orthocomplement,
    rank,
)

SLACK_TOL = 1e-9
MEMBERSHIP_TOL = 1e-12
MAX_VERTEX_MAPS = 12
MAX_SUBFAMILIES = 4096
COMPLETENESS_NOTE = ("candidate family is heuristic for data of rank >= 2; absence of a "
                     "violation is not a proof of finiteness")


@dataclass(frozen=True, eq=False)
class SubspaceCertificate:
    V: Subspace
    dimV: int
    image_dims: tuple
    slack: Fraction

    @property
    def violated(self) -> bool:
        return self.slack > SLACK_TOL


def _exponents(d, p=None):
    return d.exponents if p is None else tuple(as_exponent(q) for q in p)


def image_dims(d: BLDatum, V: Subspace, tol=RANK_TOL) -> tuple:
    return tuple(rank(B @ V.basis, tol) if V.dim else 0 for B in d.maps)


def check_subspace(d: BLDatum, V: Subspace, p=None) -> SubspaceCertificate:
    """Slack ``dim V - sum p_i dim(B_i V)``; positive slack certifies BL = infinity."""
    if V.ambient_dim != d.n:
        raise ValidationError(f"subspace lives in R^{V.ambient_dim}, datum in R^{d.n}")
    if V.dim == 0:
        raise ValidationError("the zero subspace carries no condition")
    dims = image_dims(d, V)
    slack = V.dim - sum((q * m for q, m in zip(_exponents(d, p), dims)), Fraction(0))
    return SubspaceCertificate(V, V.dim, dims, slack)


class _SubspaceSet:
    """Insertion-ordered collection of subspaces, deduplicated by projector."""

    def __init__(self, n):
        self.n = n
        self.items = []
        self._keys = set()

    def add(self, V):
        if V is None or V.dim == 0:
            return
        key = (V.dim, np.round(V.projector(), 8).tobytes())
        if key not in self._keys:
            self._keys.add(key)
            self.items.append(V)


def candidate_subspaces(d: BLDatum, budget=64, hints=(), seed=0) -> list:
    """A deduplicated family of test subspaces for the dimension condition.

    Contains R^n, intersections of kernels of subfamilies of maps, sums of
    subfamilies of row spaces (spans of the ``u_i`` for rank-one data),
    coordinate subspaces when ``n <= 8``, the supplied hints with their
    kernel refinements, and ``budget`` random subspaces.
    """
    n, k = d.n, d.k
    out = _SubspaceSet(n)
    out.add(Subspace.full(n))
    kernels = [kernel(B) for B in d.maps]
    rows = [orthocomplement(K) for K in kernels]

    count = 0
    for size in range(1, k + 1):
        for S in itertools.combinations(range(k), size):
            if count >= max(budget, MAX_SUBFAMILIES):
                break
            count += 1
            V = Subspace.full(n)
            for i in S:
                V = intersect(V, kernels[i])
                if V.dim == 0:
                    break
            out.add(V)
            W = Subspace.span(np.hstack([rows[i].basis for i in S]), n)
            out.add(W)

    if n <= 8:
        for size in range(1, n):
            for S in itertools.combinations(range(n), size):
                out.add(Subspace.coordinate(n, S))

    for H in hints:
        out.add(H)
        for K in kernels:
            out.add(intersect(H, K))

    rng = np.random.default_rng(seed)
    for _ in range(budget):
        m = int(rng.integers(1, n + 1))
        out.add(Subspace.span(rng.standard_normal((n, m))))
    return out.items


def find_violation(d: BLDatum, budget=64, hints=(), p=None, seed=0):
    """First candidate with slack above tolerance, or ``None``."""
    for V in candidate_subspaces(d, budget, hints, seed):
        cert = check_subspace(d, V, p)
        if cert.violated:
            return cert
    return None


@dataclass(frozen=True, eq=False)
class Inequality:
    """``sum_i coeffs[i] * p_i >= rhs`` with the subspace that generated it."""

    coeffs: tuple
    rhs: int
    witness: Subspace | None = None

    def evaluate(self, p):
        return sum((c * q for c, q in zip(self.coeffs, p)), Fraction(0)) - self.rhs

    def __str__(self):
        return "[" + " ".join(str(c) for c in self.coeffs) + f"] >= {self.rhs}"


@dataclass(eq=False)
class BLPolytope:
    k: int
    n: int
    dims: tuple
    inequalities: list
    vertices: list | None = None
    notes: list = field(default_factory=list)

    def nonnegativity(self):
        return [Inequality(tuple(int(i == j) for j in range(self.k)), 0) for i in range(self.k)]

    def all_inequalities(self):
        return list(self.inequalities) + self.nonnegativity()

    def to_text(self) -> str:
        lines = [f"# Brascamp-Lieb polytope: k={self.k} n={self.n} dims={list(self.dims)}"]
        lines += [str(ineq) for ineq in self.inequalities]
        lines.append("[" + " ".join(str(m) for m in self.dims) + f"] = {self.n}")
        lines.append("p >= 0")
        if self.vertices is not None:
            lines.append(f"# vertices ({len(self.vertices)})")
            lines += ["(" + ", ".join(str(q) for q in v) + ")" for v in self.vertices]
        lines += [f"# note: {s}" for s in self.notes]
        return "\n".join(lines) + "\n"


def build_polytope(d: BLDatum, budget=64, vertices=False, seed=0) -> BLPolytope:
    """H-representation of the feasible exponent set for the maps of ``d`` (exponents ignored)."""
    seen = {}
    for V in candidate_subspaces(d, budget, seed=seed):
        key = (image_dims(d, V), V.dim)
        seen.setdefault(key, V)
    ineqs = [Inequality(coeffs, rhs, V) for (coeffs, rhs), V in sorted(seen.items(), key=lambda kv: kv[0])]
    P = BLPolytope(d.k, d.n, d.dims, ineqs, notes=[COMPLETENESS_NOTE])
    if vertices:
        P.vertices = enumerate_vertices(P)
    return P


def _solve_exact(A, b):
    """Gauss-Jordan elimination over the rationals; ``None`` if singular."""
    m = len(A)
    M = [list(row) + [rhs] for row, rhs in zip(A, b)]
    for col in range(m):
        piv = next((r for r in range(col, m) if M[r][col] != 0), None)
        if piv is None:
            return None
        M[col], M[piv] = M[piv], M[col]
        pv = M[col][col]
        M[col] = [x / pv for x in M[col]]
        for r in range(m):
            if r != col and M[r][col] != 0:
                f = M[r][col]
                M[r] = [x - f * y for x, y in zip(M[r], M[col])]
    return [M[r][m] for r in range(m)]


def enumerate_vertices(P: BLPolytope) -> list:
    """Vertices by brute force over (k-1)-subsets of active constraints, in exact rationals."""
    if P.k > MAX_VERTEX_MAPS:
        raise ValidationError(f"vertex enumeration limited to k <= {MAX_VERTEX_MAPS}")
    cons = P.all_inequalities()
    eq_row = [Fraction(m) for m in P.dims]
    found = set()
    for S in itertools.combinations(range(len(cons)), P.k - 1):
        A = [eq_row] + [[Fraction(c) for c in cons[i].coeffs] for i in S]
        b = [Fraction(P.n)] + [Fraction(cons[i].rhs) for i in S]
        x = _solve_exact(A, b)
        if x is None:
            continue
        if all(c.evaluate(x) >= 0 for c in cons):
            found.add(tuple(x))
    return sorted(found, reverse=True)


@dataclass(frozen=True, eq=False)
class Membership:
    kind: str  # "Interior" | "Boundary" | "Outside"
    active: tuple = ()
    violated: Inequality | None = None

    @property
    def witness(self):
        return None if self.violated is None else self.violated.witness


def membership(P: BLPolytope, p, tol=MEMBERSHIP_TOL) -> Membership:
    """Classify ``p`` as relative interior, boundary (with active set) or outside.

    Inequalities tight at every vertex are implicit equalities of a
    lower-dimensional polytope and do not count as boundary.
    """
    p = tuple(as_exponent(q) for q in p)
    if len(p) != P.k:
        raise ValidationError(f"need {P.k} exponents, got {len(p)}")
    cons = P.all_inequalities()
    scale_gap = sum(q * m for q, m in zip(p, P.dims)) - P.n
    if abs(scale_gap) > tol:
        # the scaling condition itself is violated; R^n witnesses the ">=" half
        full = next((c for c in P.inequalities if c.rhs == P.n and c.witness is not None
                     and c.witness.dim == P.n), None)
        return Membership("Outside", (), full)
    for c in cons:
        if c.evaluate(p) < -tol:
            return Membership("Outside", (), c)
    verts = P.vertices if P.vertices is not None else enumerate_vertices(P)
    implicit = {i for i, c in enumerate(cons) if verts and all(c.evaluate(v) == 0 for v in verts)}
    active = tuple(i for i, c in enumerate(cons) if i not in implicit and abs(c.evaluate(p)) <= tol)
    return Membership("Boundary" if active else "Interior", active)
