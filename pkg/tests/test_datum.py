import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from blineq.datum import (
    BLDatum,
    EquivalenceTransform,
    GaussianInput,
    GridSpec,
    InternalContradiction,
    apply_equivalence,
    as_exponent,
    bl_supremum_bruteforce,
    check_datum,
    equivalence_factor,
    lieb_objective,
    validate,
)
from blineq.geometric import frame_to_datum, hoelder_datum, loomis_whitney_datum, regular_polygon_frame, young_datum
from blineq.matcore import ValidationError

# sharp Young constant for p = (2/3, 2/3, 2/3); AM-GM on the 1-D Gaussian optimisation
YOUNG_BL = math.sqrt(3) / 2
# brute-force oracle output, computed once and frozen
YOUNG_BRUTEFORCE = 0.866025403784439


def test_exponent_parsing():
    assert as_exponent("2/3") == Fraction(2, 3)
    assert as_exponent("0.2") == Fraction(1, 5)
    assert as_exponent(1.2) == Fraction(6, 5)
    assert as_exponent(Fraction(1, 7)) == Fraction(1, 7)
    with pytest.raises(ValidationError):
        as_exponent("two")
    with pytest.raises(ValidationError):
        as_exponent(float("nan"))


def test_validate_examples():
    assert validate(hoelder_datum(2, ("1/2", "1/2"))).ok
    rep = validate(young_datum())
    assert rep.ok and rep.scaling_residual == 0
    bad = BLDatum(([[0.0, 0.0]], [[1.0, 0.0]], [[0.0, 1.0]]), ("2/3",) * 3)
    rep = validate(bad)
    assert rep.surjective == [False, True, True] and not rep.ok
    assert any("not surjective" in m for m in rep.messages)


def test_validate_common_kernel_and_scaling():
    d = BLDatum(([[1.0, 0.0]], [[2.0, 0.0]]), ("1", "1"))
    rep = validate(d)
    assert not rep.trivial_common_kernel
    assert rep.scaling_residual == 0
    rep = validate(young_datum(("1/2", "1/2", "1/2")))
    assert not rep.scaling_ok and rep.scaling_residual == pytest.approx(0.5)
    with pytest.raises(ValidationError):
        check_datum(young_datum(("1/2", "1/2", "1/2")))
    check_datum(young_datum(("1/2", "1/2", "1/2")), require_scaling=False)


def test_construction_errors():
    with pytest.raises(ValidationError):
        BLDatum(([[1.0, 0.0]], [[1.0]]), (1, 1))
    with pytest.raises(ValidationError):
        BLDatum(([[1.0]],), (0,))
    with pytest.raises(ValidationError):
        BLDatum(([[np.inf]],), (1,))
    with pytest.raises(ValidationError):
        BLDatum.from_entries([([[1.0, 0.0]], 1)], n=3)


def test_apply_equivalence_examples():
    d = young_datum()
    T = EquivalenceTransform.identity(d)
    assert all(np.array_equal(a, b) for a, b in zip(apply_equivalence(d, T).maps, d.maps))
    T = EquivalenceTransform(np.diag([2.0, 1.0]), (np.eye(1),) * 3)
    out = apply_equivalence(d, T)
    assert np.allclose(out.maps[0], [[0, 1]])
    assert np.allclose(out.maps[1], [[2, -1]])
    assert np.allclose(out.maps[2], [[2, 0]])
    assert out.exponents == d.exponents


def test_equivalence_round_trip(rng):
    d = loomis_whitney_datum(3)
    for _ in range(10):
        T = EquivalenceTransform(rng.standard_normal((3, 3)), tuple(rng.standard_normal((2, 2)) for _ in range(3)))
        back = apply_equivalence(apply_equivalence(d, T), T.inverse())
        assert all(np.allclose(a, b, atol=1e-10) for a, b in zip(back.maps, d.maps))


def test_singular_transform_rejected():
    with pytest.raises(ValidationError):
        EquivalenceTransform(np.diag([1.0, 0.0]), (np.eye(1),))
    with pytest.raises(ValidationError):
        EquivalenceTransform(np.eye(2), (np.zeros((1, 1)),))


def test_equivalence_factor_examples():
    d = young_datum()
    assert equivalence_factor(EquivalenceTransform.identity(d), d.exponents) == pytest.approx(1.0)
    T = EquivalenceTransform(np.diag([2.0, 1.0]), (np.eye(1),) * 3)
    assert equivalence_factor(T, d.exponents) == pytest.approx(0.5)
    T = EquivalenceTransform([[4.0]], ([[3.0]],))
    assert equivalence_factor(T, (1,)) == pytest.approx(0.75)


def test_equivalence_direction_by_change_of_variables():
    # k = 1, n = 1: B' = psi^{-1} * phi, and int f(B' x) dx = (psi/phi) int f
    psi, phi = 3.0, 4.0
    f = lambda t: math.exp(-t * t)
    lhs = integrate.quad(lambda x: f(phi / psi * x), -np.inf, np.inf)[0]
    rhs = integrate.quad(f, -np.inf, np.inf)[0]
    T = EquivalenceTransform([[phi]], ([[psi]],))
    assert lhs / rhs == pytest.approx(equivalence_factor(T, (1,)), rel=1e-10)
    d = BLDatum(([[1.0]],), (1,))
    g = GaussianInput(([[1.0]],))
    assert lieb_objective(apply_equivalence(d, T), g) == pytest.approx(psi / phi)


def test_gaussian_integral_normalisation():
    # exp(-pi a x^2) integrates to a^{-1/2}, not sqrt(a)
    for a in (0.3, 1.0, 5.0):
        val = integrate.quad(lambda x: math.exp(-math.pi * a * x * x), -np.inf, np.inf)[0]
        assert val == pytest.approx(a ** -0.5, rel=1e-10)


def test_lieb_objective_examples():
    assert lieb_objective(loomis_whitney_datum(3), [np.eye(2)] * 3) == pytest.approx(1.0)
    assert lieb_objective(young_datum(), [[[1.0]]] * 3) == pytest.approx(YOUNG_BL, rel=1e-14)
    d = hoelder_datum(1, ("1/2", "1/2"))
    for a1, a2 in [(1, 1), (1, 4), (0.1, 7)]:
        expected = math.sqrt(math.sqrt(a1 * a2) / ((a1 + a2) / 2))
        val = lieb_objective(d, [[[a1]], [[a2]]])
        assert val == pytest.approx(expected)
        assert val <= 1 + 1e-15


def test_lieb_objective_common_kernel_is_internal_error():
    d = BLDatum(([[1.0, 0.0]], [[2.0, 0.0]]), ("1", "1"))
    with pytest.raises(InternalContradiction):
        lieb_objective(d, [[[1.0]], [[1.0]]])


def test_gaussian_input_validation():
    with pytest.raises(ValidationError):
        GaussianInput(([[1.0, 2.0], [0.0, 1.0]],))
    with pytest.raises(ValidationError):
        GaussianInput(([[-1.0]],))


@given(st.lists(st.floats(0.05, 20), min_size=3, max_size=3), st.sampled_from([0.1, 10.0]))
def test_scale_invariance(a, lam):
    d = young_datum()
    g = GaussianInput(tuple(np.array([[x]]) for x in a))
    v = lieb_objective(d, g)
    assert math.isfinite(v) and v > 0
    assert lieb_objective(d, g.scaled(lam)) == pytest.approx(v, rel=1e-10)


def test_bruteforce_examples():
    frame = frame_to_datum(regular_polygon_frame(3))
    assert bl_supremum_bruteforce(frame) == pytest.approx(1.0, abs=1e-6)
    assert bl_supremum_bruteforce(young_datum()) == pytest.approx(YOUNG_BRUTEFORCE, rel=1e-9)
    assert bl_supremum_bruteforce(hoelder_datum(1, ("1/4", "1/4", "1/2"))) == pytest.approx(1.0, abs=1e-9)


def test_bruteforce_young_matches_closed_form():
    assert YOUNG_BRUTEFORCE == pytest.approx(YOUNG_BL, rel=1e-9)


def test_bruteforce_refuses_large_matrix_problems():
    with pytest.raises(ValidationError, match="parameters"):
        bl_supremum_bruteforce(loomis_whitney_datum(3))


def test_bruteforce_matrix_gaussians_small():
    # Hoelder in R^2 with 2x2 Gaussians: 6 parameters, constant 1
    assert bl_supremum_bruteforce(hoelder_datum(2, ("1/2", "1/2"))) == pytest.approx(1.0, abs=1e-6)


def _random_scalar_datum(rng, n, k):
    while True:
        U = rng.standard_normal((k, n))
        w = rng.uniform(0.5, 1.5, size=k)
        w = w / w.sum() * n
        p = tuple(Fraction(float(x)).limit_denominator(50) for x in w)
        s = sum(p)
        p = p[:-1] + (p[-1] + n - s,)
        if min(p) > 0:
            d = BLDatum(tuple(u.reshape(1, -1) for u in U), p)
            if validate(d).ok:
                return d


def test_bruteforce_equivalence_covariance(rng):
    # BL(T(d)) = factor(T) * BL(d) for scalar data
    for _ in range(4):
        d = _random_scalar_datum(rng, 2, 3)
        T = EquivalenceTransform(rng.standard_normal((2, 2)) + 2 * np.eye(2),
                                 tuple(np.array([[rng.uniform(0.5, 2.0)]]) for _ in range(3)))
        lhs = bl_supremum_bruteforce(apply_equivalence(d, T))
        rhs = equivalence_factor(T, d.exponents) * bl_supremum_bruteforce(d)
        assert lhs == pytest.approx(rhs, rel=3e-3)


def test_gridspec_adapts_to_parameter_count():
    g = GridSpec(max_grid=1000)
    d = hoelder_datum(1, ("1/4",) * 4)
    assert bl_supremum_bruteforce(d, g) == pytest.approx(1.0, abs=1e-9)
