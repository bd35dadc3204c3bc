import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from densepack.errors import InvalidInputError, UnsupportedRegimeError
from densepack.flux import (
    FluxModel,
    double_factorial,
    edge_weight_function,
    g0_hypergeometric,
    g0_main,
    g0_quadrature,
    gamma_half,
    hyp2f1_unit_shift,
    keller_2d_nonlinear,
    keller_3d_nonlinear,
    main_constant,
    main_constant_even_printed,
    main_constant_odd,
)


def test_regimes():
    assert FluxModel(2, 2, 1).regime == "power"
    assert FluxModel(3, 2, 1).regime == "logarithmic"
    assert FluxModel(4, 2, 1).regime == "regular"
    assert FluxModel(5, 4, 1).beta == 1.0
    with pytest.raises(InvalidInputError):
        FluxModel(2, 1, 1)
    with pytest.raises(InvalidInputError):
        FluxModel(2, 2, 0)


def test_gamma_half_matches_gamma():
    for m in range(1, 20):
        assert gamma_half(m) == pytest.approx(math.gamma(m / 2), rel=1e-14)
    assert double_factorial(-1) == double_factorial(0) == 1
    assert double_factorial(7) == 105


def test_main_term_examples():
    assert g0_main(FluxModel(2, 2, 1), 0.01) == pytest.approx(10 * math.pi, rel=1e-14)
    assert g0_main(FluxModel(3, 2, 1), 1 / math.e) == pytest.approx(math.pi, rel=1e-14)
    assert g0_main(FluxModel(3, 4, 1), 0.1) == pytest.approx(50 * math.pi, rel=1e-13)


def test_regular_regime_rejected():
    with pytest.raises(UnsupportedRegimeError):
        g0_main(FluxModel(4, 2, 1), 0.1)
    with pytest.raises(UnsupportedRegimeError):
        edge_weight_function(FluxModel(5, 2, 1))
    # beta = 0 away from d = 3 has no logarithmic form
    with pytest.raises(UnsupportedRegimeError):
        g0_main(FluxModel(5, 3, 1), 0.1)


def test_quadrature_closed_forms():
    assert g0_quadrature(FluxModel(2, 2, 1), 1.0) == pytest.approx(math.pi / 2, rel=1e-10)
    assert g0_quadrature(FluxModel(3, 2, 1), 1.0) == pytest.approx(math.pi * math.log(2), rel=1e-10)
    m = FluxModel(2, 3, 1)
    assert g0_quadrature(m, 1e-6) / g0_main(m, 1e-6) == pytest.approx(1.0, abs=0.01)


@pytest.mark.parametrize("delta", [1.0, 0.3, 1e-2, 1e-5])
@pytest.mark.parametrize("r", [0.5, 1.0, 2.0])
def test_closed_antiderivatives(delta, r):
    q = r / delta
    assert g0_quadrature(FluxModel(2, 2, r), delta) == pytest.approx(
        2 * math.sqrt(q) * math.atan(math.sqrt(q)), rel=1e-10)
    assert g0_quadrature(FluxModel(3, 2, r), delta) == pytest.approx(
        math.pi * r * math.log((delta + r) / delta), rel=1e-10)


def test_hypergeometric_examples():
    assert g0_hypergeometric(FluxModel(2, 2, 1), 1.0) == pytest.approx(math.pi / 2, rel=1e-12)
    assert g0_hypergeometric(FluxModel(3, 2, 1), 1.0) == pytest.approx(math.pi * math.log(2), rel=1e-12)
    m = FluxModel(5, 4, 1)
    # correction to the main term is O(delta) relative here
    assert g0_hypergeometric(m, 1e-4) / g0_main(m, 1e-4) == pytest.approx(1.0, abs=1e-3)


@pytest.mark.parametrize("a2", [1, 2, 3, 4, 5])
@pytest.mark.parametrize("b", [1, 2, 3, 5])
@pytest.mark.parametrize("Z", [0.0, 0.3, 1.0, 3.0, 1e3, 1e8])
def test_hyp2f1_against_mpmath(a2, b, Z):
    a = a2 / 2
    got = hyp2f1_unit_shift(a, b, Z, dps=40)
    with mpmath.workdps(60):
        ref = mpmath.hyp2f1(a, b, a + 1, -mpmath.mpf(Z))
    assert float(abs(got - ref) / abs(ref)) < 1e-25


@pytest.mark.parametrize("d,p", [(2, 2), (2, 3), (3, 2), (3, 3), (3, 4), (4, 3), (5, 4), (5, 2), (4, 2)])
@pytest.mark.parametrize("delta", [2.0, 1.0, 0.1, 1e-3])
def test_hypergeometric_equals_quadrature(d, p, delta):
    m = FluxModel(d, p, 1.0)
    assert g0_hypergeometric(m, delta) == pytest.approx(g0_quadrature(m, delta), rel=1e-9)


def test_odd_dimension_reduction():
    for d in (3, 5, 7):
        for p in range(2, 10):
            if 2 * p <= d + 1:
                continue
            for r in (0.5, 1.0, 3.0):
                assert main_constant_odd(d, p, r) == pytest.approx(main_constant(d, p, r), rel=1e-12)


def test_even_dimension_printed_form_discrepancy():
    # measured, not a consistency statement: the printed even-d constant is
    # off by (p-3)!/sqrt(2) relative to the general constant
    for d in (2, 4, 6):
        for p in range(3, 9):
            if 2 * p <= d + 1:
                continue
            ratio = main_constant_even_printed(d, p, 1.3) / main_constant(d, p, 1.3)
            assert ratio == pytest.approx(math.factorial(p - 3) / math.sqrt(2), rel=1e-12)
    with pytest.raises(UnsupportedRegimeError):
        main_constant_even_printed(2, 2, 1.0)


def test_quoted_low_dimensional_constants():
    for p in range(2, 8):
        # the quoted 2D coefficient carries an extra sqrt(pi)
        assert keller_2d_nonlinear(p, 0.7) / main_constant(2, p, 0.7) == pytest.approx(math.sqrt(math.pi), rel=1e-12)
    for p in range(3, 8):
        assert keller_3d_nonlinear(p, 0.7) == pytest.approx(main_constant(3, p, 0.7), rel=1e-12)
    # the linear 2D case pi sqrt(r/delta) agrees exactly
    assert g0_main(FluxModel(2, 2, 0.7), 0.01) == pytest.approx(math.pi * math.sqrt(70), rel=1e-14)


POWER = [(d, p) for d in range(2, 6) for p in range(2, 7) if 2 * p > d + 1]


@pytest.mark.parametrize("d,p", POWER)
def test_main_term_dominance(d, p):
    m = FluxModel(d, p, 1.0)
    ratio = g0_quadrature(m, 1e-8) / g0_main(m, 1e-8)
    assert 0.98 <= ratio <= 1.02


def test_logarithmic_dominance():
    m = FluxModel(3, 2, 1.0)
    ratio = g0_quadrature(m, 1e-12) / g0_main(m, 1e-12)
    assert 0.9 <= ratio <= 1.1


@pytest.mark.parametrize("d,p", [(2, 2), (3, 2), (3, 3), (5, 4), (4, 2)])
def test_monotone_in_gap(d, p):
    m = FluxModel(d, p, 1.0)
    deltas = np.logspace(-6, 1, 15)
    q = [g0_quadrature(m, x) for x in deltas]
    h = [g0_hypergeometric(m, x) for x in deltas]
    assert all(a > b for a, b in zip(q, q[1:]))
    assert all(a > b for a, b in zip(h, h[1:]))
    if m.regime != "regular":
        g = g0_main(m, deltas)
        assert np.all(np.diff(g) < 0)


@given(x=st.floats(1e-6, 5.0), y=st.floats(1e-6, 5.0))
def test_edge_weight_convex(x, y):
    f = edge_weight_function(FluxModel(2, 3, 0.5))
    X, Y = 1 + x, 1 + y
    assert f((X + Y) / 2) <= (f(X) + f(Y)) / 2 * (1 + 1e-12)


def test_edge_weight_function_definition():
    m = FluxModel(2, 3, 0.5)
    f = edge_weight_function(m)
    assert m.beta == 1.5
    deltas = np.logspace(-6, 0, 7)
    xs = 1 + deltas
    gaps = xs - 1.0
    for x, dl in zip(xs, gaps):
        assert f(x) == pytest.approx(g0_main(m, dl), rel=1e-14)
    prods = f(xs) * gaps**1.5
    assert np.allclose(prods, prods[0], rtol=1e-12)
    assert f(1.0) == math.inf
