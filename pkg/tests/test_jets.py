import numpy as np
from hypothesis import given, strategies as st

from cssim.jets import JetSpace, jet_space

J = jet_space(4)
seeds = st.integers(0, 2**32 - 1)


def _eval_poly(jet, coeffs, dx):
    return sum(c * np.prod(np.power(dx, m)) for c, m in zip(coeffs, jet.monomials))


def test_size():
    assert J.size == 35
    assert JetSpace(2, 2).size == 6


def test_coordinate_jets():
    x = J.coordinate(1, 0.5)
    assert J.value(x) == 0.5
    assert J.value(J.diff(x, 1)) == 1.0
    assert J.value(J.diff(x, 0)) == 0.0


@given(seeds)
def test_mul_matches_pointwise_product(seed):
    r = np.random.default_rng(seed)
    p = J.random_polynomial(r, degree=2)
    q = J.random_polynomial(r, degree=2)
    dx = r.uniform(-0.3, 0.3, size=3)
    assert abs(_eval_poly(J, J.mul(p, q), dx) - _eval_poly(J, p, dx) * _eval_poly(J, q, dx)) < 1e-12


@given(seeds)
def test_product_rule_exact(seed):
    r = np.random.default_rng(seed)
    p = J.random_polynomial(r, degree=2, complex_=True)
    q = J.random_polynomial(r, degree=2, complex_=True)
    for mu in range(3):
        lhs = J.diff(J.mul(p, q), mu)
        rhs = J.mul(J.diff(p, mu), q) + J.mul(p, J.diff(q, mu))
        # truncation only touches the top order, which diff has already dropped
        np.testing.assert_allclose(lhs[..., :20], rhs[..., :20], atol=1e-13)


@given(seeds)
def test_derivatives_commute(seed):
    p = J.random_polynomial(np.random.default_rng(seed))
    for a in range(3):
        for b in range(3):
            np.testing.assert_allclose(J.diff(J.diff(p, a), b), J.diff(J.diff(p, b), a), atol=1e-14)


def test_compose_matches_analytic_derivatives():
    # f = sqrt(1 + t^2 + x^2) about (0.3, 0.2, -0.1): check d_t f and d_t d_x f
    p = np.array([0.3, 0.2, -0.1])
    X = [J.coordinate(m, p[m]) for m in range(3)]
    f = J.sqrt(J.const(1.0) + J.mul(X[0], X[0]) + J.mul(X[1], X[1]))
    s = np.sqrt(1 + p[0] ** 2 + p[1] ** 2)
    assert abs(J.value(f) - s) < 1e-15
    assert abs(J.value(J.diff(f, 0)) - p[0] / s) < 1e-15
    assert abs(J.value(J.diff(J.diff(f, 1), 0)) + p[0] * p[1] / s**3) < 1e-15
    lg = J.log(J.const(2.0) + X[2])
    assert abs(J.value(J.diff(J.diff(lg, 2), 2)) + 1 / (2 + p[2]) ** 2) < 1e-15
    rc = J.reciprocal(J.const(2.0) + X[2])
    assert abs(J.value(J.diff(rc, 2)) + 1 / (2 + p[2]) ** 2) < 1e-15


def test_cubic_survives_four_derivatives():
    p = J.random_polynomial(np.random.default_rng(0), degree=3)
    d = p
    for mu in (0, 1, 2, 0):
        d = J.diff(d, mu)
    assert np.all(d == 0)
