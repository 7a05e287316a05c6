"""Exact polynomial arithmetic: evaluation, calculus, affine substitution."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sptdg.polynomial import (MultiIndex, Polynomial, derive, multiply,
                              wave_residual)


def _naive_eval(poly, point):
    # direct sum over stored terms, independent of the compiled path
    total = 0.0
    for mi, coeff in poly.terms.items():
        val = coeff
        for ax, e in enumerate(mi.alpha):
            val *= point[ax] ** e
        val *= point[len(mi.alpha)] ** mi.alpha_t
        total += val
    return total


def _random_poly(rng, dim, degree, terms=6):
    p = Polynomial.zero(dim)
    for _ in range(terms):
        alpha = rng.integers(0, degree + 1, size=dim)
        rem = degree - int(alpha.sum())
        if rem < 0:
            alpha = np.zeros(dim, dtype=int)
            rem = degree
        at = int(rng.integers(0, rem + 1))
        p = p + Polynomial.monomial(dim, alpha, at, rng.normal())
    return p


def test_zero_and_constant():
    z = Polynomial.zero(2)
    assert z.is_zero()
    assert z.degree == -1
    c = Polynomial.constant(2, 3.5)
    assert c.degree == 0
    assert c((0.3, -1.0, 2.0)) == 3.5


def test_monomial_evaluation():
    # x1^2 * x2 * t^3 in two space dimensions
    m = Polynomial.monomial(2, (2, 1), 3, 2.0)
    assert m((2.0, 3.0, 0.5)) == pytest.approx(2.0 * 4.0 * 3.0 * 0.125,
                                               rel=1e-15)
    assert m.degree == 6


def test_eval_many_matches_naive():
    rng = np.random.default_rng(0)
    for dim in (1, 2, 3):
        p = _random_poly(rng, dim, 4)
        pts = rng.normal(size=(11, dim + 1))
        got = p.eval_many(pts)
        want = [_naive_eval(p, pt) for pt in pts]
        assert np.allclose(got, want, rtol=1e-13, atol=1e-13)


def test_addition_and_scalar_multiple():
    rng = np.random.default_rng(1)
    a = _random_poly(rng, 2, 3)
    b = _random_poly(rng, 2, 3)
    pts = rng.normal(size=(7, 3))
    assert np.allclose((a + b).eval_many(pts),
                       a.eval_many(pts) + b.eval_many(pts), rtol=1e-13)
    assert np.allclose((2.5 * a - b).eval_many(pts),
                       2.5 * a.eval_many(pts) - b.eval_many(pts), rtol=1e-13)


def test_product_evaluates_pointwise():
    rng = np.random.default_rng(2)
    a = _random_poly(rng, 2, 3)
    b = _random_poly(rng, 2, 2)
    pts = rng.normal(size=(9, 3))
    prod = multiply(a, b)
    assert prod.degree <= a.degree + b.degree
    assert np.allclose(prod.eval_many(pts),
                       a.eval_many(pts) * b.eval_many(pts),
                       rtol=1e-12, atol=1e-12)


def test_derivative_of_monomial():
    m = Polynomial.monomial(1, (3,), 2, 4.0)   # 4 x^3 t^2
    dx = m.derive(0)
    dt = m.derive(1)
    assert dx == Polynomial.monomial(1, (2,), 2, 12.0)
    assert dt == Polynomial.monomial(1, (3,), 1, 8.0)
    # second derivatives commute
    assert m.derive(0).derive(1) == m.derive(1).derive(0)


def test_derivative_product_rule():
    rng = np.random.default_rng(3)
    a = _random_poly(rng, 1, 3)
    b = _random_poly(rng, 1, 3)
    lhs = multiply(a, b).derive(0)
    rhs = multiply(a.derive(0), b) + multiply(a, b.derive(0))
    diff = lhs - rhs
    assert diff.max_abs_coeff() <= 1e-12 * max(
        1.0, multiply(a, b).max_abs_coeff())


def test_compose_affine_matches_substitution():
    rng = np.random.default_rng(4)
    p = _random_poly(rng, 2, 4)
    mult = [1.7, -0.6, 2.2]
    shift = [0.3, -1.1, 0.5]
    q = p.compose_affine(mult, shift)
    pts = rng.normal(size=(8, 3))
    mapped = (pts - np.asarray(shift)) * np.asarray(mult)
    assert np.allclose(q.eval_many(pts), p.eval_many(mapped),
                       rtol=1e-12, atol=1e-12)


def test_wave_residual_flags_non_solution():
    # v = x, sigma = (t,): gradient equation gives 1 + 1 != 0
    v = Polynomial.variable(1, 0)
    sigma = [Polynomial.monomial(1, (0,), 1)]
    r1, r2 = wave_residual(v, sigma, 1.0)
    assert r1[0].max_abs_coeff() == pytest.approx(2.0)
    assert r2.max_abs_coeff() == 0.0


def test_wave_residual_zero_for_travelling_profile():
    # v = c (x - c t)^2, sigma = (x - c t)^2 solves the system for any c
    c = 1.5
    x = Polynomial.variable(1, 0)
    t = Polynomial.monomial(1, (0,), 1)
    phase = x - c * t
    prof = multiply(phase, phase)
    r1, r2 = wave_residual(c * prof, [prof], c)
    assert r1[0].max_abs_coeff() <= 1e-14
    assert r2.max_abs_coeff() <= 1e-14


def test_json_round_trip():
    rng = np.random.default_rng(5)
    p = _random_poly(rng, 2, 3)
    q = Polynomial.loads(p.dumps())
    assert q == p


@st.composite
def polys(draw, dim=1, max_degree=3):
    n_terms = draw(st.integers(1, 5))
    terms = {}
    for _ in range(n_terms):
        alpha = tuple(draw(st.integers(0, max_degree)) for _ in range(dim))
        at = draw(st.integers(0, max_degree))
        coeff = draw(st.floats(-10, 10, allow_nan=False))
        terms[MultiIndex(alpha, at)] = coeff
    return Polynomial(dim, terms)


@settings(max_examples=60, deadline=None)
@given(polys(), polys())
def test_product_commutes(a, b):
    assert multiply(a, b) == multiply(b, a)


@settings(max_examples=60, deadline=None)
@given(polys(), polys(), polys())
def test_multiplication_distributes(a, b, c):
    lhs = multiply(a, b + c)
    rhs = multiply(a, b) + multiply(a, c)
    scale = max(1.0, lhs.max_abs_coeff())
    assert (lhs - rhs).max_abs_coeff() <= 1e-9 * scale


@settings(max_examples=60, deadline=None)
@given(polys())
def test_derivative_drops_degree(p):
    for axis in (0, 1):
        d = p.derive(axis)
        if not d.is_zero():
            assert d.degree < p.degree
