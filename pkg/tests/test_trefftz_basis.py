"""Local Trefftz bases: dimensions, exactness, directions, conditioning."""

import math

import numpy as np
import pytest

from sptdg.polynomial import Polynomial
from sptdg.trefftz_basis import (DirectionSet, ElementFrame, build_basis,
                                 build_Tp_basis, build_Up_basis,
                                 build_Wp_basis, check_directions,
                                 default_directions, dim_Tp, dim_Up, dim_Wp,
                                 direction_count, evolve_from_initial,
                                 family_dim, gram_matrix, unit_frame)

# frozen dimension samples (independent counting: the first-order space is
# parametrized by n+1 polynomial initial traces of degree <= p; the scalar
# families by 1 + sum_k N_k plane-wave profiles)
DIM_TABLE = [
    # (p, n, dim_Tp, dim_Up, dim_Wp)
    (0, 1, 2, 1, 2),
    (1, 1, 4, 3, 4),
    (2, 1, 6, 5, 6),
    (3, 1, 8, 7, 8),
    (0, 2, 3, 1, 3),
    (1, 2, 9, 4, 8),
    (2, 2, 18, 9, 15),
    (3, 2, 30, 16, 24),
    (0, 3, 4, 1, 4),
    (1, 3, 16, 5, 13),
    (2, 3, 40, 14, 29),
    (5, 3, 224, 91, 139),
]


def test_dimension_table():
    for p, n, tp, up, wp in DIM_TABLE:
        assert dim_Tp(p, n) == tp, (p, n)
        assert dim_Up(p, n) == up, (p, n)
        assert dim_Wp(p, n) == wp, (p, n)


def test_dimension_closed_forms():
    for n in (1, 2, 3):
        for p in range(9):
            assert dim_Tp(p, n) == (n + 1) * math.comb(p + n, n)
            # the scalar space grows by one direction block per degree
            assert dim_Up(p, n) == sum(direction_count(k, n)
                                       for k in range(p + 1))
            assert dim_Wp(p, n) == dim_Up(p + 1, n) - 1


def test_basis_lengths_match_dims():
    for n in (1, 2, 3):
        frame = unit_frame(n)
        for p in range(4):
            assert len(build_Tp_basis(p, n, frame)) == dim_Tp(p, n)
            dirs = default_directions(p + 1, n, seed=0)
            assert len(build_Up_basis(p, n, dirs, frame)) == dim_Up(p, n)
            assert len(build_Wp_basis(p, n, dirs, frame)) == dim_Wp(p, n)


def test_evolution_of_linear_data():
    # v0 = x, sigma0 = 0 evolves to (x, -t)
    v0 = Polynomial.variable(1, 0)
    fn = evolve_from_initial(v0, [Polynomial.zero(1)], p=3, c=1.0)
    x = Polynomial.variable(1, 0)
    t = Polynomial.variable(1, 1)
    assert fn.v == x
    assert fn.sigma[0] == -1.0 * t


def test_evolution_of_quadratic_data():
    # v0 = x^2 with c = 2: sigma = -2xt, v = x^2 + 4t^2
    v0 = Polynomial.monomial(1, (2,), 0)
    fn = evolve_from_initial(v0, [Polynomial.zero(1)], p=2, c=2.0)
    assert fn.residual_max() <= 1e-14
    pts = np.array([[0.3, 0.7], [-1.2, 0.4]])
    want_v = pts[:, 0] ** 2 + 4.0 * pts[:, 1] ** 2
    want_s = -2.0 * pts[:, 0] * pts[:, 1]
    assert np.allclose(fn.eval_v(pts), want_v, rtol=1e-14)
    assert np.allclose(fn.eval_sigma(pts)[:, 0], want_s, rtol=1e-14)


def test_evolution_rejects_time_dependent_data():
    bad = Polynomial.monomial(1, (0,), 1)
    with pytest.raises(ValueError):
        evolve_from_initial(bad, [Polynomial.zero(1)], p=2, c=1.0)


def test_tp_basis_trefftz_and_independent():
    rng = np.random.default_rng(0)
    for n in (1, 2):
        for p in (0, 1, 2, 3):
            frame = ElementFrame(center=rng.normal(size=n + 1),
                                 h=0.7, c=1.5)
            basis = build_Tp_basis(p, n, frame)
            worst = max(fn.residual_max() for fn in basis)
            assert worst <= 1e-12
            G = gram_matrix(basis, frame)
            assert np.linalg.matrix_rank(G, tol=1e-10 * G.max()) == len(basis)


def test_wp_basis_plane_wave_structure():
    # each member propagates along a single direction: sigma = d * v / c
    n, p, c = 2, 2, 1.5
    frame = ElementFrame(center=[0.2, -0.1, 0.05], h=0.5, c=c)
    dirs = default_directions(p + 1, n, seed=0)
    basis = build_Wp_basis(p, n, dirs, frame)
    pts = np.random.default_rng(1).normal(size=(20, n + 1)) * 0.2
    flat = [d for block in dirs.per_degree[1:p + 2] for d in block]
    assert len(flat) == len(basis)
    for fn, d in zip(basis, flat):
        v = fn.eval_v(pts)
        s = fn.eval_sigma(pts)
        assert np.allclose(s, np.outer(v, d) / c, rtol=1e-12, atol=1e-12)
        assert fn.residual_max() <= 1e-12


def test_up_basis_solves_second_order_equation():
    n, p = 2, 3
    frame = unit_frame(n)
    dirs = default_directions(p, n, seed=0)
    for u in build_Up_basis(p, n, dirs, frame):
        resid = u.derive(n).derive(n)   # c = 1 in the unit frame
        for ax in range(n):
            resid = resid - u.derive(ax).derive(ax)
        assert resid.max_abs_coeff() <= 1e-12 * max(1.0, u.max_abs_coeff())


def test_direction_counts():
    assert [direction_count(k, 1) for k in range(4)] == [1, 2, 2, 2]
    assert [direction_count(k, 2) for k in range(4)] == [1, 3, 5, 7]
    assert [direction_count(k, 3) for k in range(4)] == [1, 4, 9, 16]


def test_default_directions_admissible():
    for n in (1, 2, 3):
        dirs = default_directions(5 if n < 3 else 4, n, seed=0)
        assert dirs.admissible
        lengths = [np.linalg.norm(d) for block in dirs.per_degree
                   for d in block]
        assert np.allclose(lengths, 1.0, atol=1e-12)


def test_distinct_planar_angles_always_admissible():
    rng = np.random.default_rng(7)
    for _ in range(10):
        k = int(rng.integers(1, 7))
        m = direction_count(k, 2)
        ang = np.sort(rng.uniform(0.0, 2.0 * np.pi, size=m))
        if np.min(np.diff(ang)) < 1e-4:
            continue
        d = np.column_stack([np.cos(ang), np.sin(ang)])
        ok, cond = check_directions(k, d, 2)
        assert ok, f"angles {ang} rejected with cond {cond:.3e}"


def test_duplicate_directions_rejected():
    ang = np.array([0.1, 0.1, 2.0])        # duplicate entry, k = 1 needs 3
    d = np.column_stack([np.cos(ang), np.sin(ang)])
    ok, cond = check_directions(1, d, 2)
    assert not ok


def test_latitude_circle_rejected():
    # n = 3, k = 2: nine directions on one circle of latitude span too few
    # spherical harmonics, so the degree matrix is singular
    m = direction_count(2, 3)
    z0 = 0.4
    r = np.sqrt(1.0 - z0 ** 2)
    phi = np.linspace(0.0, 2.0 * np.pi, m, endpoint=False) + 0.3
    d = np.column_stack([r * np.cos(phi), r * np.sin(phi), np.full(m, z0)])
    ok, cond = check_directions(2, d, 3)
    assert not ok
    assert cond > 1e12


def test_build_basis_dispatch():
    frame = unit_frame(1)
    for family in ("Tp", "Wp"):
        basis = build_basis(family, 2, 1, frame)
        assert len(basis) == family_dim(family, 2, 1)
    with pytest.raises(ValueError):
        build_basis("Xp", 2, 1, frame)


def test_gram_matrix_positive_definite():
    frame = ElementFrame(center=[0.5, 0.25], h=0.5, c=2.0)
    basis = build_Tp_basis(2, 1, frame)
    G = gram_matrix(basis, frame)
    assert np.allclose(G, G.T, rtol=1e-13)
    w = np.linalg.eigvalsh(G)
    assert w.min() > 0
