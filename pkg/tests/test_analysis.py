"""Norms, interface energies, exact solutions, rate fits, audits."""

import numpy as np
import pytest

from sptdg.analysis import (AnalysisError, ConvergenceTable, DifferenceField,
                            PiecewiseField, causal_fronts, convergence_study,
                            dg_norm, dg_plus_norm, dissipation_audit, energy,
                            energy_bounds, exact_plane_wave,
                            exact_standing_wave, fit_rate, l2_error, l2_norm,
                            spec_from_exact)
from sptdg.assembly import assemble_system, default_flux_params
from sptdg.mesh import ProblemSpec, build_slab_mesh, build_tent_mesh_1d
from sptdg.polynomial import Polynomial
from sptdg.solver import solve_sequential
from sptdg.trefftz_basis import TrefftzFunction, build_Tp_basis


def constant_field(mesh, v=1.0, sigma=0.0):
    fns = []
    for el in mesh.elements:
        fns.append(TrefftzFunction(
            v=Polynomial.constant(mesh.n, v),
            sigma=[Polynomial.constant(mesh.n, sigma)] * mesh.n,
            c=el.c))
    return PiecewiseField(fns, mesh.n)


def random_trefftz_field(mesh, p, rng):
    fns = []
    for el in mesh.elements:
        basis = build_Tp_basis(p, mesh.n, el.frame())
        coeffs = rng.normal(size=len(basis))
        v = sum(c * fn.v for c, fn in zip(coeffs, basis))
        sigma = [sum(c * fn.sigma[m] for c, fn in zip(coeffs, basis))
                 for m in range(mesh.n)]
        fns.append(TrefftzFunction(v=v, sigma=sigma, c=el.c))
    return PiecewiseField(fns, mesh.n)


def test_dg_norm_hand_value():
    # single unit cell, (v, sigma) = (1, 0), c = 1, alpha = 1:
    # 1/2 on the initial cap + 1/2 on the final cap + 1^2 on each of the
    # two Dirichlet walls gives 3, so the norm is sqrt(3)
    spec = ProblemSpec(omega_lo=[0.0], omega_hi=[1.0], T=1.0, c=1.0,
                       bc="dirichlet")
    mesh = build_slab_mesh(spec, 1, 1)
    flux = default_flux_params(mesh, spec)
    field = constant_field(mesh)
    assert dg_norm(field, mesh, flux) == pytest.approx(np.sqrt(3.0),
                                                       rel=1e-13)


def test_dg_plus_dominates_dg():
    spec = ProblemSpec(omega_lo=[0.0], omega_hi=[1.0], T=0.6, c=1.4,
                       bc={(0, "lo"): "neumann", (0, "hi"): "robin"})
    mesh = build_slab_mesh(spec, 3, 2)
    flux = default_flux_params(mesh, spec)
    rng = np.random.default_rng(0)
    for _ in range(5):
        field = random_trefftz_field(mesh, 2, rng)
        a = dg_norm(field, mesh, flux, spec=spec)
        b = dg_plus_norm(field, mesh, flux, spec=spec)
        assert b >= a * (1.0 - 1e-12)


def test_standing_wave_energy_constant_in_time():
    # closed box, sigma.n = 0 on the walls: the energy pi^2/4 of the
    # fundamental mode passes through every flat interface unchanged
    exact = exact_standing_wave([1], [0.0], [1.0], c=1.0)
    spec = spec_from_exact(exact, [0.0], [1.0], 1.0, bc="neumann")
    mesh = build_slab_mesh(spec, 4, 4)
    fronts = causal_fronts(mesh)
    vals = []
    for front in fronts:
        vals.append(energy(mesh, exact, front, side="past", nodes=14))
    want = np.pi ** 2 / 4.0
    assert np.allclose(vals, want, rtol=1e-10)


def test_energy_bounds_bracket_energy():
    exact = exact_plane_wave(np.array([1.0]), np.sin, np.cos, c=1.0)
    spec = spec_from_exact(exact, [0.0], [1.0], 0.5, bc="dirichlet")
    mesh = build_tent_mesh_1d(spec, 6, 0.9)
    fronts = causal_fronts(mesh)
    mid = fronts[len(fronts) // 2]
    lo, e, hi = energy_bounds(mesh, exact, mid, side="past", nodes=12)
    assert lo <= e <= hi
    assert lo > 0.0


def test_energy_rejects_time_like_faces():
    spec = ProblemSpec(omega_lo=[0.0], omega_hi=[1.0], T=0.5, c=1.0)
    mesh = build_slab_mesh(spec, 2, 1)
    bad = [f.id for f in mesh.faces if f.kind == "time"]
    field = constant_field(mesh)
    with pytest.raises(AnalysisError):
        energy(mesh, field, bad)


def test_causal_fronts_partition_slab():
    spec = ProblemSpec(omega_lo=[0.0], omega_hi=[1.0], T=1.0, c=1.0)
    mesh = build_slab_mesh(spec, 3, 4)
    fronts = causal_fronts(mesh)
    assert len(fronts) == 5
    assert set(fronts[0]) == set(mesh.faces_of_kind("initial"))
    assert set(fronts[-1]) == set(mesh.faces_of_kind("final"))
    for front in fronts:
        area = sum(mesh.faces[fid].measure * mesh.faces[fid].n_t
                   for fid in front)
        assert area == pytest.approx(1.0, rel=1e-12)


def test_l2_error_vanishes_on_itself():
    exact = exact_plane_wave(np.array([1.0]), np.sin, np.cos, c=1.0)
    spec = spec_from_exact(exact, [0.0], [1.0], 0.5, bc="dirichlet")
    mesh = build_slab_mesh(spec, 3, 2)

    class _Wrap:
        def eval_on(self, eid, pts):
            return exact.eval_on(eid, pts)

    assert l2_error(_Wrap(), exact, mesh, nodes=8) <= 1e-14


def test_l2_norm_constant_field():
    spec = ProblemSpec(omega_lo=[0.0], omega_hi=[2.0], T=0.5, c=2.0)
    mesh = build_slab_mesh(spec, 2, 1)
    # c^-2 v^2 + |sigma|^2 = 1/4 + 1 over volume 1
    field = constant_field(mesh, v=1.0, sigma=1.0)
    assert l2_norm(field, mesh) == pytest.approx(np.sqrt(1.25), rel=1e-12)


def test_exact_solutions_have_zero_residual():
    rng = np.random.default_rng(0)
    pts2 = np.column_stack([rng.uniform(0, 1, 30), rng.uniform(0, 2, 30),
                            rng.uniform(0, 1, 30)])
    pw = exact_plane_wave(np.array([0.6, 0.8]), np.sin, np.cos, c=2.0)
    assert pw.residual_max(pts2) == 0.0
    # derivative amplitudes ~ ksq ~ 42, so rounding leaves ~1e-15 * that
    sw = exact_standing_wave([2, 1], [0.0, 0.0], [1.0, 2.0], c=1.5)
    assert sw.residual_max(pts2) <= 1e-13


def test_plane_wave_requires_unit_direction():
    with pytest.raises(ValueError):
        exact_plane_wave(np.array([1.0, 1.0]), np.sin, np.cos)


def test_standing_wave_normal_flux_vanishes_on_walls():
    sw = exact_standing_wave([1, 2], [0.0, -1.0], [1.0, 1.0], c=1.0)
    rng = np.random.default_rng(2)
    pts = np.column_stack([np.zeros(10), rng.uniform(-1, 1, 10),
                           rng.uniform(0, 1, 10)])
    sigma = sw.sigma(pts)
    assert np.abs(sigma[:, 0]).max() <= 1e-13
    pts[:, 0] = 1.0
    assert np.abs(sw.sigma(pts)[:, 0]).max() <= 1e-13


def test_spec_from_exact_wires_boundary_data():
    exact = exact_plane_wave(np.array([1.0]), np.sin, np.cos, c=2.0)
    theta = 1.7
    spec = spec_from_exact(exact, [0.0], [1.0], 1.0, bc="robin",
                           theta=theta)
    pts = np.column_stack([np.ones(5), np.linspace(0.1, 0.9, 5)])
    n_x = np.array([1.0])
    got = spec.eval_boundary("robin", pts, n_x)
    want = (theta / 2.0) * exact.v(pts) - exact.sigma(pts)[:, 0]
    assert np.allclose(got, want, rtol=1e-12)


def test_fit_rate_recovers_synthetic_slope():
    hs = [0.4 / 2 ** k for k in range(4)]
    errs = [3.0 * h ** 2.5 for h in hs]
    assert fit_rate(hs, errs) == pytest.approx(2.5, abs=1e-10)
    assert fit_rate(hs, [1e-15] * 4, scale=1.0) == "exact"


def test_convergence_table_csv_layout(tmp_path):
    rows = [
        {"level": 0, "h": 0.5, "dofs": 10, "err_dg": 1e-1, "err_l2": 2e-2,
         "err_energy": 3e-2, "t_assemble": 0.1, "t_solve": 0.05},
        {"level": 1, "h": 0.25, "dofs": 40, "err_dg": 3e-2, "err_l2": 4e-3,
         "err_energy": 8e-3, "t_assemble": 0.2, "t_solve": 0.1},
    ]
    table = ConvergenceTable(family="Tp", p=1, rows=rows,
                             rates={"rate_dg": 1.7, "rate_l2": 2.3,
                                    "rate_energy": 1.9})
    path = tmp_path / "table.csv"
    table.to_csv(str(path))
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "level,h,dofs,err_dg,err_l2,err_energy,t_assemble,t_solve"
    assert lines[1].startswith("0,0.5,10,")
    rates = table.rates_json_dict()
    assert rates["rate_dg"] == 1.7 and rates["rate_l2"] == 2.3


def test_convergence_study_requires_three_levels():
    exact = exact_plane_wave(np.array([1.0]), np.sin, np.cos, c=1.0)
    spec = spec_from_exact(exact, [0.0], [1.0], 0.5, bc="dirichlet")
    meshes = [build_slab_mesh(spec, 4, 2), build_slab_mesh(spec, 8, 4)]
    with pytest.raises(AnalysisError):
        convergence_study(spec, exact, "Tp", 1, meshes)


def test_dissipation_audit_slab():
    spec = ProblemSpec(
        omega_lo=[0.0], omega_hi=[1.0], T=0.5, c=1.0, bc="robin",
        v0=lambda x: np.exp(-30.0 * (x[:, 0] - 0.5) ** 2))
    mesh = build_slab_mesh(spec, 6, 4)
    flux = default_flux_params(mesh, spec)
    sol = solve_sequential(assemble_system(mesh, spec, "Tp", 2, flux))
    report = dissipation_audit(sol, mesh, spec, flux=flux)
    assert report["monotone"]
    assert report["dissipation"] >= 0.0
    assert abs(report["identity_residual"]) <= 1e-9
    assert len(report["energies"]) == len(report["fronts"])
    assert report["energies"][0] > 0.0


def test_dissipation_audit_tent():
    spec = ProblemSpec(
        omega_lo=[0.0], omega_hi=[1.0], T=0.4, c=1.0, bc="dirichlet",
        v0=lambda x: np.sin(np.pi * x[:, 0]))
    mesh = build_tent_mesh_1d(spec, 8, 0.9)
    flux = default_flux_params(mesh, spec)
    sol = solve_sequential(assemble_system(mesh, spec, "Tp", 2, flux))
    report = dissipation_audit(sol, mesh, spec, flux=flux)
    assert report["monotone"]
    assert abs(report["identity_residual"]) <= 1e-9


def test_dissipation_audit_rejects_inhomogeneous_data():
    exact = exact_plane_wave(np.array([1.0]), np.sin, np.cos, c=1.0)
    spec = spec_from_exact(exact, [0.0], [1.0], 0.5, bc="dirichlet")
    mesh = build_slab_mesh(spec, 3, 2)
    flux = default_flux_params(mesh, spec)
    sol = solve_sequential(assemble_system(mesh, spec, "Tp", 1, flux))
    with pytest.raises(AnalysisError):
        dissipation_audit(sol, mesh, spec, flux=flux)


def test_galerkin_error_orthogonality_in_dg_norm():
    # the discrete solution is the DG-norm best approximation up to the
    # continuity constant; sanity-check it beats a perturbed competitor
    exact = exact_plane_wave(np.array([1.0]), np.sin, np.cos, c=1.0)
    spec = spec_from_exact(exact, [0.0], [1.0], 0.5, bc="dirichlet")
    mesh = build_slab_mesh(spec, 4, 2)
    flux = default_flux_params(mesh, spec)
    system = assemble_system(mesh, spec, "Tp", 2, flux)
    sol = solve_sequential(system)
    err = dg_norm(DifferenceField(exact, sol), mesh, flux, spec=spec,
                  nodes=10)
    rng = np.random.default_rng(3)
    pert = solve_sequential(system)
    for e in range(len(mesh.elements)):
        pert.coeffs[e] = pert.coeffs[e] + 0.01 * rng.normal(
            size=len(pert.coeffs[e]))
    err_pert = dg_norm(DifferenceField(exact, pert), mesh, flux, spec=spec,
                       nodes=10)
    assert err < err_pert
