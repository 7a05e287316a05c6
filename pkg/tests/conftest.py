"""Session-level reporting: one PASS/FAIL line per acceptance criterion."""

ACCEPTANCE_FILE = "test_acceptance.py"

LABELS = {
    "test_c01_trefftz_exactness":
        "1. Trefftz exactness of both basis families (p <= 5, n <= 3)",
    "test_c02_dimension_formulas":
        "2. dimension formulas and basis list lengths (p <= 8, n <= 3)",
    "test_c03_coercivity_unit_constant":
        "3. coercivity: x'Ax = DG norm^2 on slabs, >= on tents",
    "test_c04_jump_and_boundary_identities":
        "4. face jump identities and elemental boundary identity",
    "test_c05_polynomial_solution_reproduction":
        "5. exact reproduction of polynomial plane-wave solutions",
    "test_c06_h_convergence_1d":
        "6. 1D slab h-convergence, DG rate >= p + 0.4 (Tp and Wp)",
    "test_c07_h_convergence_2d":
        "7. 2D slab h-convergence, DG rate >= p + 0.4",
    "test_c08_tent_l2_control":
        "8. tent-mesh L2 control: monotone errors, rate >= p",
    "test_c09_dissipation_audit":
        "9. energy nonincreasing and DG-norm dissipation identity",
    "test_c10_solver_equivalence_on_tents":
        "10. sequential vs monolithic solver equivalence on tents",
    "test_c11_stability_bound":
        "11. a-priori stability bound on random data sets",
    "test_c12_direction_admissibility":
        "12. direction admissibility (planar, latitude ring, defaults)",
}

_results = {}


def pytest_runtest_logreport(report):
    if ACCEPTANCE_FILE not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    if report.when == "call":
        _results[name] = report.outcome
    elif report.when == "setup" and report.outcome != "passed":
        _results[name] = report.outcome


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    ran = {name: _results[name] for name in LABELS if name in _results}
    if not ran:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for name, label in LABELS.items():
        if name not in ran:
            continue
        word = "PASS" if ran[name] == "passed" else "FAIL"
        terminalreporter.write_line(f"{word}  {label}")
