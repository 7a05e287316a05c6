"""Space-time meshes: construction, classification, validation, ordering."""

import numpy as np
import pytest

from sptdg.mesh import (MeshError, ProblemSpec, build_slab_mesh,
                        build_tent_mesh_1d, causal_order, validate_mesh)


def spec_1d(c=1.0, bc="dirichlet", T=1.0, theta=1.0):
    return ProblemSpec(omega_lo=[0.0], omega_hi=[1.0], T=T, c=c, bc=bc,
                       theta=theta)


def kind_counts(mesh):
    out = {}
    for f in mesh.faces:
        out[f.kind] = out.get(f.kind, 0) + 1
    return out


def test_slab_mesh_1d_counts():
    mesh = build_slab_mesh(spec_1d(), nx=2, nt=2)
    assert len(mesh.elements) == 4
    counts = kind_counts(mesh)
    assert counts == {"initial": 2, "final": 2, "space": 2,
                      "time": 2, "dirichlet": 4}
    assert validate_mesh(mesh) == []


def test_slab_mesh_2d_counts():
    spec = ProblemSpec(omega_lo=[0.0, 0.0], omega_hi=[1.0, 2.0], T=0.5,
                       c=1.0, bc="dirichlet")
    nx = (2, 3)
    nt = 2
    mesh = build_slab_mesh(spec, nx, nt)
    assert len(mesh.elements) == 2 * 3 * 2
    counts = kind_counts(mesh)
    cells = nx[0] * nx[1]
    assert counts["initial"] == cells
    assert counts["final"] == cells
    assert counts["space"] == (nt - 1) * cells
    # interior vertical faces per axis, plus the outer boundary
    assert counts["time"] == ((nx[0] - 1) * nx[1] + nx[0] * (nx[1] - 1)) * nt
    assert counts["dirichlet"] == 2 * (nx[0] + nx[1]) * nt
    assert validate_mesh(mesh) == []


def test_slab_mesh_3d_validates():
    spec = ProblemSpec(omega_lo=[0.0] * 3, omega_hi=[1.0] * 3, T=0.25,
                       c=2.0, bc="neumann")
    mesh = build_slab_mesh(spec, (2, 2, 2), 2)
    assert validate_mesh(mesh) == []
    assert len(mesh.elements) == 16


def test_slab_space_faces_are_flat():
    mesh = build_slab_mesh(spec_1d(c=3.0), nx=3, nt=2)
    for f in mesh.faces:
        if f.kind in ("space", "initial", "final"):
            assert f.n_t == pytest.approx(1.0)
            assert np.allclose(f.n_x, 0.0)
            assert f.gamma == pytest.approx(0.0)
        elif f.kind == "time":
            assert f.n_t == pytest.approx(0.0)


def test_element_volumes_tile_domain():
    spec = ProblemSpec(omega_lo=[0.0, -1.0], omega_hi=[2.0, 1.0], T=0.5,
                       c=1.0)
    mesh = build_slab_mesh(spec, (3, 2), 2)
    total = sum(el.volume() for el in mesh.elements)
    assert total == pytest.approx(mesh.domain_volume(), rel=1e-12)


def test_mixed_boundary_kinds():
    spec = ProblemSpec(omega_lo=[0.0], omega_hi=[1.0], T=1.0, c=1.0,
                       bc={(0, "lo"): "robin", (0, "hi"): "neumann"})
    mesh = build_slab_mesh(spec, 2, 2)
    counts = kind_counts(mesh)
    assert counts["robin"] == 2 and counts["neumann"] == 2
    assert "dirichlet" not in counts
    assert validate_mesh(mesh) == []
    # outward normals point out of the domain
    for f in mesh.faces:
        if f.kind == "robin":
            assert f.n_x[0] == pytest.approx(-1.0)
        if f.kind == "neumann":
            assert f.n_x[0] == pytest.approx(1.0)


def test_locate_slab_elements():
    mesh = build_slab_mesh(spec_1d(), nx=4, nt=3)
    for el in mesh.elements:
        assert mesh.locate(el.center()) == el.id
    # face points resolve to some adjacent element
    eid = mesh.locate(np.array([0.25, 0.5]))
    assert eid is not None


def test_piecewise_speed_slab():
    c = lambda x: 1.0 if x[0] < 0.5 else 2.0
    spec = ProblemSpec(omega_lo=[0.0], omega_hi=[1.0], T=0.5, c=c)
    mesh = build_slab_mesh(spec, 4, 2)
    speeds = sorted({el.c for el in mesh.elements})
    assert speeds == [1.0, 2.0]
    assert validate_mesh(mesh) == []


def test_causal_order_slab_levels():
    mesh = build_slab_mesh(spec_1d(), nx=3, nt=4)
    levels = causal_order(mesh)
    assert [len(lv) for lv in levels] == [3, 3, 3, 3]
    # level index equals slab index
    for j, lv in enumerate(levels):
        for eid in lv:
            lo_t = mesh.elements[eid].time_span()[0]
            assert lo_t == pytest.approx(j * 0.25)


def test_tent_mesh_basic():
    spec = spec_1d(c=2.0, bc="robin", T=0.4)
    mesh = build_tent_mesh_1d(spec, nx=6, safety=0.8)
    assert validate_mesh(mesh) == []
    counts = kind_counts(mesh)
    assert counts.get("time", 0) == 0
    # every interior space-like face respects the causality margin
    gammas = [f.gamma for f in mesh.faces
              if f.kind == "space" and f.is_interior()]
    assert max(gammas) <= 0.8 + 1e-12
    total = sum(el.volume() for el in mesh.elements)
    assert total == pytest.approx(mesh.domain_volume(), rel=1e-12)


def test_tent_mesh_uniform_grid_hits_safety():
    mesh = build_tent_mesh_1d(spec_1d(T=2.0), nx=8, safety=0.6)
    gammas = [f.gamma for f in mesh.faces
              if f.kind == "space" and f.is_interior()]
    assert max(gammas) == pytest.approx(0.6, rel=1e-12)


def test_tent_mesh_single_cell_degenerates_to_slabs():
    # with one vertex pair the advancing front moves in lockstep, so
    # every element is a full-width rectangle of height safety*dx/c
    mesh = build_tent_mesh_1d(spec_1d(T=1.0), nx=1, safety=0.5)
    assert validate_mesh(mesh) == []
    counts = kind_counts(mesh)
    assert counts.get("time", 0) == 0
    assert counts["initial"] == 1 and counts["final"] == 1
    for el in mesh.elements:
        assert el.space_diameter() == pytest.approx(1.0)
        lo_t, hi_t = el.time_span()
        assert hi_t - lo_t <= 0.5 + 1e-12


def test_tent_mesh_levels_are_antichains():
    mesh = build_tent_mesh_1d(spec_1d(T=0.5), nx=8, safety=0.9)
    levels = causal_order(mesh)
    level_of = {}
    for j, lv in enumerate(levels):
        for eid in lv:
            level_of[eid] = j
    for f in mesh.faces:
        if f.kind == "space" and f.is_interior():
            assert level_of[f.minus] < level_of[f.plus]


def test_tent_mesh_rejects_higher_dimensions():
    spec = ProblemSpec(omega_lo=[0.0, 0.0], omega_hi=[1.0, 1.0], T=0.5,
                       c=1.0)
    with pytest.raises(MeshError):
        build_tent_mesh_1d(spec, 4, 0.9)


def test_tent_mesh_rejects_bad_safety():
    with pytest.raises(ValueError):
        build_tent_mesh_1d(spec_1d(), 4, 1.0)


def test_validator_catches_broken_normal():
    mesh = build_slab_mesh(spec_1d(), nx=2, nt=2)
    assert validate_mesh(mesh) == []
    f = mesh.faces[0]
    f.normal = np.array([0.5, 0.5])
    violations = validate_mesh(mesh)
    assert violations
    assert any("normal" in v for v in violations)


def test_validator_catches_bad_gamma():
    mesh = build_slab_mesh(spec_1d(), nx=2, nt=2)
    for f in mesh.faces:
        if f.kind == "space":
            f.gamma = 0.3
            break
    violations = validate_mesh(mesh)
    assert any("gamma" in v for v in violations)


def test_json_description():
    mesh = build_slab_mesh(spec_1d(), nx=2, nt=1)
    data = mesh.to_json_dict()
    assert data["n"] == 1
    assert len(data["elements"]) == 2
    assert len(data["faces"]) == len(mesh.faces)
    kinds = {f["kind"] for f in data["faces"]}
    assert kinds == {"initial", "final", "time", "dirichlet"}
