"""Norms, energies, manufactured solutions and convergence studies.

The mesh- and flux-dependent DG norm collects weighted time-jumps on
space-like faces, half-weighted traces on the initial/final caps,
alpha/beta penalty terms on time-like and Dirichlet/Neumann faces and
impedance-weighted Robin traces; the DG+ norm adds the upwind traces
and mean values that appear in the continuity estimate.  The energy of
a field on a space-like interface is

    E(Sigma) = integral of  w (tau . n_x) + 1/2 (c^-2 w^2 + |tau|^2) n_t,

which is nonnegative on space-like faces and reduces to the familiar
half-sum of squares on flat interfaces.  These quantities satisfy, for
the discrete solution with homogeneous boundary data,

    |||u|||_DG^2 = E(0) + E(T) + D,

with D the dissipation collected by jumps and boundary traces, and the
energies of successive causal fronts decrease monotonically.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field as dc_field

import numpy as np

from ._quadrature import box_rule, gauss_01_tensor, triangle_rule
from .assembly import assemble_system, default_flux_params, graded_flux_params
from .mesh import (BOUNDARY_KINDS, DIRICHLET, FINAL, INITIAL, NEUMANN, ROBIN,
                   SPACE, TIME, causal_order)
from .solver import solve_sequential


class AnalysisError(Exception):
    pass


# ---------------------------------------------------------------------------
# field adapters: anything with eval_on(eid, pts) -> (v, sigma)
# ---------------------------------------------------------------------------

class PiecewiseField:
    """Per-element list of TrefftzFunction (None meaning zero)."""

    def __init__(self, fns, n):
        self.fns = fns
        self.n = n

    def eval_on(self, eid, pts):
        fn = self.fns[eid]
        if fn is None:
            return np.zeros(pts.shape[0]), np.zeros((pts.shape[0], self.n))
        return fn.eval_v(pts), fn.eval_sigma(pts)


class DifferenceField:
    """Pointwise difference a - b of two fields."""

    def __init__(self, a, b):
        self.a = a
        self.b = b

    def eval_on(self, eid, pts):
        va, sa = self.a.eval_on(eid, pts)
        vb, sb = self.b.eval_on(eid, pts)
        return va - vb, sa - sb


class InitialDataField:
    """The prescribed (v0, sigma0) viewed as a field on t = 0 faces."""

    def __init__(self, spec):
        self.spec = spec

    def eval_on(self, eid, pts):
        x = pts[:, :self.spec.n]
        return self.spec.eval_v0(x), self.spec.eval_sigma0(x)


def _as_field(obj, mesh):
    if hasattr(obj, "eval_on"):
        return obj
    if isinstance(obj, (list, tuple)):
        return PiecewiseField(list(obj), mesh.n)
    raise TypeError(f"cannot interpret {type(obj).__name__} as a field")


def _face_rule(face, nodes):
    u, w = gauss_01_tensor(face.dim, nodes)
    pts = face.origin[None, :] + u @ face.axes
    return pts, w * face.measure


# ---------------------------------------------------------------------------
# DG norms
# ---------------------------------------------------------------------------

def _dg_terms(field, mesh, flux, nodes, spec=None):
    """Squared DG-norm contributions, grouped by face role."""
    out = {"space": 0.0, "initial": 0.0, "final": 0.0, "time": 0.0,
           "dirichlet": 0.0, "neumann": 0.0, "robin": 0.0}
    for f in mesh.faces:
        pts, wq = _face_rule(f, nodes)
        n_x, n_t = f.n_x, f.n_t
        c = f.c
        if f.kind == SPACE:
            vm, sm = field.eval_on(f.minus, pts)
            vp, sp = field.eval_on(f.plus, pts)
            dv, ds = vm - vp, sm - sp
            weight = 0.5 * (1.0 - f.gamma) * n_t
            out["space"] += float(wq @ (weight * (
                dv ** 2 / c ** 2 + np.einsum("qn,qn->q", ds, ds))))
        elif f.kind in (INITIAL, FINAL):
            eid = f.plus if f.kind == INITIAL else f.minus
            v, s = field.eval_on(eid, pts)
            val = 0.5 * n_t * (v ** 2 / c ** 2 + np.einsum("qn,qn->q", s, s))
            out[f.kind] += float(wq @ val)
        elif f.kind == TIME:
            vm, sm = field.eval_on(f.minus, pts)
            vp, sp = field.eval_on(f.plus, pts)
            dv = vm - vp
            dsn = (sm - sp) @ n_x
            out["time"] += float(wq @ (flux.alpha[f.id] * dv ** 2
                                       + flux.beta[f.id] * dsn ** 2))
        elif f.kind == DIRICHLET:
            v, _ = field.eval_on(f.minus, pts)
            out["dirichlet"] += float(wq @ (flux.alpha[f.id] * v ** 2))
        elif f.kind == NEUMANN:
            _, s = field.eval_on(f.minus, pts)
            out["neumann"] += float(wq @ (flux.beta[f.id] * (s @ n_x) ** 2))
        elif f.kind == ROBIN:
            v, s = field.eval_on(f.minus, pts)
            sn = s @ n_x
            th = spec.theta_at(pts) if spec is not None \
                else np.ones(pts.shape[0])
            de = flux.delta
            out["robin"] += float(wq @ ((1 - de) * (th / c) * v ** 2
                                        + (de * c / th) * sn ** 2))
    return out


def _infer_nodes(field, mesh):
    deg = 1
    probe = field
    if isinstance(probe, DifferenceField):
        for part in (probe.a, probe.b):
            deg = max(deg, _field_poly_degree(part))
    else:
        deg = max(deg, _field_poly_degree(probe))
    return deg + 3


def _field_poly_degree(obj):
    if hasattr(obj, "p_map"):
        return max(obj.p_map)
    if isinstance(obj, PiecewiseField):
        deg = 0
        for fn in obj.fns:
            if fn is not None:
                deg = max(deg, fn.v.degree,
                          *(s.degree for s in fn.sigma))
        return deg
    return 5


def dg_norm(field, mesh, flux, spec=None, nodes=None) -> float:
    """The mesh- and flux-dependent DG norm of a piecewise field.

    ``spec`` supplies the Robin impedance theta when the mesh has Robin
    faces (defaults to 1 otherwise).
    """
    field = _as_field(field, mesh)
    if nodes is None:
        nodes = _infer_nodes(field, mesh)
    terms = _dg_terms(field, mesh, flux, nodes, spec=spec)
    return math.sqrt(max(sum(terms.values()), 0.0))


def dg_plus_norm(field, mesh, flux, spec=None, nodes=None) -> float:
    """The augmented DG+ norm appearing in the continuity estimate."""
    field = _as_field(field, mesh)
    if nodes is None:
        nodes = _infer_nodes(field, mesh)
    total = sum(_dg_terms(field, mesh, flux, nodes, spec=spec).values())
    for f in mesh.faces:
        pts, wq = _face_rule(f, nodes)
        n_x, n_t = f.n_x, f.n_t
        c = f.c
        if f.kind == SPACE:
            vm, sm = field.eval_on(f.minus, pts)
            weight = 2.0 * n_t / (1.0 - f.gamma)
            total += float(wq @ (weight * (vm ** 2 / c ** 2
                                           + np.einsum("qn,qn->q", sm, sm))))
        elif f.kind == TIME:
            vm, sm = field.eval_on(f.minus, pts)
            vp, sp = field.eval_on(f.plus, pts)
            mean_v = 0.5 * (vm + vp)
            mean_s = 0.5 * (sm + sp)
            total += float(wq @ (mean_v ** 2 / flux.beta[f.id]
                                 + np.einsum("qn,qn->q", mean_s, mean_s)
                                 / flux.alpha[f.id]))
        elif f.kind == DIRICHLET:
            _, s = field.eval_on(f.minus, pts)
            total += float(wq @ ((s @ n_x) ** 2 / flux.alpha[f.id]))
        elif f.kind == NEUMANN:
            v, _ = field.eval_on(f.minus, pts)
            total += float(wq @ (v ** 2 / flux.beta[f.id]))
    return math.sqrt(max(total, 0.0))


# ---------------------------------------------------------------------------
# interface energies
# ---------------------------------------------------------------------------

def _trace_element(face, side):
    if side == "past":
        return face.minus if face.minus is not None else face.plus
    if side == "future":
        return face.plus if face.plus is not None else face.minus
    raise ValueError("side must be 'past' or 'future'")


def energy(mesh, field, face_ids, side="past", nodes=8) -> float:
    """Energy of a field on a union of space-like / cap faces.

    ``side`` selects the trace: 'past' takes the minus element where one
    exists (the upwind trace), 'future' the plus element.
    """
    field = _as_field(field, mesh)
    total = 0.0
    for fid in face_ids:
        f = mesh.faces[fid]
        if f.kind not in (SPACE, INITIAL, FINAL):
            raise AnalysisError(
                f"face {fid} ({f.kind}) is not part of a space-like interface"
            )
        pts, wq = _face_rule(f, nodes)
        v, s = field.eval_on(_trace_element(f, side), pts)
        integ = v * (s @ f.n_x) + 0.5 * f.n_t * (
            v ** 2 / f.c ** 2 + np.einsum("qn,qn->q", s, s))
        total += float(wq @ integ)
    return total


def energy_bounds(mesh, field, face_ids, side="past", nodes=8):
    """(lower, E, upper): the two-sided space-like energy bounds."""
    field = _as_field(field, mesh)
    lo = hi = en = 0.0
    for fid in face_ids:
        f = mesh.faces[fid]
        if f.kind not in (SPACE, INITIAL, FINAL):
            raise AnalysisError(f"face {fid} is not space-like")
        pts, wq = _face_rule(f, nodes)
        v, s = field.eval_on(_trace_element(f, side), pts)
        sq = v ** 2 / f.c ** 2 + np.einsum("qn,qn->q", s, s)
        en += float(wq @ (v * (s @ f.n_x) + 0.5 * f.n_t * sq))
        lo += float(wq @ (0.5 * (1.0 - f.gamma) * f.n_t * sq))
        hi += float(wq @ (0.5 * (1.0 + f.gamma) * f.n_t * sq))
    return lo, en, hi


def causal_fronts(mesh, levels=None):
    """Space-like interfaces swept by the causal solve.

    Front j separates the first j levels from the rest; front 0 is the
    initial cap and the last front the final cap.  Each front covers the
    spatial domain exactly once.
    """
    if levels is None:
        levels = causal_order(mesh)
    level_of = {}
    for li, lv in enumerate(levels):
        for e in lv:
            level_of[e] = li
    n_lv = len(levels)
    fronts = []
    for j in range(n_lv + 1):
        ids = []
        for f in mesh.faces:
            if f.kind not in (SPACE, INITIAL, FINAL):
                continue
            lm = level_of[f.minus] if f.minus is not None else -1
            lp = level_of[f.plus] if f.plus is not None else n_lv
            if lm < j <= lp:
                ids.append(f.id)
        fronts.append(ids)
    return fronts


# ---------------------------------------------------------------------------
# L2(Q) error
# ---------------------------------------------------------------------------

def _element_rule(element, nodes):
    if element.kind == "box":
        return box_rule(element.lo, element.hi, nodes)
    pts_list, w_list = [], []
    for a, b, c3 in element.triangles():
        pts, w = triangle_rule(a, b, c3, nodes)
        pts_list.append(pts)
        w_list.append(w)
    return np.vstack(pts_list), np.concatenate(w_list)


def l2_error(sol, exact, mesh, nodes=None) -> float:
    """Weighted L2(Q) error (|c^-1 (v - v_hp)|^2 + |sigma - sigma_hp|^2)^1/2."""
    if nodes is None:
        nodes = max(sol.p_map) + 3 if hasattr(sol, "p_map") else 8
    diff = DifferenceField(_as_field(exact, mesh), _as_field(sol, mesh))
    total = 0.0
    for e in mesh.elements:
        pts, wq = _element_rule(e, nodes)
        dv, ds = diff.eval_on(e.id, pts)
        total += float(wq @ (dv ** 2 / e.c ** 2
                             + np.einsum("qn,qn->q", ds, ds)))
    return math.sqrt(max(total, 0.0))


def l2_norm(field, mesh, nodes=8) -> float:
    field = _as_field(field, mesh)
    total = 0.0
    for e in mesh.elements:
        pts, wq = _element_rule(e, nodes)
        v, s = field.eval_on(e.id, pts)
        total += float(wq @ (v ** 2 / e.c ** 2 + np.einsum("qn,qn->q", s, s)))
    return math.sqrt(max(total, 0.0))


# ---------------------------------------------------------------------------
# manufactured exact solutions
# ---------------------------------------------------------------------------

@dataclass
class ExactSolution:
    """Closed-form (v, sigma) with analytic first derivatives.

    ``residual`` evaluates the first-order wave system on the given
    points; with analytic derivatives it vanishes to rounding.  When the
    solution derives from a scalar potential U (v = dU/dt,
    sigma = -grad U), ``potential`` holds it.
    """

    n: int
    c: float
    v: object
    sigma: object
    grad_v: object
    v_t: object
    sigma_t: object
    div_sigma: object
    potential: object = None
    regularity: str = "smooth"

    def eval_on(self, eid, pts):
        return self.v(pts), self.sigma(pts)

    def residual(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        r1 = self.grad_v(pts) + self.sigma_t(pts)
        r2 = self.div_sigma(pts) + self.v_t(pts) / self.c ** 2
        return r1, r2

    def residual_max(self, pts) -> float:
        r1, r2 = self.residual(pts)
        return max(float(np.abs(r1).max()), float(np.abs(r2).max()))


def exact_plane_wave(d, f, fp, c=1.0, antiderivative=None) -> ExactSolution:
    """Transport solution (v, sigma) = (c f(d.x - ct), d f(d.x - ct))."""
    d = np.asarray(d, dtype=float)
    norm = float(np.linalg.norm(d))
    if abs(norm - 1.0) > 1e-12:
        raise ValueError("direction must be a unit vector")
    d = d / norm
    n = d.size
    c = float(c)

    def phase(pts):
        return pts[:, :n] @ d - c * pts[:, n]

    dd = float(d @ d)
    sol = ExactSolution(
        n=n, c=c,
        v=lambda pts: c * f(phase(pts)),
        sigma=lambda pts: np.outer(f(phase(pts)), d),
        grad_v=lambda pts: c * np.outer(fp(phase(pts)), d),
        v_t=lambda pts: -c ** 2 * fp(phase(pts)),
        sigma_t=lambda pts: -c * np.outer(fp(phase(pts)), d),
        div_sigma=lambda pts: dd * fp(phase(pts)),
        potential=(None if antiderivative is None
                   else (lambda pts: -antiderivative(phase(pts)))),
    )
    return sol


def exact_standing_wave(k, omega_lo, omega_hi, c=1.0) -> ExactSolution:
    """Separable standing wave from the potential U = prod cos . cos(w t).

    U = prod_i cos(k_i pi (x_i - lo_i) / L_i) * cos(omega t) with
    omega = c pi |k / L|; returns (dU/dt, -grad U).  The normal flux
    sigma . n vanishes on the box boundary.
    """
    k = np.asarray(k, dtype=float)
    lo = np.asarray(omega_lo, dtype=float)
    hi = np.asarray(omega_hi, dtype=float)
    if np.all(k == 0):
        raise ValueError("mode indices must not all vanish")
    L = hi - lo
    n = k.size
    kap = k * np.pi / L                      # per-axis wavenumbers
    ksq = float(kap @ kap)
    omega = c * math.sqrt(ksq)

    def parts(pts):
        x = pts[:, :n] - lo
        cosx = np.cos(kap * x)
        sinx = np.sin(kap * x)
        return cosx, sinx, np.cos(omega * pts[:, n]), np.sin(omega * pts[:, n])

    def prod_except(cosx, i):
        out = np.ones(cosx.shape[0])
        for j in range(n):
            if j != i:
                out = out * cosx[:, j]
        return out

    def U(pts):
        cosx, _, cost, _ = parts(pts)
        return np.prod(cosx, axis=1) * cost

    def v(pts):
        cosx, _, _, sint = parts(pts)
        return -omega * np.prod(cosx, axis=1) * sint

    def sigma(pts):
        cosx, sinx, cost, _ = parts(pts)
        cols = [kap[i] * sinx[:, i] * prod_except(cosx, i) * cost
                for i in range(n)]
        return np.column_stack(cols)

    def grad_v(pts):
        cosx, sinx, _, sint = parts(pts)
        cols = [omega * kap[i] * sinx[:, i] * prod_except(cosx, i) * sint
                for i in range(n)]
        return np.column_stack(cols)

    def v_t(pts):
        # omega^2 written as c^2 ksq so the equation residual cancels
        # exactly in floating point
        cosx, _, cost, _ = parts(pts)
        return -(c * c * ksq) * np.prod(cosx, axis=1) * cost

    def sigma_t(pts):
        cosx, sinx, _, sint = parts(pts)
        cols = [-omega * kap[i] * sinx[:, i] * prod_except(cosx, i) * sint
                for i in range(n)]
        return np.column_stack(cols)

    def div_sigma(pts):
        cosx, _, cost, _ = parts(pts)
        return ksq * np.prod(cosx, axis=1) * cost

    return ExactSolution(n=n, c=float(c), v=v, sigma=sigma, grad_v=grad_v,
                         v_t=v_t, sigma_t=sigma_t, div_sigma=div_sigma,
                         potential=U)


def spec_from_exact(exact: ExactSolution, omega_lo, omega_hi, T,
                    bc=DIRICHLET, theta=1.0):
    """ProblemSpec whose data are the traces of an exact solution."""
    from .mesh import ProblemSpec

    n = exact.n

    def v0(x):
        pts = np.column_stack([x, np.zeros(x.shape[0])])
        return exact.v(pts)

    def sigma0(x):
        pts = np.column_stack([x, np.zeros(x.shape[0])])
        return exact.sigma(pts)

    def g_D(pts):
        return exact.v(pts)

    def g_N(pts, n_x):
        return exact.sigma(pts) @ n_x

    spec_obj = ProblemSpec(omega_lo=omega_lo, omega_hi=omega_hi, T=T,
                           c=exact.c, theta=theta, bc=bc,
                           v0=v0, sigma0=sigma0, g_D=g_D, g_N=g_N)

    def g_R(pts, n_x):
        th = spec_obj.theta_at(pts)
        return (th / exact.c) * exact.v(pts) - exact.sigma(pts) @ n_x

    spec_obj.g_R = g_R
    return spec_obj


# ---------------------------------------------------------------------------
# convergence studies
# ---------------------------------------------------------------------------

@dataclass
class ConvergenceTable:
    """Per-level errors with fitted convergence rates.

    Rates are least-squares slopes of log(error) against log(h) over the
    last max(3, levels-1) rows — the first level may be preasymptotic.
    When every error in a column is at rounding level the rate is
    reported as the string 'exact'.
    """

    family: str
    p: int
    rows: list = dc_field(default_factory=list)
    rates: dict = dc_field(default_factory=dict)

    COLUMNS = ("level", "h", "dofs", "err_dg", "err_l2", "err_energy",
               "t_assemble", "t_solve")

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(",".join(self.COLUMNS) + "\n")
            for row in self.rows:
                cells = []
                for col in self.COLUMNS:
                    val = row[col]
                    if col in ("level", "dofs"):
                        cells.append(str(int(val)))
                    else:
                        cells.append(f"{val:.12g}")
                fh.write(",".join(cells) + "\n")

    def rates_json_dict(self) -> dict:
        return {"family": self.family, "p": self.p, **self.rates}

    def write_rates_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.rates_json_dict(), fh, indent=1)


def fit_rate(hs, errs, scale=1.0):
    """Log-log least-squares rate over the trailing window.

    Returns 'exact' when the errors sit at rounding level relative to
    ``scale`` (quasi-optimality with zero best-approximation error).
    """
    hs = np.asarray(hs, dtype=float)
    errs = np.asarray(errs, dtype=float)
    if np.all(errs <= 1e-8 * max(scale, 1e-30)):
        return "exact"
    window = min(len(hs), max(3, len(hs) - 1))
    hs = hs[-window:]
    errs = np.maximum(errs[-window:], 1e-300)
    slope = np.polyfit(np.log(hs), np.log(errs), 1)[0]
    return float(slope)


def convergence_study(spec, exact, family, p, meshes, flux_policy="default",
                      solver=solve_sequential, seed=0) -> ConvergenceTable:
    """Assemble/solve on a mesh sequence and fit error rates.

    ``flux_policy`` is 'default', 'graded', or a callable
    (mesh, spec) -> FluxParams.  Errors per level: the DG norm of the
    error field, the weighted L2(Q) error and the energy of the error on
    the final cap.
    """
    if len(meshes) < 3:
        raise AnalysisError("a convergence study needs at least 3 mesh levels")

    if callable(flux_policy):
        make_flux = flux_policy
    elif flux_policy == "default":
        make_flux = default_flux_params
    elif flux_policy == "graded":
        make_flux = graded_flux_params
    else:
        raise ValueError(f"unknown flux policy {flux_policy!r}")

    table = ConvergenceTable(family=family, p=int(p))
    exact_scale = None
    hs, dgs, l2s, ens = [], [], [], []

    for level, mesh in enumerate(meshes):
        flux = make_flux(mesh, spec)
        t0 = time.perf_counter()
        system = assemble_system(mesh, spec, family, p, flux, seed=seed)
        t1 = time.perf_counter()
        sol = solver(system)
        t2 = time.perf_counter()

        nodes = max(system.p_map) + 4
        err_field = DifferenceField(_as_field(exact, mesh),
                                    _as_field(sol, mesh))
        err_dg = dg_norm(err_field, mesh, flux, spec=spec, nodes=nodes)
        err_l2 = l2_error(sol, exact, mesh, nodes=nodes)
        final = mesh.faces_of_kind(FINAL)
        err_en = math.sqrt(max(energy(mesh, err_field, final, side="past",
                                      nodes=nodes), 0.0))
        if exact_scale is None:
            exact_scale = l2_norm(exact, mesh, nodes=nodes)

        h = max(e.diameter() for e in mesh.elements)
        if hs and h >= hs[-1]:
            raise AnalysisError("mesh sequence must refine: h not decreasing")
        hs.append(h)
        dgs.append(err_dg)
        l2s.append(err_l2)
        ens.append(err_en)
        table.rows.append({
            "level": level, "h": h, "dofs": system.total,
            "err_dg": err_dg, "err_l2": err_l2, "err_energy": err_en,
            "t_assemble": t1 - t0, "t_solve": t2 - t1,
        })

    table.rates = {
        "rate_dg": fit_rate(hs, dgs, exact_scale),
        "rate_l2": fit_rate(hs, l2s, exact_scale),
        "rate_energy": fit_rate(hs, ens, exact_scale),
    }
    return table


# ---------------------------------------------------------------------------
# dissipation audit
# ---------------------------------------------------------------------------

def _check_homogeneous(mesh, spec):
    for f in mesh.faces:
        if f.kind not in BOUNDARY_KINDS:
            continue
        pts, _ = _face_rule(f, 4)
        g = spec.eval_boundary(f.kind, pts, f.n_x)
        if np.abs(g).max() > 1e-12:
            raise AnalysisError(
                f"dissipation audit requires homogeneous boundary data; "
                f"face {f.id} ({f.kind}) has |g| = {np.abs(g).max():.3e}"
            )


def dissipation_audit(sol, mesh, spec, flux=None, nodes=None) -> dict:
    """Front-by-front energy balance of a discrete solution.

    With homogeneous boundary data the energies of successive causal
    fronts (front 0 carrying the prescribed initial data) must decrease,
    and the squared DG norm splits into E(0) + E(T) + D with D the
    dissipation from jumps and boundary traces.  Returns a report with
    the per-front energies, the dissipation breakdown and both checks.
    """
    _check_homogeneous(mesh, spec)
    if flux is None:
        flux = default_flux_params(mesh, spec)
    if nodes is None:
        nodes = max(sol.p_map) + 3

    levels = causal_order(mesh)
    fronts = causal_fronts(mesh, levels)

    # Front energies with upwind traces: on initial faces the upwind
    # trace is the prescribed data (tent fronts keep initial faces until
    # a tent consumes them), elsewhere the past-element trace.
    data_field = InitialDataField(spec)

    def front_energy(front):
        init = [fid for fid in front if mesh.faces[fid].kind == INITIAL]
        rest = [fid for fid in front if mesh.faces[fid].kind != INITIAL]
        val = 0.0
        if init:
            val += energy(mesh, data_field, init, side="future",
                          nodes=nodes + 2)
        if rest:
            val += energy(mesh, sol, rest, side="past", nodes=nodes)
        return val

    energies = [front_energy(front) for front in fronts]

    space_vol = float(np.prod(np.asarray(mesh.omega_hi)
                              - np.asarray(mesh.omega_lo)))
    for j, front in enumerate(fronts):
        cover = sum(mesh.faces[i].measure * mesh.faces[i].n_t for i in front)
        if abs(cover - space_vol) > 1e-10 * max(space_vol, 1.0):
            raise AnalysisError(f"front {j} does not cover the domain")

    drops = np.diff(energies)
    tol = 1e-10 * max(energies[0], 1e-30)
    monotone = bool(np.all(drops <= tol))

    # DG-norm decomposition: E(0) and E(T) with the discrete traces
    terms = _dg_terms(_as_field(sol, mesh), mesh, flux, nodes, spec=spec)
    dg_sq = sum(terms.values())
    e0_disc = energy(mesh, sol, fronts[0], side="future", nodes=nodes)
    eT_disc = energy(mesh, sol, fronts[-1], side="past", nodes=nodes)
    dissipation = (terms["space"] + terms["time"] + terms["dirichlet"]
                   + terms["neumann"] + terms["robin"])
    identity_residual = abs(dg_sq - (e0_disc + eT_disc + dissipation)) \
        / max(dg_sq, 1e-30)

    return {
        "fronts": [{"level": j, "faces": fronts[j], "energy": energies[j]}
                   for j in range(len(fronts))],
        "energies": energies,
        "monotone": monotone,
        "max_rise": float(drops.max()) if drops.size else 0.0,
        "tolerance": tol,
        "dg_norm_sq": dg_sq,
        "energy_initial_discrete": e0_disc,
        "energy_final": eT_disc,
        "dissipation": dissipation,
        "dissipation_terms": {k: terms[k] for k in
                              ("space", "time", "dirichlet", "neumann",
                               "robin")},
        "identity_residual": identity_residual,
    }
