"""Skeleton-only assembly of the space-time DG system.

Because every basis function satisfies the wave equations exactly inside
its element, the volume integrals of the variational form vanish and the
whole operator lives on the mesh skeleton.  Per face kind:

- space-like faces take upwind traces from the past element, so they
  couple strictly past -> future;
- time-like faces use mean values plus alpha/beta penalty terms and
  couple both neighbors;
- the final cap carries the time-boundary mass term;
- lateral boundary faces weakly impose the Dirichlet / Neumann / Robin
  condition, and together with the initial cap feed the right-hand side.

Blocks are dense per element pair and stored in a map keyed by
``(row element, column element)``; with elements numbered in causal
order the matrix is lower block-triangular up to coupling inside a
level.  All integrands are polynomial, so the tensor Gauss rules used
here are exact; boundary data are integrated by the same rules and
non-polynomial data incur the corresponding quadrature error.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from ._quadrature import gauss_01_tensor
from .mesh import (BOUNDARY_KINDS, DIRICHLET, FINAL, INITIAL, NEUMANN, ROBIN,
                   SPACE, TIME, SpaceTimeMesh)
from .trefftz_basis import TrefftzFunction, build_basis, default_directions


class AssemblyError(Exception):
    pass


# ---------------------------------------------------------------------------
# flux parameters
# ---------------------------------------------------------------------------

@dataclass
class FluxParams:
    """Penalty / splitting coefficients of the numerical fluxes.

    ``alpha`` (units 1/speed) lives on time-like and Dirichlet faces,
    ``beta`` (units of speed) on time-like and Neumann faces, ``delta``
    on Robin faces.  All alpha/beta values must be positive and
    0 < delta < 1.
    """

    alpha: dict = field(default_factory=dict)   # face id -> value
    beta: dict = field(default_factory=dict)    # face id -> value
    delta: float = 0.5

    def __post_init__(self):
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie strictly between 0 and 1")
        for name, table in (("alpha", self.alpha), ("beta", self.beta)):
            for fid, val in table.items():
                if not val > 0.0:
                    raise ValueError(f"{name}[{fid}] = {val} is not positive")


def default_flux_params(mesh: SpaceTimeMesh, spec) -> FluxParams:
    """Speed-based fluxes: alpha = 1/c, beta = c, delta = 1/2.

    The face speed is the minus-side element speed.
    """
    alpha = {}
    beta = {}
    for f in mesh.faces:
        c = mesh.elements[f.minus].c if f.minus is not None else f.c
        if f.kind == TIME:
            alpha[f.id] = 1.0 / c
            beta[f.id] = c
        elif f.kind == DIRICHLET:
            alpha[f.id] = 1.0 / c
        elif f.kind == NEUMANN:
            beta[f.id] = c
    return FluxParams(alpha=alpha, beta=beta, delta=0.5)


def graded_flux_params(mesh: SpaceTimeMesh, spec, a=1.0, b=1.0) -> FluxParams:
    """Mesh-graded fluxes alpha = h_T a / (c_- h), beta = c_+ h_T b / h.

    Here h is the smaller space-diameter of the elements adjacent to the
    face, c_- / c_+ the smaller / larger adjacent speed and h_T the
    largest element space-diameter in the mesh.  ``a`` and ``b`` may be
    positive constants or functions of the face centroid.  Requires
    product-in-time (box) elements.
    """
    if any(e.kind != "box" for e in mesh.elements):
        raise AssemblyError("graded flux parameters need product-in-time "
                            "(box) elements")

    def value(f, fn):
        if callable(fn):
            val = float(fn(f.centroid()))
        else:
            val = float(fn)
        if val <= 0:
            raise ValueError("grading functions must be positive")
        return val

    h_T = max(e.space_diameter() for e in mesh.elements)
    alpha = {}
    beta = {}
    for f in mesh.faces:
        if f.kind not in (TIME, DIRICHLET, NEUMANN):
            continue
        adj = [mesh.elements[e] for e in (f.minus, f.plus) if e is not None]
        h = min(e.space_diameter() for e in adj)
        c_lo = min(e.c for e in adj)
        c_hi = max(e.c for e in adj)
        if f.kind in (TIME, DIRICHLET):
            alpha[f.id] = h_T * value(f, a) / (c_lo * h)
        if f.kind in (TIME, NEUMANN):
            beta[f.id] = c_hi * h_T * value(f, b) / h
    return FluxParams(alpha=alpha, beta=beta, delta=0.5)


# ---------------------------------------------------------------------------
# face quadrature
# ---------------------------------------------------------------------------

@dataclass
class QuadratureRule:
    face: int
    points: np.ndarray    # (m, n+1) space-time nodes on the face
    weights: np.ndarray   # (m,) positive, summing to the face measure


def face_quadrature(face, p_max: int) -> QuadratureRule:
    """Tensor Gauss-Legendre rule with p_max+2 nodes per face dimension.

    Exact for polynomials of degree <= 2 p_max + 3 along each direction,
    which covers products of two degree-p_max traces on the affine face.
    """
    m = p_max + 2
    u, w = gauss_01_tensor(face.dim, m)
    pts = face.origin[None, :] + u @ face.axes
    return QuadratureRule(face=face.id, points=pts,
                          weights=w * face.measure)


# ---------------------------------------------------------------------------
# block system
# ---------------------------------------------------------------------------

@dataclass
class BlockSystem:
    """Assembled operator: dense per-element blocks in a sparsity map."""

    mesh: SpaceTimeMesh
    family: str
    p_map: list
    basis: list                    # per element: list of TrefftzFunction
    offsets: np.ndarray            # (n_el + 1,) unknown layout
    blocks: dict                   # (row eid, col eid) -> dense array
    rhs: np.ndarray

    @property
    def total(self) -> int:
        return int(self.offsets[-1])

    def size(self, eid: int) -> int:
        return int(self.offsets[eid + 1] - self.offsets[eid])

    def slice(self, eid: int) -> slice:
        return slice(int(self.offsets[eid]), int(self.offsets[eid + 1]))

    def block(self, row: int, col: int) -> np.ndarray:
        blk = self.blocks.get((row, col))
        if blk is None:
            return np.zeros((self.size(row), self.size(col)))
        return blk

    def to_dense(self) -> np.ndarray:
        A = np.zeros((self.total, self.total))
        for (r, c), blk in self.blocks.items():
            A[self.slice(r), self.slice(c)] += blk
        return A

    def to_coo(self):
        rows, cols, vals = [], [], []
        for (r, c) in sorted(self.blocks):
            blk = self.blocks[(r, c)]
            r0 = int(self.offsets[r])
            c0 = int(self.offsets[c])
            i, j = np.nonzero(blk)
            rows.append(i + r0)
            cols.append(j + c0)
            vals.append(blk[i, j])
        if not rows:
            return (np.zeros(0, dtype=int),) * 2 + (np.zeros(0),)
        return np.concatenate(rows), np.concatenate(cols), np.concatenate(vals)

    def matvec(self, x: np.ndarray) -> np.ndarray:
        y = np.zeros(self.total)
        for (r, c), blk in self.blocks.items():
            y[self.slice(r)] += blk @ x[self.slice(c)]
        return y

    def dump_coo(self, matrix_path, layout_path=None) -> None:
        """Coordinate-triplet text dump plus a JSON layout sidecar."""
        rows, cols, vals = self.to_coo()
        with open(matrix_path, "w") as fh:
            fh.write(f"% {self.total} {self.total} {len(vals)}\n")
            for r, c, v in zip(rows, cols, vals):
                fh.write(f"{r} {c} {v:.17g}\n")
        if layout_path is not None:
            layout = {
                "total": self.total,
                "family": self.family,
                "elements": [
                    {"id": e, "offset": int(self.offsets[e]),
                     "size": self.size(e), "p": int(self.p_map[e])}
                    for e in range(len(self.mesh.elements))
                ],
            }
            with open(layout_path, "w") as fh:
                json.dump(layout, fh, indent=1)


# ---------------------------------------------------------------------------
# vectorized basis traces
# ---------------------------------------------------------------------------

class _TraceEvaluator:
    """Evaluates v and sigma of a whole element basis at many points.

    All component polynomials are stacked into a single coefficient
    matrix over the union of their monomials, so one matrix product per
    face yields every trace.
    """

    def __init__(self, basis, n):
        self.n = n
        self.K = len(basis)
        cols = {}
        polys = []
        for fn in basis:
            polys.append(fn.v)
            polys.extend(fn.sigma)
        for poly in polys:
            for key in poly.terms:
                if key not in cols:
                    cols[key] = len(cols)
        self.exps = np.array([list(k.alpha) + [k.alpha_t] for k in cols],
                             dtype=np.int64).reshape(len(cols), n + 1)
        C = np.zeros((len(polys), len(cols)))
        for row, poly in enumerate(polys):
            for key, coef in poly.terms.items():
                C[row, cols[key]] = coef
        self.C = C

    def traces(self, pts):
        """Values at pts (m, n+1): returns V (K, m) and S (K, n, m)."""
        mono = np.prod(pts[:, None, :] ** self.exps[None, :, :], axis=2)
        vals = (self.C @ mono.T).reshape(self.K, self.n + 1, -1)
        return vals[:, 0, :], vals[:, 1:, :]


def _quad_w(w, A, B):
    """sum_q w_q A[i, q] B[j, q] -> (i, j)."""
    return (A * w) @ B.T


# ---------------------------------------------------------------------------
# system assembly
# ---------------------------------------------------------------------------

def _normalize_p(p, n_el):
    if isinstance(p, (int, np.integer)):
        return [int(p)] * n_el
    if isinstance(p, dict):
        return [int(p[e]) for e in range(n_el)]
    out = [int(v) for v in p]
    if len(out) != n_el:
        raise ValueError("degree map length does not match element count")
    return out


def assemble_system(mesh: SpaceTimeMesh, spec, family: str, p,
                    flux: FluxParams, directions=None, seed: int = 0,
                    quad_bump: int = 0) -> BlockSystem:
    """Assemble the DG bilinear form and right-hand side.

    ``p`` is a uniform degree or a per-element map; ``family`` selects
    the full polynomial Trefftz space ('Tp') or the plane-wave space
    ('Wp', directions auto-generated when not supplied).
    """
    n = mesh.n
    n_el = len(mesh.elements)
    p_map = _normalize_p(p, n_el)
    p_max = max(p_map)

    if family == "Wp" and directions is None:
        directions = default_directions(p_max + 1, n, seed=seed)

    basis = []
    for e in mesh.elements:
        basis.append(build_basis(family, p_map[e.id], n, e.frame(),
                                 dirs=directions, seed=seed))

    sizes = np.array([len(b) for b in basis], dtype=np.int64)
    offsets = np.concatenate(([0], np.cumsum(sizes)))
    ev = [_TraceEvaluator(b, n) for b in basis]

    blocks: dict = {}
    rhs = np.zeros(int(offsets[-1]))

    def acc(row, col, M):
        key = (row, col)
        if key in blocks:
            blocks[key] += M
        else:
            blocks[key] = M

    for f in mesh.faces:
        rule = face_quadrature(f, p_max + quad_bump)
        pts, w = rule.points, rule.weights
        n_x, n_t = f.n_x, f.n_t
        c = f.c

        if f.kind == SPACE:
            Vm, Sm = ev[f.minus].traces(pts)
            SmN = np.einsum("knq,n->kq", Sm, n_x)
            for row, sign in ((f.minus, 1.0), (f.plus, -1.0)):
                if row is None:
                    continue
                Vr, Sr = (Vm, Sm) if row == f.minus else ev[row].traces(pts)
                SrN = SmN if row == f.minus else np.einsum("knq,n->kq", Sr, n_x)
                M = (n_t / c ** 2) * _quad_w(w, Vr, Vm)
                M += n_t * np.einsum("q,inq,jnq->ij", w, Sr, Sm)
                M += _quad_w(w, SrN, Vm)     # v^- (tau . n_x)
                M += _quad_w(w, Vr, SmN)     # (sigma^- . n_x) w
                acc(row, f.minus, sign * M)

        elif f.kind == FINAL:
            Vm, Sm = ev[f.minus].traces(pts)
            M = (1.0 / c ** 2) * _quad_w(w, Vm, Vm)
            M += np.einsum("q,inq,jnq->ij", w, Sm, Sm)
            acc(f.minus, f.minus, M)

        elif f.kind == INITIAL:
            Vp, Sp = ev[f.plus].traces(pts)
            v0 = spec.eval_v0(pts[:, :n])
            s0 = spec.eval_sigma0(pts[:, :n])
            r = Vp @ (w * v0 / c ** 2)
            r += np.einsum("inq,qn->i", Sp, w[:, None] * s0)
            rhs[offsets[f.plus]:offsets[f.plus + 1]] += r

        elif f.kind == TIME:
            try:
                al = flux.alpha[f.id]
                be = flux.beta[f.id]
            except KeyError:
                raise AssemblyError(f"missing flux parameters on face {f.id}")
            tr = {}
            for eid in (f.minus, f.plus):
                V, S = ev[eid].traces(pts)
                tr[eid] = (V, np.einsum("knq,n->kq", S, n_x))
            for row, s_r in ((f.minus, 1.0), (f.plus, -1.0)):
                Vr, SrN = tr[row]
                for col, s_c in ((f.minus, 1.0), (f.plus, -1.0)):
                    Vc, ScN = tr[col]
                    M = 0.5 * s_r * _quad_w(w, SrN, Vc)   # {{v}} [[tau]]_N
                    M += 0.5 * s_r * _quad_w(w, Vr, ScN)  # {{sigma}} . [[w]]_N
                    M += al * s_r * s_c * _quad_w(w, Vr, Vc)
                    M += be * s_r * s_c * _quad_w(w, SrN, ScN)
                    acc(row, col, M)

        elif f.kind == DIRICHLET:
            al = flux.alpha.get(f.id)
            if al is None:
                raise AssemblyError(f"missing flux parameters on face {f.id}")
            Vm, Sm = ev[f.minus].traces(pts)
            SmN = np.einsum("knq,n->kq", Sm, n_x)
            M = _quad_w(w, Vm, SmN)          # (sigma . n) w
            M += al * _quad_w(w, Vm, Vm)
            acc(f.minus, f.minus, M)
            g = spec.eval_boundary(DIRICHLET, pts, n_x)
            rhs[offsets[f.minus]:offsets[f.minus + 1]] += \
                Vm @ (w * g * al) - SmN @ (w * g)

        elif f.kind == NEUMANN:
            be = flux.beta.get(f.id)
            if be is None:
                raise AssemblyError(f"missing flux parameters on face {f.id}")
            Vm, Sm = ev[f.minus].traces(pts)
            SmN = np.einsum("knq,n->kq", Sm, n_x)
            M = _quad_w(w, SmN, Vm)          # v (tau . n)
            M += be * _quad_w(w, SmN, SmN)
            acc(f.minus, f.minus, M)
            g = spec.eval_boundary(NEUMANN, pts, n_x)
            rhs[offsets[f.minus]:offsets[f.minus + 1]] += \
                SmN @ (w * g * be) - Vm @ (w * g)

        elif f.kind == ROBIN:
            de = flux.delta
            th = spec.theta_at(pts)
            Vm, Sm = ev[f.minus].traces(pts)
            SmN = np.einsum("knq,n->kq", Sm, n_x)
            M = _quad_w(w * (1 - de) * th / c, Vm, Vm)
            M += (1 - de) * _quad_w(w, SmN, Vm)     # v (tau . n)
            M += de * _quad_w(w, Vm, SmN)           # (sigma . n) w
            M += _quad_w(w * de * c / th, SmN, SmN)
            acc(f.minus, f.minus, M)
            g = spec.eval_boundary(ROBIN, pts, n_x)
            rhs[offsets[f.minus]:offsets[f.minus + 1]] += \
                Vm @ (w * g * (1 - de)) - SmN @ (w * g * de * c / th)

        else:
            raise AssemblyError(f"face {f.id}: unknown kind {f.kind!r}")

    return BlockSystem(mesh=mesh, family=family, p_map=p_map, basis=basis,
                       offsets=offsets, blocks=blocks, rhs=rhs)


# ---------------------------------------------------------------------------
# matrix-free evaluation of the variational form (assembly oracle)
# ---------------------------------------------------------------------------

def _field_traces(field, eid, pts, n):
    fn = field[eid] if eid is not None else None
    if fn is None:
        return np.zeros(pts.shape[0]), np.zeros((pts.shape[0], n))
    v = fn.eval_v(pts)
    s = fn.eval_sigma(pts)
    return v, s


def _field_degree(field):
    deg = 0
    for fn in field:
        if fn is None:
            continue
        deg = max(deg, fn.v.degree, *(s.degree for s in fn.sigma))
    return deg


def apply_bilinear(mesh: SpaceTimeMesh, spec, flux: FluxParams,
                   u, w_field, quad_bump: int = 0) -> float:
    """Evaluate the variational form A(u; w) directly by quadrature.

    ``u`` and ``w_field`` are piecewise fields: sequences indexed by
    element id holding a TrefftzFunction (or None for zero).  No matrix
    is formed; this is the independent check route for assemble_system.
    """
    n = mesh.n
    p_eff = max(_field_degree(u), _field_degree(w_field))
    total = 0.0

    for f in mesh.faces:
        rule = face_quadrature(f, p_eff + quad_bump)
        pts, wq = rule.points, rule.weights
        n_x, n_t = f.n_x, f.n_t
        c = f.c

        if f.kind == SPACE:
            vm, sm = _field_traces(u, f.minus, pts, n)
            wm, tm = _field_traces(w_field, f.minus, pts, n)
            wp, tp = _field_traces(w_field, f.plus, pts, n)
            jump_w_t = (wm - wp) * n_t
            jump_t_t = (tm - tp) * n_t
            jump_t_N = (tm - tp) @ n_x
            jump_w_N = np.outer(wm - wp, n_x)
            integrand = vm * jump_w_t / c ** 2
            integrand += np.einsum("qn,qn->q", sm, jump_t_t)
            integrand += vm * jump_t_N
            integrand += np.einsum("qn,qn->q", sm, jump_w_N)
            total += float(wq @ integrand)

        elif f.kind == FINAL:
            vm, sm = _field_traces(u, f.minus, pts, n)
            wm, tm = _field_traces(w_field, f.minus, pts, n)
            integrand = vm * wm / c ** 2 + np.einsum("qn,qn->q", sm, tm)
            total += float(wq @ integrand)

        elif f.kind == INITIAL:
            continue   # data only; handled by apply_linear

        elif f.kind == TIME:
            al = flux.alpha[f.id]
            be = flux.beta[f.id]
            vm, sm = _field_traces(u, f.minus, pts, n)
            vp, sp = _field_traces(u, f.plus, pts, n)
            wm, tm = _field_traces(w_field, f.minus, pts, n)
            wp, tp = _field_traces(w_field, f.plus, pts, n)
            mean_v = 0.5 * (vm + vp)
            mean_s = 0.5 * (sm + sp)
            jump_tau_N = (tm - tp) @ n_x
            jump_w = wm - wp
            jump_v = vm - vp
            jump_sig_N = (sm - sp) @ n_x
            integrand = mean_v * jump_tau_N
            integrand += (mean_s @ n_x) * jump_w
            integrand += al * jump_v * jump_w
            integrand += be * jump_sig_N * jump_tau_N
            total += float(wq @ integrand)

        elif f.kind == DIRICHLET:
            al = flux.alpha[f.id]
            vm, sm = _field_traces(u, f.minus, pts, n)
            wm, tm = _field_traces(w_field, f.minus, pts, n)
            integrand = (sm @ n_x) * wm + al * vm * wm
            total += float(wq @ integrand)

        elif f.kind == NEUMANN:
            be = flux.beta[f.id]
            vm, sm = _field_traces(u, f.minus, pts, n)
            wm, tm = _field_traces(w_field, f.minus, pts, n)
            integrand = vm * (tm @ n_x) + be * (sm @ n_x) * (tm @ n_x)
            total += float(wq @ integrand)

        elif f.kind == ROBIN:
            de = flux.delta
            th = spec.theta_at(pts)
            vm, sm = _field_traces(u, f.minus, pts, n)
            wm, tm = _field_traces(w_field, f.minus, pts, n)
            sn = sm @ n_x
            tn = tm @ n_x
            integrand = (1 - de) * (th / c) * vm * wm
            integrand += (1 - de) * vm * tn
            integrand += de * sn * wm
            integrand += (de * c / th) * sn * tn
            total += float(wq @ integrand)

    return total


def apply_linear(mesh: SpaceTimeMesh, spec, flux: FluxParams, w_field,
                 quad_bump: int = 0) -> float:
    """Evaluate the load functional l(w) by quadrature (no matrix)."""
    n = mesh.n
    p_eff = _field_degree(w_field)
    total = 0.0

    for f in mesh.faces:
        if f.kind not in (INITIAL, DIRICHLET, NEUMANN, ROBIN):
            continue
        rule = face_quadrature(f, p_eff + quad_bump)
        pts, wq = rule.points, rule.weights
        n_x = f.n_x
        c = f.c

        if f.kind == INITIAL:
            wp, tp = _field_traces(w_field, f.plus, pts, n)
            v0 = spec.eval_v0(pts[:, :n])
            s0 = spec.eval_sigma0(pts[:, :n])
            integrand = v0 * wp / c ** 2 + np.einsum("qn,qn->q", s0, tp)
        elif f.kind == DIRICHLET:
            al = flux.alpha[f.id]
            wm, tm = _field_traces(w_field, f.minus, pts, n)
            g = spec.eval_boundary(DIRICHLET, pts, n_x)
            integrand = g * (al * wm - tm @ n_x)
        elif f.kind == NEUMANN:
            be = flux.beta[f.id]
            wm, tm = _field_traces(w_field, f.minus, pts, n)
            g = spec.eval_boundary(NEUMANN, pts, n_x)
            integrand = g * (be * (tm @ n_x) - wm)
        else:
            de = flux.delta
            th = spec.theta_at(pts)
            wm, tm = _field_traces(w_field, f.minus, pts, n)
            g = spec.eval_boundary(ROBIN, pts, n_x)
            integrand = g * ((1 - de) * wm - (de * c / th) * (tm @ n_x))

        total += float(wq @ integrand)

    return total
