"""Causal solution of the assembled block system.

Space-like faces couple strictly past to future, so the block matrix is
lower block-triangular with respect to the causal levels of the mesh:
slab meshes are solved one slab at a time (each slab is a single dense
solve, since time-like faces couple the elements inside it), and tent
meshes march element by element.  A monolithic direct solve of the full
matrix is kept as the reference path.

Local factorizations are dense LU with partial pivoting; the ratio of
the largest to the smallest pivot magnitude serves as a cheap condition
estimate.  Ill-conditioning is the known failure mode of Trefftz bases,
so estimates above ``COND_LIMIT`` abort with the offending element
rather than silently regularizing.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg

from .assembly import BlockSystem, _TraceEvaluator
from .mesh import causal_order
from .trefftz_basis import TrefftzFunction

#: Local/global condition estimates above this abort the solve.
COND_LIMIT = 1e14
#: Monolithic solves switch from dense LU to sparse LU above this size.
DENSE_LIMIT = 5000
#: Hard guard on monolithic problem size (desk-scale artifact).
SIZE_GUARD = 200_000


class SolverError(Exception):
    pass


class ConditioningError(SolverError):
    def __init__(self, element: int, cond: float, where: str = ""):
        self.element = element
        self.cond = cond
        suffix = f" ({where})" if where else ""
        super().__init__(
            f"element {element}: local condition estimate {cond:.3e} "
            f"exceeds {COND_LIMIT:.0e}{suffix}"
        )


def _lu_with_cond(A):
    with warnings.catch_warnings():
        # exact singularity surfaces as cond = inf below; no need to warn
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(A, check_finite=False)
    d = np.abs(np.diag(lu))
    if d.size == 0:
        return (lu, piv), 1.0
    dmin = d.min()
    cond = np.inf if dmin == 0.0 else float(d.max() / dmin)
    return (lu, piv), cond


@dataclass
class DiscreteSolution:
    """Per-element coefficient vectors over a basis, evaluable anywhere."""

    mesh: object
    family: str
    p_map: list
    basis: list
    coeffs: list                   # per element: (K_e,) arrays
    conditions: list               # per element local condition estimate
    _evals: dict = field(default_factory=dict, repr=False)

    def coeff_vector(self) -> np.ndarray:
        return np.concatenate([np.asarray(c) for c in self.coeffs]) \
            if self.coeffs else np.zeros(0)

    def eval_on(self, eid: int, points) -> tuple:
        """Values (v, sigma) of the discrete field on element eid."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        ev = self._evals.get(eid)
        if ev is None:
            ev = _TraceEvaluator(self.basis[eid], self.mesh.n)
            self._evals[eid] = ev
        V, S = ev.traces(pts)
        c = np.asarray(self.coeffs[eid])
        return c @ V, np.einsum("k,knq->qn", c, S)

    def evaluate(self, point) -> tuple:
        """(v, sigma) at a space-time point (past side on interfaces)."""
        eid = self.mesh.locate(point)
        v, s = self.eval_on(eid, np.asarray(point, dtype=float)[None, :])
        return float(v[0]), s[0]

    def element_field(self, eid: int) -> TrefftzFunction:
        """The discrete field on one element as a single Trefftz function."""
        fns = self.basis[eid]
        v = fns[0].v * float(self.coeffs[eid][0])
        sig = [q * float(self.coeffs[eid][0]) for q in fns[0].sigma]
        for k in range(1, len(fns)):
            ck = float(self.coeffs[eid][k])
            v = v + fns[k].v * ck
            sig = [s + q * ck for s, q in zip(sig, fns[k].sigma)]
        return TrefftzFunction(v=v, sigma=tuple(sig), c=fns[0].c)

    def as_field(self) -> list:
        return [self.element_field(e) for e in range(len(self.basis))]

    def to_json_dict(self) -> dict:
        return {
            "family": self.family,
            "n": self.mesh.n,
            "mesh_kind": self.mesh.kind,
            "n_elements": len(self.basis),
            "elements": [
                {"id": e, "p": int(self.p_map[e]),
                 "condition": (None if self.conditions[e] is None
                               else float(self.conditions[e])),
                 "coefficients": [float(v) for v in self.coeffs[e]]}
                for e in range(len(self.basis))
            ],
        }

    def dumps(self, **kw) -> str:
        return json.dumps(self.to_json_dict(), **kw)


def evaluate(sol: DiscreteSolution, point) -> tuple:
    return sol.evaluate(point)


# ---------------------------------------------------------------------------
# sequential (causal) solver
# ---------------------------------------------------------------------------

def solve_sequential(system: BlockSystem, levels=None) -> DiscreteSolution:
    """March through the causal levels, solving each as one local system.

    Past coupling enters through the right-hand side; coupling inside a
    level (time-like faces of a slab) is solved as a single dense block.
    Tent-mesh levels have no internal coupling and decompose into
    per-element solves.
    """
    mesh = system.mesh
    if levels is None:
        levels = causal_order(mesh)

    n_el = len(mesh.elements)
    level_of = {}
    for li, level in enumerate(levels):
        for e in level:
            level_of[e] = li
    if len(level_of) != n_el:
        raise SolverError("levels do not cover every element")
    for (r, c) in system.blocks:
        if level_of[r] < level_of[c]:
            raise SolverError(
                f"levels inconsistent with sparsity: block ({r}, {c}) "
                f"couples level {level_of[c]} into earlier level {level_of[r]}"
            )

    by_row = {}
    for (r, c), blk in system.blocks.items():
        by_row.setdefault(r, []).append((c, blk))

    x = np.zeros(system.total)
    conditions = [None] * n_el

    for level in levels:
        level = sorted(level)
        members = set(level)
        coupled = any(c in members and c != r
                      for r in level for (c, _) in by_row.get(r, ()))

        def reduced_rhs(e):
            r = system.rhs[system.slice(e)].copy()
            for (c, blk) in by_row.get(e, ()):
                if c not in members:
                    r -= blk @ x[system.slice(c)]
            return r

        if not coupled:
            for e in level:
                A = system.blocks.get((e, e))
                if A is None:
                    raise SolverError(f"element {e} has no diagonal block")
                fac, cond = _lu_with_cond(A)
                if not np.isfinite(cond) or cond > COND_LIMIT:
                    raise ConditioningError(e, cond)
                conditions[e] = cond
                x[system.slice(e)] = scipy.linalg.lu_solve(
                    fac, reduced_rhs(e), check_finite=False)
        else:
            sizes = [system.size(e) for e in level]
            offs = np.concatenate(([0], np.cumsum(sizes)))
            local = {e: i for i, e in enumerate(level)}
            A = np.zeros((int(offs[-1]), int(offs[-1])))
            b = np.zeros(int(offs[-1]))
            for i, e in enumerate(level):
                b[offs[i]:offs[i + 1]] = reduced_rhs(e)
                for (c, blk) in by_row.get(e, ()):
                    if c in members:
                        j = local[c]
                        A[offs[i]:offs[i + 1], offs[j]:offs[j + 1]] += blk
            fac, cond = _lu_with_cond(A)
            if not np.isfinite(cond) or cond > COND_LIMIT:
                raise ConditioningError(level[0], cond,
                                        f"level of {len(level)} elements")
            sol = scipy.linalg.lu_solve(fac, b, check_finite=False)
            for i, e in enumerate(level):
                x[system.slice(e)] = sol[offs[i]:offs[i + 1]]
                conditions[e] = cond

    coeffs = [x[system.slice(e)].copy() for e in range(n_el)]
    return DiscreteSolution(mesh=mesh, family=system.family,
                            p_map=system.p_map, basis=system.basis,
                            coeffs=coeffs, conditions=conditions)


# ---------------------------------------------------------------------------
# monolithic reference solver
# ---------------------------------------------------------------------------

def solve_monolithic(system: BlockSystem) -> DiscreteSolution:
    """Direct solve of the full block matrix (dense below DENSE_LIMIT)."""
    total = system.total
    if total > SIZE_GUARD:
        raise SolverError(
            f"monolithic solve refused for {total} unknowns "
            f"(guard {SIZE_GUARD})"
        )
    n_el = len(system.mesh.elements)

    if total <= DENSE_LIMIT:
        A = system.to_dense()
        fac, cond = _lu_with_cond(A)
        if not np.isfinite(cond) or cond > COND_LIMIT:
            raise ConditioningError(0, cond, "monolithic dense factorization")
        x = scipy.linalg.lu_solve(fac, system.rhs, check_finite=False)
    else:
        rows, cols, vals = system.to_coo()
        A = scipy.sparse.csc_matrix((vals, (rows, cols)), shape=(total, total))
        lu = scipy.sparse.linalg.splu(A)
        d = np.abs(lu.U.diagonal())
        cond = np.inf if d.min() == 0.0 else float(d.max() / d.min())
        if not np.isfinite(cond) or cond > COND_LIMIT:
            raise ConditioningError(0, cond, "monolithic sparse factorization")
        x = lu.solve(system.rhs)

    coeffs = [x[system.slice(e)].copy() for e in range(n_el)]
    return DiscreteSolution(mesh=system.mesh, family=system.family,
                            p_map=system.p_map, basis=system.basis,
                            coeffs=coeffs, conditions=[cond] * n_el)


# ---------------------------------------------------------------------------
# export helpers
# ---------------------------------------------------------------------------

def sample_solution(sol: DiscreteSolution, points) -> np.ndarray:
    """Field values at given space-time points: rows (v, sigma_1..n)."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    out = np.zeros((pts.shape[0], 1 + sol.mesh.n))
    for i, pt in enumerate(pts):
        v, s = sol.evaluate(pt)
        out[i, 0] = v
        out[i, 1:] = s
    return out


def write_samples_csv(sol: DiscreteSolution, path, points) -> None:
    """CSV of samples: columns x1..xn, t, v, sigma_1..sigma_n."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    vals = sample_solution(sol, pts)
    n = sol.mesh.n
    header = [f"x{i + 1}" for i in range(n)] + ["t", "v"] \
        + [f"sigma_{i + 1}" for i in range(n)]
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for pt, row in zip(pts, vals):
            cells = [f"{v:.17g}" for v in pt] + [f"{v:.17g}" for v in row]
            fh.write(",".join(cells) + "\n")


def export_solution_json(sol: DiscreteSolution, path) -> None:
    with open(path, "w") as fh:
        json.dump(sol.to_json_dict(), fh, indent=1)
