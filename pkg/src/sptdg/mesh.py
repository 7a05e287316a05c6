"""Space-time meshes: tensor-product time slabs and 1D tent-pitched meshes.

Every face of the mesh skeleton is classified by its unit normal
(n_x, n_t):

- space-like (``c |n_x| < n_t``): information crosses only from past to
  future; these carry the upwind coupling.  gamma = c |n_x| / n_t < 1
  measures closeness to the characteristic cone.
- time-like (``n_t = 0``): spatial interfaces extruded in time, coupled
  with centred + penalized fluxes.
- initial / final: the flat caps t = 0 and t = T.
- Dirichlet / Neumann / Robin: lateral boundary faces, labeled from the
  problem's boundary partition.

Slab meshes (n <= 3) contain space-like and time-like interior faces;
1D tent meshes produced by the advancing front have no interior
time-like faces, which is what enables element-by-element causal solves.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from itertools import product
from typing import Callable, Sequence

import numpy as np

from .trefftz_basis import ElementFrame

SPACE = "space"
TIME = "time"
INITIAL = "initial"
FINAL = "final"
DIRICHLET = "dirichlet"
NEUMANN = "neumann"
ROBIN = "robin"

#: Lateral-boundary face kinds.
BOUNDARY_KINDS = (DIRICHLET, NEUMANN, ROBIN)

_GEOM_TOL = 1e-12


class MeshError(Exception):
    """Raised for inconsistent mesh construction or ordering requests."""


# ---------------------------------------------------------------------------
# problem specification
# ---------------------------------------------------------------------------

@dataclass
class ProblemSpec:
    """Initial-boundary value problem data on a space-time cylinder.

    The wave speed ``c`` may be a constant or a function of the space
    point (piecewise constant per element; it may jump only across
    time-like faces, which a space-dependent map guarantees).  Boundary
    conditions are assigned per box side; ``bc`` is either a single kind
    applied everywhere or a map ``{(axis, 'lo'|'hi'): kind}``.

    Data providers (all optional, defaulting to zero):

    - ``v0(x)``: initial velocity, x of shape (m, n) -> (m,)
    - ``sigma0(x)``: initial flux, (m, n) -> (m, n)
    - ``g_D(pts)``: Dirichlet trace of v, pts of shape (m, n+1) -> (m,)
    - ``g_N(pts, n_x)``: prescribed normal flux sigma . n_x -> (m,)
    - ``g_R(pts, n_x)``: Robin datum (theta/c) v - sigma . n_x -> (m,)
    """

    omega_lo: Sequence[float]
    omega_hi: Sequence[float]
    T: float
    c: float | Callable = 1.0
    theta: float | Callable = 1.0
    bc: str | dict = DIRICHLET
    v0: Callable | None = None
    sigma0: Callable | None = None
    g_D: Callable | None = None
    g_N: Callable | None = None
    g_R: Callable | None = None

    def __post_init__(self):
        self.omega_lo = tuple(float(x) for x in self.omega_lo)
        self.omega_hi = tuple(float(x) for x in self.omega_hi)
        if len(self.omega_lo) != len(self.omega_hi):
            raise ValueError("omega_lo and omega_hi must have equal length")
        if not 1 <= self.n <= 3:
            raise ValueError("space dimension must be 1, 2 or 3")
        if any(h <= l for l, h in zip(self.omega_lo, self.omega_hi)):
            raise ValueError("domain box must have positive extent")
        if self.T <= 0:
            raise ValueError("final time T must be positive")
        if isinstance(self.theta, (int, float)) and self.theta <= 0:
            raise ValueError("Robin impedance theta must be positive")
        if isinstance(self.bc, str):
            if self.bc not in BOUNDARY_KINDS:
                raise ValueError(f"unknown boundary kind {self.bc!r}")
        else:
            for key, kind in self.bc.items():
                if kind not in BOUNDARY_KINDS:
                    raise ValueError(f"unknown boundary kind {kind!r} for {key}")

    @property
    def n(self) -> int:
        return len(self.omega_lo)

    def speed_at(self, x) -> float:
        if callable(self.c):
            val = float(self.c(np.asarray(x, dtype=float)))
        else:
            val = float(self.c)
        if val <= 0:
            raise ValueError("wave speed must be positive")
        return val

    def theta_at(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if callable(self.theta):
            return np.asarray(self.theta(pts), dtype=float)
        return np.full(pts.shape[0], float(self.theta))

    def bc_kind(self, axis: int, side: str) -> str:
        if isinstance(self.bc, str):
            return self.bc
        try:
            return self.bc[(axis, side)]
        except KeyError:
            raise ValueError(f"no boundary condition for side ({axis}, {side})")

    def eval_v0(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if self.v0 is None:
            return np.zeros(x.shape[0])
        return np.asarray(self.v0(x), dtype=float)

    def eval_sigma0(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if self.sigma0 is None:
            return np.zeros((x.shape[0], self.n))
        return np.asarray(self.sigma0(x), dtype=float)

    def eval_boundary(self, kind: str, points, n_x) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if kind == DIRICHLET:
            fn = self.g_D
            return (np.zeros(pts.shape[0]) if fn is None
                    else np.asarray(fn(pts), dtype=float))
        if kind == NEUMANN:
            fn = self.g_N
        elif kind == ROBIN:
            fn = self.g_R
        else:
            raise ValueError(f"not a boundary data kind: {kind}")
        if fn is None:
            return np.zeros(pts.shape[0])
        return np.asarray(fn(pts, np.asarray(n_x, dtype=float)), dtype=float)


# ---------------------------------------------------------------------------
# mesh entities
# ---------------------------------------------------------------------------

@dataclass
class Element:
    """A space-time cell: an axis-aligned box or a 1D tent polygon."""

    id: int
    kind: str                      # 'box' or 'tent'
    c: float
    lo: np.ndarray | None = None   # box corners, shape (n+1,)
    hi: np.ndarray | None = None
    verts: np.ndarray | None = None  # tent polygon (m, 2), counterclockwise
    pole: int = 0                  # fan vertex index for tent triangulation
    faces: list = field(default_factory=list)

    @property
    def n(self) -> int:
        if self.kind == "box":
            return len(self.lo) - 1
        return 1

    def center(self) -> np.ndarray:
        if self.kind == "box":
            return 0.5 * (self.lo + self.hi)
        return 0.5 * (self.verts.min(axis=0) + self.verts.max(axis=0))

    def volume(self) -> float:
        if self.kind == "box":
            return float(np.prod(self.hi - self.lo))
        v = self.verts
        x, t = v[:, 0], v[:, 1]
        return 0.5 * float(np.sum(x * np.roll(t, -1) - np.roll(x, -1) * t))

    def time_span(self):
        if self.kind == "box":
            return float(self.lo[-1]), float(self.hi[-1])
        return float(self.verts[:, 1].min()), float(self.verts[:, 1].max())

    def diameter(self) -> float:
        """Anisotropic diameter sup sqrt(|x-y|^2 + c^2 (t-s)^2)."""
        if self.kind == "box":
            d = self.hi - self.lo
            return math.sqrt(float(np.sum(d[:-1] ** 2)) + (self.c * d[-1]) ** 2)
        best = 0.0
        v = self.verts
        for i in range(len(v)):
            for j in range(i + 1, len(v)):
                dx = v[j, 0] - v[i, 0]
                dt = v[j, 1] - v[i, 1]
                best = max(best, dx * dx + (self.c * dt) ** 2)
        return math.sqrt(best)

    def space_diameter(self) -> float:
        if self.kind == "box":
            return math.sqrt(float(np.sum((self.hi[:-1] - self.lo[:-1]) ** 2)))
        return float(self.verts[:, 0].max() - self.verts[:, 0].min())

    def frame(self) -> ElementFrame:
        return ElementFrame(center=tuple(self.center()), h=self.diameter(),
                            c=self.c)

    def triangles(self):
        """Fan triangulation of a tent polygon from its pole vertex."""
        if self.kind != "tent":
            raise MeshError("triangulation applies to tent elements")
        v = self.verts
        m = len(v)
        out = []
        for s in range(1, m - 1):
            i1 = (self.pole + s) % m
            i2 = (self.pole + s + 1) % m
            out.append((v[self.pole], v[i1], v[i2]))
        return out

    def contains(self, point, tol: float = 1e-10) -> bool:
        p = np.asarray(point, dtype=float)
        if self.kind == "box":
            return bool(np.all(p >= self.lo - tol) and np.all(p <= self.hi + tol))
        def cross2(u, v):
            return u[0] * v[1] - u[1] * v[0]

        for a, b, c3 in self.triangles():
            # barycentric sign test with tolerance, orientation-safe
            area = cross2(b - a, c3 - a)
            if abs(area) < _GEOM_TOL:
                continue
            w0 = cross2(b - p, c3 - p) / area
            w1 = cross2(c3 - p, a - p) / area
            w2 = cross2(a - p, b - p) / area
            if w0 >= -tol and w1 >= -tol and w2 >= -tol:
                return True
        return False


@dataclass
class Face:
    """Oriented skeleton facet with affine geometry origin + u . axes."""

    id: int
    kind: str
    origin: np.ndarray             # (n+1,)
    axes: np.ndarray               # (d, n+1), mutually orthogonal
    normal: np.ndarray             # unit (n_x, n_t)
    gamma: float | None            # c |n_x| / n_t on space-like-type faces
    minus: int | None              # past / owning element
    plus: int | None               # future / neighbor element
    c: float                       # wave speed governing this face

    @property
    def dim(self) -> int:
        return self.axes.shape[0]

    @property
    def measure(self) -> float:
        return float(np.prod(np.linalg.norm(self.axes, axis=1)))

    def centroid(self) -> np.ndarray:
        return self.origin + 0.5 * self.axes.sum(axis=0)

    @property
    def n_x(self) -> np.ndarray:
        return self.normal[:-1]

    @property
    def n_t(self) -> float:
        return float(self.normal[-1])

    def is_interior(self) -> bool:
        return self.minus is not None and self.plus is not None


@dataclass
class SpaceTimeMesh:
    """Elements, classified faces and the causal structure between them."""

    n: int
    kind: str                      # 'slab' or 'tent1d'
    omega_lo: tuple
    omega_hi: tuple
    T: float
    elements: list
    faces: list
    slab_shape: tuple | None = None   # (nx tuple, nt) for slab meshes

    def __post_init__(self):
        self._by_kind = {}
        self._bbox = None
        for f in self.faces:
            self._by_kind.setdefault(f.kind, []).append(f.id)
        for e in self.elements:
            e.faces = []
        for f in self.faces:
            for eid in (f.minus, f.plus):
                if eid is not None:
                    self.elements[eid].faces.append(f.id)

    def faces_of_kind(self, *kinds) -> list:
        out = []
        for k in kinds:
            out.extend(self._by_kind.get(k, []))
        return out

    def domain_volume(self) -> float:
        space = float(np.prod(np.asarray(self.omega_hi) - np.asarray(self.omega_lo)))
        return space * self.T

    def boundary_area(self) -> float:
        """Measure of the lateral boundary of the space-time cylinder."""
        ext = np.asarray(self.omega_hi) - np.asarray(self.omega_lo)
        sides = 0.0
        for a in range(self.n):
            cross = float(np.prod(np.delete(ext, a))) if self.n > 1 else 1.0
            sides += 2.0 * cross
        return sides * self.T

    def locate(self, point) -> int:
        """Element owning a point; interface points resolve to the past side."""
        p = np.asarray(point, dtype=float)
        if self.kind == "slab":
            lo = np.asarray(self.omega_lo)
            hi = np.asarray(self.omega_hi)
            if np.any(p[:-1] < lo - 1e-12) or np.any(p[:-1] > hi + 1e-12) \
                    or p[-1] < -1e-12 or p[-1] > self.T + 1e-12:
                raise MeshError(f"point {point} outside the space-time domain")
            nx, nt = self.slab_shape
            idx = []
            for a in range(self.n):
                u = (p[a] - lo[a]) / (hi[a] - lo[a]) * nx[a]
                idx.append(int(min(max(math.ceil(u) - 1, 0), nx[a] - 1)))
            u = p[-1] / self.T * nt
            it = int(min(max(math.ceil(u) - 1, 0), nt - 1))
            flat = it
            for a in range(self.n):
                flat = flat * nx[a] + idx[a]
            return flat
        if self._bbox is None:
            lo_arr = np.array([e.verts.min(axis=0) for e in self.elements])
            hi_arr = np.array([e.verts.max(axis=0) for e in self.elements])
            self._bbox = (lo_arr, hi_arr)
        lo_arr, hi_arr = self._bbox
        mask = np.all((p >= lo_arr - 1e-10) & (p <= hi_arr + 1e-10), axis=1)
        hits = [self.elements[i] for i in np.nonzero(mask)[0]
                if self.elements[i].contains(p)]
        if not hits:
            raise MeshError(f"point {point} outside the space-time domain")
        hits.sort(key=lambda e: (e.center()[-1], e.id))
        return hits[0].id

    def to_json_dict(self) -> dict:
        def element_vertices(e):
            if e.kind == "box":
                corners = list(product(*[(float(e.lo[i]), float(e.hi[i]))
                                         for i in range(len(e.lo))]))
                return [list(c) for c in corners]
            return [[float(x), float(t)] for x, t in e.verts]

        return {
            "n": self.n,
            "kind": self.kind,
            "omega_lo": list(self.omega_lo),
            "omega_hi": list(self.omega_hi),
            "T": self.T,
            "elements": [
                {"id": e.id, "kind": e.kind, "c": e.c,
                 "h": e.diameter(), "vertices": element_vertices(e)}
                for e in self.elements
            ],
            "faces": [
                {"id": f.id, "kind": f.kind,
                 "origin": [float(v) for v in f.origin],
                 "axes": [[float(v) for v in ax] for ax in f.axes],
                 "normal": [float(v) for v in f.normal],
                 "gamma": f.gamma, "measure": f.measure,
                 "minus": f.minus, "plus": f.plus}
                for f in self.faces
            ],
        }

    def dumps(self, **kw) -> str:
        return json.dumps(self.to_json_dict(), **kw)


# ---------------------------------------------------------------------------
# slab mesh builder
# ---------------------------------------------------------------------------

def build_slab_mesh(spec: ProblemSpec, nx, nt: int) -> SpaceTimeMesh:
    """Cartesian product mesh: nx cells per space axis, nt time slabs.

    All interior faces between consecutive slabs are flat space-like
    (gamma = 0); interior faces inside a slab are time-like.
    """
    n = spec.n
    if isinstance(nx, (int, np.integer)):
        nx = (int(nx),) * n
    else:
        nx = tuple(int(v) for v in nx)
    if len(nx) != n or any(v < 1 for v in nx) or nt < 1:
        raise ValueError("cell counts must be positive per axis")

    lo = np.asarray(spec.omega_lo)
    hi = np.asarray(spec.omega_hi)
    xs = [np.linspace(lo[a], hi[a], nx[a] + 1) for a in range(n)]
    ts = np.linspace(0.0, spec.T, nt + 1)

    def cell_id(it, ix):
        flat = it
        for a in range(n):
            flat = flat * nx[a] + ix[a]
        return flat

    elements = []
    for it in range(nt):
        for ix in product(*[range(nx[a]) for a in range(n)]):
            clo = np.array([xs[a][ix[a]] for a in range(n)] + [ts[it]])
            chi = np.array([xs[a][ix[a] + 1] for a in range(n)] + [ts[it + 1]])
            center_x = 0.5 * (clo[:-1] + chi[:-1])
            elements.append(Element(
                id=cell_id(it, ix), kind="box", c=spec.speed_at(center_x),
                lo=clo, hi=chi,
            ))
    elements.sort(key=lambda e: e.id)

    faces = []
    up = np.zeros(n + 1)
    up[-1] = 1.0

    def add_face(kind, origin, axes, normal, gamma, minus, plus, c):
        faces.append(Face(
            id=len(faces), kind=kind, origin=np.asarray(origin, dtype=float),
            axes=np.asarray(axes, dtype=float),
            normal=np.asarray(normal, dtype=float), gamma=gamma,
            minus=minus, plus=plus, c=c,
        ))

    def space_axes(ix, it):
        """Axes spanning the spatial footprint of cell ix at a fixed time."""
        out = []
        for a in range(n):
            ax = np.zeros(n + 1)
            ax[a] = xs[a][ix[a] + 1] - xs[a][ix[a]]
            out.append(ax)
        return out

    # horizontal (constant-t) faces: initial, space-like interior, final
    for it in range(nt + 1):
        for ix in product(*[range(nx[a]) for a in range(n)]):
            origin = np.array([xs[a][ix[a]] for a in range(n)] + [ts[it]])
            below = cell_id(it - 1, ix) if it > 0 else None
            above = cell_id(it, ix) if it < nt else None
            c = elements[above].c if above is not None else elements[below].c
            kind = SPACE if (below is not None and above is not None) else (
                INITIAL if below is None else FINAL)
            add_face(kind, origin, space_axes(ix, it), up, 0.0, below, above, c)

    # vertical faces: time-like interior and lateral boundary
    for a in range(n):
        normal = np.zeros(n + 1)
        normal[a] = 1.0
        for i in range(nx[a] + 1):
            boundary = i == 0 or i == nx[a]
            side = "lo" if i == 0 else "hi"
            for it in range(nt):
                perp_ranges = [range(nx[b]) for b in range(n) if b != a]
                for perp in product(*perp_ranges):
                    ix_left = list(perp)
                    ix_left.insert(a, i - 1)
                    ix_right = list(perp)
                    ix_right.insert(a, i)
                    origin = np.zeros(n + 1)
                    axes = []
                    for b in range(n):
                        if b == a:
                            origin[b] = xs[a][i]
                        else:
                            origin[b] = xs[b][ix_right[b]]
                            ax = np.zeros(n + 1)
                            ax[b] = xs[b][ix_right[b] + 1] - xs[b][ix_right[b]]
                            axes.append(ax)
                    origin[-1] = ts[it]
                    ax = np.zeros(n + 1)
                    ax[-1] = ts[it + 1] - ts[it]
                    axes.append(ax)
                    if boundary:
                        kind = spec.bc_kind(a, side)
                        eid = cell_id(it, tuple(ix_right if i == 0 else ix_left))
                        outward = normal if i == nx[a] else -normal
                        add_face(kind, origin, axes, outward, None,
                                 eid, None, elements[eid].c)
                    else:
                        left = cell_id(it, tuple(ix_left))
                        right = cell_id(it, tuple(ix_right))
                        add_face(TIME, origin, axes, normal, None,
                                 left, right, elements[left].c)

    return SpaceTimeMesh(
        n=n, kind="slab", omega_lo=spec.omega_lo, omega_hi=spec.omega_hi,
        T=spec.T, elements=elements, faces=faces, slab_shape=(nx, nt),
    )


# ---------------------------------------------------------------------------
# 1D tent mesh builder
# ---------------------------------------------------------------------------

def build_tent_mesh_1d(spec: ProblemSpec, nx: int, safety: float
                       ) -> SpaceTimeMesh:
    """Advancing-front tent mesh over a uniform 1D vertex grid.

    The vertex with the lowest front time is pitched to

        t_new = min(T, t_i + safety * min_edges(dx_e / c_e)),

    which keeps every front segment within gamma <= safety < 1 (each
    segment satisfies the bound when created, and pitching only shrinks
    the time offset to the neighbors).  The front finishes exactly at
    t = T, so the final faces are the flat caps of truncated tents; all
    interior faces are space-like and the element graph is a DAG.
    """
    if spec.n != 1:
        raise MeshError("tent meshes are implemented for n = 1 only")
    if not 0.0 < safety < 1.0:
        raise ValueError("safety must lie in (0, 1)")
    if nx < 1:
        raise ValueError("need at least one cell")

    lo, hi = spec.omega_lo[0], spec.omega_hi[0]
    T = spec.T
    xs = np.linspace(lo, hi, nx + 1)
    cell_c = [spec.speed_at(np.array([0.5 * (xs[i] + xs[i + 1])]))
              for i in range(nx)]

    elements: list = []
    faces: list = []

    def add_face(kind, p0, p1, gamma, minus, plus, c):
        p0 = np.asarray(p0, dtype=float)
        p1 = np.asarray(p1, dtype=float)
        tang = p1 - p0
        length = float(np.linalg.norm(tang))
        if kind in BOUNDARY_KINDS:
            normal = np.array([-1.0, 0.0]) if p0[0] <= lo + _GEOM_TOL \
                else np.array([1.0, 0.0])
        else:
            normal = np.array([-tang[1], tang[0]]) / length
            if normal[1] < 0:
                normal = -normal
        faces.append(Face(
            id=len(faces), kind=kind, origin=p0, axes=p1[None, :] - p0[None, :],
            normal=normal, gamma=gamma, minus=minus, plus=plus, c=c,
        ))
        return faces[-1]

    if nx == 1:
        # a single cell degenerates to lockstep pitching of both vertices:
        # time slabs of height safety * dx / c, the last truncated at T
        c = cell_c[0]
        dt = safety * (xs[1] - xs[0]) / c
        t_cuts = [0.0]
        while t_cuts[-1] < T - _GEOM_TOL * max(T, 1.0):
            t_cuts.append(min(T, t_cuts[-1] + dt))
        for j in range(len(t_cuts) - 1):
            t0, t1 = t_cuts[j], t_cuts[j + 1]
            verts = np.array([[xs[0], t0], [xs[1], t0], [xs[1], t1], [xs[0], t1]])
            elements.append(Element(id=j, kind="tent", c=c, verts=verts, pole=0))
        for j in range(len(t_cuts)):
            below = j - 1 if j > 0 else None
            above = j if j < len(t_cuts) - 1 else None
            kind = SPACE if below is not None and above is not None else (
                INITIAL if below is None else FINAL)
            add_face(kind, (xs[0], t_cuts[j]), (xs[1], t_cuts[j]), 0.0,
                     below, above, c)
        for j in range(len(t_cuts) - 1):
            t0, t1 = t_cuts[j], t_cuts[j + 1]
            add_face(spec.bc_kind(0, "lo"), (xs[0], t0), (xs[0], t1), None,
                     j, None, c)
            add_face(spec.bc_kind(0, "hi"), (xs[1], t0), (xs[1], t1), None,
                     j, None, c)
        return SpaceTimeMesh(n=1, kind="tent1d", omega_lo=spec.omega_lo,
                             omega_hi=spec.omega_hi, T=T,
                             elements=elements, faces=faces)

    front_t = np.zeros(nx + 1)
    # the current face covering each cell of the front (initial caps first)
    front_face = []
    for i in range(nx):
        f = add_face(INITIAL, (xs[i], 0.0), (xs[i + 1], 0.0), 0.0,
                     None, None, cell_c[i])
        front_face.append(f.id)

    def pitch_height(i):
        edges = []
        if i > 0:
            edges.append((xs[i] - xs[i - 1]) / cell_c[i - 1])
        if i < nx:
            edges.append((xs[i + 1] - xs[i]) / cell_c[i])
        return safety * min(edges)

    guard = 0
    max_pitches = 64 * (nx + 1) * (int(math.ceil(T / (safety * (xs[1] - xs[0])
                                                      / max(cell_c)))) + 2)
    while np.any(front_t < T - _GEOM_TOL * max(T, 1.0)):
        guard += 1
        if guard > max_pitches:
            raise MeshError("tent pitching failed to reach the final time")
        i = int(np.argmin(np.where(front_t < T - _GEOM_TOL * max(T, 1.0),
                                   front_t, np.inf)))
        t_old = front_t[i]
        t_new = min(T, t_old + pitch_height(i))
        if t_new - t_old < 1e-12 * T:
            raise MeshError(
                f"degenerate tent pitch at vertex {i}: height {t_new - t_old:g}"
            )

        eid = len(elements)
        # tent speed: the speed is constant per vertex patch cell; a jump
        # inside the patch would need time-like faces, so insist on equality
        patch_cells = [j for j in (i - 1, i) if 0 <= j < nx]
        c_patch = cell_c[patch_cells[0]]
        if any(abs(cell_c[j] - c_patch) > 1e-12 * c_patch for j in patch_cells):
            raise MeshError(
                "wave speed jumps inside a tent patch; tent meshes need "
                "per-patch constant speed"
            )

        # polygon (counterclockwise): left base, pole base, right base, apex
        poly = []
        if i > 0:
            poly.append((xs[i - 1], front_t[i - 1]))
        poly.append((xs[i], t_old))
        if i < nx:
            poly.append((xs[i + 1], front_t[i + 1]))
        poly.append((xs[i], t_new))
        pole = 1 if i > 0 else 0
        elements.append(Element(
            id=eid, kind="tent", c=c_patch,
            verts=np.array(poly, dtype=float), pole=pole,
        ))

        # consume the front faces below the tent
        for j in (i - 1, i):
            if 0 <= j < nx:
                faces[front_face[j]].plus = eid

        # emit the new top faces (interior space-like until left behind at T)
        if i > 0:
            gamma = c_patch * abs(t_new - front_t[i - 1]) / (xs[i] - xs[i - 1])
            f = add_face(SPACE, (xs[i - 1], front_t[i - 1]), (xs[i], t_new),
                         gamma, eid, None, c_patch)
            front_face[i - 1] = f.id
        if i < nx:
            gamma = c_patch * abs(t_new - front_t[i + 1]) / (xs[i + 1] - xs[i])
            f = add_face(SPACE, (xs[i], t_new), (xs[i + 1], front_t[i + 1]),
                         gamma, eid, None, c_patch)
            front_face[i] = f.id

        # lateral boundary edge for boundary vertices
        if i == 0:
            add_face(spec.bc_kind(0, "lo"), (xs[0], t_old), (xs[0], t_new),
                     None, eid, None, c_patch)
        elif i == nx:
            add_face(spec.bc_kind(0, "hi"), (xs[nx], t_old), (xs[nx], t_new),
                     None, eid, None, c_patch)

        front_t[i] = t_new

    # faces still on the front are the flat caps at t = T
    for fid in front_face:
        f = faces[fid]
        if f.plus is None and f.kind == SPACE:
            f.kind = FINAL
            f.gamma = 0.0
            f.normal = np.array([0.0, 1.0])

    return SpaceTimeMesh(n=1, kind="tent1d", omega_lo=spec.omega_lo,
                         omega_hi=spec.omega_hi, T=T,
                         elements=elements, faces=faces)


# ---------------------------------------------------------------------------
# causal structure and validation
# ---------------------------------------------------------------------------

def causal_order(mesh: SpaceTimeMesh) -> list:
    """Topological levels of the past-dependency DAG.

    Element A precedes B when A's future space-like face is B's past
    face.  For slab meshes each level is one whole slab; for tent meshes
    the levels are antichains solvable element by element.  Raises
    MeshError when the dependency graph has a cycle.
    """
    n_el = len(mesh.elements)
    indeg = [0] * n_el
    out: list = [[] for _ in range(n_el)]
    for f in mesh.faces:
        if f.kind == SPACE and f.is_interior():
            out[f.minus].append(f.plus)
            indeg[f.plus] += 1
    ready = sorted(e for e in range(n_el) if indeg[e] == 0)
    levels = []
    seen = 0
    while ready:
        levels.append(ready)
        seen += len(ready)
        nxt = set()
        for e in ready:
            for b in out[e]:
                indeg[b] -= 1
                if indeg[b] == 0:
                    nxt.add(b)
        ready = sorted(nxt)
    if seen != n_el:
        raise MeshError("causal dependency graph has a cycle")
    return levels


def validate_mesh(mesh: SpaceTimeMesh) -> list:
    """Check the face-classification and conformity invariants.

    Returns a list of violation descriptions; an empty list means the
    mesh is valid.
    """
    bad = []
    scale = max(mesh.domain_volume(), 1.0)

    for f in mesh.faces:
        nrm = float(np.linalg.norm(f.normal))
        if abs(nrm - 1.0) > 1e-10:
            bad.append(f"face {f.id}: normal not unit (|n|={nrm:.3e})")
            continue
        for ax in f.axes:
            if abs(float(np.dot(ax, f.normal))) > 1e-10 * np.linalg.norm(ax):
                bad.append(f"face {f.id}: normal not orthogonal to the face")
        n_t = f.n_t
        nx_mag = float(np.linalg.norm(f.n_x))
        if f.kind in (SPACE, INITIAL, FINAL):
            if n_t <= 0:
                bad.append(f"face {f.id}: {f.kind} face must have n_t > 0")
                continue
            if f.c * nx_mag >= n_t - 1e-14:
                bad.append(
                    f"face {f.id}: space-like condition failed "
                    f"(c|n_x|={f.c * nx_mag:.6g} >= n_t={n_t:.6g})"
                )
            gamma = f.c * nx_mag / n_t
            if f.gamma is None or abs(gamma - f.gamma) > 1e-10:
                bad.append(f"face {f.id}: recorded gamma {f.gamma} != {gamma:.3e}")
            if not 0.0 <= gamma < 1.0:
                bad.append(f"face {f.id}: gamma {gamma:.3e} outside [0, 1)")
            if f.kind == SPACE and not f.is_interior():
                bad.append(f"face {f.id}: interior space-like face lost a side")
            if f.kind == INITIAL and (f.plus is None or f.minus is not None):
                bad.append(f"face {f.id}: initial face adjacency broken")
            if f.kind == FINAL and (f.minus is None or f.plus is not None):
                bad.append(f"face {f.id}: final face adjacency broken")
            if f.kind in (INITIAL, FINAL) and nx_mag > 1e-14:
                bad.append(f"face {f.id}: {f.kind} face must be flat")
        elif f.kind == TIME:
            if abs(n_t) > 1e-14:
                bad.append(f"face {f.id}: time-like face must have n_t = 0")
            if not f.is_interior():
                bad.append(f"face {f.id}: time-like face lost a side")
        elif f.kind in BOUNDARY_KINDS:
            if abs(n_t) > 1e-14:
                bad.append(f"face {f.id}: lateral boundary face must have n_t = 0")
            if f.minus is None or f.plus is not None:
                bad.append(f"face {f.id}: boundary face adjacency broken")
        else:
            bad.append(f"face {f.id}: unknown kind {f.kind!r}")

        if f.kind == SPACE and f.is_interior():
            c_lo = mesh.elements[f.minus].c
            c_hi = mesh.elements[f.plus].c
            if abs(c_lo - c_hi) > 1e-12 * max(c_lo, c_hi):
                bad.append(
                    f"face {f.id}: wave speed jumps across a space-like face "
                    f"({c_lo:.6g} vs {c_hi:.6g})"
                )
            # minus must sit on the past (-normal) side of the face
            eps = 1e-8 * max(f.measure, 1e-6)
            probe = f.centroid()
            if not mesh.elements[f.minus].contains(probe - eps * f.normal):
                bad.append(f"face {f.id}: minus side is not the past side")
            if not mesh.elements[f.plus].contains(probe + eps * f.normal):
                bad.append(f"face {f.id}: plus side is not the future side")

    vol = sum(e.volume() for e in mesh.elements)
    if abs(vol - mesh.domain_volume()) > 1e-12 * scale:
        bad.append(
            f"element volumes sum to {vol:.15g}, expected "
            f"{mesh.domain_volume():.15g}"
        )

    # conformity: the faces of each element must tile its boundary
    area_of = {}
    for f in mesh.faces:
        for eid in (f.minus, f.plus):
            if eid is not None:
                area_of[eid] = area_of.get(eid, 0.0) + f.measure
    for e in mesh.elements:
        if e.kind == "box":
            ext = e.hi - e.lo
            want = 2.0 * sum(
                float(np.prod(np.delete(ext, a))) for a in range(len(ext))
            )
        else:
            v = e.verts
            want = float(sum(np.linalg.norm(v[(i + 1) % len(v)] - v[i])
                             for i in range(len(v))))
        got = area_of.get(e.id, 0.0)
        if abs(got - want) > 1e-10 * max(want, 1.0):
            bad.append(
                f"element {e.id}: faces cover {got:.12g} of boundary "
                f"{want:.12g} (conformity)"
            )

    # boundary coverage by kind groups
    space_vol = float(np.prod(np.asarray(mesh.omega_hi)
                              - np.asarray(mesh.omega_lo)))
    for kind, want in ((INITIAL, space_vol), (FINAL, space_vol)):
        got = sum(mesh.faces[i].measure for i in mesh.faces_of_kind(kind))
        if abs(got - want) > 1e-10 * max(want, 1.0):
            bad.append(f"{kind} faces cover {got:.12g}, expected {want:.12g}")
    lateral = sum(mesh.faces[i].measure
                  for i in mesh.faces_of_kind(*BOUNDARY_KINDS))
    if abs(lateral - mesh.boundary_area()) > 1e-10 * max(mesh.boundary_area(), 1.0):
        bad.append(
            f"lateral boundary faces cover {lateral:.12g}, expected "
            f"{mesh.boundary_area():.12g}"
        )

    try:
        causal_order(mesh)
    except MeshError as exc:
        bad.append(str(exc))

    return bad
