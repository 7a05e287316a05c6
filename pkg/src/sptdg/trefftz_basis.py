"""Local Trefftz bases for the first-order acoustic wave system.

Two polynomial families are provided per element:

- ``Tp``: the full polynomial Trefftz space.  Each basis function is
  obtained by evolving polynomial initial data (b, 0) or (0, b e_j) in
  time with a coefficient recurrence; b runs over scaled/centered
  monomials.
- ``Wp``: gradients of second-order Trefftz polynomials, realized as
  polynomial plane waves P_k(d . x - c t) over per-degree direction sets.
  Smaller than ``Tp`` but with the same approximation rates for solutions
  admitting a potential.

Bases are constructed in element-local reference coordinates
``x_hat = (x - x_K)/h_K``, ``t_hat = c (t - t_K)/h_K`` with unit wave
speed and mapped back, which keeps coefficients O(1) on small elements.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import sph_harm_y

from .polynomial import Polynomial, wave_residual
from ._quadrature import box_rule

#: Condition-number threshold above which a direction-set matrix counts
#: as numerically singular (double precision leaves ~4 digits of headroom).
DIRECTION_COND_LIMIT = 1e12


# ---------------------------------------------------------------------------
# element frames and Trefftz pairs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ElementFrame:
    """Local scaling data of an element: center, anisotropic diameter, speed."""

    center: tuple  # (x_1..x_n, t)
    h: float       # anisotropic diameter sup sqrt(|x-y|^2 + c^2 (t-s)^2)
    c: float       # element wave speed

    def __post_init__(self):
        if self.h <= 0 or self.c <= 0:
            raise ValueError("frame requires h > 0 and c > 0")
        object.__setattr__(self, "center", tuple(float(x) for x in self.center))

    @property
    def n(self) -> int:
        return len(self.center) - 1

    def to_reference(self, points: np.ndarray) -> np.ndarray:
        """Map physical (x, t) points, shape (m, n+1), to reference."""
        pts = np.asarray(points, dtype=float) - np.asarray(self.center)
        pts = pts / self.h
        pts[:, -1] *= self.c
        return pts


def unit_frame(n: int) -> ElementFrame:
    """Identity frame: reference and physical coordinates coincide."""
    return ElementFrame(center=(0.0,) * (n + 1), h=1.0, c=1.0)


@dataclass(frozen=True)
class TrefftzFunction:
    """A pair (v, sigma) solving the wave system exactly for speed c."""

    v: Polynomial
    sigma: tuple
    c: float

    def __post_init__(self):
        object.__setattr__(self, "sigma", tuple(self.sigma))

    @property
    def n(self) -> int:
        return self.v.dim

    def residual(self):
        return wave_residual(self.v, self.sigma, self.c)

    def residual_max(self) -> float:
        """Largest residual coefficient, for Trefftz verification."""
        vec, scal = self.residual()
        worst = scal.max_abs_coeff()
        for q in vec:
            worst = max(worst, q.max_abs_coeff())
        return worst

    def max_abs_coeff(self) -> float:
        worst = self.v.max_abs_coeff()
        for q in self.sigma:
            worst = max(worst, q.max_abs_coeff())
        return worst

    def eval_v(self, points) -> np.ndarray:
        return self.v.eval_many(points)

    def eval_sigma(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        return np.column_stack([q.eval_many(pts) for q in self.sigma])


# ---------------------------------------------------------------------------
# dimension formulas
# ---------------------------------------------------------------------------

def _check_pn(p: int, n: int):
    if not (isinstance(p, (int, np.integer)) and p >= 0):
        raise ValueError(f"degree p must be a nonnegative integer, got {p!r}")
    if n not in (1, 2, 3):
        raise ValueError(f"space dimension n must be 1, 2 or 3, got {n!r}")


def dim_Tp(p: int, n: int) -> int:
    """Dimension of the local first-order Trefftz space: (n+1) C(p+n, n)."""
    _check_pn(p, n)
    return (n + 1) * math.comb(p + n, n)


def dim_Up(p: int, n: int) -> int:
    """Dimension of the degree-p second-order Trefftz (potential) space."""
    _check_pn(p, n)
    if n == 1:
        return 2 * p + 1
    if n == 2:
        return (p + 1) ** 2
    return (p + 1) * (p + 2) * (2 * p + 3) // 6


def dim_Wp(p: int, n: int) -> int:
    """Dimension of the gradient family: dim_Up(p+1, n) - 1."""
    _check_pn(p, n)
    return dim_Up(p + 1, n) - 1


def direction_count(k: int, n: int) -> int:
    """Directions needed per degree k: dim_Up(k, n) - dim_Up(k-1, n)."""
    _check_pn(k, n)
    if k == 0:
        return 1
    if n == 1:
        return 2
    if n == 2:
        return 2 * k + 1
    return (k + 1) ** 2


# ---------------------------------------------------------------------------
# time evolution of polynomial initial data (the Tp family)
# ---------------------------------------------------------------------------

def _space_indices(p: int, n: int):
    """All space multi-indices with |alpha| <= p, by degree then lexicographic."""
    out = []
    for deg in range(p + 1):
        out.extend(
            sorted(a for a in itertools.product(range(deg + 1), repeat=n)
                   if sum(a) == deg)
        )
    return out


def evolve_from_initial(v0: Polynomial, sigma0, p: int, c: float
                        ) -> TrefftzFunction:
    """Evolve space-only initial data (v0, sigma0) into a Trefftz pair.

    The coefficients a_{v,k,alpha} of t^k x^alpha are filled for
    k = 1..p from the degree cascade

        a_{v,k,alpha}     = -(c^2/k) sum_m (alpha_m+1) a_{sigma_m,k-1,alpha+e_m}
        a_{sigma_m,k,alpha} = -(1/k) (alpha_m+1) a_{v,k-1,alpha+e_m}

    which is equivalent to the wave system applied order by order in t.
    The result is the unique element of the local Trefftz space of degree
    p whose t=0 trace is (v0, sigma0).
    """
    sigma0 = list(sigma0)
    n = v0.dim
    if c <= 0:
        raise ValueError("wave speed c must be positive")
    if len(sigma0) != n or any(s.dim != n for s in sigma0):
        raise ValueError("sigma0 must hold n polynomials of dim n")
    for q in (v0, *sigma0):
        if any(mi.alpha_t != 0 for mi in q.terms):
            raise ValueError("initial data must not depend on t")
        if q.degree > p:
            raise ValueError(
                f"initial data degree {q.degree} exceeds target degree {p}"
            )

    # per-k coefficient layers keyed by the space multi-index
    av = [{mi.alpha: co for mi, co in v0.terms.items()}]
    asig = [[{mi.alpha: co for mi, co in s.terms.items()}] for s in sigma0]

    for k in range(1, p + 1):
        layer_v: dict = {}
        layer_s = [dict() for _ in range(n)]
        for alpha in _space_indices(p - k, n):
            sv = 0.0
            for m in range(n):
                up = list(alpha)
                up[m] += 1
                sv += (alpha[m] + 1) * asig[m][k - 1].get(tuple(up), 0.0)
            if sv != 0.0:
                layer_v[alpha] = -(c * c / k) * sv
            for m in range(n):
                up = list(alpha)
                up[m] += 1
                sm = av[k - 1].get(tuple(up), 0.0)
                if sm != 0.0:
                    layer_s[m][alpha] = -((alpha[m] + 1) / k) * sm
        av.append(layer_v)
        for m in range(n):
            asig[m].append(layer_s[m])

    def collect(layers):
        terms = {}
        for k, layer in enumerate(layers):
            for alpha, co in layer.items():
                terms[(alpha, k)] = co
        return Polynomial(n, terms)

    return TrefftzFunction(
        v=collect(av), sigma=[collect(asig[m]) for m in range(n)], c=c
    )


def _tp_reference_cache():
    # evolving degree-d initial data never creates terms above degree d,
    # so the spaces nest and the cache can hold one block per data degree
    by_degree: dict = {}

    def build(p: int, n: int):
        funcs = []
        zero = [Polynomial.zero(n) for _ in range(n)]
        for deg in range(p + 1):
            key = (n, deg)
            if key not in by_degree:
                block = []
                alphas = sorted(
                    a for a in itertools.product(range(deg + 1), repeat=n)
                    if sum(a) == deg)
                for alpha in alphas:
                    seed = Polynomial.monomial(n, alpha)
                    block.append(evolve_from_initial(seed, zero, deg, 1.0))
                    for j in range(n):
                        s0 = list(zero)
                        s0[j] = seed
                        block.append(evolve_from_initial(
                            Polynomial.zero(n), s0, deg, 1.0))
                by_degree[key] = tuple(block)
            funcs.extend(by_degree[key])
        return tuple(funcs)

    return build


_tp_reference = _tp_reference_cache()


def _to_physical(ref: TrefftzFunction, frame: ElementFrame) -> TrefftzFunction:
    """Map a unit-speed reference pair to the physical frame.

    With x_hat = (x - x_K)/h, t_hat = c (t - t_K)/h, the map
    v = c v_hat, sigma = sigma_hat turns unit-speed Trefftz pairs into
    speed-c ones.
    """
    n = ref.n
    mult = [1.0 / frame.h] * n + [frame.c / frame.h]
    shift = list(frame.center)
    v = frame.c * ref.v.compose_affine(mult, shift)
    sigma = [q.compose_affine(mult, shift) for q in ref.sigma]
    return TrefftzFunction(v=v, sigma=sigma, c=frame.c)


def build_Tp_basis(p: int, n: int, frame: ElementFrame):
    """Basis of the local degree-p first-order Trefftz space.

    For every scaled/centered monomial b = x_hat^alpha, |alpha| <= p, the
    n+1 evolutions of (b, 0) and (0, b e_j) are emitted; the list length
    is dim_Tp(p, n).
    """
    _check_pn(p, n)
    if frame.n != n:
        raise ValueError("frame dimension does not match n")
    return [_to_physical(f, frame) for f in _tp_reference(p, n)]


# ---------------------------------------------------------------------------
# direction sets on the unit sphere
# ---------------------------------------------------------------------------

@dataclass
class DirectionSet:
    """Unit propagation directions, one block of d_k vectors per degree k."""

    n: int
    per_degree: list                 # list of arrays (d_k, n)
    condition: list = field(default_factory=list)  # cond of M^(k) per degree
    admissible: bool = True

    @property
    def max_degree(self) -> int:
        return len(self.per_degree) - 1


def _real_sph_harm_rows(k: int, dirs: np.ndarray) -> np.ndarray:
    """Rows of real spherical harmonics Y_l^m, l = 0..k, at unit vectors."""
    x, y, z = dirs[:, 0], dirs[:, 1], dirs[:, 2]
    theta = np.arccos(np.clip(z, -1.0, 1.0))       # polar angle
    phi = np.arctan2(y, x)                          # azimuth
    rows = []
    for l in range(k + 1):
        for m in range(-l, l + 1):
            ylm = sph_harm_y(l, abs(m), theta, phi)
            if m == 0:
                rows.append(ylm.real)
            elif m > 0:
                rows.append(math.sqrt(2.0) * (-1.0) ** m * ylm.real)
            else:
                rows.append(math.sqrt(2.0) * (-1.0) ** m * ylm.imag)
    return np.array(rows)


def check_directions(k: int, dirs, n: int):
    """Invertibility test of the degree-k direction matrix M^(k).

    The rows are (hyper)spherical harmonics up to degree k evaluated at
    the candidate directions (n=2: e^{i l theta}, l = -k..k; n=3: real
    spherical harmonics).  Returns ``(admissible, condition_estimate)``
    where admissible means the condition number stays below 1e12.
    """
    _check_pn(k, n)
    dirs = np.atleast_2d(np.asarray(dirs, dtype=float))
    if dirs.shape[1] != n:
        raise ValueError(f"directions must have {n} components")
    want = direction_count(k, n)
    if dirs.shape[0] != want:
        raise ValueError(
            f"degree {k} in n={n} needs {want} directions, got {dirs.shape[0]}"
        )
    norms = np.linalg.norm(dirs, axis=1)
    if np.any(np.abs(norms - 1.0) > 1e-12):
        raise ValueError("directions must be unit vectors")

    if k == 0:
        return True, 1.0
    if n == 1:
        M = np.vstack([np.ones(2), dirs[:, 0]])
    elif n == 2:
        theta = np.arctan2(dirs[:, 1], dirs[:, 0])
        ells = np.arange(-k, k + 1)
        M = np.exp(1j * ells[:, None] * theta[None, :])
    else:
        M = _real_sph_harm_rows(k, dirs)
    cond = float(np.linalg.cond(M))
    return bool(np.isfinite(cond) and cond < DIRECTION_COND_LIMIT), cond


def spherical_fibonacci(count: int, rotation: np.ndarray | None = None
                        ) -> np.ndarray:
    """Spherical Fibonacci lattice of ``count`` points, optionally rotated."""
    i = np.arange(count)
    z = 1.0 - (2.0 * i + 1.0) / count
    golden_angle = math.pi * (3.0 - math.sqrt(5.0))
    phi = golden_angle * i
    r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    pts = np.column_stack([r * np.cos(phi), r * np.sin(phi), z])
    if rotation is not None:
        pts = pts @ rotation.T
    return pts


def _random_rotation(rng) -> np.ndarray:
    q, r = np.linalg.qr(rng.standard_normal((3, 3)))
    q *= np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def default_directions(p: int, n: int, seed: int = 0) -> DirectionSet:
    """Default admissible direction sets for degrees 0..p.

    n=1: the two propagation signs.  n=2: equispaced angles with a
    per-degree rotation offset k/(p+2) so all angles across degrees are
    distinct.  n=3: spherical Fibonacci lattices, re-rotated with a seeded
    rotation until the degree matrices are well conditioned (at most 8
    reseeds before giving up).
    """
    _check_pn(p, n)
    if n == 1:
        per_degree = [np.array([[1.0]])]
        per_degree += [np.array([[1.0], [-1.0]]) for _ in range(1, p + 1)]
    elif n == 2:
        per_degree = []
        for k in range(p + 1):
            dk = direction_count(k, n)
            j = np.arange(dk)
            theta = 2.0 * math.pi * j / dk + k / (p + 2.0)
            per_degree.append(np.column_stack([np.cos(theta), np.sin(theta)]))
    else:
        per_degree = None
        for attempt in range(9):
            if attempt == 0 and seed == 0:
                rot = None
            else:
                rot = _random_rotation(np.random.default_rng(seed * 1000 + attempt))
            cand = [spherical_fibonacci(direction_count(k, n), rot)
                    for k in range(p + 1)]
            if all(check_directions(k, cand[k], n)[0] for k in range(p + 1)):
                per_degree = cand
                break
        if per_degree is None:
            raise RuntimeError(
                f"no admissible direction set found for p={p}, n=3 "
                f"after 8 reseeds (seed={seed})"
            )

    conds = [check_directions(k, per_degree[k], n)[1] for k in range(p + 1)]
    ok = all(check_directions(k, per_degree[k], n)[0] for k in range(p + 1))
    return DirectionSet(n=n, per_degree=per_degree, condition=conds,
                        admissible=ok)


# ---------------------------------------------------------------------------
# plane-wave families (Up potentials and their Wp gradients)
# ---------------------------------------------------------------------------

def legendre_coeffs(k: int) -> np.ndarray:
    """Monomial coefficients (ascending) of the Legendre polynomial P_k."""
    return np.polynomial.legendre.leg2poly([0.0] * k + [1.0])


def _profile_along(coeffs, d: np.ndarray, n: int) -> Polynomial:
    """The polynomial q(d . x_hat - t_hat) for 1D monomial coeffs q."""
    z = Polynomial.zero(n)
    for i in range(n):
        z = z + float(d[i]) * Polynomial.variable(n, i)
    z = z - Polynomial.variable(n, n)
    out = Polynomial.zero(n)
    power = Polynomial.constant(n, 1.0)
    for j, cj in enumerate(coeffs):
        if j > 0:
            power = power * z
        if cj != 0.0:
            out = out + float(cj) * power
    return out


def _require_admissible(dirs: DirectionSet, up_to: int, n: int):
    if dirs.n != n:
        raise ValueError("direction set dimension mismatch")
    if dirs.max_degree < up_to:
        raise ValueError(
            f"direction set covers degrees up to {dirs.max_degree}, "
            f"need {up_to}"
        )
    for k in range(up_to + 1):
        ok, cond = check_directions(k, dirs.per_degree[k], n)
        if not ok:
            raise ValueError(
                f"directions for degree {k} are not admissible "
                f"(condition {cond:.3e})"
            )


def _up_reference_cache():
    blocks: dict = {}

    def block_for(k: int, n: int, arr: np.ndarray):
        key = (n, k, arr.tobytes())
        if key not in blocks:
            coeffs = legendre_coeffs(k)
            blocks[key] = tuple(_profile_along(coeffs, d, n) for d in arr)
        return blocks[key]

    return block_for


_up_reference = _up_reference_cache()


def build_Up_basis(p: int, n: int, dirs: DirectionSet, frame: ElementFrame):
    """Scalar second-order Trefftz basis Q_k(d_{k,j} . x_hat - t_hat).

    Q_k is the Legendre polynomial of degree k; the list length is
    dim_Up(p, n) and every member annihilates -Laplacian + c^-2 d^2/dt^2.
    """
    _check_pn(p, n)
    _require_admissible(dirs, p, n)
    mult = [1.0 / frame.h] * n + [frame.c / frame.h]
    shift = list(frame.center)
    out = []
    for k in range(p + 1):
        arr = np.asarray(dirs.per_degree[k], dtype=float)
        for ref in _up_reference(k, n, arr):
            out.append(ref.compose_affine(mult, shift))
    return out


def _wp_reference_cache():
    # keyed by the direction block's bytes so a degree block is expanded
    # once no matter which DirectionSet (or which p) asks for it
    blocks: dict = {}

    def build(p: int, n: int, dirs: DirectionSet):
        funcs = []
        for k in range(p + 1):
            arr = np.asarray(dirs.per_degree[k + 1], dtype=float)
            key = (n, k, arr.tobytes())
            if key not in blocks:
                coeffs = legendre_coeffs(k)
                block = []
                for d in arr:
                    prof = _profile_along(coeffs, d, n)
                    sigma = [float(d[i]) * prof for i in range(n)]
                    block.append(TrefftzFunction(v=prof, sigma=sigma, c=1.0))
                blocks[key] = tuple(block)
            funcs.extend(blocks[key])
        return tuple(funcs)

    return build


_wp_reference = _wp_reference_cache()


def build_Wp_basis(p: int, n: int, dirs: DirectionSet, frame: ElementFrame):
    """Trefftz pairs (c P_k(d . x - ct), d P_k(d . x - ct)), k = 0..p.

    These are the space-time gradients of the degree-(p+1) potential
    family, hence the degree-k block uses the degree-(k+1) direction
    set; ``dirs`` must be admissible up to degree p+1.  The list length
    is dim_Wp(p, n).
    """
    _check_pn(p, n)
    _require_admissible(dirs, p + 1, n)
    if frame.n != n:
        raise ValueError("frame dimension does not match n")
    return [_to_physical(f, frame) for f in _wp_reference(p, n, dirs)]


def build_basis(family: str, p: int, n: int, frame: ElementFrame,
                dirs: DirectionSet | None = None, seed: int = 0):
    """Dispatch helper: a named basis family on a frame."""
    if family == "Tp":
        return build_Tp_basis(p, n, frame)
    if family == "Wp":
        if dirs is None:
            dirs = default_directions(p + 1, n, seed=seed)
        return build_Wp_basis(p, n, dirs, frame)
    raise ValueError(f"unknown basis family {family!r} (expected Tp or Wp)")


def family_dim(family: str, p: int, n: int) -> int:
    if family == "Tp":
        return dim_Tp(p, n)
    if family == "Wp":
        return dim_Wp(p, n)
    raise ValueError(f"unknown basis family {family!r}")


# ---------------------------------------------------------------------------
# Gram matrices (conditioning diagnostics)
# ---------------------------------------------------------------------------

def gram_matrix(basis, frame: ElementFrame, nodes: int | None = None
                ) -> np.ndarray:
    """L2 Gram matrix of a basis over the frame's reference cell.

    The cell is the physical image of the unit reference cube: half-width
    h/2 in each space direction and h/(2c) in time.  Works for both
    scalar bases and Trefftz pairs (where the product sums v and sigma
    components).
    """
    if not basis:
        return np.zeros((0, 0))
    pairs = isinstance(basis[0], TrefftzFunction)
    n = basis[0].n if pairs else basis[0].dim
    deg = max(
        (max(f.v.degree, *(q.degree for q in f.sigma)) if pairs else f.degree)
        for f in basis
    )
    m = nodes or max(2, deg + 2)
    center = np.asarray(frame.center)
    half = np.array([frame.h / 2.0] * n + [frame.h / (2.0 * frame.c)])
    pts, w = box_rule(center - half, center + half, m)
    if pairs:
        vals = [f.eval_v(pts) for f in basis]
        svals = [f.eval_sigma(pts) for f in basis]
        N = len(basis)
        G = np.zeros((N, N))
        for i in range(N):
            for j in range(i, N):
                g = float(np.sum(w * vals[i] * vals[j]))
                g += float(np.sum(w * np.sum(svals[i] * svals[j], axis=1)))
                G[i, j] = G[j, i] = g
    else:
        V = np.column_stack([f.eval_many(pts) for f in basis])
        G = V.T @ (w[:, None] * V)
    return G
