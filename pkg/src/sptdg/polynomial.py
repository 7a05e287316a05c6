"""Sparse multivariate polynomials in n space variables plus time.

Polynomials are the universal value type of the solver: Trefftz basis
functions, manufactured solutions and all skeleton integrands are built
from them.  Terms are stored as a map ``MultiIndex -> coefficient`` with
exact zero coefficients dropped after every operation, so arithmetic,
differentiation and evaluation are exact up to floating-point rounding.

Variable convention: axes ``0 .. n-1`` are the space variables, axis ``n``
is time.
"""

from __future__ import annotations

import json
import math
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

#: Hard cap on the total degree of any stored polynomial.  A desk-scale
#: guard: the time-evolution recurrences grow degree only up to the local
#: order p, so hitting this means a runaway construction.
DEGREE_CAP = 32


class MultiIndex(NamedTuple):
    """Exponent tuple of a monomial x^alpha * t^alpha_t."""

    alpha: tuple  # space exponents, length n
    alpha_t: int  # time exponent

    @property
    def total_degree(self) -> int:
        return sum(self.alpha) + self.alpha_t

    def dim(self) -> int:
        return len(self.alpha)


def _as_multi_index(key, dim: int) -> MultiIndex:
    """Coerce (alpha, alpha_t) pairs or flat exponent tuples to MultiIndex."""
    if isinstance(key, MultiIndex):
        # rebuild only if numpy ints leaked in; keeps the hot path free of
        # allocations while guaranteeing JSON-serializable exponents
        if type(key.alpha_t) is int and all(type(a) is int for a in key.alpha):
            mi = key
        else:
            mi = MultiIndex(tuple(int(a) for a in key.alpha), int(key.alpha_t))
    elif len(key) == 2 and isinstance(key[0], (tuple, list)):
        mi = MultiIndex(tuple(int(a) for a in key[0]), int(key[1]))
    else:
        # flat tuple (a_1, ..., a_n, a_t)
        flat = tuple(int(a) for a in key)
        if len(flat) != dim + 1:
            raise ValueError(f"exponent tuple {key!r} does not match dim {dim}")
        mi = MultiIndex(flat[:-1], flat[-1])
    if len(mi.alpha) != dim:
        raise ValueError(f"multi-index {mi!r} does not match dim {dim}")
    if any(a < 0 for a in mi.alpha) or mi.alpha_t < 0:
        raise ValueError(f"negative exponent in {mi!r}")
    return mi


class Polynomial:
    """Immutable sparse polynomial in (x_1..x_n, t).

    Parameters
    ----------
    dim : int
        Number of space variables n (total variables are n+1).
    terms : mapping
        Map from multi-index (``MultiIndex``, ``(alpha_tuple, alpha_t)``
        pair, or flat exponent tuple of length n+1) to coefficient.
    """

    __slots__ = ("dim", "terms", "_compiled")

    def __init__(self, dim: int, terms: Mapping | None = None):
        if dim < 0:
            raise ValueError("dim must be nonnegative")
        clean = {}
        for key, coeff in (terms or {}).items():
            c = float(coeff)
            if c == 0.0:
                continue
            mi = _as_multi_index(key, dim)
            if mi.total_degree > DEGREE_CAP:
                raise ValueError(
                    f"total degree {mi.total_degree} exceeds cap {DEGREE_CAP}"
                )
            clean[mi] = clean.get(mi, 0.0) + c
        object.__setattr__(self, "dim", dim)
        object.__setattr__(
            self, "terms", {mi: c for mi, c in clean.items() if c != 0.0}
        )
        object.__setattr__(self, "_compiled", None)

    def __setattr__(self, name, value):
        raise AttributeError("Polynomial is immutable")

    # -- constructors ---------------------------------------------------

    @classmethod
    def _from_clean(cls, dim: int, terms: dict) -> "Polynomial":
        """Skip-validation constructor for internal arithmetic.

        Callers must pass keys that are already valid ``MultiIndex``
        tuples of Python ints within the degree cap; only exact zeros
        are filtered.
        """
        self = object.__new__(cls)
        object.__setattr__(self, "dim", dim)
        object.__setattr__(
            self, "terms", {mi: c for mi, c in terms.items() if c != 0.0}
        )
        object.__setattr__(self, "_compiled", None)
        return self

    @staticmethod
    def zero(dim: int) -> "Polynomial":
        return Polynomial(dim, {})

    @staticmethod
    def constant(dim: int, value: float) -> "Polynomial":
        return Polynomial(dim, {MultiIndex((0,) * dim, 0): value})

    @staticmethod
    def monomial(dim: int, alpha: Sequence[int], alpha_t: int = 0,
                 coeff: float = 1.0) -> "Polynomial":
        return Polynomial(dim, {MultiIndex(tuple(alpha), alpha_t): coeff})

    @staticmethod
    def variable(dim: int, axis: int) -> "Polynomial":
        """The coordinate polynomial for ``axis`` (axis n is time)."""
        if not 0 <= axis <= dim:
            raise ValueError(f"axis {axis} out of range for dim {dim}")
        if axis == dim:
            return Polynomial.monomial(dim, (0,) * dim, 1)
        e = [0] * dim
        e[axis] = 1
        return Polynomial.monomial(dim, e, 0)

    # -- basic queries ---------------------------------------------------

    @property
    def degree(self) -> int:
        """Total degree; -1 for the zero polynomial."""
        if not self.terms:
            return -1
        return max(mi.total_degree for mi in self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def max_abs_coeff(self) -> float:
        return max((abs(c) for c in self.terms.values()), default=0.0)

    # -- arithmetic -------------------------------------------------------

    def _check_dim(self, other: "Polynomial"):
        if self.dim != other.dim:
            raise ValueError(f"dimension mismatch: {self.dim} vs {other.dim}")

    def __add__(self, other):
        if not isinstance(other, Polynomial):
            other = Polynomial.constant(self.dim, other)
        self._check_dim(other)
        out = dict(self.terms)
        for mi, c in other.terms.items():
            out[mi] = out.get(mi, 0.0) + c
        return Polynomial._from_clean(self.dim, out)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial._from_clean(
            self.dim, {mi: -c for mi, c in self.terms.items()}
        )

    def __sub__(self, other):
        if not isinstance(other, Polynomial):
            other = Polynomial.constant(self.dim, other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Polynomial):
            return multiply(self, other)
        out = {mi: c * float(other) for mi, c in self.terms.items()}
        return Polynomial._from_clean(self.dim, out)

    __rmul__ = __mul__

    def __eq__(self, other):
        return (isinstance(other, Polynomial) and self.dim == other.dim
                and self.terms == other.terms)

    def __hash__(self):
        return hash((self.dim, frozenset(self.terms.items())))

    def __repr__(self):
        if not self.terms:
            return "Polynomial(0)"
        names = [f"x{i+1}" for i in range(self.dim)] + ["t"]
        parts = []
        for mi in sorted(self.terms, key=lambda m: (m.total_degree, m)):
            c = self.terms[mi]
            factors = [f"{names[i]}^{e}" if e > 1 else names[i]
                       for i, e in enumerate((*mi.alpha, mi.alpha_t)) if e > 0]
            parts.append(f"{c:+g}" + ("*" + "*".join(factors) if factors else ""))
        return "Polynomial(" + " ".join(parts) + ")"

    # -- evaluation -------------------------------------------------------

    def _compile(self):
        """Cache exponent/coefficient arrays for vectorized evaluation."""
        cached = self._compiled
        if cached is None:
            keys = sorted(self.terms, key=lambda m: (m.total_degree, m))
            exps = np.array(
                [(*mi.alpha, mi.alpha_t) for mi in keys], dtype=np.int64
            ).reshape(len(keys), self.dim + 1)
            coeffs = np.array([self.terms[mi] for mi in keys], dtype=float)
            cached = (exps, coeffs)
            object.__setattr__(self, "_compiled", cached)
        return cached

    def eval_many(self, points) -> np.ndarray:
        """Evaluate at an array of points with shape (m, n+1)."""
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            pts = pts[None, :]
        if pts.shape[1] != self.dim + 1:
            raise ValueError(
                f"points have {pts.shape[1]} coordinates, expected {self.dim + 1}"
            )
        if not self.terms:
            return np.zeros(pts.shape[0])
        exps, coeffs = self._compile()
        mono = np.prod(pts[:, None, :] ** exps[None, :, :], axis=2)
        return mono @ coeffs

    def __call__(self, point) -> float:
        """Evaluate at a single point (x_1..x_n, t)."""
        return float(self.eval_many(np.asarray(point, dtype=float)[None, :])[0])

    # -- calculus ----------------------------------------------------------

    def derive(self, axis: int) -> "Polynomial":
        """Exact partial derivative along ``axis`` (axis n is time)."""
        if not 0 <= axis <= self.dim:
            raise ValueError(f"axis {axis} out of range for dim {self.dim}")
        out = {}
        for mi, c in self.terms.items():
            if axis == self.dim:
                if mi.alpha_t == 0:
                    continue
                new = MultiIndex(mi.alpha, mi.alpha_t - 1)
                out[new] = out.get(new, 0.0) + c * mi.alpha_t
            else:
                e = mi.alpha[axis]
                if e == 0:
                    continue
                alpha = list(mi.alpha)
                alpha[axis] = e - 1
                new = MultiIndex(tuple(alpha), mi.alpha_t)
                out[new] = out.get(new, 0.0) + c * e
        return Polynomial._from_clean(self.dim, out)

    def compose_affine(self, mult: Sequence[float], shift: Sequence[float]
                       ) -> "Polynomial":
        """Substitute variable i -> mult[i] * (X_i - shift[i]).

        ``mult`` and ``shift`` have length n+1 (space axes then time).
        Used to pull reference-coordinate polynomials back to physical
        coordinates; the map is diagonal, so each variable expands
        independently by the binomial theorem.
        """
        mult = [float(m) for m in mult]
        shift = [float(s) for s in shift]
        if len(mult) != self.dim + 1 or len(shift) != self.dim + 1:
            raise ValueError("mult/shift must have length dim+1")
        if all(m == 1.0 for m in mult) and not any(shift):
            return self  # identity map; immutable, so sharing is safe
        out: dict = {}
        for mi, c in self.terms.items():
            # expand prod_i (m_i (X_i - s_i))^{e_i} term by term
            partial = {(0,) * (self.dim + 1): c}
            for axis, e in enumerate((*mi.alpha, mi.alpha_t)):
                if e == 0:
                    continue
                m, s = mult[axis], shift[axis]
                expanded: dict = {}
                # (m (X - s))^e = sum_j C(e,j) m^e (-s)^{e-j} X^j
                for j in range(e + 1):
                    w = math.comb(e, j) * (m ** e) * ((-s) ** (e - j))
                    if w == 0.0:
                        continue
                    for flat, pc in partial.items():
                        nf = list(flat)
                        nf[axis] += j
                        key = tuple(nf)
                        expanded[key] = expanded.get(key, 0.0) + pc * w
                partial = expanded
            for flat, pc in partial.items():
                out[flat] = out.get(flat, 0.0) + pc
        clean = {MultiIndex(flat[:-1], flat[-1]): c for flat, c in out.items()}
        return Polynomial._from_clean(self.dim, clean)

    # -- serialization ------------------------------------------------------

    def to_json_dict(self) -> dict:
        keys = sorted(self.terms, key=lambda m: (m.total_degree, m))
        return {
            "dim": self.dim,
            "terms": [
                {"alpha": list(mi.alpha), "alpha_t": mi.alpha_t,
                 "c": self.terms[mi]}
                for mi in keys
            ],
        }

    @staticmethod
    def from_json_dict(data: dict) -> "Polynomial":
        dim = int(data["dim"])
        terms = {
            MultiIndex(tuple(int(a) for a in t["alpha"]), int(t["alpha_t"])):
            float(t["c"])
            for t in data["terms"]
        }
        return Polynomial(dim, terms)

    def dumps(self) -> str:
        return json.dumps(self.to_json_dict())

    @staticmethod
    def loads(text: str) -> "Polynomial":
        return Polynomial.from_json_dict(json.loads(text))


def multiply(a: Polynomial, b: Polynomial) -> Polynomial:
    """Exact product of two polynomials of equal dimension."""
    if not isinstance(a, Polynomial) or not isinstance(b, Polynomial):
        raise TypeError("multiply expects Polynomial arguments")
    a._check_dim(b)
    out: dict = {}
    for mi_a, ca in a.terms.items():
        for mi_b, cb in b.terms.items():
            alpha = tuple(x + y for x, y in zip(mi_a.alpha, mi_b.alpha))
            key = MultiIndex(alpha, mi_a.alpha_t + mi_b.alpha_t)
            out[key] = out.get(key, 0.0) + ca * cb
    top = max(
        (mi.total_degree for mi, c in out.items() if c != 0.0), default=-1
    )
    if top > DEGREE_CAP:
        raise ValueError(f"total degree {top} exceeds cap {DEGREE_CAP}")
    return Polynomial._from_clean(a.dim, out)


def derive(p: Polynomial, axis: int) -> Polynomial:
    """Functional alias for :meth:`Polynomial.derive`."""
    return p.derive(axis)


def wave_residual(v: Polynomial, sigma: Iterable[Polynomial], c: float):
    """Residual of the first-order acoustic system for the pair (v, sigma).

    Returns ``(grad v + d sigma/dt, div sigma + c^-2 dv/dt)`` as exact
    polynomials: a list of n vector components and one scalar.  Both are
    identically zero precisely when (v, sigma) is a Trefftz pair for
    wave speed c.
    """
    sigma = list(sigma)
    if c <= 0:
        raise ValueError("wave speed c must be positive")
    n = v.dim
    if len(sigma) != n or any(s.dim != n for s in sigma):
        raise ValueError("sigma must hold n polynomials of matching dim")
    vector = [v.derive(m) + sigma[m].derive(n) for m in range(n)]
    div = Polynomial.zero(n)
    for m in range(n):
        div = div + sigma[m].derive(m)
    scalar = div + (1.0 / c**2) * v.derive(n)
    return vector, scalar
