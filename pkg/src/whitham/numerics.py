"""Polynomial arithmetic, root finding, contour quadrature and real linear solves.

Everything here is a pure function of its inputs.  Complex polynomials are
stored with ascending coefficients; contour segments are parametrized over
``s in [0, 1]``.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from functools import lru_cache
from math import comb
from typing import Callable, Sequence

import numpy as np

from .errors import AccuracyError, ConvergenceError, NearSingularError

DEFAULT_TOL = 1e-10

_EPS = np.finfo(float).eps


@dataclass(frozen=True, eq=False)
class Polynomial:
    """Complex polynomial with ascending coefficients ``c[0] + c[1] x + ...``."""

    coefficients: np.ndarray

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.coefficients, dtype=complex)).copy()
        nz = np.flatnonzero(c)
        c = c[: nz[-1] + 1] if nz.size else np.zeros(1, dtype=complex)
        c.flags.writeable = False
        object.__setattr__(self, "coefficients", c)

    @classmethod
    def from_roots(cls, roots: Sequence[complex], leading: complex = 1.0) -> "Polynomial":
        c = np.array([leading], dtype=complex)
        for r in roots:
            c = np.convolve(c, [-r, 1.0])
        return cls(c)

    @property
    def degree(self) -> int:
        return -1 if self.is_zero else len(self.coefficients) - 1

    @property
    def is_zero(self) -> bool:
        return len(self.coefficients) == 1 and self.coefficients[0] == 0

    @property
    def leading(self) -> complex:
        return complex(self.coefficients[-1])

    def __call__(self, x):
        x = np.asarray(x, dtype=complex)
        out = np.zeros_like(x) + self.coefficients[-1]
        for c in self.coefficients[-2::-1]:
            out = out * x + c
        return out

    def derivative(self, k: int = 1) -> "Polynomial":
        c = self.coefficients
        for _ in range(k):
            if len(c) == 1:
                return Polynomial([0.0])
            c = c[1:] * np.arange(1, len(c))
        return Polynomial(c)

    def taylor(self, x0: complex) -> np.ndarray:
        """Coefficients of ``p(x0 + z)`` in ascending powers of ``z``."""
        n = len(self.coefficients)
        out = np.zeros(n, dtype=complex)
        pw = x0 ** np.arange(n)
        for j, cj in enumerate(self.coefficients):
            for k in range(j + 1):
                out[k] += cj * comb(j, k) * pw[j - k]
        return out

    def __add__(self, other: "Polynomial") -> "Polynomial":
        a, b = self.coefficients, other.coefficients
        n = max(len(a), len(b))
        return Polynomial(np.pad(a, (0, n - len(a))) + np.pad(b, (0, n - len(b))))

    def __neg__(self) -> "Polynomial":
        return Polynomial(-self.coefficients)

    def __sub__(self, other: "Polynomial") -> "Polynomial":
        return self + (-other)

    def __mul__(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            return Polynomial(np.convolve(self.coefficients, other.coefficients))
        return Polynomial(self.coefficients * complex(other))

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        return isinstance(other, Polynomial) and np.array_equal(
            self.coefficients, other.coefficients
        )

    def __hash__(self):
        return hash(self.coefficients.tobytes())

    def __repr__(self) -> str:
        return f"Polynomial({np.array2string(self.coefficients, precision=6)})"


def _newton_polygon_start(absc: np.ndarray) -> np.ndarray:
    """Starting points on circles read off the upper convex hull of ``log|c_k|``.

    Each hull edge from ``k_i`` to ``k_j`` contributes ``k_j - k_i`` points on
    the circle of radius ``(|c_{k_i}| / |c_{k_j}|)**(1 / (k_j - k_i))``, so roots
    of very different magnitudes get starting values at their own scale.
    """
    n = len(absc) - 1
    with np.errstate(divide="ignore"):
        logc = np.log(absc)
    pts = [k for k in range(n + 1) if np.isfinite(logc[k])]
    hull: list[int] = []
    for k in pts:
        while len(hull) >= 2:
            i, j = hull[-2], hull[-1]
            # drop j if it lies on or below the chord from i to k
            if (logc[j] - logc[i]) * (k - i) <= (logc[k] - logc[i]) * (j - i):
                hull.pop()
            else:
                break
        hull.append(k)
    z = []
    for i, j in zip(hull, hull[1:]):
        m = j - i
        r = np.exp((logc[i] - logc[j]) / m)
        z.extend(r * np.exp(1j * (2 * np.pi * np.arange(m) / m + 2 * np.pi * i / n + 0.4)))
    return np.array(z, dtype=complex)


def _aberth(c: np.ndarray, tol: float, maxiter: int) -> np.ndarray:
    """Aberth-Ehrlich simultaneous iteration on monic-normalized coefficients."""
    n = len(c) - 1
    p = Polynomial(c)
    dp = p.derivative()
    absc = np.abs(c)
    z = _newton_polygon_start(absc)
    active = np.ones(n, dtype=bool)
    for _ in range(maxiter):
        if not active.any():
            break
        pz = p(z)
        bound = 8 * n * _EPS * Polynomial(absc)(np.abs(z)).real
        active &= np.abs(pz) > bound
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        ratio = pz[idx] / dp(z[idx])
        diff = z[idx, None] - z[None, :]
        diff[np.arange(idx.size), idx] = 1.0
        inv = 1.0 / diff
        inv[np.arange(idx.size), idx] = 0.0
        w = ratio / (1.0 - ratio * inv.sum(axis=1))
        z[idx] -= w
        done = np.abs(w) <= tol * (1 + np.abs(z[idx])) * 1e-3
        active[idx[done]] = False
    return z


def _is_multiple_root(p: Polynomial, z: np.ndarray) -> bool:
    """Decide whether the cluster ``z`` is one perturbed root of multiplicity ``len(z)``.

    At the centroid ``c`` of ``m`` distinct roots of spread ``rho`` the Taylor
    coefficients satisfy ``|T_k| ~ rho**(m-k) |T_m|``; for a perturbed
    multiple root they are far smaller.
    """
    m = len(z)
    c = z.mean()
    rho = float(np.max(np.abs(z - c)))
    t = p.taylor(c)
    absc = np.abs(p.coefficients)
    tm = abs(t[m])
    for k in range(m - 1):
        floor = 1e-13 * sum(
            absc[j] * comb(j, k) * abs(c) ** (j - k) for j in range(k, len(absc))
        )
        if abs(t[k]) > 0.1 * rho ** (m - k) * tm + floor:
            return False
    return True


def poly_roots(
    p: Polynomial, tol: float = DEFAULT_TOL, maxiter: int = 2000
) -> list[tuple[complex, int]]:
    """Roots of ``p`` with multiplicities.

    Simultaneous Aberth iteration followed by multiplicity clustering: roots
    closer than ``1e-7`` are merged outright, and wider groups (up to
    ``1e-2``) are merged when their centroid passes a Taylor-coefficient
    multiplicity test (see :func:`_is_multiple_root`).

    Returns
    -------
    list of (root, multiplicity), sorted by (real, imag).
    """
    if p.is_zero:
        raise ValueError("zero polynomial has no well-defined roots")
    c = p.coefficients / p.leading
    roots: list[complex] = []
    # strip exact zero roots first
    k0 = 0
    while k0 < len(c) - 1 and c[k0] == 0:
        k0 += 1
    roots.extend([0j] * k0)
    c = c[k0:]
    if len(c) > 1:
        roots.extend(_aberth(c, tol, maxiter).tolist())
    if not roots:
        return []

    z = np.array(roots, dtype=complex)
    clusters: list[list[int]] = []
    for comp in _linkage(z, 1e-2):
        if len(comp) > 1 and _is_multiple_root(p, z[comp]):
            clusters.append(comp)
        else:
            clusters.extend([comp[i] for i in sub] for sub in _linkage(z[comp], 1e-7))

    out = []
    for g in clusters:
        m = len(g)
        root = complex(z[g].mean())
        # Newton on the (m-1)-th derivative, where the root is simple
        q = p.derivative(m - 1)
        dq = q.derivative()
        for _ in range(8):
            d = complex(dq(root))
            if d == 0:
                break
            step = complex(q(root)) / d
            if not abs(step) < 1e-3 * (1 + abs(root)):
                break
            root -= step
            if abs(step) <= _EPS * (1 + abs(root)):
                break
        out.append((root, m))

    resid = _reconstruction_residual(p, out)
    if not np.isfinite(resid) or resid > max(1e-6, 1e4 * tol):
        raise ConvergenceError("root finder did not converge", resid)
    out.sort(key=lambda rm: (rm[0].real, rm[0].imag))
    return out


def _linkage(z: np.ndarray, rel: float) -> list[list[int]]:
    """Single-linkage components of ``z`` at relative distance ``rel``."""
    n = len(z)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if abs(z[i] - z[j]) < rel * (1 + abs(z[i])):
                parent[find(j)] = find(i)
    comps: dict[int, list[int]] = {}
    for i in range(n):
        comps.setdefault(find(i), []).append(i)
    return list(comps.values())


def _reconstruction_residual(p: Polynomial, roots: list[tuple[complex, int]]) -> float:
    flat = [r for r, m in roots for _ in range(m)]
    q = Polynomial.from_roots(flat, p.leading)
    if q.degree != p.degree:
        return np.inf
    return float(np.max(np.abs(q.coefficients - p.coefficients)) / np.max(np.abs(p.coefficients)))


# ---------------------------------------------------------------- quadrature


@dataclass(frozen=True)
class ContourSegment:
    """Straight segment ``[z0, z1]`` or circular arc in the x-plane.

    ``sing0``/``sing1`` flag an inverse-square-root singularity of the
    integrand at the start/end point.
    """

    kind: str
    z0: complex = 0j
    z1: complex = 0j
    center: complex = 0j
    radius: float = 0.0
    theta0: float = 0.0
    theta1: float = 0.0
    sing0: bool = False
    sing1: bool = False

    @classmethod
    def line(cls, z0, z1, sing0=False, sing1=False) -> "ContourSegment":
        z0, z1 = complex(z0), complex(z1)
        if z0 == z1:
            raise ValueError("segment has zero length")
        return cls("line", z0=z0, z1=z1, sing0=sing0, sing1=sing1)

    @classmethod
    def arc(cls, center, radius, theta0, theta1) -> "ContourSegment":
        if radius <= 0 or theta0 == theta1:
            raise ValueError("arc has zero length")
        return cls(
            "arc", center=complex(center), radius=float(radius),
            theta0=float(theta0), theta1=float(theta1),
        )

    @property
    def start(self) -> complex:
        return self.point(0.0)

    @property
    def end(self) -> complex:
        return self.point(1.0)

    @property
    def length(self) -> float:
        if self.kind == "line":
            return abs(self.z1 - self.z0)
        return self.radius * abs(self.theta1 - self.theta0)

    def point(self, s):
        if self.kind == "line":
            return self.z0 + np.asarray(s) * (self.z1 - self.z0)
        th = self.theta0 + np.asarray(s) * (self.theta1 - self.theta0)
        return self.center + self.radius * np.exp(1j * th)

    def tangent(self, s):
        """Derivative of :meth:`point` with respect to ``s``."""
        if self.kind == "line":
            return np.full(np.shape(s), self.z1 - self.z0, dtype=complex)
        dth = self.theta1 - self.theta0
        th = self.theta0 + np.asarray(s) * dth
        return 1j * dth * self.radius * np.exp(1j * th)

    def reversed(self) -> "ContourSegment":
        if self.kind == "line":
            return ContourSegment.line(self.z1, self.z0, self.sing1, self.sing0)
        return ContourSegment.arc(self.center, self.radius, self.theta1, self.theta0)


@lru_cache(maxsize=8)
def _gauss(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1), 0.5 * w


def integrate_segment(
    f: Callable[[np.ndarray], np.ndarray],
    seg: ContourSegment,
    tol: float = DEFAULT_TOL,
    order: int = 20,
    max_panels: int = 4000,
) -> tuple[np.ndarray | complex, float]:
    """Adaptive Gauss-Legendre integral of ``f(x) dx`` along ``seg``.

    ``f`` maps an array of x-values of shape ``(m,)`` to either ``(m,)`` or
    ``(k, m)`` (vector-valued integrands share panels).  Flagged endpoint
    singularities are removed by ``s = v**2`` (start) or ``s = 1 - v**2``
    (end); when both ends are flagged the segment is split at its midpoint.

    Returns
    -------
    (value, error_estimate)
    """
    if seg.sing0 and seg.sing1:
        mid = 0.5
        pieces = [(0.0, mid, True, False), (mid, 1.0, False, True)]
    else:
        pieces = [(0.0, 1.0, seg.sing0, seg.sing1)]
    total = 0.0
    err = 0.0
    for a, b, s0, s1 in pieces:
        g = _transformed(f, seg, a, b, s0, s1)
        v, e = _adaptive(g, tol / len(pieces), order, max_panels)
        total = total + v
        err += e
    return total, err


def _transformed(f, seg, a, b, s0, s1):
    h = b - a

    if s0:
        def g(v):
            s = a + h * v * v
            return f(seg.point(s)) * (seg.tangent(s) * 2 * h * v)
    elif s1:
        def g(v):
            s = b - h * v * v
            return f(seg.point(s)) * (seg.tangent(s) * 2 * h * v)

        return lambda v: g(1.0 - v)
    else:
        def g(v):
            s = a + h * v
            return f(seg.point(s)) * (seg.tangent(s) * h)
    return g


def _panel(g, lo, hi, order):
    x, w = _gauss(order)
    vals = g(lo + (hi - lo) * x)
    return (vals * w).sum(axis=-1) * (hi - lo)


def _adaptive(g, tol, order, max_panels):
    def split(lo, hi):
        mid = 0.5 * (lo + hi)
        whole = _panel(g, lo, hi, order)
        left = _panel(g, lo, mid, order)
        right = _panel(g, mid, hi, order)
        est = float(np.max(np.abs(whole - (left + right))))
        return est, left + right

    est, val = split(0.0, 1.0)
    heap = [(-est, 0.0, 1.0, val)]
    total_err = est
    npanels = 1
    while True:
        value = sum(item[3] for item in heap)
        scale = float(np.max(np.abs(value))) if np.size(value) else 0.0
        if total_err <= max(tol, 64 * _EPS * scale):
            return value, total_err
        if npanels >= max_panels:
            raise AccuracyError("quadrature did not reach tolerance", total_err)
        negest, lo, hi, _ = heapq.heappop(heap)
        total_err += negest
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            raise AccuracyError("quadrature panel underflow", total_err)
        for a, b in ((lo, mid), (mid, hi)):
            e, v = split(a, b)
            heapq.heappush(heap, (-e, a, b, v))
            total_err += e
        npanels += 1


# ------------------------------------------------------------ linear algebra


def solve_real_linear(M, b, max_condition: float = 1e12) -> np.ndarray:
    """Solve ``M c = b`` in real arithmetic, refusing near-singular ``M``."""
    M = np.asarray(M, dtype=float)
    b = np.asarray(b, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"matrix must be square, got shape {M.shape}")
    cond = np.linalg.cond(M)
    if not np.isfinite(cond) or cond > max_condition:
        raise NearSingularError("real linear system is near-singular", cond)
    c = np.linalg.solve(M, b)
    # one step of iterative refinement
    c = c + np.linalg.solve(M, b - M @ c)
    return c
