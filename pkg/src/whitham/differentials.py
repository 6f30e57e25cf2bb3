"""Meromorphic differentials ``(A(x) + B(x) y) / (C(x) y) dx`` on a hyperelliptic curve.

A differential with poles of order ``h`` at a marked point ``(x0, s)`` and no
pole at the conjugate point ``(x0, -s)`` is built by matching Laurent
coefficients in ``z = x - x0`` on both sheets.  With ``C = prod (x - x_i)**H_i``
and ``deg A <= H - 1``, ``deg B <= H - 2`` (``H = deg C``) the differential is
automatically holomorphic at infinity and at the branch points, and the
holomorphic part of the solution is zero.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .curve import HyperellipticCurve, MarkedPoint, SurfacePoint
from .errors import (
    ConsistencyError,
    EmptySingularPartError,
    GeometryError,
    ResidueTheoremError,
)
from .numerics import ContourSegment, Polynomial, integrate_segment, poly_roots

ZERO_COLLISION_TOL = 1e-8


@dataclass(frozen=True)
class SingularPart:
    """Principal part ``sum_j c^j z**(-j) dz`` at a marked point.

    ``coefficients[j-1]`` is ``c^j``; the top coefficient must be nonzero so
    the pole order is exactly ``marked.order``.
    """

    marked: MarkedPoint
    coefficients: tuple[complex, ...]

    def __post_init__(self):
        c = tuple(complex(v) for v in self.coefficients)
        object.__setattr__(self, "coefficients", c)
        if len(c) != self.marked.order:
            raise ValueError(
                f"need {self.marked.order} coefficients for a pole of order {self.marked.order}"
            )
        if c[-1] == 0:
            raise EmptySingularPartError(
                "empty singular part: top coefficient must be nonzero (pole order is exact)"
            )

    @property
    def residue(self) -> complex:
        return self.coefficients[0]

    def scaled(self, lam: complex) -> "SingularPart":
        return SingularPart(self.marked, tuple(lam * c for c in self.coefficients))

    @classmethod
    def second_kind(cls, point: SurfacePoint, r: complex = 1.0) -> "SingularPart":
        return cls(MarkedPoint(point, 2), (0.0, r))

    @classmethod
    def third_kind(cls, p1: SurfacePoint, p2: SurfacePoint, scale: float = 1.0):
        """Pair with residues ``+i*scale`` at ``p1`` and ``-i*scale`` at ``p2``."""
        return [
            cls(MarkedPoint(p1, 1), (1j * scale,)),
            cls(MarkedPoint(p2, 1), (-1j * scale,)),
        ]


class MeromorphicDifferential:
    """The differential ``(A + B y) / (C y) dx``.

    ``poles`` records the marked points carrying prescribed singular parts; it
    is used for divisor bookkeeping only.
    """

    def __init__(self, A: Polynomial, B: Polynomial, C: Polynomial, poles: Sequence[MarkedPoint] = ()):
        if C.is_zero:
            raise ValueError("denominator polynomial is zero")
        self.A = A
        self.B = B
        self.C = C
        self.poles = tuple(poles)

    def __call__(self, x, y):
        """Coefficient of ``dx`` at points ``(x, y)``."""
        x = np.asarray(x, dtype=complex)
        y = np.asarray(y, dtype=complex)
        return (self.A(x) + self.B(x) * y) / (self.C(x) * y)

    def at(self, curve: HyperellipticCurve, point: SurfacePoint) -> complex:
        return complex(self(point.x, curve.y_on(point.x, point.sheet)))

    def numerator(self, x, y):
        return self.A(x) + self.B(x) * y

    def __add__(self, other: "MeromorphicDifferential") -> "MeromorphicDifferential":
        poles = _merge_poles(self.poles, other.poles)
        if self.C == other.C:
            return MeromorphicDifferential(self.A + other.A, self.B + other.B, self.C, poles)
        return MeromorphicDifferential(
            self.A * other.C + other.A * self.C,
            self.B * other.C + other.B * self.C,
            self.C * other.C,
            poles,
        )

    def __mul__(self, lam) -> "MeromorphicDifferential":
        lam = complex(lam)
        return MeromorphicDifferential(self.A * lam, self.B * lam, self.C, self.poles if lam != 0 else ())

    __rmul__ = __mul__

    def __neg__(self) -> "MeromorphicDifferential":
        return self * -1.0

    def __sub__(self, other: "MeromorphicDifferential") -> "MeromorphicDifferential":
        return self + (-other)

    def to_json(self) -> dict:
        def enc(p: Polynomial):
            return [[float(c.real), float(c.imag)] for c in p.coefficients]

        return {"A": enc(self.A), "B": enc(self.B), "C": enc(self.C)}

    def __repr__(self) -> str:
        return f"MeromorphicDifferential(A={self.A}, B={self.B}, C={self.C})"


def _merge_poles(a, b):
    out = list(a)
    for p in b:
        if p not in out:
            out.append(p)
    return tuple(out)


def combine(coeffs: Sequence[complex], diffs: Sequence[MeromorphicDifferential]) -> MeromorphicDifferential:
    """``sum coeffs[k] * diffs[k]``."""
    out = None
    for c, d in zip(coeffs, diffs):
        term = d * c
        out = term if out is None else out + term
    return out


def holomorphic_basis(curve: HyperellipticCurve) -> list[MeromorphicDifferential]:
    """The raw basis ``x**(k-1) dx / y``, ``k = 1..g``."""
    g = curve.genus
    if g < 1:
        raise ValueError("genus must be at least 1")
    one = Polynomial([1.0])
    zero = Polynomial([0.0])
    basis = []
    for k in range(g):
        A = Polynomial(np.eye(1, k + 1, k)[0])
        # x^k dx/y is holomorphic at infinity iff k <= g - 1
        assert A.degree <= g - 1
        basis.append(MeromorphicDifferential(A, zero, one))
    return basis


# ------------------------------------------------------------ power series


def _series_mul(a, b, n):
    return np.convolve(a[:n], b[:n])[:n]


def _series_inv(a, n):
    out = np.zeros(n, dtype=complex)
    out[0] = 1.0 / a[0]
    for k in range(1, n):
        acc = 0j
        for j in range(1, min(k, len(a) - 1) + 1):
            acc += a[j] * out[k - j]
        out[k] = -acc / a[0]
    return out


def _series_sqrt(p, y0, n):
    """Power series of ``sqrt(p(z))`` with constant term ``y0``."""
    p = np.pad(np.asarray(p, dtype=complex), (0, max(0, n - len(p))))
    out = np.zeros(n, dtype=complex)
    out[0] = y0
    for k in range(1, n):
        acc = sum(out[j] * out[k - j] for j in range(1, k))
        out[k] = (p[k] - acc) / (2 * y0)
    return out


def _group_points(parts: Sequence[SingularPart], tol: float = 1e-12):
    groups: list[dict] = []
    for part in parts:
        x = part.marked.x
        for g in groups:
            if abs(g["x"] - x) <= tol * (1 + abs(x)):
                break
        else:
            g = {"x": x, "parts": {}}
            groups.append(g)
        s = part.marked.sheet
        if s in g["parts"]:
            raise ValueError(f"two singular parts prescribed at the same point x={x}")
        g["parts"][s] = part
    for g in groups:
        g["H"] = max(p.marked.order for p in g["parts"].values())
    return groups


def build_with_singular_parts(
    curve: HyperellipticCurve, parts: Sequence[SingularPart], residue_tol: float = 1e-12
) -> MeromorphicDifferential:
    """Differential with exactly the prescribed principal parts and zero holomorphic part.

    Raises
    ------
    EmptySingularPartError
        if ``parts`` is empty.
    ResidueTheoremError
        if the prescribed residues do not sum to zero.
    """
    if not parts:
        raise EmptySingularPartError("empty singular part: at least one pole is required")
    res = sum(p.residue for p in parts)
    scale = max(1.0, max(abs(c) for p in parts for c in p.coefficients))
    if abs(res) > residue_tol * scale:
        raise ResidueTheoremError(f"residues sum to {res:.3e}, not zero")
    for p in parts:
        if curve.branch_distance(p.marked.x) <= 1e-8 * (1 + abs(p.marked.x)):
            raise GeometryError("marked point lies on the branch locus")

    groups = _group_points(parts)
    C = Polynomial([1.0])
    for g in groups:
        for _ in range(g["H"]):
            C = C * Polynomial([-g["x"], 1.0])
    H = C.degree
    nA, nB = H, H - 1
    rows = []
    rhs = []
    for g in groups:
        x0, Hi = g["x"], g["H"]
        Cq = C.taylor(x0)[Hi:]  # C(x0 + z) / z**Hi
        Pt = curve.P.taylor(x0)
        inv_C = _series_inv(Cq, Hi)
        yp0 = complex(curve.y(x0))
        # A and B monomials expanded at x0
        monoA = [Polynomial(np.eye(1, k + 1, k)[0]).taylor(x0) for k in range(nA)]
        monoB = [Polynomial(np.eye(1, k + 1, k)[0]).taylor(x0) for k in range(nB)]
        for sheet in (1, -1):
            Y = _series_sqrt(Pt, sheet * yp0, Hi)
            s_a = _series_mul(inv_C, _series_inv(Y, Hi), Hi)
            block = np.zeros((Hi, nA + nB), dtype=complex)
            for k, m in enumerate(monoA):
                block[:, k] = _series_mul(np.pad(m, (0, max(0, Hi - len(m)))), s_a, Hi)
            for k, m in enumerate(monoB):
                block[:, nA + k] = _series_mul(np.pad(m, (0, max(0, Hi - len(m)))), inv_C, Hi)
            target = np.zeros(Hi, dtype=complex)
            part = g["parts"].get(sheet)
            if part is not None:
                # series index j holds the coefficient of z**(j - Hi)
                for j, c in enumerate(part.coefficients, start=1):
                    target[Hi - j] = c
            rows.append(block)
            rhs.append(target)
    M = np.vstack(rows)
    b = np.concatenate(rhs)
    # column scaling keeps monomials at large |x0| comparable
    colscale = np.maximum(np.linalg.norm(M, axis=0), 1e-300)
    u, *_ = np.linalg.lstsq(M / colscale, b, rcond=None)
    u = u / colscale
    resid = np.linalg.norm(M @ u - b)
    if resid > 1e-9 * (1 + np.linalg.norm(b)):
        rank = np.linalg.matrix_rank(M / colscale)
        raise ConsistencyError(
            f"singular-part system unsolvable: residual {resid:.3e}, rank {rank} of {M.shape}"
        )
    A = Polynomial(u[:nA])
    B = Polynomial(u[nA:]) if nB > 0 else Polynomial([0.0])
    return MeromorphicDifferential(A, B, C, tuple(p.marked for p in parts))


# ----------------------------------------------------- numerical expansions


def _local_radius(curve: HyperellipticCurve, x0: complex, others: Sequence[complex] = ()) -> float:
    pts = list(curve.branch_points) + [o for o in others if abs(o - x0) > 1e-12 * (1 + abs(x0))]
    dist = min(abs(p - x0) for p in pts)
    # P(x)/P(x0) has phase below n*asin(r/dist) on the circle; keeping it
    # under pi/2 keeps the principal square root on one branch.  A larger
    # circle keeps high-order poles well conditioned (|f| ~ r**-h).
    n = max(curve.degree, 1)
    return min(0.25, 0.5 * np.sin(np.pi / (2 * n))) * dist


def small_loop_integral(
    diff: MeromorphicDifferential,
    curve: HyperellipticCurve,
    point: SurfacePoint,
    weight=None,
    radius: float | None = None,
    tol: float = 1e-12,
) -> complex:
    """``oint diff * weight(z)`` over a small counterclockwise circle around ``point``.

    ``y`` is continued from the point's sheet by ``y0 * sqrt(P(x)/P(x0))``,
    valid because the circle stays far inside the distance to the branch
    points.
    """
    x0 = point.x
    others = [p.x for p in diff.poles]
    if radius is None:
        radius = _local_radius(curve, x0, others)
    dmin = min([abs(e - x0) for e in curve.branch_points] + [abs(o - x0) for o in others if o != x0] + [np.inf])
    if radius >= 0.5 * dmin:
        raise GeometryError("loop radius collides with another singularity")
    y0 = complex(curve.y_on(x0, point.sheet))
    p0 = complex(curve.P(x0))

    def f(x):
        y = y0 * np.sqrt(curve.P(x) / p0)
        val = diff(x, y)
        if weight is not None:
            val = val * weight(x - x0)
        return val

    seg = ContourSegment.arc(x0, radius, 0.0, 2 * np.pi)
    probe = x0 + radius * np.exp(2j * np.pi * np.arange(16) / 16)
    mag = float(np.max(np.abs(f(probe)))) * 2 * np.pi * radius
    val, _ = integrate_segment(f, seg, tol=tol * max(mag, 1e-300))
    return complex(val)


def residue(diff: MeromorphicDifferential, curve: HyperellipticCurve, point: SurfacePoint | MarkedPoint) -> complex:
    """``(1 / 2 pi i) oint diff`` over a small sheet-aware loop."""
    if isinstance(point, MarkedPoint):
        point = point.point
    return small_loop_integral(diff, curve, point) / (2j * np.pi)


def laurent_coefficients(
    diff: MeromorphicDifferential, curve: HyperellipticCurve, point: SurfacePoint | MarkedPoint, order: int
) -> np.ndarray:
    """``c^1..c^order`` of the principal part at ``point`` by contour integrals."""
    if isinstance(point, MarkedPoint):
        point = point.point
    out = []
    for j in range(1, order + 1):
        val = small_loop_integral(diff, curve, point, weight=lambda z, j=j: z ** (j - 1))
        out.append(val / (2j * np.pi))
    return np.array(out)


# ------------------------------------------------------------ zero divisor


@dataclass(frozen=True)
class Zero:
    point: SurfacePoint
    multiplicity: int


def _numeric_degree(p: Polynomial, rtol: float = 1e-13) -> int:
    c = np.abs(p.coefficients)
    if c.max() == 0:
        return -1
    nz = np.flatnonzero(c > rtol * c.max())
    return int(nz[-1])


def _divide_out(R: Polynomial, root: complex, times: int) -> Polynomial:
    c = R.coefficients[::-1].copy()  # descending
    for _ in range(times):
        out = np.zeros(len(c) - 1, dtype=complex)
        acc = 0j
        for k in range(len(c) - 1):
            acc = acc * root + c[k]
            out[k] = acc
        rem = acc * root + c[-1]
        if abs(rem) > 1e-7 * np.max(np.abs(c)) * (1 + abs(root)) ** len(c):
            raise ConsistencyError("expected factor of the norm polynomial is missing")
        c = out
    return Polynomial(c[::-1])


def zero_divisor(diff: MeromorphicDifferential, curve: HyperellipticCurve) -> list[Zero]:
    """Zeros of ``diff`` with multiplicities, including branch points and infinity.

    Affine zeros come from the norm ``R = A**2 - B**2 P`` after removing the
    factors cancelled by ``C``; the sheet of each zero is fixed by
    ``y = -A/B``.  Orders at infinity follow from degree bookkeeping and the
    total is checked against ``2g - 2 + sum h``.
    """
    g = curve.genus
    A, B, C, P = diff.A, diff.B, diff.C, curve.P
    R = A * A - B * B * P
    poles = diff.poles
    pole_total = sum(p.order for p in poles)

    # factors of R that cancel against C on the non-polar sheets
    cpoly_roots = poly_roots(C) if C.degree > 0 else []
    for xr, Hi in cpoly_roots:
        at = {p.sheet: p.order for p in poles if abs(p.x - xr) <= 1e-9 * (1 + abs(xr))}
        m = sum(Hi - at.get(s, 0) for s in (1, -1))
        R = _divide_out(R, xr, m)

    zeros: list[Zero] = []
    affine = 0
    if _numeric_degree(R) > 0:
        R = Polynomial(R.coefficients[: _numeric_degree(R) + 1])
        for r, mult in poly_roots(R):
            affine += mult
            if curve.branch_distance(r) <= ZERO_COLLISION_TOL * (1 + abs(r)):
                e = min(curve.branch_points, key=lambda b: abs(b - r))
                zeros.append(Zero(SurfacePoint(e, 0), mult))
                continue
            near = [p for p in poles if abs(p.x - r) <= ZERO_COLLISION_TOL * (1 + abs(r))]
            if near:
                sheets = {p.sheet for p in near}
                if len(sheets) == 2:
                    raise GeometryError("zero collides with a marked point")
                zeros.append(Zero(SurfacePoint(r, -near[0].sheet), mult))
                continue
            a, b = complex(A(r)), complex(B(r))
            scale_ab = abs(a) + abs(b) * abs(complex(curve.y(r)))
            if abs(b) * abs(complex(curve.y(r))) <= 1e-10 * max(scale_ab, 1e-300):
                raise GeometryError("degenerate configuration: zero on both sheets")
            zeros.append(Zero(SurfacePoint(r, curve.sheet_of(r, -a / b)), mult))

    dA, dB = _numeric_degree(A), _numeric_degree(B)
    H = C.degree
    if curve.infinite_branch:
        cand = []
        if dA >= 0:
            cand.append(-2 * dA)
        if dB >= 0:
            cand.append(-2 * dB - (2 * g + 1))
        ordF = min(cand)
        order = ordF + 2 * H + 2 * g - 2
        if order < 0:
            raise ConsistencyError("differential has a pole at infinity")
        if order > 0:
            zeros.append(Zero(SurfacePoint(complex(np.inf), 0, infinity=True), order))
    else:
        D = max(dA, dB + g + 1 if dB >= 0 else -1)
        degR = A * A - B * B * P
        degR = _numeric_degree(degR)
        xbig = 1e3 * (1 + curve.scale + max((abs(p.x) for p in poles), default=0))
        mags = {}
        for s in (1, -1):
            mags[s] = abs(complex(A(xbig) + B(xbig) * s * curve.y(xbig)))
        ords = {1: -D, -1: -D}
        if degR < 2 * D:
            small = min(mags, key=mags.get)
            ords[small] = -(degR - D)
        for s in (1, -1):
            order = ords[s] + H + g - 1
            if order < 0:
                raise ConsistencyError("differential has a pole at infinity")
            if order > 0:
                zeros.append(Zero(SurfacePoint(complex(np.inf), s, infinity=True), order))

    total = sum(z.multiplicity for z in zeros)
    expected = 2 * g - 2 + pole_total
    if total != expected:
        raise ConsistencyError(f"zero count {total} differs from 2g-2+sum h = {expected}")
    return zeros


def zero_points(zeros: Sequence[Zero]) -> list[SurfacePoint]:
    """Zeros repeated according to multiplicity."""
    return [z.point for z in zeros for _ in range(z.multiplicity)]
