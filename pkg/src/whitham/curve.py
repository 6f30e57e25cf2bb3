"""Hyperelliptic curves ``y**2 = P(x)``, their sheets, cycles and homology basis.

The sheet structure is fixed by a branch-cut system: branch points are kept in
a *pairing order* (sorted by real then imaginary part by :func:`build_curve`)
and consecutive pairs ``(e1, e2), (e3, e4), ...`` are joined by straight cuts.
For odd degree the last finite branch point is joined to infinity by the
horizontal ray pointing to the right.  The principal branch ``y_p`` is the
function that is analytic off these cuts and behaves like
``sqrt(lc) * x**(d/2)`` at infinity; a point on sheet ``s`` has ``y = s * y_p``.

Cycles are closed polygons in the x-plane lifted to the surface by counting
cut crossings.  Intersection numbers are signed crossing counts of the planar
projections, restricted to crossings where both lifts are on the same sheet.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import ConsistencyError, GeometryError, NodalCurveError
from .numerics import ContourSegment, Polynomial, poly_roots

SQUAREFREE_TOL = 1e-8


@dataclass(frozen=True)
class SurfacePoint:
    """A point of the curve: x-coordinate plus sheet (0 at a branch point)."""

    x: complex
    sheet: int = 1
    infinity: bool = False

    @property
    def is_branch(self) -> bool:
        return self.sheet == 0


@dataclass(frozen=True)
class MarkedPoint:
    """Marked point with pole order; local coordinate is ``z = x - x(point)``."""

    point: SurfacePoint
    order: int

    def __post_init__(self):
        if self.order < 1:
            raise ValueError("pole order must be positive")
        if self.point.is_branch or self.point.infinity:
            raise ValueError("marked points must be ordinary finite points")

    @property
    def x(self) -> complex:
        return self.point.x

    @property
    def sheet(self) -> int:
        return self.point.sheet


class HyperellipticCurve:
    """The curve ``y**2 = P(x)`` with a fixed branch-cut system.

    Parameters
    ----------
    P : Polynomial
        Squarefree, degree at least 3.
    branch_points : sequence of complex
        The roots of ``P`` in pairing order.  Use :func:`build_curve` to get
        the canonical sorted order.
    """

    def __init__(self, P: Polynomial, branch_points: Sequence[complex]):
        self.P = P
        self.branch_points = tuple(complex(e) for e in branch_points)
        d = P.degree
        if len(self.branch_points) != d:
            raise ValueError("need exactly deg P branch points")
        self.degree = d
        self.infinite_branch = d % 2 == 1
        m = d + (1 if self.infinite_branch else 0)
        self.genus = (m + 1) // 2 - 1
        self.leading = P.leading
        self._sqrt_lc = np.sqrt(complex(self.leading))
        e = self.branch_points
        pairs = [(e[2 * k], e[2 * k + 1]) for k in range(d // 2)]
        self._pairs = pairs
        self._ray = e[-1] if self.infinite_branch else None
        self._dP = P.derivative()

    # ------------------------------------------------------------------ basics

    @classmethod
    def from_roots(cls, roots: Sequence[complex], leading: complex = 1.0) -> "HyperellipticCurve":
        """Curve with the given roots kept in the given pairing order."""
        return cls(Polynomial.from_roots(roots, leading), roots)

    @property
    def cuts(self) -> list[tuple[complex, complex]]:
        """Cuts as ``(a, b)`` pairs; ``b`` is ``inf`` for the ray to infinity."""
        out = list(self._pairs)
        if self._ray is not None:
            out.append((self._ray, complex(np.inf)))
        return out

    @property
    def scale(self) -> float:
        e = np.array(self.branch_points)
        return float(max(np.max(np.abs(e - e.mean())), 1e-300))

    def y(self, x) -> np.ndarray:
        """Principal branch ``y_p(x)``, analytic off the cuts."""
        x = np.asarray(x, dtype=complex)
        out = np.full(x.shape, self._sqrt_lc, dtype=complex)
        for a, b in self._pairs:
            xa = x - a
            out = out * xa * np.sqrt((x - b) / xa)
        if self._ray is not None:
            out = out * 1j * np.sqrt(self._ray - x)
        return out

    def y_on(self, x, sheet: int) -> np.ndarray:
        return sheet * self.y(x)

    def sheet_of(self, x: complex, y: complex) -> int:
        yp = complex(self.y(x))
        return 1 if abs(y - yp) <= abs(y + yp) else -1

    def point(self, x: complex, sheet: int = 1) -> SurfacePoint:
        """Surface point over ``x``; verifies the y-value satisfies the equation."""
        y = complex(self.y_on(x, sheet))
        px = complex(self.P(x))
        if abs(y * y - px) > 1e-9 * (1 + abs(px)):
            raise ConsistencyError(f"sheet function inconsistent at x={x}")
        return SurfacePoint(complex(x), sheet)

    def branch_distance(self, x: complex) -> float:
        return float(np.min(np.abs(np.array(self.branch_points) - x)))

    def is_branch_point(self, x: complex, tol: float = 1e-12) -> bool:
        return self.branch_distance(x) <= tol * (1 + abs(x))

    # ----------------------------------------------------------------- cutting

    def cut_crossings(self, seg: ContourSegment) -> list[float]:
        """Parameters ``s`` in ``(0, 1)`` where a straight segment crosses a cut."""
        if seg.kind != "line":
            raise ValueError("cut crossings are only computed for straight segments")
        p, q = seg.z0, seg.z1
        d = q - p
        out = []
        for a, b in self._pairs:
            s = _segment_hit(p, d, a, b - a, ray=False)
            if s is not None:
                out.append(s)
        if self._ray is not None:
            s = _segment_hit(p, d, self._ray, 1.0 + 0j, ray=True)
            if s is not None:
                out.append(s)
        return sorted(out)

    def lift_polyline(
        self, vertices: Sequence[complex], sheet: int, closed: bool = True
    ) -> tuple[tuple[tuple[ContourSegment, int], ...], int]:
        """Split a polyline at cut crossings and assign sheets.

        Returns the pieces and the sheet on arrival at the final vertex.
        """
        verts = [complex(v) for v in vertices]
        if closed:
            verts = verts + [verts[0]]
        pieces = []
        s = sheet
        for z0, z1 in zip(verts[:-1], verts[1:]):
            seg = ContourSegment.line(z0, z1)
            cuts = self.cut_crossings(seg)
            knots = [0.0] + cuts + [1.0]
            for i, (u0, u1) in enumerate(zip(knots[:-1], knots[1:])):
                if i > 0:
                    s = -s
                if u1 - u0 <= 0:
                    continue
                pieces.append((ContourSegment.line(seg.point(u0), seg.point(u1)), s))
        return tuple(pieces), s


def _segment_hit(p, d, a, e, ray: bool) -> float | None:
    """Parameter s in (0,1) with p + s d = a + u e, u in (0,1) (or (0, inf) for a ray)."""
    den = (d.conjugate() * e).imag
    if den == 0:
        return None
    w = a - p
    s = (w.conjugate() * e).imag / den
    u = (w.conjugate() * d).imag / den
    if not 0.0 < s < 1.0:
        return None
    if u <= 0.0 or (not ray and u >= 1.0):
        return None
    return float(s)


def build_curve(P: Polynomial) -> HyperellipticCurve:
    """Canonical curve for ``P``: roots sorted by (real, imag), squarefree checked."""
    if P.degree < 3:
        raise ValueError("hyperelliptic curves need deg P >= 3")
    roots = poly_roots(P)
    if any(m > 1 for _, m in roots):
        raise NodalCurveError("nodal input: P has a repeated root")
    r = np.array([z for z, _ in roots])
    for i in range(len(r)):
        for j in range(i + 1, len(r)):
            if abs(r[i] - r[j]) <= SQUAREFREE_TOL:
                raise NodalCurveError(
                    f"nodal input: roots {r[i]:.3g} and {r[j]:.3g} closer than {SQUAREFREE_TOL}"
                )
    order = sorted(r.tolist(), key=lambda z: (z.real, z.imag))
    return HyperellipticCurve(P, order)


# ------------------------------------------------------------------- cycles


@dataclass(frozen=True)
class Cycle:
    """Integer chain of closed lifted polygons.

    ``loops[k]`` is a tuple of ``(ContourSegment, sheet)`` pieces closing up on
    the surface; the chain is ``sum coefficients[k] * loops[k]``.
    """

    loops: tuple[tuple[tuple[ContourSegment, int], ...], ...]
    coefficients: tuple[int, ...]
    label: str = "generic"

    @property
    def segments(self) -> list[tuple[ContourSegment, int]]:
        return [piece for loop in self.loops for piece in loop]

    def __add__(self, other: "Cycle") -> "Cycle":
        return _combine([(1, self), (1, other)], label="generic")

    def __neg__(self) -> "Cycle":
        return Cycle(self.loops, tuple(-c for c in self.coefficients), self.label)

    def __sub__(self, other: "Cycle") -> "Cycle":
        return self + (-other)

    def __rmul__(self, k: int) -> "Cycle":
        return Cycle(self.loops, tuple(int(k) * c for c in self.coefficients), self.label)

    def relabel(self, label: str) -> "Cycle":
        return Cycle(self.loops, self.coefficients, label)

    def check_closed(self, curve: HyperellipticCurve) -> None:
        for loop in self.loops:
            for (seg, s), (nxt, s2) in zip(loop, loop[1:] + loop[:1]):
                if abs(seg.end - nxt.start) > 1e-12 * (1 + abs(seg.end)):
                    raise ConsistencyError("cycle pieces do not join")
                if s != s2 and not curve.cut_crossings(
                    ContourSegment.line(seg.point(0.5), nxt.point(0.5))
                ):
                    raise ConsistencyError("sheet mismatch between consecutive pieces")


def _combine(terms: Iterable[tuple[int, Cycle]], label: str) -> Cycle:
    loops: list = []
    coeffs: list[int] = []
    for k, cyc in terms:
        for loop, c in zip(cyc.loops, cyc.coefficients):
            if loop in loops:
                coeffs[loops.index(loop)] += k * c
            else:
                loops.append(loop)
                coeffs.append(k * c)
    keep = [i for i, c in enumerate(coeffs) if c != 0]
    return Cycle(tuple(loops[i] for i in keep), tuple(coeffs[i] for i in keep), label)


def integer_combination(coeffs: Sequence[int], cycles: Sequence[Cycle], label: str = "generic") -> Cycle:
    return _combine(zip((int(c) for c in coeffs), cycles), label)


def polygon_cycle(
    curve: HyperellipticCurve, vertices: Sequence[complex], sheet: int = 1, label: str = "generic"
) -> Cycle:
    """Closed polygon lifted from ``sheet`` at its first vertex."""
    pieces, final = curve.lift_polyline(vertices, sheet, closed=True)
    if final != sheet:
        raise ConsistencyError("polygon does not close on the surface (odd number of branch points enclosed)")
    return Cycle((pieces,), (1,), label)


def stadium(
    a: complex, b: complex, width: float, points_per_cap: int = 6, twist: float = 0.0
) -> list[complex]:
    """Counterclockwise polygonal stadium of half-width ``width`` around ``[a, b]``.

    ``twist`` rotates the cap vertices (used to move vertices off branch cuts).
    """
    u = (b - a) / abs(b - a)
    th = np.linspace(-np.pi / 2, np.pi / 2, points_per_cap) + twist
    cap_b = b + width * np.exp(1j * th) * u
    cap_a = a + width * np.exp(1j * (th + np.pi)) * u
    return list(cap_b) + list(cap_a)


def _dist_to_segment(p: complex, a: complex, b: complex) -> float:
    d = b - a
    t = ((p - a) * d.conjugate()).real / abs(d) ** 2
    t = min(max(t, 0.0), 1.0)
    return abs(p - (a + t * d))


def _clear_of_cuts(curve: HyperellipticCurve, verts: Sequence[complex]) -> bool:
    tol = 1e-9 * (1 + curve.scale)
    for v in verts:
        for a, b in curve.cuts:
            if np.isinf(b):
                if abs(v.imag - a.imag) <= tol and v.real >= a.real - tol:
                    return False
            elif _dist_to_segment(v, a, b) <= tol:
                return False
    return True


def intersection_number(c1: Cycle, c2: Cycle) -> int:
    """Algebraic intersection number ``c1 . c2`` from signed same-sheet crossings."""
    total = 0
    for loop1, k1 in zip(c1.loops, c1.coefficients):
        for loop2, k2 in zip(c2.loops, c2.coefficients):
            total += k1 * k2 * _loop_intersection(loop1, loop2)
    return total


def _loop_intersection(loop1, loop2) -> int:
    n = 0
    for seg1, s1 in loop1:
        p, d = seg1.z0, seg1.z1 - seg1.z0
        for seg2, s2 in loop2:
            if s1 != s2:
                continue
            q, e = seg2.z0, seg2.z1 - seg2.z0
            den = (d.conjugate() * e).imag
            if den == 0:
                continue
            w = q - p
            s = (w.conjugate() * e).imag / den
            u = (w.conjugate() * d).imag / den
            if 0.0 <= s < 1.0 and 0.0 <= u < 1.0:
                n += 1 if den > 0 else -1
    return n


def intersection_matrix(cycles: Sequence[Cycle]) -> np.ndarray:
    k = len(cycles)
    M = np.zeros((k, k), dtype=int)
    for i in range(k):
        for j in range(i + 1, k):
            M[i, j] = intersection_number(cycles[i], cycles[j])
            M[j, i] = -M[i, j]
    return M


def standard_symplectic(g: int) -> np.ndarray:
    J = np.zeros((2 * g, 2 * g), dtype=int)
    J[:g, g:] = np.eye(g, dtype=int)
    J[g:, :g] = -np.eye(g, dtype=int)
    return J


def chain_loops(
    curve: HyperellipticCurve, avoid: Sequence[complex] = ()
) -> list[Cycle]:
    """The 2g stadium loops around consecutive branch points ``(e_k, e_{k+1})``.

    Loops are counterclockwise; the sheet of each loop after the first is
    chosen so that consecutive loops intersect with ``+1``.
    """
    g = curve.genus
    e = curve.branch_points
    obstacles = list(e) + [complex(a) for a in avoid]
    loops: list[Cycle] = []
    for k in range(2 * g):
        a, b = e[k], e[k + 1]
        others = [o for o in obstacles if o != a and o != b]
        dmin = min(_dist_to_segment(o, a, b) for o in others) if others else abs(b - a)
        dmin = min(dmin, abs(b - a))
        width = 0.3 * dmin * (1.0 if k % 2 == 0 else 0.7)
        if width <= 1e-12 * (1 + abs(a) + abs(b)):
            raise GeometryError(f"no room for a loop around branch points {a:.3g}, {b:.3g}")
        verts = stadium(a, b, width)
        for attempt in range(1, 21):
            if _clear_of_cuts(curve, verts):
                break
            verts = stadium(a, b, width * 0.97**attempt, twist=0.05 * attempt)
        else:
            raise GeometryError("could not place loop vertices off the branch cuts")
        cyc = polygon_cycle(curve, verts, 1, label=f"c{k + 1}")
        if loops:
            inter = intersection_number(loops[-1], cyc)
            if inter == -1:
                cyc = polygon_cycle(curve, verts, -1, label=f"c{k + 1}")
            elif inter != 1:
                raise ConsistencyError(
                    f"chain loops c{k} and c{k + 1} intersect {inter} times (expected +-1)"
                )
        loops.append(cyc)
    return loops


def homology_basis(curve: HyperellipticCurve, avoid: Sequence[complex] = ()) -> list[Cycle]:
    """Standard symplectic basis ``A_1..A_g, B_1..B_g``.

    ``A_i`` is the loop around the i-th cut; ``B_i`` is the sum of the even
    chain loops ``c_{2i} + c_{2i+2} + ... + c_{2g}``, homologous to a loop
    through cut ``i`` and cut ``g+1``.  ``avoid`` lists extra x-values (poles)
    the loops must keep clear of.
    """
    g = curve.genus
    if g < 1:
        raise ValueError("homology basis needs genus >= 1")
    c = chain_loops(curve, avoid)
    A = [c[2 * i].relabel(f"A{i + 1}") for i in range(g)]
    B = [
        integer_combination([1] * (g - i), [c[2 * k + 1] for k in range(i, g)], label=f"B{i + 1}")
        for i in range(g)
    ]
    basis = A + B
    for cyc in basis:
        cyc.check_closed(curve)
    M = intersection_matrix(basis)
    if not np.array_equal(M, standard_symplectic(g)):
        raise ConsistencyError(f"intersection matrix is not standard:\n{M}")
    return basis


def transform_basis(basis: Sequence[Cycle], G: np.ndarray) -> list[Cycle]:
    """New cycles ``(A'; B') = G (A; B)`` for an integer matrix ``G``."""
    G = np.asarray(G)
    g = len(basis) // 2
    names = [f"A{i + 1}" for i in range(g)] + [f"B{i + 1}" for i in range(g)]
    return [integer_combination(G[r], basis, label=names[r]) for r in range(2 * g)]


# -------------------------------------------------------------- continuation


def continue_sheet(
    curve: HyperellipticCurve,
    path: Sequence[ContourSegment],
    start: SurfacePoint,
    min_distance: float = 1e-6,
) -> SurfacePoint:
    """Analytic continuation of ``y`` along ``path``, step by step.

    Steps are halved until ``|Delta arg P| < pi/4``; at each step the root of
    ``y**2 = P`` closest to the previous value is kept.  Independent of the
    cut system except for labelling the endpoint sheet.
    """
    e = np.array(curve.branch_points)
    x = start.x
    y = complex(curve.y_on(x, start.sheet))
    for seg in path:
        pts = seg.point(np.linspace(0, 1, 257))
        if np.min(np.abs(pts[:, None] - e[None, :])) <= min_distance:
            raise GeometryError("path passes within proximity tolerance of a branch point")
        if seg.kind == "line":
            for eb in e:
                if _dist_to_segment(eb, seg.z0, seg.z1) <= min_distance:
                    raise GeometryError("path passes within proximity tolerance of a branch point")
        s = 0.0
        h = 1.0 / 16
        px = complex(curve.P(seg.point(0.0)))
        while s < 1.0:
            h = min(h, 1.0 - s)
            xn = complex(seg.point(s + h))
            pn = complex(curve.P(xn))
            if abs(np.angle(pn / px)) >= np.pi / 4:
                h *= 0.5
                if h < 1e-14:
                    raise GeometryError("continuation step underflow")
                continue
            r = np.sqrt(pn)
            y = r if abs(r - y) <= abs(r + y) else -r
            s += h
            px = pn
            h *= 2.0
        x = complex(seg.end)
    return SurfacePoint(x, curve.sheet_of(x, y))
