"""Critical values, coordinate charts, Jacobian rank checks and leaf tracing.

For a differential ``Psi`` with zeros ``q_1..q_N`` the critical values are
``phi_j = int_{q_1}^{q_j} Psi``.  For real-normalized ``Psi`` the imaginary
parts do not depend on the integration path, ``q_1`` is the zero minimizing
``Im int_{p0}^{q} Psi`` and the symmetric functions ``s_j`` of ``Im phi`` are
global invariants.  The local chart is

    (residues r_1..r_{n-1}, alpha, beta, sigma_1..sigma_{N-1}),

``sigma_k`` being the elementary symmetric polynomials of ``phi_2..phi_N``.

Local deformations are parametrized by complex parameters
``(free branch points, x of each marked group, residues of all but the last
part, higher Laurent coefficients, raw holomorphic coefficients)``; see
:class:`LocalFamily`.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .curve import (
    HyperellipticCurve,
    MarkedPoint,
    SurfacePoint,
    build_curve,
    homology_basis,
)
from .differentials import (
    MeromorphicDifferential,
    SingularPart,
    build_with_singular_parts,
    combine,
    holomorphic_basis,
    zero_divisor,
    zero_points,
)
from .errors import (
    ContinuationStallError,
    ConvergenceError,
    GeometryError,
    StepSizeError,
    WhithamError,
)
from .numerics import ContourSegment, Polynomial, integrate_segment
from .periods import periods_over_basis
from .realnorm import RealNormalizedDifferential

log = logging.getLogger(__name__)

ROUTE_MARGIN = 1e-2
PATH_TOL = 1e-12


# ------------------------------------------------------------------ routing


def _dist_to_segment(p: complex, a: complex, b: complex) -> tuple[float, float]:
    d = b - a
    t = ((p - a) * d.conjugate()).real / abs(d) ** 2
    t = min(max(t, 0.0), 1.0)
    return abs(p - (a + t * d)), t


def route(
    a: complex,
    b: complex,
    obstacles: Sequence[complex],
    margin: float,
    side: int = 1,
    depth: int = 0,
) -> list[complex]:
    """Polyline from ``a`` to ``b`` passing every obstacle at distance ``>= margin``.

    Obstacles hit by the straight segment are bypassed by a waypoint offset
    perpendicular to the segment on the ``side`` (``+1`` left, ``-1`` right).
    Obstacles within ``2 * margin`` of an endpoint are ignored.
    """
    if depth > 40:
        raise GeometryError("path routing failed: no clear route between obstacles")
    if a == b:
        return [a]
    active = [o for o in obstacles if abs(o - a) > 2 * margin and abs(o - b) > 2 * margin]
    hits = []
    for o in active:
        d, t = _dist_to_segment(o, a, b)
        if d < margin:
            hits.append((t, o))
    if not hits:
        return [a, b]
    t, o = min(hits, key=lambda h: h[0])
    n = 1j * (b - a) / abs(b - a) * side
    for k in range(3, 30):
        w = o + k * margin * n
        if all(abs(w - p) > 2 * margin for p in active):
            break
    else:
        raise GeometryError("path routing failed: obstacle cluster too dense")
    first = route(a, w, obstacles, margin, side, depth + 1)
    second = route(w, b, obstacles, margin, side, depth + 1)
    return first[:-1] + second


@dataclass(frozen=True)
class Path:
    """Polyline on the surface: x-vertices and the starting sheet.

    ``lasso`` marks an initial loop around a branch point; ``tail`` a final
    radial ray to infinity; ``end_branch`` a final vertex at a branch point.
    """

    vertices: tuple[complex, ...]
    sheet: int
    tail: bool = False
    end_branch: bool = False
    lasso: bool = False

    def to_json(self) -> dict:
        return {
            "vertices": [[v.real, v.imag] for v in self.vertices],
            "sheet": self.sheet,
            "tail_to_infinity": self.tail,
            "ends_at_branch_point": self.end_branch,
            "lasso": self.lasso,
        }


def _integrate_path(diff: MeromorphicDifferential, curve: HyperellipticCurve, path: Path, tol: float = PATH_TOL):
    """Returns ``(integral, y value approached at the end)``."""
    verts = list(path.vertices)
    total = 0j
    if len(verts) >= 2:
        pieces, sheet = curve.lift_polyline(verts, path.sheet, closed=False)
        for k, (seg, s) in enumerate(pieces):
            if path.end_branch and k == len(pieces) - 1:
                seg = ContourSegment.line(seg.z0, seg.z1, False, True)

            def f(x, s=s):
                return diff(x, s * curve.y(x))

            probe = f(seg.point(np.linspace(0.05, 0.95, 8)))
            mag = max(1.0, float(np.max(np.abs(probe))) * seg.length)
            val, _ = integrate_segment(f, seg, tol=tol * mag)
            total += complex(val)
        last_seg, last_sheet = pieces[-1]
        y_end = complex(last_sheet * curve.y(last_seg.point(1 - 1e-9)))
    else:
        last_sheet = path.sheet
        y_end = complex(path.sheet * curve.y(verts[0]))
    if path.tail:
        X = verts[-1]
        c0 = _center(curve)

        def ftail(u):
            x = c0 + (X - c0) / (u * u)
            val = diff(x, last_sheet * curve.y(x)) * (-2 * (X - c0) / u**3)
            return np.where(np.isfinite(val), val, 0.0)

        seg = ContourSegment.line(1.0, 1e-300)
        val, _ = integrate_segment(ftail, seg, tol=tol)
        total += complex(val)
    return total, y_end


def _center(curve: HyperellipticCurve) -> complex:
    return complex(np.mean(curve.branch_points))


def _obstacles(curve: HyperellipticCurve, poles: Sequence[complex]) -> list[complex]:
    return list(curve.branch_points) + [complex(p) for p in poles]


def default_base_point(curve: HyperellipticCurve, avoid: Sequence[complex] = (), index: int = 0) -> SurfacePoint:
    """Deterministic base point away from branch points, poles and ``avoid``."""
    c0, R = _center(curve), curve.scale
    obst = list(curve.branch_points) + [complex(a) for a in avoid if np.isfinite(a)]
    k = 0
    found = 0
    while k < 400:
        x = c0 + R * (0.37 + 0.013 * k) * np.exp(1j * (0.61 + 0.9 * k))
        k += 1
        if min(abs(x - o) for o in obst) > 0.1 * R:
            if found == index:
                return SurfacePoint(complex(x), 1)
            found += 1
    raise GeometryError("no admissible base point found")


def _lasso_vertices(curve: HyperellipticCurve, x0: complex, obstacles: Sequence[complex], margin: float):
    finite = list(curve.branch_points)
    e = min(finite, key=lambda b: abs(b - x0))
    others = [o for o in obstacles if abs(o - e) > 1e-14]
    rho = 0.4 * min([abs(o - e) for o in others] + [abs(x0 - e)])
    u = (x0 - e) / abs(x0 - e) * np.exp(0.3j)
    w1 = e + rho * u
    start = route(x0, w1, others, min(margin, 0.5 * rho))
    th0 = np.angle(u)
    circle = [e + rho * np.exp(1j * (th0 + 2 * np.pi * k / 16)) for k in range(1, 16)]
    back = route(w1, x0, others, min(margin, 0.5 * rho))
    return start + circle + back


def surface_path(
    curve: HyperellipticCurve,
    diff_poles: Sequence[complex],
    p0: SurfacePoint,
    target: SurfacePoint,
    routing: int = 0,
) -> Path:
    """Route from ``p0`` to ``target`` (finite, branch point or at infinity).

    ``routing = 0`` detours to the left of obstacles; ``routing = 1`` passes
    through a far waypoint and detours to the right, giving a path in a
    different homotopy class in general.
    """
    margin = ROUTE_MARGIN * curve.scale
    obst = _obstacles(curve, diff_poles)
    side = 1 if routing % 2 == 0 else -1
    c0, R = _center(curve), curve.scale
    if target.infinity:
        far = max(abs(o - c0) for o in obst + [p0.x])
        end = c0 + (3 * far + R) * np.exp(2.0j)
    else:
        end = target.x
    via = [] if routing == 0 else [c0 + 1.7 * R * np.exp(1j * (2.4 + 1.1 * routing))]
    verts = [p0.x]
    for w in via + [end]:
        verts = verts[:-1] + route(verts[-1], w, obst, margin, side)
    return Path(tuple(verts), p0.sheet, tail=target.infinity, end_branch=target.is_branch and not target.infinity)


def path_integral(
    diff: MeromorphicDifferential,
    curve: HyperellipticCurve,
    p0: SurfacePoint,
    target: SurfacePoint,
    routing: int = 0,
) -> tuple[complex, Path]:
    """``int_{p0}^{target} diff`` along an auto-routed path on the surface.

    If the routed x-path arrives on the wrong sheet, a lasso around the branch
    point nearest to ``p0`` is prepended.
    """
    poles = [p.x for p in diff.poles]
    path = surface_path(curve, poles, p0, target, routing)
    val, y_end = _integrate_path(diff, curve, path)
    if target.is_branch or (target.infinity and curve.infinite_branch):
        return val, path
    if target.infinity:
        yx = path.vertices[-1]
        want = complex(target.sheet * curve.y(yx))
    else:
        want = complex(curve.y_on(target.x, target.sheet))
    if abs(y_end - want) <= abs(y_end + want):
        return val, path
    margin = ROUTE_MARGIN * curve.scale
    lasso = _lasso_vertices(curve, p0.x, _obstacles(curve, poles), margin)
    path = Path(tuple(lasso[:-1]) + path.vertices, p0.sheet, path.tail, path.end_branch, lasso=True)
    val, y_end = _integrate_path(diff, curve, path)
    if abs(y_end - want) > abs(y_end + want):
        raise GeometryError("could not reach the target sheet")
    return val, path


# ---------------------------------------------------------- critical values


def symmetric_functions(values: Sequence[complex]) -> np.ndarray:
    """Elementary symmetric polynomials ``e_1..e_m`` of ``values``."""
    v = np.asarray(values)
    if v.size == 0:
        return np.zeros(0, dtype=v.dtype if v.dtype.kind == "c" else float)
    coeffs = np.poly(v)
    signs = (-1.0) ** np.arange(1, len(coeffs))
    out = signs * coeffs[1:]
    return out.real if np.isrealobj(v) else out


@dataclass
class CriticalValues:
    zeros: list[SurfacePoint]
    p0: SurfacePoint
    integrals: np.ndarray  # int_{p0}^{q_j}, in label order
    phi: np.ndarray  # phi_2..phi_N
    sigma: np.ndarray
    s: np.ndarray
    f: np.ndarray
    paths: list[Path] = field(default_factory=list)

    def to_json(self) -> dict:
        def c(z):
            return [float(np.real(z)), float(np.imag(z))]

        def pt(p):
            return {"x": c(p.x) if not p.infinity else "inf", "sheet": p.sheet}

        return {
            "zeros": [pt(q) for q in self.zeros],
            "p0": pt(self.p0),
            "phi": [c(z) for z in self.phi],
            "sigma": [c(z) for z in self.sigma],
            "s": [float(v) for v in self.s],
            "f": [float(v) for v in self.f],
            "paths": [p.to_json() for p in self.paths],
        }


def _order_zeros(zeros, J):
    """Index of ``q_1``: min ``Im J``, ties by ``(Re J, Re x, Im x)``."""
    scale = max(1.0, float(np.max(np.abs(J))))
    tol = 1e-9 * scale
    m = float(np.min(J.imag))
    cands = [k for k in range(len(J)) if J[k].imag <= m + tol]

    def key(k):
        x = zeros[k].x
        xr = np.inf if zeros[k].infinity else x.real
        xi = np.inf if zeros[k].infinity else x.imag
        return (round(J[k].real / tol), xr, xi)

    return min(cands, key=key)


def integrals_to(
    diff: MeromorphicDifferential,
    curve: HyperellipticCurve,
    zeros: Sequence[SurfacePoint],
    p0: SurfacePoint,
    routing: int = 0,
) -> tuple[np.ndarray, list[Path]]:
    out, paths = [], []
    for q in zeros:
        v, path = path_integral(diff, curve, p0, q, routing)
        out.append(v)
        paths.append(path)
    return np.array(out), paths


def critical_values_from(
    diff: MeromorphicDifferential,
    curve: HyperellipticCurve,
    zeros: Sequence[SurfacePoint] | None = None,
    p0: SurfacePoint | None = None,
    routing: int = 0,
    first: int | None = None,
) -> CriticalValues:
    """Critical values of ``diff``; ``first`` overrides the choice of ``q_1``."""
    if zeros is None:
        zeros = zero_points(zero_divisor(diff, curve))
    zeros = list(zeros)
    if p0 is None:
        p0 = default_base_point(curve, [p.x for p in diff.poles] + [q.x for q in zeros])
    J, paths = integrals_to(diff, curve, zeros, p0, routing)
    k1 = _order_zeros(zeros, J) if first is None else first
    order = [k1] + [k for k in range(len(zeros)) if k != k1]
    zeros = [zeros[k] for k in order]
    J = J[order]
    paths = [paths[k] for k in order]
    phi = J[1:] - J[0]
    im = np.maximum(phi.imag, 0.0) if first is None else phi.imag
    return CriticalValues(
        zeros=zeros,
        p0=p0,
        integrals=J,
        phi=phi,
        sigma=symmetric_functions(phi),
        s=symmetric_functions(im),
        f=np.sort(im)[::-1],
        paths=paths,
    )


def critical_values(
    psi: RealNormalizedDifferential, p0: SurfacePoint | None = None, routing: int = 0
) -> CriticalValues:
    """Critical values of a real-normalized differential.

    ``Im phi_j >= 0`` by the choice of ``q_1``; values below zero by rounding
    (at most ``1e-9`` relative) are clipped in ``s`` and ``f``.
    """
    return critical_values_from(psi.diff, psi.curve, p0=p0, routing=routing)


# ------------------------------------------------------------------- chart


def chart_dimension(g: int, orders: Sequence[int]) -> int:
    """``3g - 3 + n + g - 1 + sum h``."""
    n = len(orders)
    return 3 * g - 3 + n + g - 1 + int(sum(orders))


def coordinate_chart(psi: RealNormalizedDifferential, cv: CriticalValues | None = None) -> np.ndarray:
    """``(r_1..r_{n-1}, alpha, beta, sigma)`` at ``psi``."""
    if cv is None:
        cv = critical_values(psi)
    res = psi.periods.residues[:-1]
    vec = np.concatenate([res, psi.periods.alpha, psi.periods.beta, cv.sigma]).astype(complex)
    g = psi.curve.genus
    expected = chart_dimension(g, [p.marked.order for p in psi.parts])
    if len(vec) != expected:
        raise WhithamError(f"chart has length {len(vec)}, expected {expected}")
    return vec


# ----------------------------------------------------------- local family


PINNED = (0.0, 1.0, -1.0)


@dataclass
class FamilyPoint:
    curve: HyperellipticCurve
    parts: list[SingularPart]
    diff: MeromorphicDifferential
    basis: list

    def periods(self) -> np.ndarray:
        return periods_over_basis([self.diff], self.curve, self.basis)[0]


class LocalFamily:
    """Complex-analytic local parametrization around a differential.

    Parameters (all complex), in order:

    * ``free`` branch points (the others are pinned),
    * the x-coordinate of each group of marked points sharing an x-value,
    * residues ``c^1`` of all parts but the last (the last one is fixed by
      the residue theorem),
    * coefficients ``c^j``, ``j >= 2``, of every part,
    * coefficients of the raw holomorphic basis ``x**k dx / y``.
    """

    def __init__(
        self,
        curve: HyperellipticCurve,
        parts: Sequence[SingularPart],
        lam: Sequence[complex],
        pinned: Sequence[int] | None = None,
    ):
        self.leading = curve.leading
        roots = np.array(curve.branch_points)
        if pinned is None:
            pinned = [k for k in range(len(roots)) if any(abs(roots[k] - v) < 1e-14 for v in PINNED)]
            if len(pinned) < 3:
                pinned = list(range(3))
        self.pinned = sorted(pinned)
        self.free = [k for k in range(len(roots)) if k not in self.pinned]
        self.roots = roots
        self.genus = curve.genus
        groups: list[complex] = []
        self.part_group = []
        for p in parts:
            for k, x in enumerate(groups):
                if abs(x - p.marked.x) <= 1e-12 * (1 + abs(x)):
                    self.part_group.append(k)
                    break
            else:
                groups.append(p.marked.x)
                self.part_group.append(len(groups) - 1)
        self.groups = groups
        self.sheets = [p.marked.sheet for p in parts]
        self.orders = [p.marked.order for p in parts]
        n = len(parts)
        names = [f"e{k + 1}" for k in self.free]
        values = [roots[k] for k in self.free]
        names += [f"x_group{k + 1}" for k in range(len(groups))]
        values += list(groups)
        for i in range(n - 1):
            names.append(f"c1_part{i + 1}")
            values.append(parts[i].coefficients[0])
        for i, p in enumerate(parts):
            for j in range(2, p.marked.order + 1):
                names.append(f"c{j}_part{i + 1}")
                values.append(p.coefficients[j - 1])
        for k in range(self.genus):
            names.append(f"lambda{k + 1}")
            values.append(lam[k])
        self.names = names
        self.base = np.array(values, dtype=complex)
        self._last_c1 = parts[-1].coefficients[0] if n == 1 else None
        self.n_parts = n

    @classmethod
    def from_psi(cls, psi: RealNormalizedDifferential, pinned=None) -> "LocalFamily":
        pert = psi.provenance.get("perturbation")
        lam = np.asarray(psi.provenance["lam"], dtype=complex)
        if pert is not None:
            lam = lam + pert
        return cls(psi.curve, psi.parts, lam, pinned)

    @property
    def size(self) -> int:
        return len(self.base)

    def index(self, name: str) -> int:
        return self.names.index(name)

    def decode(self, params) -> FamilyPoint:
        params = np.asarray(params, dtype=complex)
        k = 0
        roots = self.roots.copy()
        for i in self.free:
            roots[i] = params[k]
            k += 1
        gx = params[k : k + len(self.groups)]
        k += len(self.groups)
        n = self.n_parts
        c1 = list(params[k : k + n - 1])
        k += n - 1
        if n == 1:
            c1.append(self._last_c1)
        else:
            c1.append(-sum(c1))
        parts = []
        for i in range(n):
            coeffs = [c1[i]]
            for _ in range(2, self.orders[i] + 1):
                coeffs.append(params[k])
                k += 1
            mp = MarkedPoint(SurfacePoint(complex(gx[self.part_group[i]]), self.sheets[i]), self.orders[i])
            parts.append(SingularPart(mp, tuple(coeffs)))
        lam = params[k : k + self.genus]
        curve = build_curve(Polynomial.from_roots(roots, self.leading))
        diff = build_with_singular_parts(curve, parts) + combine(list(lam), holomorphic_basis(curve))
        basis = homology_basis(curve, avoid=list(gx))
        return FamilyPoint(curve, parts, diff, basis)


def _match_zeros(ref: Sequence[SurfacePoint], new: Sequence[SurfacePoint]) -> list[SurfacePoint]:
    """Reorder ``new`` to follow ``ref`` by nearest position on the same sheet."""
    left = list(new)
    out = []
    for r in ref:
        def cost(q):
            if r.infinity or q.infinity:
                return 0.0 if (r.infinity and q.infinity and r.sheet == q.sheet) else np.inf
            return abs(q.x - r.x) + (0.0 if q.sheet == r.sheet else 1e3 * (1 + abs(r.x)))

        k = int(np.argmin([cost(q) for q in left]))
        if not np.isfinite(cost(left[k])):
            raise GeometryError("zero labelling lost along the deformation")
        out.append(left.pop(k))
    return out


@dataclass
class ChartEvaluation:
    point: FamilyPoint
    periods: np.ndarray
    residues: np.ndarray
    zeros: list[SurfacePoint]
    cv: CriticalValues

    @property
    def chart(self) -> np.ndarray:
        return np.concatenate([self.residues[:-1], self.periods, self.cv.sigma]).astype(complex)


def evaluate_chart(
    family: LocalFamily,
    params,
    ref_zeros: Sequence[SurfacePoint],
    p0: SurfacePoint,
    routing: int = 0,
    with_sigma: bool = True,
) -> ChartEvaluation:
    """Chart values at ``params`` with zeros labelled by continuation from ``ref_zeros``.

    ``ref_zeros[0]`` is kept as ``q_1``.
    """
    pt = family.decode(params)
    per = pt.periods()
    res = np.array([p.residue for p in pt.parts])
    if with_sigma:
        zeros = _match_zeros(ref_zeros, zero_points(zero_divisor(pt.diff, pt.curve)))
        cv = critical_values_from(pt.diff, pt.curve, zeros, p0, routing, first=0)
    else:
        zeros = list(ref_zeros)
        cv = CriticalValues(zeros, p0, np.zeros(0), np.zeros(0), np.zeros(0), np.zeros(0), np.zeros(0))
    return ChartEvaluation(pt, per, res, zeros, cv)


# ------------------------------------------------------------- Jacobian


@dataclass
class RankReport:
    rank: int
    n_coordinates: int
    n_parameters: int
    singular_values: np.ndarray
    fd_error: float
    gap: float
    threshold: float
    parameter_names: list[str]
    note: str = ""

    @property
    def full_rank(self) -> bool:
        return self.rank == min(self.n_coordinates, self.n_parameters)

    def to_json(self) -> dict:
        return {
            "rank": self.rank,
            "n_coordinates": self.n_coordinates,
            "n_parameters": self.n_parameters,
            "singular_values": [float(v) for v in self.singular_values],
            "fd_error": self.fd_error,
            "gap": self.gap,
            "threshold": self.threshold,
            "parameters": self.parameter_names,
            "full_rank": self.full_rank,
            "note": self.note,
        }


HYPERELLIPTIC_NOTE = (
    "observed rank only; all curves here are hyperelliptic, where the full-rank "
    "statement is not guaranteed for genus >= 3"
)


def _fd_jacobian(fun, x0, h, columns):
    cols = []
    for j in columns:
        e = np.zeros(len(x0), dtype=complex)
        e[j] = h
        cols.append((fun(x0 + e) - fun(x0 - e)) / (2 * h))
    return np.column_stack(cols)


def jacobian_rank_check(
    psi: RealNormalizedDifferential,
    step: float = 1e-3,
    columns: Sequence[int] | None = None,
    rel_threshold: float = 1e-6,
) -> RankReport:
    """Finite-difference Jacobian of the chart with respect to the local parameters.

    Branch points equal to ``0, 1, -1`` are pinned (they must be present).
    Central differences at ``step`` and ``step / 2`` are Richardson-combined;
    a disagreement above 10 % raises :class:`StepSizeError`.  ``columns``
    selects (and may repeat) parameters.

    The gap is ``sigma_r / max(sigma_{r+1}, fd_error)`` for the numerical
    rank ``r``.
    """
    roots = psi.curve.branch_points
    for v in PINNED:
        if not any(abs(r - v) < 1e-14 for r in roots):
            raise ValueError("Jacobian chart needs branch points pinned at 0, 1 and -1")
    fam = LocalFamily.from_psi(psi)
    base = evaluate_chart(fam, fam.base, _initial_zeros(psi), default_base_point(psi.curve, _avoid(psi)))
    ref = base.zeros
    p0 = base.cv.p0

    def fun(x):
        return evaluate_chart(fam, x, ref, p0).chart

    if columns is None:
        columns = list(range(fam.size))
    D1 = _fd_jacobian(fun, fam.base, step, columns)
    D2 = _fd_jacobian(fun, fam.base, step / 2, columns)
    diff = np.abs(D1 - D2)
    colscale = np.maximum(np.max(np.abs(D2), axis=0), 1e-300)
    if np.max(np.max(diff, axis=0) / colscale) > 0.1:
        raise StepSizeError("finite-difference step too large: step-halving disagreement above 10%")
    D = (4 * D2 - D1) / 3
    fd_err = float(np.max(diff)) / 3 * 0.25  # Richardson error after extrapolation (upper estimate)
    sv = np.linalg.svd(D, compute_uv=False)
    thr = rel_threshold * sv[0]
    rank = int(np.sum(sv > thr))
    nxt = sv[rank] if rank < len(sv) else 0.0
    gap = float(sv[rank - 1] / max(nxt, fd_err, 1e-300)) if rank > 0 else 0.0
    g = psi.curve.genus
    note = HYPERELLIPTIC_NOTE if g >= 2 else ""
    return RankReport(
        rank=rank,
        n_coordinates=D.shape[0],
        n_parameters=D.shape[1],
        singular_values=sv,
        fd_error=fd_err,
        gap=gap,
        threshold=thr,
        parameter_names=[fam.names[j] for j in columns],
        note=note,
    )


def _avoid(psi: RealNormalizedDifferential):
    return [p.marked.x for p in psi.parts]


def _initial_zeros(psi: RealNormalizedDifferential) -> list[SurfacePoint]:
    """Zeros of ``psi`` with ``q_1`` first (minimal-Im labelling)."""
    return critical_values(psi).zeros


# ------------------------------------------------------------ leaf tracing


@dataclass(frozen=True)
class LeafSpec:
    """Target residues ``r`` and periods ``(a, b)`` of a leaf."""

    residues: tuple[complex, ...]
    a: tuple[complex, ...]
    b: tuple[complex, ...]
    tol: float = 1e-8

    def __post_init__(self):
        if abs(sum(self.residues)) > 1e-10 * max(1.0, max(abs(r) for r in self.residues)):
            raise ValueError("leaf residues must sum to zero")

    @property
    def periods(self) -> np.ndarray:
        return np.concatenate([np.array(self.a, dtype=complex), np.array(self.b, dtype=complex)])

    @classmethod
    def at(cls, psi: RealNormalizedDifferential, tol: float = 1e-8) -> "LeafSpec":
        g = psi.curve.genus
        return cls(
            tuple(complex(r) for r in (p.residue for p in psi.parts)),
            tuple(complex(v) for v in psi.periods.alpha[:g]),
            tuple(complex(v) for v in psi.periods.beta[:g]),
            tol,
        )

    def transformed(self, G: np.ndarray) -> "LeafSpec":
        """Leaf in the basis ``(A'; B') = G (A; B)``."""
        g = len(self.a)
        v = np.asarray(G, dtype=float) @ self.periods
        return LeafSpec(self.residues, tuple(v[:g]), tuple(v[g:]), self.tol)


@dataclass
class LeafSample:
    step: int
    params: np.ndarray
    curve: HyperellipticCurve
    diff: MeromorphicDifferential
    periods: np.ndarray
    residues: np.ndarray
    cv: CriticalValues
    residual: float
    step_size: float

    def row(self, names: Sequence[str]) -> dict:
        out = {"step": self.step, "step_size": self.step_size, "residual": self.residual}
        for n, v in zip(names, self.params):
            out[f"{n}_re"], out[f"{n}_im"] = v.real, v.imag
        g = len(self.periods) // 2
        for k, v in enumerate(self.periods):
            lab = f"alpha{k + 1}" if k < g else f"beta{k - g + 1}"
            out[f"{lab}_re"], out[f"{lab}_im"] = v.real, v.imag
        for k, v in enumerate(self.residues):
            out[f"res{k + 1}_re"], out[f"res{k + 1}_im"] = v.real, v.imag
        for k, v in enumerate(self.cv.sigma):
            out[f"sigma{k + 1}_re"], out[f"sigma{k + 1}_im"] = v.real, v.imag
        for k, v in enumerate(self.cv.s):
            out[f"s{k + 1}"] = float(v)
        for k, v in enumerate(self.cv.f):
            out[f"f{k + 1}"] = float(v)
        return out


class LeafTracer:
    """Predictor-corrector continuation on ``{periods = a, b; residues = r}``.

    The predictor moves along the projection of a chosen parameter direction
    onto the kernel of the constraint differential; the corrector is a chord
    Newton iteration with the pseudo-inverse frozen at the start of the step,
    so corrections stay in a fixed complex subspace and the traced family is
    holomorphic in the step parameter.
    """

    def __init__(
        self,
        psi: RealNormalizedDifferential,
        leaf: LeafSpec | None = None,
        direction: Sequence[complex] | str | None = None,
        fd_step: float = 1e-5,
        max_newton: int = 20,
    ):
        self.psi = psi
        self.leaf = leaf if leaf is not None else LeafSpec.at(psi)
        self.family = LocalFamily.from_psi(psi)
        self.fd_step = fd_step
        self.max_newton = max_newton
        fam = self.family
        if direction is None:
            direction = fam.names[0]
        if isinstance(direction, str):
            d = np.zeros(fam.size, dtype=complex)
            d[fam.index(direction)] = 1.0
        else:
            d = np.asarray(direction, dtype=complex)
        self.direction = d
        self.target = np.concatenate([self.leaf.periods, np.array(self.leaf.residues, dtype=complex)])
        self.p0 = default_base_point(psi.curve, _avoid(psi) + [q.x for q in zero_points(zero_divisor(psi.diff, psi.curve))])

    def constraint(self, params) -> tuple[np.ndarray, FamilyPoint]:
        pt = self.family.decode(params)
        per = pt.periods()
        res = np.array([p.residue for p in pt.parts])
        return np.concatenate([per, res]), pt

    def constraint_jacobian(self, params) -> np.ndarray:
        h = self.fd_step * max(1.0, self.psi.curve.scale)
        cols = []
        for j in range(len(params)):
            e = np.zeros(len(params), dtype=complex)
            e[j] = h
            cols.append((self.constraint(params + e)[0] - self.constraint(params - e)[0]) / (2 * h))
        return np.column_stack(cols)

    def correct(self, params, M) -> tuple[np.ndarray, FamilyPoint, float]:
        tol = 0.1 * self.leaf.tol
        for _ in range(self.max_newton):
            G, pt = self.constraint(params)
            r = G - self.target
            res = float(np.max(np.abs(r)))
            if res < tol:
                return params, pt, res
            params = params - M @ r
        G, pt = self.constraint(params)
        res = float(np.max(np.abs(G - self.target)))
        if res < tol:
            return params, pt, res
        raise ConvergenceError("corrector did not converge", res)

    def kernel_direction(self, DG) -> np.ndarray:
        P = np.eye(DG.shape[1]) - np.linalg.pinv(DG) @ DG
        v = P @ self.direction
        nv = np.linalg.norm(v)
        if nv < 1e-8:
            raise GeometryError("chosen direction is transverse to the leaf")
        return v / nv

    def trace(self, steps: int = 10, step_size: float = 0.05, min_step: float | None = None) -> list[LeafSample]:
        fam = self.family
        params = fam.base.copy()
        G, pt = self.constraint(params)
        res0 = float(np.max(np.abs(G - self.target)))
        if res0 >= self.leaf.tol:
            raise ValueError(f"starting point is off the leaf (residual {res0:.3e})")
        zeros = _initial_zeros(self.psi)
        cv = critical_values_from(pt.diff, pt.curve, zeros, self.p0, first=0)
        samples = [LeafSample(0, params.copy(), pt.curve, pt.diff, G[: 2 * fam.genus], G[2 * fam.genus :], cv, res0, 0.0)]
        if min_step is None:
            min_step = 1e-4 * step_size
        h = step_size
        prev_v = None
        for k in range(1, steps + 1):
            DG = self.constraint_jacobian(params)
            M = np.linalg.pinv(DG)
            v = self.kernel_direction(DG)
            if prev_v is not None and np.real(np.vdot(prev_v, v)) < 0:
                v = -v
            while True:
                try:
                    new, pt, res = self.correct(params + h * v, M)
                    zeros = _match_zeros(samples[-1].cv.zeros, zero_points(zero_divisor(pt.diff, pt.curve)))
                    cv = critical_values_from(pt.diff, pt.curve, zeros, self.p0, first=0)
                    break
                except (ConvergenceError, GeometryError, WhithamError) as exc:
                    log.info("step %d rejected at h=%.3g: %s", k, h, exc)
                    h *= 0.5
                    if h < min_step:
                        raise ContinuationStallError(f"continuation stalled at step {k}") from exc
            G, _ = self.constraint(new)
            params = new
            prev_v = v
            samples.append(
                LeafSample(k, params.copy(), pt.curve, pt.diff, G[: 2 * fam.genus], G[2 * fam.genus :], cv, res, h)
            )
        return samples

    def point_at(self, params0, v, t, M) -> tuple[np.ndarray, FamilyPoint]:
        """Implicit leaf point ``params0 + t v + M w`` for complex ``t``."""
        p, pt, _ = self.correct(params0 + t * v, M)
        return p, pt


def trace_leaf(
    psi: RealNormalizedDifferential,
    leaf: LeafSpec | None = None,
    steps: int = 10,
    step_size: float = 0.05,
    direction: Sequence[complex] | str | None = None,
) -> list[LeafSample]:
    """Samples along the leaf through ``psi`` (or ``leaf`` if given)."""
    return LeafTracer(psi, leaf, direction).trace(steps, step_size)


def leaf_cauchy_riemann(
    psi: RealNormalizedDifferential, h: float = 1e-3, direction: Sequence[complex] | str | None = None
) -> dict:
    """Cauchy-Riemann residual of ``sigma_1`` along the leaf's complex parameter.

    ``sigma_1(t)`` is evaluated at ``t = +-h, +-ih`` on the implicit leaf
    ``params0 + t v + M w``; the residual is
    ``|d/dRe t + i d/dIm t| / |d/dRe t|``.
    """
    tr = LeafTracer(psi, direction=direction)
    p0 = tr.family.base
    DG = tr.constraint_jacobian(p0)
    M = np.linalg.pinv(DG)
    v = tr.kernel_direction(DG)
    zeros = _initial_zeros(psi)
    vals = {}
    for t in (h, -h, 1j * h, -1j * h):
        _, pt = tr.point_at(p0, v, t, M)
        zs = _match_zeros(zeros, zero_points(zero_divisor(pt.diff, pt.curve)))
        cv = critical_values_from(pt.diff, pt.curve, zs, tr.p0, first=0)
        vals[t] = cv.sigma[0]
    dx = (vals[h] - vals[-h]) / (2 * h)
    dy = (vals[1j * h] - vals[-1j * h]) / (2 * h)
    resid = abs(dx + 1j * dy) / max(abs(dx), 1e-300)
    return {"d_re": dx, "d_im": dy, "residual": float(resid)}
