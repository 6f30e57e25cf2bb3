"""Separating degenerations of genus-2 curves and the limits of real-normalized differentials.

The family is ``y**2 = Q(x) * prod_k (x - t b_k)`` with ``Q`` a cubic whose
roots stay away from the origin.  As ``t -> 0`` three branch points collide
and the curve splits at a separating node into

* an *outer* genus-1 component ``y1**2 = x Q(x)`` (``y = x y1``), and
* an *inner* genus-1 component ``y2**2 = Q(0) prod_k (u - b_k)`` with
  ``x = t u`` and ``y ~ t**1.5 y2``.

Points of the limit components are transported to ``Gamma_t`` by matching
``y`` values (``x y1`` resp. ``t**1.5 y2 sqrt(Q(tu)/Q(0))``).  Values on the
inner component are reported in the ``u`` coordinate, i.e. ``t * f(t u)`` for
``Psi_t = f(x) dx``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .curve import (
    Cycle,
    HyperellipticCurve,
    SurfacePoint,
    build_curve,
    polygon_cycle,
    stadium,
)
from .curve import _dist_to_segment
from .differentials import SingularPart, laurent_coefficients, small_loop_integral
from .errors import WhithamError
from .numerics import Polynomial
from .periods import period, periods_over_basis
from .realnorm import RealNormalizedDifferential, real_normalize
from .whitham_coords import LeafTracer, LeafSample

log = logging.getLogger(__name__)

DEFAULT_T = tuple(0.1 * 2.0**-k for k in range(6))


@dataclass(frozen=True)
class DegenerationFamily:
    """``P_t = leading * prod (x - outer_k) * prod (x - t inner_k)``."""

    outer: tuple[complex, ...] = (2.0 + 0.3j, 3.0 + 1.0j, 4.0 - 0.5j)
    inner: tuple[complex, ...] = (-1.0 + 0.1j, 0.5 + 0.8j, 0.6 - 0.9j)
    leading: complex = 1.0

    def __post_init__(self):
        if len(self.outer) != 3 or len(self.inner) != 3:
            raise ValueError("the separating family needs three outer and three inner roots")
        if min(abs(complex(r)) for r in self.outer) <= 0:
            raise ValueError("outer roots must avoid the node at 0")

    def Q(self) -> Polynomial:
        return Polynomial.from_roots(self.outer, self.leading)

    def curve(self, t: float) -> HyperellipticCurve:
        roots = list(self.outer) + [t * b for b in self.inner]
        return build_curve(Polynomial.from_roots(roots, self.leading))

    def outer_limit(self) -> HyperellipticCurve:
        """``y1**2 = x Q(x)``."""
        return build_curve(Polynomial.from_roots([0.0] + list(self.outer), self.leading))

    def inner_limit(self) -> HyperellipticCurve:
        """``y2**2 = Q(0) prod (u - b_k)``."""
        q0 = complex(self.Q()(0.0))
        return build_curve(Polynomial.from_roots(list(self.inner), q0))

    def collision_distance(self, t: float) -> float:
        b = np.array(self.inner)
        return float(t * np.min(np.abs(b[:, None] - b[None, :])[~np.eye(3, dtype=bool)]))

    def to_json(self) -> dict:
        c = lambda z: [float(np.real(z)), float(np.imag(z))]  # noqa: E731
        return {"outer": [c(z) for z in self.outer], "inner": [c(z) for z in self.inner], "leading": c(self.leading)}

    @classmethod
    def from_json(cls, d: dict) -> "DegenerationFamily":
        def z(v):
            return complex(v[0], v[1]) if isinstance(v, (list, tuple)) else complex(v)

        return cls(
            tuple(z(v) for v in d.get("outer", cls.outer)),
            tuple(z(v) for v in d.get("inner", cls.inner)),
            z(d.get("leading", 1.0)),
        )

    # ----------------------------------------------------- point transport

    def outer_to_t(self, pt: SurfacePoint, t: float, curve_t: HyperellipticCurve) -> SurfacePoint:
        lim = self.outer_limit()
        y = pt.x * complex(lim.y_on(pt.x, pt.sheet))
        return SurfacePoint(pt.x, curve_t.sheet_of(pt.x, y))

    def inner_to_t(self, pt: SurfacePoint, t: float, curve_t: HyperellipticCurve) -> SurfacePoint:
        lim = self.inner_limit()
        x = t * pt.x
        Q = self.Q()
        y = t**1.5 * complex(lim.y_on(pt.x, pt.sheet)) * np.sqrt(complex(Q(x)) / complex(Q(0.0)))
        return SurfacePoint(x, curve_t.sheet_of(x, y))


def _fixed_samples(curve: HyperellipticCurve, avoid: Sequence[complex], n: int, center: complex, radius: float, seed: int):
    rng = np.random.default_rng(seed)
    out = []
    obst = list(curve.branch_points) + list(avoid)
    while len(out) < n:
        x = center + radius * np.sqrt(rng.uniform(0, 1)) * np.exp(2j * np.pi * rng.uniform())
        if min(abs(x - o) for o in obst) < 0.15 * radius:
            continue
        out.append(SurfacePoint(complex(x), int(rng.choice([-1, 1]))))
    return out


def _inner_cycles(curve_t: HyperellipticCurve, family: DegenerationFamily, t: float, avoid=()):
    """Two loops around pairs of inner branch points (a basis of the inner component)."""
    inner = [t * b for b in family.inner]
    loops = []
    for a, b in ((inner[0], inner[1]), (inner[1], inner[2])):
        others = [e for e in curve_t.branch_points if abs(e - a) > 1e-14 and abs(e - b) > 1e-14]
        others += list(avoid)
        w = 0.3 * min(_dist_to_segment(o, a, b) for o in others)
        loops.append(polygon_cycle(curve_t, stadium(a, b, w, twist=0.037), 1))
    return loops


def vanishing_cycle_integral(rn: RealNormalizedDifferential, family: DegenerationFamily, t: float, n: int = 64) -> complex:
    """``oint Psi`` over the separating vanishing cycle.

    The cycle is a circle around the colliding cluster, traversed twice (the
    circle encloses three branch points, so one turn ends on the other sheet).
    """
    curve = rn.curve
    inner_r = max(abs(t * b) for b in family.inner)
    poles = [p.marked.x for p in rn.parts]
    small = [abs(x) for x in poles if abs(x) < 10 * inner_r]
    inner_r = max([inner_r] + small)
    outer_r = min([abs(r) for r in family.outer] + [abs(x) for x in poles if abs(x) >= 10 * inner_r])
    R = np.sqrt(inner_r * outer_r)
    verts = [R * np.exp(1j * (2 * np.pi * k / n + 0.0123)) for k in range(n)]
    pieces, sheet = curve.lift_polyline(verts + verts, 1, closed=True)
    if sheet != 1:
        raise WhithamError("vanishing cycle did not close after two turns")
    return period(rn.diff, curve, Cycle((pieces,), (1,), "vanishing"))


@dataclass
class SweepRow:
    t: float
    outer_values: np.ndarray
    inner_values: np.ndarray
    limit_error: float
    inner_max: float
    inner_periods: np.ndarray
    periods: np.ndarray
    coefficient_error: float = 0.0
    vanishing: complex = 0j
    pole_loops: tuple = ()

    def to_json(self) -> dict:
        c = lambda z: [float(np.real(z)), float(np.imag(z))]  # noqa: E731
        return {
            "t": self.t,
            "limit_error": self.limit_error,
            "inner_max": self.inner_max,
            "inner_periods": [c(z) for z in self.inner_periods],
            "periods": [c(z) for z in self.periods],
            "coefficient_error": self.coefficient_error,
            "vanishing_residue": c(self.vanishing / (2j * np.pi)),
            "pole_loops": [c(z) for z in self.pole_loops],
            "outer_values": [c(z) for z in self.outer_values],
            "inner_values": [c(z) for z in self.inner_values],
        }


@dataclass
class SweepReport:
    kind: int
    rows: list[SweepRow]
    smallest_t: float
    failure: str | None = None
    outer_differences: list[float] = field(default_factory=list)
    inner_differences: list[float] = field(default_factory=list)

    def differences_decrease(self, which: str = "both") -> bool:
        seqs = {"outer": [self.outer_differences], "inner": [self.inner_differences]}
        seqs["both"] = seqs["outer"] + seqs["inner"]
        return all(all(b < a for a, b in zip(s, s[1:])) for s in seqs[which])

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "smallest_t": self.smallest_t,
            "failure": self.failure,
            "outer_successive_differences": self.outer_differences,
            "inner_successive_differences": self.inner_differences,
            "rows": [r.to_json() for r in self.rows],
        }


def _successive(rows, attr):
    vals = [getattr(r, attr) for r in rows]
    return [float(np.max(np.abs(b - a))) for a, b in zip(vals, vals[1:])]


def sweep_second_kind(
    family: DegenerationFamily,
    t_values: Sequence[float] = DEFAULT_T,
    pole: SurfacePoint = SurfacePoint(1.2 - 0.9j, 1),
    r: complex = 1.0,
    n_samples: int = 10,
    seed: int = 0,
) -> SweepReport:
    """Second-kind ``Psi_t`` with pole on the outer component.

    ``pole`` and the sample points are given on the limit components; the
    reference is the real-normalized differential of the outer limit curve.
    """
    t_values = sorted(t_values, reverse=True)
    outer_lim = family.outer_limit()
    inner_lim = family.inner_limit()
    ref = real_normalize(outer_lim, [SingularPart.second_kind(pole, r)])
    outer_pts = _fixed_samples(outer_lim, [pole.x, 0.0], n_samples, complex(np.mean(family.outer)) * 0.5, 2.5, seed)
    inner_pts = _fixed_samples(inner_lim, [], n_samples, 0j, 1.5, seed + 1)
    ref_vals = np.array([ref.at(p) for p in outer_pts])
    rows: list[SweepRow] = []
    failure = None
    for t in t_values:
        try:
            ct = family.curve(t)
            p_t = family.outer_to_t(pole, t, ct)
            rn = real_normalize(ct, [SingularPart.second_kind(p_t, r)])
            ov = np.array([rn.at(family.outer_to_t(p, t, ct)) for p in outer_pts])
            iv = np.array([t * rn.at(family.inner_to_t(p, t, ct)) for p in inner_pts])
            ip = periods_over_basis([rn.diff], ct, _inner_cycles(ct, family, t))[0]
            cerr = float(np.max(np.abs(laurent_coefficients(rn.diff, ct, p_t, 2) - np.array([0.0, r]))))
        except WhithamError as exc:
            failure = f"t={t}: {exc}"
            log.warning("second-kind sweep stopped: %s", failure)
            break
        rows.append(
            SweepRow(
                t=t,
                outer_values=ov,
                inner_values=iv,
                limit_error=float(np.max(np.abs(ov - ref_vals))),
                inner_max=float(np.max(np.abs(iv))),
                inner_periods=ip,
                periods=rn.periods.stacked,
                coefficient_error=cerr,
            )
        )
    return SweepReport(
        kind=2,
        rows=rows,
        smallest_t=rows[-1].t if rows else float("nan"),
        failure=failure,
        outer_differences=_successive(rows, "outer_values"),
        inner_differences=_successive(rows, "inner_values"),
    )


def sweep_third_kind(
    family: DegenerationFamily,
    t_values: Sequence[float] = DEFAULT_T,
    p1: SurfacePoint = SurfacePoint(1.2 - 0.9j, 1),
    p2: SurfacePoint = SurfacePoint(0.4 + 1.3j, 1),
    p2_component: str = "inner",
    scale: float = 1.0,
) -> SweepReport:
    """Third-kind ``Psi_t`` (residue ``+i`` at ``p1``) and its vanishing-cycle residue.

    ``p1`` lies on the outer component; ``p2`` on ``p2_component``
    (``"inner"`` in ``u`` coordinates or ``"outer"``).
    """
    if p2_component not in ("inner", "outer"):
        raise ValueError("p2_component must be 'inner' or 'outer'")
    t_values = sorted(t_values, reverse=True)
    rows: list[SweepRow] = []
    failure = None
    for t in t_values:
        try:
            ct = family.curve(t)
            q1 = family.outer_to_t(p1, t, ct)
            q2 = family.inner_to_t(p2, t, ct) if p2_component == "inner" else family.outer_to_t(p2, t, ct)
            rn = real_normalize(ct, SingularPart.third_kind(q1, q2, scale))
            van = vanishing_cycle_integral(rn, family, t)
            loops = tuple(small_loop_integral(rn.diff, ct, q) for q in (q1, q2))
        except WhithamError as exc:
            failure = f"t={t}: {exc}"
            log.warning("third-kind sweep stopped: %s", failure)
            break
        rows.append(
            SweepRow(
                t=t,
                outer_values=np.zeros(0),
                inner_values=np.zeros(0),
                limit_error=float("nan"),
                inner_max=float("nan"),
                inner_periods=np.zeros(0),
                periods=rn.periods.stacked,
                vanishing=van,
                pole_loops=loops,
            )
        )
    return SweepReport(kind=3, rows=rows, smallest_t=rows[-1].t if rows else float("nan"), failure=failure)


@dataclass
class MgTwoLeafReport:
    kernel_dimension: int
    expected_dimension: int
    samples: list[LeafSample]
    max_imag_period: float
    max_residue_error: float

    def to_json(self) -> dict:
        return {
            "kernel_dimension": self.kernel_dimension,
            "expected_dimension": self.expected_dimension,
            "max_imag_period": self.max_imag_period,
            "max_residue_error": self.max_residue_error,
            "steps": len(self.samples) - 1,
        }


def third_kind_mgtwo_leaf(
    curve: HyperellipticCurve,
    p1: SurfacePoint,
    p2: SurfacePoint,
    steps: int = 5,
    step_size: float = 0.05,
    rank_tol: float = 1e-6,
) -> MgTwoLeafReport:
    """Leaf through the third-kind differential with residues ``+i, -i`` at ``p1, p2``.

    The kernel dimension of the constraint differential is compared with
    ``dim M_{g,2} - g = 2g - 1`` (meaningful for genus 2, where every curve is
    hyperelliptic and the branch-point parameters are a full chart).
    """
    rn = real_normalize(curve, SingularPart.third_kind(p1, p2))
    tracer = LeafTracer(rn)
    DG = tracer.constraint_jacobian(tracer.family.base)
    sv = np.linalg.svd(DG, compute_uv=False)
    rank = int(np.sum(sv > rank_tol * sv[0]))
    kernel = tracer.family.size - rank
    g = curve.genus
    samples = tracer.trace(steps, step_size)
    imag = max(float(np.max(np.abs(s.periods.imag))) for s in samples)
    rerr = max(abs(s.residues[0] - 1j) for s in samples)
    return MgTwoLeafReport(kernel, (3 * g - 3 + 2) - g, samples, imag, float(rerr))
