"""Acceptance criteria 1-12, each reported as a ``[PASS]``/``[FAIL]`` line."""

from __future__ import annotations

import time
from pathlib import Path

import numpy as np
import pytest
from oracles import WeierstrassLattice, real_cubic_half_periods, second_kind_oracle

from whitham.cli import main
from whitham.curve import MarkedPoint, SurfacePoint, build_curve, homology_basis, transform_basis
from whitham.degeneration import DEFAULT_T, DegenerationFamily, sweep_second_kind, sweep_third_kind
from whitham.differentials import SingularPart, holomorphic_basis, zero_divisor, zero_points
from whitham.numerics import Polynomial
from whitham.periods import period, period_matrix
from whitham.realnorm import random_symplectic, real_normalize, sample_points, verify_uniqueness
from whitham.whitham_coords import (
    LeafSpec,
    chart_dimension,
    coordinate_chart,
    critical_values,
    default_base_point,
    jacobian_rank_check,
    trace_leaf,
)

DATA = Path(__file__).resolve().parent.parent / "data"


def _separated(rng, n, existing, sep, box=1.5):
    pts = list(existing)
    out = []
    while len(out) < n:
        z = complex(rng.uniform(-box, box), rng.uniform(-box, box))
        if all(abs(z - p) > sep for p in pts):
            pts.append(z)
            out.append(z)
    return out


def _instances():
    """Ten seeded (curve, singular parts) instances over g = 1, 2 and kinds 2, 3."""
    rng = np.random.default_rng(2024)
    out = []
    for i in range(10):
        g = 1 if i < 5 else 2
        degree = 2 * g + 1 + (i % 3 == 0)
        roots = _separated(rng, degree, [], 0.35)
        curve = build_curve(Polynomial.from_roots(roots, leading=complex(rng.uniform(0.5, 2), rng.uniform(-1, 1))))
        if i % 2 == 0:
            (x,) = _separated(rng, 1, roots, 0.3)
            r = complex(rng.normal(), rng.normal())
            parts = [SingularPart.second_kind(SurfacePoint(x, int(rng.choice([-1, 1]))), r)]
            kind = 2
        else:
            x1, x2 = _separated(rng, 2, roots, 0.3)
            p1 = SurfacePoint(x1, int(rng.choice([-1, 1])))
            p2 = SurfacePoint(x2, int(rng.choice([-1, 1])))
            parts = list(SingularPart.third_kind(p1, p2, float(rng.uniform(0.5, 2))))
            kind = 3
        out.append((f"g={g} kind={kind} #{i}", curve, parts))
    return out


@pytest.fixture(scope="module")
def instances():
    t0 = time.perf_counter()
    built = [(name, c, parts, real_normalize(c, parts)) for name, c, parts in _instances()]
    return built, time.perf_counter() - t0


def test_criterion_1_square_lattice(report_criterion):
    t0 = time.perf_counter()
    c = build_curve(Polynomial([0, -4, 0, 4]))
    tau = period_matrix(c).tau[0, 0]
    w1, w3 = real_cubic_half_periods(1.0, 0.0, -1.0)
    agm_tau = w3 / w1
    a = period(holomorphic_basis(c)[0], c, homology_basis(c)[0])
    oracle_gap = min(abs(abs(a) - 2 * abs(w1)), abs(abs(a) - 2 * abs(w3)))
    dt = time.perf_counter() - t0
    ok = abs(tau - 1j) < 1e-8 and abs(tau - agm_tau) < 1e-8 and oracle_gap < 1e-8 and dt < 5
    detail = f"|tau - i| = {abs(tau - 1j):.1e}, |tau - tau_AGM| = {abs(tau - agm_tau):.1e}, A-period vs AGM {oracle_gap:.1e}, {dt:.2f} s"
    assert report_criterion(1, ok, detail)


RIEMANN_SUITE = [
    [0, -4, 0, 4],
    [-0.3, 1j, 0.5, 1],
    [1, 0, 2, 0, 1j + 0.3],
    [0.2, 0.7, -1, 0.1j, 1.5],
    [-1, 0, 0, 0, 0, 1],
    [0.2, 1, -0.5j, 0.3, 1, 1],
    [1, 0.3j, -1, 0.2, 0.5, -0.7, 1],
    [0.3, -1, 0.2j, 0, 1, 0.1, 0.4, 1],
    [1, 0, -0.5, 0, 0.3j, 0, 0.2, 0, 1],
    [0.4j, 1, 0.2, -0.6, 0.1, 0.9j, -0.3, 0.5, 1],
]


def test_criterion_2_riemann_relations(report_criterion):
    t0 = time.perf_counter()
    worst_sym, worst_eig, genera = 0.0, np.inf, []
    for coeffs in RIEMANN_SUITE:
        c = build_curve(Polynomial(coeffs))
        tau = period_matrix(c).tau
        genera.append(c.genus)
        worst_sym = max(worst_sym, float(np.max(np.abs(tau - tau.T))))
        worst_eig = min(worst_eig, float(np.linalg.eigvalsh(tau.imag).min()))
    dt = time.perf_counter() - t0
    ok = worst_sym < 1e-8 and worst_eig > 1e-8 and dt < 120 and set(genera) == {1, 2, 3}
    detail = f"10 curves (genera {sorted(set(genera))}): max asymmetry {worst_sym:.1e}, min eig Im tau {worst_eig:.3f}, {dt:.1f} s"
    assert report_criterion(2, ok, detail)


def test_criterion_3_real_normalization(instances, report_criterion):
    built, dt = instances
    worst_im, worst_res = 0.0, 0.0
    for _, _, parts, rn in built:
        worst_im = max(worst_im, rn.max_imag_period())
        worst_res = max(worst_res, float(np.max(np.abs(rn.periods.residues.real))))
    kinds = {name.split()[1] for name, *_ in built}
    ok = worst_im < 1e-8 and worst_res < 1e-9 and dt < 180 and kinds == {"kind=2", "kind=3"}
    detail = f"{len(built)} instances: max |Im period| {worst_im:.1e}, max |Re residue| {worst_res:.1e}, {dt:.1f} s"
    assert report_criterion(3, ok, detail)


def test_criterion_4_uniqueness(instances, report_criterion):
    built, _ = instances
    worst = 0.0
    for i, (_, c, parts, rn) in enumerate(built):
        rep = verify_uniqueness(c, parts, trials=7, n_basis_changes=5, n_points=20, seed=i, reference=rn, tol=1e-8)
        worst = max(worst, rep.max_deviation)
    ok = worst < 1e-8
    detail = f"5 basis changes + 2 perturbations x {len(built)} instances, 20 points: max relative deviation {worst:.1e}"
    assert report_criterion(4, ok, detail)


@pytest.mark.parametrize("w3", [0.3 + 0.9j])
def test_criterion_5_weierstrass_oracle(w3, report_criterion):
    lat = WeierstrassLattice(1.0, w3)
    c = build_curve(Polynomial(lat.poly))
    p = SurfacePoint(0.4 - 0.3j, -1)
    rn = real_normalize(c, [SingularPart.second_kind(p)])
    f = second_kind_oracle(lat, p.x, complex(c.y_on(p.x, p.sheet)))
    pts = sample_points(c, [p.x], 20, np.random.default_rng(5))
    err = max(abs(rn.at(q) - f(q.x, complex(c.y_on(q.x, q.sheet)))) for q in pts)
    legendre = abs(lat.eta1 * lat.w3 - lat.eta3 * lat.w1 - 0.5j * np.pi)
    ok = err < 1e-8
    detail = f"20 points: max |Psi - Psi_wp| {err:.1e} (Legendre relation residual {legendre:.1e})"
    assert report_criterion(5, ok, detail)


def test_criterion_6_zero_count(instances, report_criterion):
    built, _ = instances
    bad = []
    for name, c, parts, rn in built:
        n = sum(z.multiplicity for z in zero_divisor(rn.diff, c))
        expected = 2 * c.genus - 2 + sum(p.marked.order for p in parts)
        if n != expected:
            bad.append(f"{name}: {n} != {expected}")
    ok = not bad
    detail = f"{len(built)} instances, exact integer match" if ok else "; ".join(bad)
    assert report_criterion(6, ok, detail)


def test_criterion_7_global_invariants(instances, report_criterion):
    built, _ = instances
    worst, sorted_ok = 0.0, True
    for i, (_, c, parts, rn) in enumerate(built[:5]):
        ref = critical_values(rn)
        G = random_symplectic(c.genus, np.random.default_rng(100 + i))
        rn_b = real_normalize(c, parts, basis=transform_basis(rn.basis, G))
        avoid = [p.marked.x for p in parts] + [q.x for q in zero_points(zero_divisor(rn.diff, c))]
        variants = [
            critical_values(rn_b),
            critical_values(rn, p0=default_base_point(c, avoid, index=1)),
            critical_values(rn, routing=1),
            critical_values(rn_b, p0=default_base_point(c, avoid, index=2), routing=1),
        ]
        scale = max(1.0, float(np.max(np.abs(ref.s))))
        for v in variants:
            worst = max(worst, float(np.max(np.abs(v.s - ref.s))) / scale)
        sorted_ok &= bool(np.all(np.diff(ref.f) <= 0) and ref.f[-1] >= 0)
    ok = worst < 1e-8 and sorted_ok
    detail = f"5 instances x (basis, base point, routing): max |delta s| {worst:.1e}; f descending with f_last >= 0: {sorted_ok}"
    assert report_criterion(7, ok, detail)


def test_criterion_8_coordinates_and_rank(instances, report_criterion):
    t0 = time.perf_counter()
    built, _ = instances
    lengths_ok = all(
        len(coordinate_chart(rn)) == chart_dimension(c.genus, [p.marked.order for p in parts]) for _, c, parts, rn in built
    )
    c1 = build_curve(Polynomial.from_roots([0, 1, -1, 1.3 + 0.4j]))
    rn1 = real_normalize(c1, [SingularPart.second_kind(SurfacePoint(0.4 + 0.6j, 1))])
    r1 = jacobian_rank_check(rn1)
    c2 = build_curve(Polynomial.from_roots([0, 1, -1, 1.7 + 0.3j, -0.6 + 1.1j, 2.4 - 0.5j]))
    rn2 = real_normalize(c2, [SingularPart.second_kind(SurfacePoint(0.4 + 0.6j, 1))])
    r2 = jacobian_rank_check(rn2)
    dt = time.perf_counter() - t0
    ok = lengths_ok and r1.rank == 3 and r1.gap > 1e3 and dt < 300
    detail = (
        f"chart lengths exact: {lengths_ok}; g=1,n=1,h=(2): rank {r1.rank}/3, gap {r1.gap:.1e}; "
        f"g=2,n=1,h=(2) observed rank {r2.rank}/{r2.n_coordinates}, gap {r2.gap:.1e} ({r2.note}); {dt:.1f} s"
    )
    assert report_criterion(8, ok, detail)


def test_criterion_9_leaf_tracing(report_criterion):
    t0 = time.perf_counter()
    c = build_curve(Polynomial.from_roots([0, 1, -1, 1.3 + 0.4j]))
    rn = real_normalize(c, [SingularPart.second_kind(SurfacePoint(0.4 + 0.6j, 1))])
    leaf = LeafSpec.at(rn)
    samples = trace_leaf(rn, leaf, steps=10, step_size=0.05)
    dev = max(
        max(float(np.max(np.abs(s.periods - leaf.periods))), float(np.max(np.abs(s.residues - np.array(leaf.residues)))))
        for s in samples
    )
    x0 = 0.4 + 0.6j
    exact_parts = [
        SingularPart(MarkedPoint(SurfacePoint(x0, 1), 2), (0.0, -1.0)),
        SingularPart(MarkedPoint(SurfacePoint(x0, -1), 2), (0.0, -1.0)),
    ]
    exact = real_normalize(c, exact_parts)
    ex_samples = trace_leaf(exact, LeafSpec((0j, 0j), (0j,), (0j,)), steps=10, step_size=0.05)
    ex_dev = max(max(float(np.max(np.abs(s.periods))), float(np.max(np.abs(s.residues)))) for s in ex_samples)
    moved = abs(ex_samples[-1].params[0] - ex_samples[0].params[0])
    dt = time.perf_counter() - t0
    ok = len(samples) == 11 and dev < 1e-8 and len(ex_samples) == 11 and ex_dev < 1e-8 and dt < 600
    detail = f"10-step trace max deviation {dev:.1e}; exact leaf (moved {moved:.2f}) max cycle integral {ex_dev:.1e}; {dt:.1f} s"
    assert report_criterion(9, ok, detail)


def test_criterion_10_degeneration_second_kind(report_criterion):
    rep = sweep_second_kind(DegenerationFamily(), DEFAULT_T)
    complete = rep.failure is None and len(rep.rows) == len(DEFAULT_T)
    dec_outer = rep.differences_decrease("outer")
    dec_inner = rep.differences_decrease("inner")
    inner_small = rep.rows[-1].inner_max
    ok = complete and dec_outer and dec_inner and inner_small < 1e-3
    detail = (
        f"t down to {rep.smallest_t:.3g}: differences decrease outer={dec_outer}, inner={dec_inner}; "
        f"outer limit error {rep.rows[-1].limit_error:.1e}; non-pole component max {inner_small:.2e} (target < 1e-3)"
    )
    assert report_criterion(10, ok, detail)


def test_criterion_11_degeneration_third_kind(report_criterion):
    fam = DegenerationFamily()
    sep = sweep_third_kind(fam, DEFAULT_T, p2_component="inner")
    same = sweep_third_kind(fam, DEFAULT_T, p2_component="outer")
    r_sep = sep.rows[-1].vanishing / (2j * np.pi)
    r_same = same.rows[-1].vanishing / (2j * np.pi)
    err_sep = min(abs(r_sep - 1j), abs(r_sep + 1j))
    ok = err_sep < 1e-2 and abs(r_same) < 1e-2
    detail = (
        f"different components at t={sep.smallest_t:.3g}: residue {r_sep:.6f} (|. -+ i| = {err_sep:.1e}); "
        f"same component at t={same.smallest_t:.3g}: {abs(r_same):.1e}"
    )
    assert report_criterion(11, ok, detail)


DETERMINISM_RUNS = [
    ["periods", "--input", str(DATA / "genus2_third_kind.json")],
    ["realnorm", "--input", str(DATA / "genus2_second_kind.json")],
    ["coords", "--input", str(DATA / "genus1_rank.json")],
    ["leaf-trace", "--input", str(DATA / "genus1_rank.json"), "--steps", "3"],
    ["degenerate", "--kind", "2", "--family", str(DATA / "separating_family.json")],
    ["degenerate", "--kind", "3", "--t-list", "0.1,0.05,0.025"],
    ["selftest"],
]


def test_criterion_12_determinism(tmp_path, report_criterion):
    mismatched = []
    for k, argv in enumerate(DETERMINISM_RUNS):
        out = tmp_path / f"run{k}"
        outputs = []
        for _ in range(2):
            assert main(argv + ["--out", str(out), "--seed", "7"]) == 0
            outputs.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
        if outputs[0] != outputs[1]:
            mismatched.append(argv[0])
    ok = not mismatched
    detail = f"{len(DETERMINISM_RUNS)} CLI runs reproduced bit-for-bit" if ok else f"differences in {mismatched}"
    assert report_criterion(12, ok, detail)
