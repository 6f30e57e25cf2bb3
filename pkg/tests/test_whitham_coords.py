from __future__ import annotations

import itertools

import numpy as np
import pytest

from whitham.curve import MarkedPoint, SurfacePoint, build_curve
from whitham.differentials import SingularPart, zero_divisor, zero_points
from whitham.numerics import Polynomial
from whitham.realnorm import real_normalize
from whitham.whitham_coords import (
    LeafSpec,
    chart_dimension,
    coordinate_chart,
    critical_values,
    critical_values_from,
    default_base_point,
    jacobian_rank_check,
    leaf_cauchy_riemann,
    symmetric_functions,
    trace_leaf,
)

RANK_CURVE = Polynomial.from_roots([0, 1, -1, 1.3 + 0.4j])


@pytest.fixture(scope="module")
def psi_g1():
    c = build_curve(RANK_CURVE)
    return real_normalize(c, [SingularPart.second_kind(SurfacePoint(0.4 + 0.6j, 1))])


def test_symmetric_functions_match_polynomial_coefficients():
    v = np.array([1.0, 2.0, -0.5j])
    # prod (t + v_k) = t^3 + s1 t^2 + s2 t + s3
    s = symmetric_functions(v)
    coeffs = np.poly(-v)
    assert np.allclose(s, coeffs[1:])


def test_critical_values_permutation_invariant(psi_g1):
    cv = critical_values(psi_g1)
    zeros = cv.zeros
    for perm in itertools.permutations(range(1, len(zeros))):
        z = [zeros[0]] + [zeros[k] for k in perm]
        other = critical_values_from(psi_g1.diff, psi_g1.curve, z, cv.p0, first=0)
        assert np.allclose(other.sigma, cv.sigma, atol=1e-10)


def test_critical_values_independent_of_base_point_and_routing(psi_g1):
    c = psi_g1.curve
    avoid = [p.marked.x for p in psi_g1.parts] + [q.x for q in zero_points(zero_divisor(psi_g1.diff, c))]
    ref = critical_values(psi_g1)
    for idx, routing in ((1, 0), (2, 1), (0, 1)):
        cv = critical_values(psi_g1, p0=default_base_point(c, avoid, index=idx), routing=routing)
        assert np.allclose(cv.s, ref.s, atol=1e-8)
    assert np.all(np.diff(ref.f) <= 0) and ref.f[-1] >= 0


def test_chart_length(psi_g1):
    chart = coordinate_chart(psi_g1)
    assert len(chart) == chart_dimension(1, [2]) == 3
    assert chart_dimension(2, [2, 1]) == 3 * 2 - 3 + 2 + 2 - 1 + 3


def test_rank_full_and_degenerate_columns(psi_g1):
    rep = jacobian_rank_check(psi_g1)
    assert rep.rank == 3 and rep.gap > 1e3
    dup = jacobian_rank_check(psi_g1, columns=[0, 0, 2])
    assert dup.rank == 2


def test_rank_check_requires_pinned_points(genus2_curve):
    rn = real_normalize(genus2_curve, [SingularPart.second_kind(SurfacePoint(0.3 + 0.7j, 1))])
    with pytest.raises(ValueError):
        jacobian_rank_check(rn)


def test_leaf_trace_holds_constraints(psi_g1):
    leaf = LeafSpec.at(psi_g1)
    samples = trace_leaf(psi_g1, leaf, steps=4, step_size=0.05)
    for s in samples:
        assert np.max(np.abs(s.periods - leaf.periods)) < 1e-8
        assert np.max(np.abs(s.residues - np.array(leaf.residues))) < 1e-8
    # the trace actually moves
    assert abs(samples[-1].cv.sigma[0] - samples[0].cv.sigma[0]) > 1e-3


def test_leaf_is_complex_analytic(psi_g1):
    assert leaf_cauchy_riemann(psi_g1)["residual"] < 1e-4


def test_leaf_spec_rejects_nonzero_residue_sum():
    with pytest.raises(ValueError):
        LeafSpec((1j,), (0.0,), (0.0,))


def test_leaf_spec_transform_consistent(psi_g1):
    leaf = LeafSpec.at(psi_g1)
    S = np.array([[0, 1], [-1, 0]])
    back = leaf.transformed(S).transformed(-S)
    assert np.allclose(back.periods, leaf.periods)


def test_exact_differential_has_vanishing_periods():
    """``d(1 / (x - x0))`` is real-normalized with all periods zero."""
    c = build_curve(RANK_CURVE)
    x0 = 0.4 + 0.6j
    parts = [
        SingularPart(MarkedPoint(SurfacePoint(x0, 1), 2), (0.0, -1.0)),
        SingularPart(MarkedPoint(SurfacePoint(x0, -1), 2), (0.0, -1.0)),
    ]
    rn = real_normalize(c, parts)
    assert np.max(np.abs(rn.periods.stacked)) < 1e-8
    x = np.array([0.3 - 1.1j, 2.0 + 0.5j])
    assert np.allclose(rn.diff(x, c.y(x)), -1 / (x - x0) ** 2, atol=1e-9)
