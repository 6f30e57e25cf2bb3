from __future__ import annotations

import numpy as np
import pytest
from oracles import WeierstrassLattice, second_kind_oracle

from whitham.curve import MarkedPoint, SurfacePoint, build_curve
from whitham.differentials import SingularPart
from whitham.errors import NormalizationError
from whitham.numerics import Polynomial
from whitham.realnorm import real_normalize, sample_points, singular_part_error, verify_uniqueness


@pytest.mark.parametrize("w3", [1j, 0.3 + 0.9j, -0.45 + 1.3j])
def test_genus1_second_kind_matches_weierstrass_oracle(w3, rng):
    lat = WeierstrassLattice(1.0, w3)
    c = build_curve(Polynomial(lat.poly))
    p = SurfacePoint(0.4 - 0.3j, -1)
    rn = real_normalize(c, [SingularPart.second_kind(p)])
    f = second_kind_oracle(lat, p.x, complex(c.y_on(p.x, p.sheet)))
    for q in sample_points(c, [p.x], 20, rng):
        ref = f(q.x, complex(c.y_on(q.x, q.sheet)))
        assert abs(rn.at(q) - ref) < 1e-8 * max(1.0, abs(ref))


def test_periods_real_and_singular_parts_kept(genus2_curve):
    parts = [
        SingularPart(MarkedPoint(SurfacePoint(0.3 + 0.7j, 1), 2), (0.5j, 2.0 - 1j)),
        SingularPart(MarkedPoint(SurfacePoint(-0.4 - 0.9j, -1), 1), (-0.5j,)),
    ]
    rn = real_normalize(genus2_curve, parts)
    assert rn.max_imag_period() < 1e-8
    assert singular_part_error(rn) < 1e-9
    # A-periods are minus the real correction
    assert np.allclose(rn.periods.alpha, -rn.provenance["c"], atol=1e-9)


def test_non_imaginary_residue_rejected(genus2_curve):
    p, q = SurfacePoint(0.3 + 0.7j, 1), SurfacePoint(-0.4 - 0.9j, -1)
    parts = [
        SingularPart(MarkedPoint(p, 1), (1.0,)),
        SingularPart(MarkedPoint(q, 1), (-1.0,)),
    ]
    with pytest.raises(NormalizationError):
        real_normalize(genus2_curve, parts)


def test_linearity_in_singular_part(genus2_curve, rng):
    p = SurfacePoint(0.3 + 0.7j, 1)
    a = real_normalize(genus2_curve, [SingularPart(MarkedPoint(p, 2), (0.0, 1.0))])
    b = real_normalize(genus2_curve, [SingularPart(MarkedPoint(p, 2), (0.0, 2.5))])
    for q in sample_points(genus2_curve, [p.x], 10, rng):
        assert abs(b.at(q) - 2.5 * a.at(q)) < 1e-9 * max(1.0, abs(b.at(q)))


def test_uniqueness_under_basis_change_and_perturbation(genus2_curve):
    parts = SingularPart.third_kind(SurfacePoint(0.3 + 0.7j, 1), SurfacePoint(-0.4 - 0.9j, -1))
    rep = verify_uniqueness(genus2_curve, parts, trials=7, seed=3)
    assert rep.passed
    kinds = [t["kind"] for t in rep.trials]
    assert kinds.count("basis_change") == 5 and kinds.count("perturbation") == 2
