from __future__ import annotations

import numpy as np
import pytest

from whitham.curve import SurfacePoint
from whitham.degeneration import (
    DegenerationFamily,
    sweep_second_kind,
    sweep_third_kind,
    third_kind_mgtwo_leaf,
)


def test_family_structure():
    fam = DegenerationFamily()
    c = fam.curve(0.05)
    assert c.genus == 2
    assert fam.outer_limit().genus == 1 and fam.inner_limit().genus == 1
    assert fam.collision_distance(0.05) < fam.collision_distance(0.1)
    assert DegenerationFamily.from_json(fam.to_json()) == fam


def test_second_kind_converges_to_outer_limit():
    rep = sweep_second_kind(DegenerationFamily(), [0.1, 0.05, 0.025, 0.0125])
    assert rep.failure is None
    errs = [r.limit_error for r in rep.rows]
    assert all(b < a for a, b in zip(errs, errs[1:]))
    assert rep.differences_decrease("both")
    assert max(r.coefficient_error for r in rep.rows) < 1e-8


@pytest.mark.parametrize("component,expected", [("inner", -1j), ("outer", 0.0)])
def test_vanishing_residue(component, expected):
    rep = sweep_third_kind(DegenerationFamily(), [0.05, 0.025], p2_component=component)
    for r in rep.rows:
        assert abs(r.vanishing / (2j * np.pi) - expected) < 1e-2
        assert abs(r.pole_loops[0] + 2 * np.pi) < 1e-8  # residue +i at p1


def test_third_kind_leaf_dimension():
    fam = DegenerationFamily()
    c = fam.curve(0.1)
    rep = third_kind_mgtwo_leaf(c, SurfacePoint(2.2 - 0.4j, 1), SurfacePoint(0.9 + 1.4j, 1), steps=2)
    assert rep.kernel_dimension == rep.expected_dimension == 3
    assert rep.max_imag_period < 1e-8
