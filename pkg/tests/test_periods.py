from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import WeierstrassLattice, agm, real_cubic_half_periods

from whitham.curve import build_curve, homology_basis, transform_basis
from whitham.differentials import MeromorphicDifferential, holomorphic_basis
from whitham.errors import SymplecticError
from whitham.numerics import Polynomial
from whitham.periods import change_basis, fractional_linear, is_symplectic, period, period_matrix
from whitham.realnorm import random_symplectic, symplectic_generators


def test_agm_oracle_against_scipy():
    from scipy.special import ellipk

    # K(m) = pi / (2 agm(1, sqrt(1 - m)))
    for m in (0.1, 0.5, 0.9):
        assert abs(np.pi / (2 * agm(1, np.sqrt(1 - m))).real - ellipk(m)) < 1e-14


def test_square_lattice_tau(square_curve):
    pd = period_matrix(square_curve)
    assert abs(pd.tau[0, 0] - 1j) < 1e-8
    w1, w3 = real_cubic_half_periods(1.0, 0.0, -1.0)
    a = abs(period(holomorphic_basis(square_curve)[0], square_curve, homology_basis(square_curve)[0]))
    assert min(abs(a - 2 * abs(w1)), abs(a - 2 * abs(w3))) < 1e-12


def test_generic_lattice_periods_and_quasi_periods():
    """Periods of dx/y and x dx/y span the oracle lattice (Legendre-consistent)."""
    lat = WeierstrassLattice(1.0, 0.3 + 0.9j)
    c = build_curve(Polynomial(lat.poly))
    dx = holomorphic_basis(c)[0]
    xdx = MeromorphicDifferential(Polynomial([0, 1]), Polynomial([0]), Polynomial([1]))
    W = np.array([[2 * lat.w1, 2 * lat.w3], [-2 * lat.eta1, -2 * lat.eta3]])
    for cyc in homology_basis(c):
        v = np.array([period(dx, c, cyc), period(xdx, c, cyc)])
        mn = np.linalg.solve(W, v)
        assert np.allclose(mn, np.round(mn.real), atol=1e-9)
    assert abs(lat.eta1 * lat.w3 - lat.eta3 * lat.w1 - 0.5j * np.pi) < 1e-14


@pytest.mark.parametrize(
    "coeffs",
    [[-1, 0, 0, 0, 0, 1], [1, 0.3j, -1, 0.2, 0.5, -0.7, 1], [0.3, -1, 0.2j, 0, 1, 0.1, 0.4, 1]],
)
def test_riemann_relations(coeffs):
    pd = period_matrix(build_curve(Polynomial(coeffs)))
    assert np.max(np.abs(pd.tau - pd.tau.T)) < 1e-8
    assert np.linalg.eigvalsh(pd.tau.imag).min() > 1e-8


def test_change_basis_matches_recomputation(rng):
    c = build_curve(Polynomial([1, 0.3j, -1, 0.2, 0.5, -0.7, 1]))
    basis = homology_basis(c)
    pd = period_matrix(c, basis)
    G = random_symplectic(2, rng)
    direct = period_matrix(c, transform_basis(basis, G))
    assert np.allclose(change_basis(pd, G).tau, direct.tau, atol=1e-9)
    assert np.allclose(fractional_linear(pd.tau, G), direct.tau, atol=1e-9)


def test_change_basis_rejects_non_symplectic(genus2_curve):
    pd = period_matrix(genus2_curve)
    with pytest.raises(SymplecticError):
        change_basis(pd, np.diag([2, 1, 1, 1]))


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 3), st.integers(0, 2**32 - 1))
def test_random_words_are_symplectic(g, seed):
    G = random_symplectic(g, np.random.default_rng(seed))
    assert is_symplectic(G)
    assert all(is_symplectic(M) for M in symplectic_generators(g))
