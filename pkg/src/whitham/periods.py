"""Periods of differentials, the normalized period matrix and symplectic basis changes.

Conventions
-----------
* ``alpha_i = oint_{A_i} w`` and ``beta_i = oint_{B_i} w``.
* The A-dual holomorphic basis satisfies ``oint_{A_j} Omega_i = delta_ij`` and
  ``tau_ij = oint_{B_j} Omega_i``.
* A basis change ``(A'; B') = G (A; B)`` with ``G^T J G = J``,
  ``J = ((0, I), (-I, 0))``, maps stacked periods ``(alpha; beta)`` by ``G``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .curve import Cycle, HyperellipticCurve, homology_basis, standard_symplectic
from .differentials import MeromorphicDifferential, combine, holomorphic_basis
from .errors import AccuracyError, ConsistencyError, NearSingularError, SymplecticError
from .numerics import integrate_segment

PERIOD_TOL = 1e-12
SYMMETRY_TOL = 1e-8


def period_vector(
    diffs: Sequence[MeromorphicDifferential],
    curve: HyperellipticCurve,
    cycle: Cycle,
    tol: float = PERIOD_TOL,
) -> np.ndarray:
    """Periods of several differentials over one cycle, sharing quadrature panels."""
    diffs = list(diffs)
    total = np.zeros(len(diffs), dtype=complex)
    err = 0.0
    scale = 0.0
    for coeff, loop in zip(cycle.coefficients, cycle.loops):
        for seg, sheet in loop:

            def f(x, sheet=sheet):
                y = sheet * curve.y(x)
                return np.array([d(x, y) for d in diffs])

            probe = f(seg.point(np.linspace(0.05, 0.95, 8)))
            mag = max(1.0, float(np.max(np.abs(probe))) * seg.length)
            val, e = integrate_segment(f, seg, tol=tol * mag)
            total += coeff * np.asarray(val)
            scale = max(scale, float(np.max(np.abs(val))))
            err += abs(coeff) * e
    if err > 1e-9 * max(1.0, float(np.max(np.abs(total))), scale):
        raise AccuracyError("period quadrature error above 1e-9", err)
    return total


def period(diff: MeromorphicDifferential, curve: HyperellipticCurve, cycle: Cycle, tol: float = PERIOD_TOL) -> complex:
    """``oint_cycle diff`` with sheet-aware quadrature."""
    return complex(period_vector([diff], curve, cycle, tol)[0])


def periods_over_basis(
    diffs: Sequence[MeromorphicDifferential], curve: HyperellipticCurve, basis: Sequence[Cycle]
) -> np.ndarray:
    """Matrix ``M[k, j] = oint_{basis[j]} diffs[k]``."""
    return np.column_stack([period_vector(diffs, curve, c) for c in basis])


@dataclass(frozen=True)
class PeriodData:
    """Periods of a differential together with the normalized period matrix.

    ``residues`` is empty for holomorphic data.  ``dual_basis`` holds the
    A-dual holomorphic differentials; ``raw_to_dual`` the matrix ``N`` with
    ``Omega_i = sum_j N_ij x**j dx / y``.
    """

    alpha: np.ndarray
    beta: np.ndarray
    tau: np.ndarray
    residues: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=complex))
    dual_basis: tuple[MeromorphicDifferential, ...] = ()
    raw_to_dual: np.ndarray | None = None

    @property
    def genus(self) -> int:
        return len(self.alpha)

    @property
    def stacked(self) -> np.ndarray:
        return np.concatenate([self.alpha, self.beta])

    def to_json(self) -> dict:
        def c(z):
            return [float(np.real(z)), float(np.imag(z))]

        return {
            "alpha": [c(z) for z in self.alpha],
            "beta": [c(z) for z in self.beta],
            "tau": [[c(z) for z in row] for row in self.tau],
            "residues": [c(z) for z in self.residues],
            "convention": "tau_ij = B_j-period of Omega_i; (A';B') = G(A;B); J = ((0,I),(-I,0))",
        }


def check_riemann(tau: np.ndarray, tol: float = SYMMETRY_TOL) -> None:
    """Raise ``ConsistencyError`` unless ``tau`` is symmetric with ``Im tau > 0``."""
    asym = float(np.max(np.abs(tau - tau.T)))
    if asym > tol:
        raise ConsistencyError(f"period matrix not symmetric: {asym:.3e}")
    ev = np.linalg.eigvalsh(0.5 * (tau.imag + tau.imag.T))
    if ev.min() <= tol:
        raise ConsistencyError(f"Im tau not positive definite: min eigenvalue {ev.min():.3e}")


def period_matrix(
    curve: HyperellipticCurve, basis: Sequence[Cycle] | None = None, max_condition: float = 1e10
) -> PeriodData:
    """Normalized period matrix and A-dual holomorphic basis.

    The returned ``alpha``/``beta`` are those of ``Omega_1`` (``alpha = e_1``).
    """
    g = curve.genus
    if g < 1:
        raise ValueError("period matrix needs genus >= 1")
    if basis is None:
        basis = homology_basis(curve)
    raw = holomorphic_basis(curve)
    M = periods_over_basis(raw, curve, basis)
    Araw, Braw = M[:, :g], M[:, g:]
    cond = np.linalg.cond(Araw)
    if not np.isfinite(cond) or cond > max_condition:
        raise NearSingularError("raw A-period matrix is near-singular", cond)
    # Omega_i = sum_k N_ik w_k with sum_k N_ik Araw[k, j] = delta_ij
    N = np.linalg.inv(Araw)
    tau = N @ Braw
    check_riemann(tau)
    dual = tuple(combine(N[i], raw) for i in range(g))
    return PeriodData(
        alpha=np.eye(g, dtype=complex)[0],
        beta=tau[0].copy(),
        tau=tau,
        dual_basis=dual,
        raw_to_dual=N,
    )


def differential_periods(
    diff: MeromorphicDifferential,
    curve: HyperellipticCurve,
    basis: Sequence[Cycle],
    pd: PeriodData,
    residues: Sequence[complex] = (),
) -> PeriodData:
    """``PeriodData`` of ``diff`` sharing ``tau`` and the dual basis of ``pd``."""
    g = curve.genus
    per = periods_over_basis([diff], curve, basis)[0]
    return replace(pd, alpha=per[:g], beta=per[g:], residues=np.asarray(residues, dtype=complex))


def is_symplectic(G: np.ndarray) -> bool:
    G = np.asarray(G)
    if not np.issubdtype(G.dtype, np.integer):
        if not np.array_equal(G, np.round(G)):
            return False
        G = np.round(G).astype(np.int64)
    n = G.shape[0]
    if G.shape != (n, n) or n % 2:
        return False
    J = standard_symplectic(n // 2)
    return bool(np.array_equal(G.T @ J @ G, J))


def change_basis(pd: PeriodData, G: np.ndarray) -> PeriodData:
    """Periods and period matrix in the basis ``(A'; B') = G (A; B)``.

    The periods of ``Omega_i`` over the new cycles are ``(I, tau) G^T``; the
    new dual basis and period matrix follow by renormalizing their A-part.
    For symmetric ``tau`` this equals the fractional-linear action
    ``(c + d tau)(a + b tau)^{-1}`` with ``G = ((a, b), (c, d))``.

    Raises
    ------
    SymplecticError
        if ``G`` is not an integer matrix with ``G^T J G = J``.
    """
    G = np.asarray(G)
    if not is_symplectic(G):
        raise SymplecticError("basis change matrix is not integer symplectic")
    g = pd.genus
    G = G.astype(float)
    new = G @ pd.stacked
    # periods of Omega_i over the new cycles: rows = Omega_i, columns = cycles
    Pm = np.hstack([np.eye(g), pd.tau]) @ G.T
    Ap, Bp = Pm[:, :g], Pm[:, g:]
    Nn = np.linalg.inv(Ap)
    tau = Nn @ Bp
    check_riemann(tau)
    dual = tuple(combine(Nn[i], list(pd.dual_basis)) for i in range(g)) if pd.dual_basis else ()
    raw = Nn @ pd.raw_to_dual if pd.raw_to_dual is not None else None
    return PeriodData(
        alpha=new[:g],
        beta=new[g:],
        tau=tau,
        residues=pd.residues,
        dual_basis=dual,
        raw_to_dual=raw,
    )


def fractional_linear(tau: np.ndarray, G: np.ndarray) -> np.ndarray:
    """``(c + d tau)(a + b tau)^{-1}`` for ``G = ((a, b), (c, d))``."""
    G = np.asarray(G, dtype=float)
    g = tau.shape[0]
    a, b, c, d = G[:g, :g], G[:g, g:], G[g:, :g], G[g:, g:]
    return (c + d @ tau) @ np.linalg.inv(a + b @ tau)
