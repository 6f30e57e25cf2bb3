"""Real-normalized differentials: prescribed singular parts and all periods real.

Construction: build any ``w`` with the prescribed parts, kill its A-periods
``a`` with the A-dual basis, then remove the imaginary part of the B-periods
by solving ``(Im tau) c = Im beta'`` in real arithmetic:

    Psi = w - sum_i (a_i + c_i) Omega_i.

The A-periods of ``Psi`` are then the real numbers ``-c_i``, the B-periods are
real and, when the prescribed residues are imaginary, so are all loop
integrals around the poles.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .curve import (
    Cycle,
    HyperellipticCurve,
    SurfacePoint,
    homology_basis,
    standard_symplectic,
    transform_basis,
)
from .differentials import (
    MeromorphicDifferential,
    SingularPart,
    build_with_singular_parts,
    combine,
    holomorphic_basis,
    laurent_coefficients,
    residue,
)
from .errors import NormalizationError, UniquenessError
from .numerics import solve_real_linear
from .periods import PeriodData, period_matrix, periods_over_basis

IMAG_TOL = 1e-8
RESIDUE_TOL = 1e-9


@dataclass(frozen=True)
class RealNormalizedDifferential:
    """``Psi`` with its periods and the data that produced it.

    ``provenance`` holds the starting differential ``omega``, its A-periods
    ``a``, the real correction ``c`` and the coefficients ``lam`` of
    ``Psi - omega`` in the raw holomorphic basis ``x**k dx / y``.
    """

    curve: HyperellipticCurve
    parts: tuple[SingularPart, ...]
    basis: tuple[Cycle, ...]
    diff: MeromorphicDifferential
    periods: PeriodData
    provenance: dict = field(default_factory=dict)

    @property
    def poles(self):
        return tuple(p.marked for p in self.parts)

    def __call__(self, x, y):
        return self.diff(x, y)

    def at(self, point: SurfacePoint) -> complex:
        return self.diff.at(self.curve, point)

    def max_imag_period(self) -> float:
        return float(np.max(np.abs(self.periods.stacked.imag)))

    def to_json(self) -> dict:
        def c(z):
            return [float(np.real(z)), float(np.imag(z))]

        return {
            "differential": self.diff.to_json(),
            "periods": self.periods.to_json(),
            "a": [c(z) for z in self.provenance.get("a", [])],
            "c": [float(v) for v in self.provenance.get("c", [])],
            "max_imag_period": self.max_imag_period(),
        }


def default_basis(curve: HyperellipticCurve, parts: Sequence[SingularPart]) -> list[Cycle]:
    """Standard homology basis keeping clear of the marked points."""
    return homology_basis(curve, avoid=[p.marked.x for p in parts])


def real_normalize(
    curve: HyperellipticCurve,
    parts: Sequence[SingularPart],
    basis: Sequence[Cycle] | None = None,
    pd: PeriodData | None = None,
    perturbation: Sequence[complex] | None = None,
    verify: bool = True,
) -> RealNormalizedDifferential:
    """The unique differential with singular parts ``parts`` and real periods.

    Parameters
    ----------
    basis
        Symplectic homology basis; built around the marked points if omitted.
    pd
        Precomputed period matrix for ``basis``.
    perturbation
        Raw holomorphic coefficients added to the starting differential; the
        result must not depend on them.
    verify
        Recompute the periods of ``Psi`` and the residues directly and check
        reality.

    Raises
    ------
    NormalizationError
        if a prescribed residue is not purely imaginary, or verification fails.
    """
    parts = tuple(parts)
    scale = max(1.0, max(abs(c) for p in parts for c in p.coefficients))
    for p in parts:
        if abs(p.residue.real) > 1e-12 * scale:
            raise NormalizationError(
                f"residue {p.residue} at x={p.marked.x} is not purely imaginary; no real normalization exists"
            )
    if basis is None:
        basis = default_basis(curve, parts)
    basis = tuple(basis)
    if pd is None:
        pd = period_matrix(curve, basis)
    g = curve.genus
    raw = holomorphic_basis(curve)

    omega = build_with_singular_parts(curve, parts)
    if perturbation is not None:
        omega = omega + combine(list(perturbation), raw)
    per = periods_over_basis([omega], curve, basis)[0]
    a, beta = per[:g], per[g:]
    tau = pd.tau
    beta1 = beta - a @ tau
    c = solve_real_linear(tau.imag.T, beta1.imag)
    lam = -((a + c) @ pd.raw_to_dual)
    psi = omega + combine(list(lam), raw)

    expected = np.concatenate([-c, beta1 - c @ tau]).astype(complex)
    residues = np.array([p.residue for p in parts], dtype=complex)
    data = PeriodData(
        alpha=expected[:g],
        beta=expected[g:],
        tau=tau,
        residues=residues,
        dual_basis=pd.dual_basis,
        raw_to_dual=pd.raw_to_dual,
    )
    out = RealNormalizedDifferential(
        curve=curve,
        parts=parts,
        basis=basis,
        diff=psi,
        periods=data,
        provenance={
            "omega": omega,
            "a": a,
            "c": c,
            "lam": lam,
            "perturbation": None if perturbation is None else np.asarray(perturbation, dtype=complex),
        },
    )
    if verify:
        out = verify_real_normalized(out)
    return out


def verify_real_normalized(rn: RealNormalizedDifferential) -> RealNormalizedDifferential:
    """Recompute periods and residues of ``Psi`` directly and check the invariants."""
    curve, g = rn.curve, rn.curve.genus
    per = periods_over_basis([rn.diff], curve, rn.basis)[0]
    res = np.array([residue(rn.diff, curve, p.marked) for p in rn.parts])
    imag = float(np.max(np.abs(per.imag)))
    if imag >= IMAG_TOL * max(1.0, float(np.max(np.abs(per)))):
        raise NormalizationError(f"periods of Psi not real: max |Im| = {imag:.3e}")
    if np.max(np.abs(res.real), initial=0.0) >= RESIDUE_TOL:
        raise NormalizationError("residues of Psi not imaginary")
    for p, r in zip(rn.parts, res):
        if abs(r - p.residue) >= RESIDUE_TOL * max(1.0, abs(p.residue)):
            raise NormalizationError(f"residue {r} differs from prescribed {p.residue}")
    data = PeriodData(
        alpha=per[:g],
        beta=per[g:],
        tau=rn.periods.tau,
        residues=res,
        dual_basis=rn.periods.dual_basis,
        raw_to_dual=rn.periods.raw_to_dual,
    )
    return RealNormalizedDifferential(rn.curve, rn.parts, rn.basis, rn.diff, data, rn.provenance)


def singular_part_error(rn: RealNormalizedDifferential) -> float:
    """Max deviation of the Laurent coefficients of ``Psi`` from the prescribed parts."""
    err = 0.0
    for p in rn.parts:
        got = laurent_coefficients(rn.diff, rn.curve, p.marked, p.marked.order)
        err = max(err, float(np.max(np.abs(got - np.array(p.coefficients)))))
    return err


# ------------------------------------------------------------- uniqueness


def symplectic_generators(g: int) -> list[np.ndarray]:
    """Integer generators of ``Sp(2g, Z)`` acting on stacked ``(A; B)``."""
    I = np.eye(2 * g, dtype=np.int64)
    gens = []
    for i in range(g):
        T = I.copy()
        T[g + i, i] = 1  # B_i -> B_i + A_i
        gens.append(T)
        S = I.copy()
        S[i, g + i] = 1  # A_i -> A_i + B_i
        gens.append(S)
    for i in range(g):
        for j in range(g):
            if i != j:
                U = I.copy()
                U[i, j] = 1  # A_i -> A_i + A_j, B_j -> B_j - B_i
                U[g + j, g + i] = -1
                gens.append(U)
    return gens


def random_symplectic(g: int, rng: np.random.Generator, length: int = 6) -> np.ndarray:
    """Random word of length ``length`` in the generators and their inverses."""
    gens = symplectic_generators(g)
    J = standard_symplectic(g)
    G = np.eye(2 * g, dtype=np.int64)
    for _ in range(length):
        M = gens[rng.integers(len(gens))]
        if rng.integers(2):
            M = -J @ M.T @ J  # inverse of a symplectic matrix
        G = M @ G
    assert np.array_equal(G.T @ J @ G, J)
    return G


def sample_points(
    curve: HyperellipticCurve,
    avoid: Sequence[complex],
    n: int,
    rng: np.random.Generator,
    margin: float = 0.1,
) -> list[SurfacePoint]:
    """``n`` random surface points away from branch points and ``avoid``."""
    e = np.array(curve.branch_points)
    center = e.mean()
    R = curve.scale * 1.2
    obstacles = list(e) + [complex(a) for a in avoid]
    out = []
    while len(out) < n:
        x = center + R * complex(rng.uniform(-1, 1), rng.uniform(-1, 1))
        if min(abs(x - o) for o in obstacles) < margin * curve.scale:
            continue
        out.append(SurfacePoint(x, int(rng.choice([-1, 1]))))
    return out


@dataclass
class UniquenessReport:
    trials: list[dict]
    max_deviation: float
    max_holomorphic_difference: float
    tol: float

    @property
    def passed(self) -> bool:
        return self.max_deviation < self.tol and self.max_holomorphic_difference < self.tol

    def to_json(self) -> dict:
        return {
            "trials": self.trials,
            "max_deviation": self.max_deviation,
            "max_holomorphic_difference": self.max_holomorphic_difference,
            "tol": self.tol,
            "passed": self.passed,
        }


def verify_uniqueness(
    curve: HyperellipticCurve,
    parts: Sequence[SingularPart],
    trials: int = 7,
    seed: int = 0,
    n_basis_changes: int | None = None,
    n_points: int = 20,
    tol: float = 1e-8,
    reference: RealNormalizedDifferential | None = None,
    strict: bool = False,
) -> UniquenessReport:
    """Recompute ``Psi`` from shuffled bases and perturbed ansatz and compare.

    The first ``n_basis_changes`` trials (default ``trials - 2``) use a random
    symplectic basis change, the remaining ones a random holomorphic
    perturbation of the starting differential.  Values are compared at
    ``n_points`` sample points; the raw holomorphic coefficients of
    ``Psi_k - Psi_0`` (a holomorphic differential with real periods) are
    reported as well and must vanish.
    """
    if trials < 2:
        raise ValueError("need at least two trials")
    rng = np.random.default_rng(seed)
    if n_basis_changes is None:
        n_basis_changes = max(trials - 2, 0)
    g = curve.genus
    ref = reference if reference is not None else real_normalize(curve, parts)
    pts = sample_points(curve, [p.marked.x for p in parts], n_points, rng)
    v0 = np.array([ref.at(p) for p in pts])
    denom = np.maximum(1.0, np.abs(v0))
    lam0 = ref.provenance["lam"]
    records = []
    max_dev = 0.0
    max_hol = 0.0
    for k in range(trials):
        if k < n_basis_changes:
            G = random_symplectic(g, rng)
            basis = transform_basis(ref.basis, G)
            rn = real_normalize(curve, parts, basis=basis)
            kind = {"kind": "basis_change", "G": G.tolist()}
        else:
            pert = rng.normal(size=g) + 1j * rng.normal(size=g)
            rn = real_normalize(curve, parts, basis=ref.basis, pd=ref.periods, perturbation=pert)
            kind = {"kind": "perturbation", "coefficients": [[float(z.real), float(z.imag)] for z in pert]}
        vk = np.array([rn.at(p) for p in pts])
        dev = float(np.max(np.abs(vk - v0) / denom))
        # Psi_k - Psi_0 in raw coordinates: (omega_k - omega_0) + (lam_k - lam_0)
        pk = rn.provenance["perturbation"]
        hol = rn.provenance["lam"] - lam0 + (pk if pk is not None else 0)
        hol = float(np.max(np.abs(hol)))
        max_dev = max(max_dev, dev)
        max_hol = max(max_hol, hol)
        records.append({**kind, "deviation": dev, "holomorphic_difference": hol})
    report = UniquenessReport(records, max_dev, max_hol, tol)
    if strict and not report.passed:
        raise UniquenessError(f"real-normalized differential not unique: deviation {max_dev:.3e}")
    return report
