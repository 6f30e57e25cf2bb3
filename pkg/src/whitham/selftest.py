"""Fast invariant suite behind ``whitham selftest``."""

from __future__ import annotations

import numpy as np

from .curve import SurfacePoint, build_curve, homology_basis, intersection_matrix, standard_symplectic
from .differentials import SingularPart, zero_divisor
from .numerics import Polynomial
from .periods import period_matrix
from .realnorm import real_normalize, verify_uniqueness
from .whitham_coords import critical_values, default_base_point


def run_selftest(seed: int = 0) -> list[tuple[str, bool, str]]:
    """Returns ``(name, passed, detail)`` per property."""
    out = []

    c1 = build_curve(Polynomial([0, -4, 0, 4]))
    tau = period_matrix(c1).tau[0, 0]
    out.append(("square lattice tau = i", abs(tau - 1j) < 1e-8, f"|tau - i| = {abs(tau - 1j):.2e}"))

    c2 = build_curve(Polynomial([-1, 0, 0, 0, 0, 1]))
    M = intersection_matrix(homology_basis(c2))
    out.append(("intersection matrix = J (x^5 - 1)", bool(np.array_equal(M, standard_symplectic(2))), str(M.tolist())))
    pd = period_matrix(c2)
    sym = float(np.max(np.abs(pd.tau - pd.tau.T)))
    ev = float(np.linalg.eigvalsh(pd.tau.imag).min())
    out.append(("Riemann relations (x^5 - 1)", sym < 1e-8 and ev > 1e-8, f"asym {sym:.2e}, min eig {ev:.3f}"))

    p = SurfacePoint(0.3 + 0.7j, 1)
    q = SurfacePoint(-0.4 - 0.9j, -1)
    for label, parts in (("second kind", [SingularPart.second_kind(p)]), ("third kind", SingularPart.third_kind(p, q))):
        rn = real_normalize(c2, parts)
        imag = rn.max_imag_period()
        out.append((f"real periods, {label}", imag < 1e-8, f"max |Im| {imag:.2e}"))
        n = sum(z.multiplicity for z in zero_divisor(rn.diff, c2))
        h = sum(pp.marked.order for pp in parts)
        out.append((f"zero count, {label}", n == 2 + h, f"{n} zeros, expected {2 + h}"))
        rep = verify_uniqueness(c2, parts, trials=4, seed=seed, reference=rn)
        out.append((f"uniqueness, {label}", rep.passed, f"max deviation {rep.max_deviation:.2e}"))
        avoid = [pp.marked.x for pp in parts]
        s0 = critical_values(rn).s
        s1 = critical_values(rn, p0=default_base_point(c2, avoid, index=1), routing=1).s
        d = float(np.max(np.abs(s0 - s1)))
        out.append((f"global invariants s_j, {label}", d < 1e-8, f"max difference {d:.2e}"))
    return out
