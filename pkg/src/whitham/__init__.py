"""Real-normalized differentials on hyperelliptic curves and Whitham coordinates."""

from __future__ import annotations

__version__ = "0.1.0"

from .curve import (
    Cycle,
    HyperellipticCurve,
    MarkedPoint,
    SurfacePoint,
    build_curve,
    continue_sheet,
    homology_basis,
    intersection_matrix,
)
from .differentials import (
    MeromorphicDifferential,
    SingularPart,
    build_with_singular_parts,
    holomorphic_basis,
    residue,
    zero_divisor,
)
from .numerics import Polynomial, poly_roots
from .periods import PeriodData, change_basis, period, period_matrix
from .realnorm import RealNormalizedDifferential, real_normalize, verify_uniqueness
from .whitham_coords import (
    CriticalValues,
    LeafSpec,
    coordinate_chart,
    critical_values,
    jacobian_rank_check,
    trace_leaf,
)

__all__ = [
    "Cycle",
    "CriticalValues",
    "HyperellipticCurve",
    "LeafSpec",
    "MarkedPoint",
    "MeromorphicDifferential",
    "PeriodData",
    "Polynomial",
    "RealNormalizedDifferential",
    "SingularPart",
    "SurfacePoint",
    "build_curve",
    "build_with_singular_parts",
    "change_basis",
    "continue_sheet",
    "coordinate_chart",
    "critical_values",
    "holomorphic_basis",
    "homology_basis",
    "intersection_matrix",
    "jacobian_rank_check",
    "period",
    "period_matrix",
    "poly_roots",
    "real_normalize",
    "residue",
    "trace_leaf",
    "verify_uniqueness",
    "zero_divisor",
]
