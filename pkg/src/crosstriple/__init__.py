"""Finite spectral triples, their crossed products by discrete groups, and
numerical checks of the dual Dirac operator, the state action and the dual
coaction on truncations to word-length balls."""
from .action import UnitaryAction, swap_action
from .coaction import (
    Character,
    Mixture,
    ProductState,
    VectorState,
    beta,
    coaction_via_W,
    schur_kernel,
    verify_contractive,
    verify_isometric_abelian,
    verify_mechanism,
)
from .connes import DistanceResult, connes_distance
from .crossed import (
    CrossedElement,
    DualOperator,
    commutator_with_dual,
    compression_profile,
    dual_spectrum,
    represent,
    verify_bounds,
)
from .groups import GroupModel, ResourceError
from .triple import (
    FiniteSpectralTriple,
    State,
    ValidationError,
    clock_shift,
    graph_triple,
    metric_commutant_dimension,
    operator_norm,
    scalar_triple,
    two_point,
)

__all__ = [
    "Character", "CrossedElement", "DistanceResult", "DualOperator", "FiniteSpectralTriple",
    "GroupModel", "Mixture", "ProductState", "ResourceError", "State", "UnitaryAction",
    "ValidationError", "VectorState", "beta", "clock_shift", "coaction_via_W",
    "commutator_with_dual", "compression_profile", "connes_distance", "dual_spectrum",
    "graph_triple", "metric_commutant_dimension", "operator_norm", "represent",
    "scalar_triple", "schur_kernel", "swap_action", "two_point", "verify_bounds",
    "verify_contractive", "verify_isometric_abelian", "verify_mechanism",
]
