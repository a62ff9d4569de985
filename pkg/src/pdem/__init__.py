"""Exactly solvable position-dependent-mass potentials from an so(2,1) potential algebra."""

__version__ = "0.1.0"

from .algebra import (  # noqa: E402
    AlgebraRealization,
    AmbiguityParams,
    RealizationClass,
    build_model,
    check_constraints,
    class_grid,
    fg_at,
    potential_v,
    potential_veff,
    potential_vk,
    potential_vmu,
)
from .intertwining import Branch, build_intertwiner, riccati_residual, verify_intertwining  # noqa: E402
from .mass_profile import Grid, GridFunction, MassProfile, coordinate_map, mass_at, sample_on_grid  # noqa: E402
from .spectral import discretize, lowest_eigenpairs, verify_spectrum  # noqa: E402
from .wavefunctions import casimir_residual, chain, chi0, ladder_apply  # noqa: E402

__all__ = [
    "AlgebraRealization", "AmbiguityParams", "RealizationClass", "Branch",
    "Grid", "GridFunction", "MassProfile",
    "build_model", "check_constraints", "class_grid", "fg_at",
    "potential_v", "potential_veff", "potential_vk", "potential_vmu",
    "build_intertwiner", "riccati_residual", "verify_intertwining",
    "coordinate_map", "mass_at", "sample_on_grid",
    "discretize", "lowest_eigenpairs", "verify_spectrum",
    "casimir_residual", "chain", "chi0", "ladder_apply",
]
