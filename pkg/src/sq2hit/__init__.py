"""Admissible monomial bases for the hit problem over the mod 2 Steenrod algebra."""

from __future__ import annotations

__version__ = "0.1.0"

from .f2core import ContractError, Polynomial, alpha, compare, weight_vector, xi  # noqa: E402
from .hitengine import (  # noqa: E402
    QBasis,
    ResourceError,
    admissible_basis,
    hit_space,
    kameko_iso_check,
    kameko_matrix,
    omega_decomposition,
)

__all__ = [
    "ContractError", "Polynomial", "QBasis", "ResourceError", "__version__",
    "admissible_basis", "alpha", "compare", "hit_space", "kameko_iso_check",
    "kameko_matrix", "omega_decomposition", "weight_vector", "xi",
]
