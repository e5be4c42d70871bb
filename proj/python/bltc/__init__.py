"""Barycentric Lagrange treecode for Coulomb and Yukawa potentials."""

from ._bltc import (
    Error,
    barycentric_weights,
    chebyshev_points,
    direct_sum,
    generate_particles,
    lagrange_basis,
    relative_error,
    sample_indices,
    treecode,
)

__all__ = [
    "Error",
    "barycentric_weights",
    "chebyshev_points",
    "direct_sum",
    "generate_particles",
    "lagrange_basis",
    "relative_error",
    "sample_indices",
    "treecode",
]
