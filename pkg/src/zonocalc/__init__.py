"""Zonotope calculus for random submanifolds.

Exact zonotope algebra (Minkowski sums, wedge products, mixed and intrinsic
volumes), Kac-Rice densities and expected currents for finite-dimensional
random fields on model manifolds, Finsler/Crofton length and volume
formulas, and an independent Monte Carlo zero-counting oracle.
"""

from .multivector import Frame, MultiVector, inner, wedge, wedge_vectors
from .zonotope import GrassmannianMeasure, Zonotope, from_samples, sphere_probes
from .algebra import (
    af_inequality,
    ball_volume,
    bm_inequality,
    gaussian_ball,
    gaussian_expected_wedge_norm,
    intrinsic_volume,
    mixed_volume,
    pair_length,
    sphere_volume,
    volume,
    wedge_power,
    wedge_zonotopes,
)

__all__ = [
    "Frame",
    "MultiVector",
    "inner",
    "wedge",
    "wedge_vectors",
    "GrassmannianMeasure",
    "Zonotope",
    "from_samples",
    "sphere_probes",
    "af_inequality",
    "ball_volume",
    "bm_inequality",
    "gaussian_ball",
    "gaussian_expected_wedge_norm",
    "intrinsic_volume",
    "mixed_volume",
    "pair_length",
    "sphere_volume",
    "volume",
    "wedge_power",
    "wedge_zonotopes",
]

__version__ = "0.1.0"
