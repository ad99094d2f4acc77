"""Numerical workbench for oscillating spectral multipliers on H^3 and H^3 x H^3."""

import os as _os

# The only parallelism is inside BLAS/OpenMP; OSCIKERNEL_THREADS caps those
# pools and has to be applied before numpy loads.
_cap = _os.environ.get("OSCIKERNEL_THREADS", "")
if _cap.isdigit() and int(_cap) >= 1:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        _os.environ[_var] = _cap

from .space_models import H3, H3xH3, SpaceModel, RadialPoint, SpectralPoint, RegionSpec, get_model
from .quadrature import QuadratureSpec, IntegralResult

__all__ = [
    "H3",
    "H3xH3",
    "SpaceModel",
    "RadialPoint",
    "SpectralPoint",
    "RegionSpec",
    "get_model",
    "QuadratureSpec",
    "IntegralResult",
]
