"""
Spectral measures: the tau-side of the model
- Tau descriptions and their finite realizations
- Normalized counting measures and moments
"""
from .spectral_measures import (
    SpectralMeasure,
    TauSpec,
    TAU_KINDS,
    realize_taus,
    ncm,
    measure_moment,
    measure_support,
    kolmogorov_distance,
)

__all__ = [
    'SpectralMeasure', 'TauSpec', 'TAU_KINDS', 'realize_taus', 'ncm',
    'measure_moment', 'measure_support', 'kolmogorov_distance',
]
