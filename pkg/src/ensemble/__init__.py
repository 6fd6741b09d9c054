"""
Ensemble: realizations of M_{n,m,k} = sum_alpha tau_alpha Y_alpha Y_alpha^T
- Assembly in factored form and matrix-free products
- Gram-reduced and dense eigensolves
- Linear eigenvalue statistics and resolvent traces
"""
from .sample_matrix import EnsembleConfig, SampleMatrix, assemble, apply, dense_form, DENSE_CAP
from .spectrum import (
    Spectrum,
    eigenvalues,
    linear_statistic,
    resolvent_trace,
    resolvent_traces,
    smoothed_statistic,
    write_spectrum_csv,
)

__all__ = [
    'EnsembleConfig', 'SampleMatrix', 'assemble', 'apply', 'dense_form', 'DENSE_CAP',
    'Spectrum', 'eigenvalues', 'linear_statistic', 'resolvent_trace', 'resolvent_traces',
    'smoothed_statistic', 'write_spectrum_csv',
]
