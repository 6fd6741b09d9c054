"""
Fluctuation formulas for linear eigenvalue statistics
- Test functions, Poisson smoothing and Sobolev norms
- Limiting CLT variance and its tau = 1 closed form
- Covariance of resolvent traces
- Variance of bilinear forms (HY, Y) through partial traces of H
"""
from .functions import TestFunction, FUNCTION_KINDS, poisson_smooth, sobolev_norm
from .variance import (
    VariancePrediction,
    clt_variance,
    clt_variance_closed_form,
    trace_covariance,
    neville_at_zero,
    integration_window,
)
from .bilinear import (
    partial_trace,
    partial_traces,
    g_functions,
    bilinear_variance_rhs,
    bilinear_variance_rhs_general,
)

__all__ = [
    'TestFunction', 'FUNCTION_KINDS', 'poisson_smooth', 'sobolev_norm',
    'VariancePrediction', 'clt_variance', 'clt_variance_closed_form', 'trace_covariance',
    'neville_at_zero', 'integration_window',
    'partial_trace', 'partial_traces', 'g_functions', 'bilinear_variance_rhs',
    'bilinear_variance_rhs_general',
]
