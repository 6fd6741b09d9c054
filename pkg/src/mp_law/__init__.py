"""
Limiting law: the fixed-point equation for the Stieltjes transform
- Vectorized solver for f and f'
- tau = 1 closed form and edges
- Density recovery by Stieltjes inversion, atom at zero, limiting CDF
"""
from .mpe_solver import (
    StieltjesSolution,
    solve_mpe,
    solve_mpe_grid,
    mpe_residual,
    mp_closed_form,
    mp_closed_form_density,
    mp_edges,
    support_bounds,
    constant_sigma,
)
from .density import DensityCurve, density, atom_at_zero, richardson, LimitCDF, mp_cdf, DEFAULT_ETA_SCHEDULE

__all__ = [
    'StieltjesSolution', 'solve_mpe', 'solve_mpe_grid', 'mpe_residual', 'mp_closed_form',
    'mp_closed_form_density', 'mp_edges', 'support_bounds', 'constant_sigma',
    'DensityCurve', 'density', 'atom_at_zero', 'richardson', 'LimitCDF', 'mp_cdf',
    'DEFAULT_ETA_SCHEDULE',
]
