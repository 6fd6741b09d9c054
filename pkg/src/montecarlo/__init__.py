"""
Monte Carlo harness
- Experiment plans and ordered run results
- ESD, CLT, bilinear-form, covariance and scaling experiments
- Jackknife errors, KS distances and normality diagnostics
"""
from src.utils.rng import derive_stream
from .plan import ExperimentPlan, RunResult, parse_complex, complex_label
from .statistics import (
    jackknife,
    ks_statistic,
    empirical_cdf,
    describe,
    fit_linear_growth,
    sample_variance,
    sample_covariance,
)
from .experiment_runner import (
    summarize,
    run_esd_experiment,
    run_clt_experiment,
    run_bilinear_experiment,
    run_cov_experiment,
    run_scaling_experiment,
    build_bilinear_matrix,
)

__all__ = [
    'derive_stream', 'ExperimentPlan', 'RunResult', 'parse_complex', 'complex_label',
    'jackknife', 'ks_statistic', 'empirical_cdf', 'describe', 'fit_linear_growth',
    'sample_variance', 'sample_covariance',
    'summarize', 'run_esd_experiment', 'run_clt_experiment', 'run_bilinear_experiment',
    'run_cov_experiment', 'run_scaling_experiment', 'build_bilinear_matrix',
]
