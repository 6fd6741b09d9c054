import logging
from typing import Callable, Tuple, Optional, Sequence, Dict, Any

import numpy as np
from scipy import stats

from src.utils.resampling import jackknife, JACKKNIFE_BLOCKS

logger = logging.getLogger(__name__)

SKEW_FLAG = 0.15
KURTOSIS_FLAG = 0.3
MIN_NORMALITY_REPLICATES = 200


def empirical_cdf(samples: Sequence[float]) -> Tuple[Callable, Callable]:
    """Right-continuous empirical CDF and its left limit"""
    ordered = np.sort(np.asarray(samples, dtype=float))
    size = ordered.size

    def right(x):
        return np.searchsorted(ordered, x, side='right') / size

    def left(x):
        return np.searchsorted(ordered, x, side='left') / size

    return right, left


def ks_statistic(samples: Sequence[float], reference_cdf: Callable,
                 reference_left: Optional[Callable] = None) -> float:
    """
    sup_x |F_emp(x) - F(x)| over both one-sided limits at every distinct sample value.
    `reference_left` gives F(x-) for references with atoms; defaults to F.
    """
    samples = np.asarray(samples, dtype=float)
    if samples.size < 2:
        raise ValueError(f"KS statistic needs at least 2 samples, got {samples.size}")

    values = np.unique(samples)
    ecdf_right, ecdf_left = empirical_cdf(samples)

    right = np.asarray(reference_cdf(values), dtype=float)
    left = np.asarray((reference_left or reference_cdf)(values), dtype=float)
    return float(max(np.max(np.abs(ecdf_right(values) - right)), np.max(np.abs(ecdf_left(values) - left))))


def sample_variance(values: np.ndarray) -> float:
    values = np.asarray(values)
    return float(np.sum(np.abs(values - values.mean()) ** 2) / (values.shape[0] - 1))


def sample_covariance(columns: np.ndarray) -> complex:
    """Unconjugated covariance of the two columns of a (reps, 2) array"""
    centered = columns - columns.mean(axis=0)
    return complex(np.sum(centered[:, 0] * centered[:, 1]) / (columns.shape[0] - 1))


def describe(samples: Sequence[float], blocks: int = JACKKNIFE_BLOCKS) -> Dict[str, Any]:
    """
    Variance with jackknife error, skewness, excess kurtosis and KS distance to
    Normal(0, sample variance) for centered samples
    """
    samples = np.asarray(samples, dtype=float)
    count = samples.size
    variance, variance_se = jackknife(samples, sample_variance, blocks=blocks)

    summary = {
        'count': int(count),
        'mean': float(samples.mean()),
        'variance': float(variance),
        'variance_se': float(variance_se),
        'skewness': None,
        'excess_kurtosis': None,
        'ks_normal': None,
        'normality_flag': False,
        'underpowered': count < MIN_NORMALITY_REPLICATES,
    }

    if variance > 1e-24 * max(1.0, float(np.max(np.abs(samples))) ** 2):
        skewness = float(stats.skew(samples, bias=False))
        kurtosis = float(stats.kurtosis(samples, fisher=True, bias=False))
        scale = np.sqrt(variance)
        summary.update({
            'skewness': skewness,
            'excess_kurtosis': kurtosis,
            'ks_normal': ks_statistic(samples - samples.mean(), stats.norm(loc=0.0, scale=scale).cdf),
            'normality_flag': abs(skewness) > SKEW_FLAG or abs(kurtosis) > KURTOSIS_FLAG,
        })

    if summary['underpowered']:
        logger.warning(f"Only {count} replicates: normality diagnostics are underpowered (< {MIN_NORMALITY_REPLICATES})")
    return summary


def fit_linear_growth(ns: Sequence[float], variances: Sequence[float]) -> Dict[str, float]:
    """
    Least-squares fit variance = kappa n through the origin and its R^2
    """
    ns = np.asarray(ns, dtype=float)
    variances = np.asarray(variances, dtype=float)
    kappa = float(np.dot(ns, variances) / np.dot(ns, ns))
    residual = float(np.sum((variances - kappa * ns) ** 2))
    total = float(np.sum((variances - variances.mean()) ** 2))
    r_squared = 1.0 - residual / total if total > 0 else (1.0 if residual == 0 else 0.0)
    return {'kappa': kappa, 'r_squared': r_squared}
