import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, Dict, Any, Optional, Sequence

import numpy as np
from scipy.sparse.linalg import LinearOperator, eigsh, ArpackNoConvergence

from src.ensemble.sample_matrix import EnsembleConfig, SampleMatrix, assemble, apply, dense_form
from src.ensemble.spectrum import eigenvalues, linear_statistic, resolvent_traces, smoothed_statistic
from src.fluctuations.bilinear import bilinear_variance_rhs
from src.fluctuations.functions import TestFunction
from src.fluctuations.variance import clt_variance, trace_covariance
from src.measures.spectral_measures import TauSpec
from src.mp_law.density import density, mp_cdf, LimitCDF
from src.mp_law.mpe_solver import support_bounds
from src.utils.rng import derive_stream
from src.vectors.moment_profiles import moment_profile_or_none
from src.vectors.vector_models import VectorModel, tensor_samples, DEFAULT_MEMORY_BUDGET
from .plan import ExperimentPlan, RunResult, complex_label, parse_complex
from .statistics import (
    jackknife,
    ks_statistic,
    describe,
    fit_linear_growth,
    sample_variance,
    sample_covariance,
)

logger = logging.getLogger(__name__)

MIN_COV_REPLICATES = 500
ESD_GRID_POINTS = 4001
ESCAPE_MARGIN = 0.25
VARG_SAFETY = 3.0
VARN_SAFETY = 3.0
# Kinds with total variation at most 2, where the counting variance bound applies
BOUNDED_VARIATION_KINDS = ('indicator', 'poisson-smoothed-indicator')
BILINEAR_CHUNK = 10_000


def _ordered_map(threads: int, fn: Callable, items: Iterable) -> List:
    """Results in item order whatever the thread count"""
    items = list(items)
    if threads <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _realize(plan: ExperimentPlan, replicate: int) -> SampleMatrix:
    return assemble(plan.config, derive_stream(plan.master_seed, replicate), plan.memory_budget)


def _prediction_constants(model: VectorModel, n: int):
    profile = moment_profile_or_none(model, n)
    if profile is None:
        logger.warning(f"No analytic moment profile for {model.label}; predictions skipped")
        return None
    return profile.a, profile.b


FROZEN_SAMPLE_INDEX = 2 ** 62


def build_bilinear_matrix(block: Dict[str, Any], model: VectorModel, n: int,
                          memory_budget: int = DEFAULT_MEMORY_BUDGET) -> np.ndarray:
    """
    The fixed n^2 x n^2 matrix H of a bilinear experiment.
    kind: identity | zero | single-diagonal(index) | resolvent(z, seed, c, taus)
    """
    kind = block.get('kind')
    size = n * n
    if kind == 'identity':
        return np.eye(size)
    if kind == 'zero':
        return np.zeros((size, size))
    if kind == 'single-diagonal':
        index = int(block.get('index', 0))
        if not 0 <= index < size:
            raise ValueError(f"single-diagonal index {index} outside 0..{size - 1}")
        h = np.zeros((size, size))
        h[index, index] = 1.0
        return h
    if kind == 'resolvent':
        z = parse_complex(block['z'])
        if z.imag == 0.0:
            raise ValueError("resolvent H needs z off the real axis")
        config = EnsembleConfig(
            n=n, k=2, model=model,
            taus=TauSpec.from_dict(block.get('taus', {'kind': 'constant', 'value': 1.0})),
            c=float(block.get('c', 1.0)),
        )
        # Frozen sample on its own stream, independent of the experiment draws
        stream = derive_stream(int(block.get('seed', 0)), FROZEN_SAMPLE_INDEX)
        dense = dense_form(assemble(config, stream, memory_budget), dense_cap=size)
        return np.linalg.inv(dense - z * np.eye(size))
    raise ValueError(f"Unknown H kind '{kind}'")


# Summaries

def _summarize_esd(records: List[Dict[str, Any]], reference: Optional[LimitCDF] = None,
                   support: Optional[Sequence[float]] = None) -> Dict[str, Any]:
    pooled = np.concatenate([np.asarray(r['eigenvalues'], dtype=float) for r in records])
    summary = {
        'replicates': len(records),
        'pooled_count': int(pooled.size),
        'zero_fraction': float(np.mean(pooled == 0.0)),
        'eigen_min': float(pooled.min()),
        'eigen_max': float(pooled.max()),
    }
    if reference is not None:
        summary['ks'] = ks_statistic(pooled, reference, reference.left)
    if support is not None:
        lo, hi = support
        escaped = (pooled < lo - ESCAPE_MARGIN) | (pooled > hi + ESCAPE_MARGIN)
        summary['escaped_fraction'] = float(np.mean(escaped))
    return summary


def _summarize_statistics(records: List[Dict[str, Any]]) -> Dict[str, Any]:
    """
    Per test function: s_r = n^{-1/2}(N_n[phi] - mean over replicates) and its diagnostics
    """
    n = records[0]['n']
    dimension, m = records[0]['dimension'], records[0]['m']
    labels = list(records[0]['statistics'].keys())
    out = {}
    for label in labels:
        raw = np.array([r['statistics'][label] for r in records], dtype=float)
        centered = (raw - raw.mean()) / np.sqrt(n)
        entry = describe(centered)
        entry['raw_variance'] = sample_variance(raw)
        entry['varN'] = sample_variance(raw / dimension)
        entry['varN_bound'] = VARN_SAFETY * 4.0 * m / dimension ** 2
        entry['varN_within_bound'] = entry['varN'] <= entry['varN_bound']
        out[label] = entry
    return out


def _summarize_clt(records: List[Dict[str, Any]]) -> Dict[str, Any]:
    return {
        'replicates': len(records),
        'n': records[0]['n'],
        'statistics': _summarize_statistics(records),
    }


def _summarize_scaling(records: List[Dict[str, Any]]) -> Dict[str, Any]:
    by_n = {}
    for record in records:
        by_n.setdefault(record['n'], []).append(record)

    ns = sorted(by_n)
    per_n = {str(n): _summarize_statistics(by_n[n]) for n in ns}
    labels = list(records[0]['statistics'].keys())
    fits = {}
    for label in labels:
        variances = [per_n[str(n)][label]['raw_variance'] for n in ns]
        fits[label] = {'ns': ns, 'variances': variances, **fit_linear_growth(ns, variances)}
    return {'replicates': len(records), 'ns': ns, 'per_n': per_n, 'fits': fits}


def _summarize_bilinear(records: List[Dict[str, Any]]) -> Dict[str, Any]:
    n = records[0]['n']
    forms = np.array([complex(*r['form']) for r in records])
    if not np.any(forms.imag):
        forms = forms.real
    scaled, error = jackknife(forms, lambda v: n * sample_variance(v))
    return {
        'replicates': len(records),
        'n': n,
        'mean': [float(np.real(forms.mean())), float(np.imag(forms.mean()))],
        'n_var': float(scaled),
        'n_var_se': float(error),
    }


def _summarize_cov(records: List[Dict[str, Any]]) -> Dict[str, Any]:
    """
    n^{-1} Cov{gamma_n(z_i), gamma_n(z_j)} for every pair of probes, plus Var{g_n(z)} checks
    """
    n, dimension, m = records[0]['n'], records[0]['dimension'], records[0]['m']
    probes = [complex(*z) for z in records[0]['z']]
    gammas = np.array([[complex(*g) for g in r['gamma']] for r in records])

    pairs = {}
    for i in range(len(probes)):
        for j in range(i, len(probes)):
            columns = gammas[:, [i, j]]
            value, error = jackknife(columns, sample_covariance)
            value = value / n
            pairs[f"{complex_label(probes[i])}|{complex_label(probes[j])}"] = {
                'z1': [probes[i].real, probes[i].imag],
                'z2': [probes[j].real, probes[j].imag],
                'C_n': [value.real, value.imag],
                'C_n_se': error / n,
            }

    varg = {}
    for i, z in enumerate(probes):
        variance = sample_variance(gammas[:, i] / dimension)
        bound = VARG_SAFETY * 4.0 * m / (dimension * abs(z.imag)) ** 2
        varg[complex_label(z)] = {'varg': variance, 'varg_bound': bound, 'within_bound': variance <= bound}
    return {'replicates': len(records), 'n': n, 'pairs': pairs, 'varg': varg}


def summarize(records: List[Dict[str, Any]], reference: Optional[LimitCDF] = None,
              support: Optional[Sequence[float]] = None) -> Dict[str, Any]:
    """
    Summary of an ordered record list; pure, so re-summarizing gives identical output.
    `reference` and `support` only apply to ESD records.
    """
    if not records:
        raise ValueError("no records to summarize")
    experiment = records[0]['experiment']
    if experiment == 'esd':
        return _summarize_esd(records, reference, support)
    if experiment == 'clt':
        return _summarize_clt(records)
    if experiment == 'scaling':
        return _summarize_scaling(records)
    if experiment == 'bilinear':
        return _summarize_bilinear(records)
    if experiment == 'cov':
        return _summarize_cov(records)
    raise ValueError(f"Unknown experiment '{experiment}' in records")


# Experiments

def run_esd_experiment(plan: ExperimentPlan) -> RunResult:
    """
    Pooled eigenvalues of all replicates against the limiting law (density plus atom at 0)
    """
    config = plan.config
    logger.info(f"ESD experiment: n={config.n}, k={config.k}, m={config.sample_count}, {plan.replicates} replicates")

    try:
        def replicate(r: int):
            spec = eigenvalues(_realize(plan, r))
            logger.debug(f"Replicate {r}: {spec.path} path, {spec.structural_zeros} structural zeros")
            return {
                'experiment': 'esd', 'replicate': r, 'n': config.n, 'k': config.k,
                'dimension': config.dimension, 'm': config.sample_count, 'path': spec.path,
                'eigenvalues': spec.eigenvalues.tolist(),
            }, spec

        outcomes = _ordered_map(plan.threads, replicate, range(plan.replicates))
        records = [record for record, _ in outcomes]

        # Step 1: limiting law at the realized ratio
        sigma = config.taus.limit_measure()
        lo, hi = support_bounds(sigma, config.ratio)
        grid = np.linspace(min(lo, 0.0) - 0.5, hi + 0.5, ESD_GRID_POINTS)
        curve = density(sigma, config.ratio, grid, plan.eta_schedule)
        reference = mp_cdf(curve)

        # Step 2: Kolmogorov distance of the pooled ESD
        summary = summarize(records, reference=reference, support=(lo, hi))
        if summary['escaped_fraction'] > 0:
            logger.warning(f"{summary['escaped_fraction']:.2e} of eigenvalues lie outside the support window")

        logger.info(f"ESD experiment completed: KS = {summary['ks']:.4f}")
        return RunResult(experiment='esd', records=records, summary=summary,
                         predictions={'atom_at_zero': curve.atom_at_zero, 'support': [lo, hi],
                                      'total_mass': curve.total_mass()},
                         metadata={'density_curve': curve, 'spectra': [spec for _, spec in outcomes]})

    except Exception as e:
        logger.error(f"ESD experiment failed: {e}")
        raise


def _spectral_extremes(mat: SampleMatrix) -> tuple:
    """Smallest and largest eigenvalue by Lanczos on the matrix-free product"""
    operator = LinearOperator((mat.dimension, mat.dimension), matvec=lambda v: apply(mat, v), dtype=float)
    start = np.ones(mat.dimension)
    largest = float(eigsh(operator, k=1, which='LA', v0=start, return_eigenvectors=False)[0])
    if np.all(mat.tau >= 0):
        return 0.0, largest
    smallest = float(eigsh(operator, k=1, which='SA', v0=start, return_eigenvectors=False)[0])
    return smallest, largest


def _trace_statistics(mat: SampleMatrix, phis: Sequence[TestFunction]) -> Optional[Dict[str, float]]:
    """
    N_n[phi] from Tr M^p without an eigensolve when every phi is a polynomial on the spectrum;
    None when some phi needs the eigenvalues
    """
    if not all(phi.kind == 'constant' or phi.kind == 'monomial' for phi in phis):
        return None
    if mat.dimension <= 2:
        return None

    monomials = [phi for phi in phis if phi.kind == 'monomial']
    if monomials:
        try:
            smallest, largest = _spectral_extremes(mat)
        except ArpackNoConvergence as e:
            logger.debug(f"Lanczos bound failed, falling back to the eigensolve: {e}")
            return None
        if any(smallest < phi.lo or largest > phi.hi for phi in monomials):
            return None

    traces = {0: float(mat.dimension), 1: mat.trace()}
    if any(phi.kind == 'monomial' and phi.degree == 2 for phi in phis):
        gram = mat.factor.T @ mat.factor
        traces[2] = float(np.sum(gram ** 2 * np.outer(mat.tau, mat.tau)))

    out = {}
    for phi in phis:
        if phi.kind == 'constant':
            out[phi.label] = phi.amplitude * phi.value * mat.dimension
        else:
            out[phi.label] = phi.amplitude * traces[phi.degree]
    return out


def _evaluate_statistic(spec, phi: TestFunction) -> float:
    """N_n[phi]; Poisson-smoothed functions with a compactly supported base go through Im gamma_n"""
    if phi.kind == 'smoothed':
        hint = phi.base.support_hint()
        if hint is not None:
            return phi.amplitude * smoothed_statistic(spec, phi.base, phi.eta, *hint)
    return linear_statistic(spec, phi)


def _statistics_record(plan: ExperimentPlan, r: int, experiment: str) -> Dict[str, Any]:
    config = plan.config
    mat = _realize(plan, r)
    values = _trace_statistics(mat, plan.phis)
    if values is None:
        spec = eigenvalues(mat)
        values = {phi.label: _evaluate_statistic(spec, phi) for phi in plan.phis}
    return {
        'experiment': experiment, 'replicate': r, 'n': config.n, 'k': config.k,
        'dimension': config.dimension, 'm': config.sample_count,
        'statistics': values,
    }


def _variance_predictions(plan: ExperimentPlan) -> Dict[str, Any]:
    config = plan.config
    constants = _prediction_constants(config.model, config.n)
    if constants is None or config.k != 2:
        return {}
    a, b = constants
    sigma = config.taus.limit_measure()
    out = {'a': a, 'b': b, 'c': config.ratio}
    for phi in plan.phis:
        out[phi.label] = clt_variance(sigma, config.ratio, a, b, phi, plan.eta_schedule).to_dict()
    return out


def run_clt_experiment(plan: ExperimentPlan) -> RunResult:
    """
    Samples s_r = n^{-1/2}(N_n[phi] - replicate mean) for every test function of the plan
    """
    config = plan.config
    if config.k != 2:
        raise ValueError(f"CLT experiment needs k = 2, got k = {config.k}")
    if not plan.phis:
        raise ValueError("CLT experiment needs at least one test function")

    logger.info(f"CLT experiment: n={config.n}, m={config.sample_count}, {plan.replicates} replicates, "
                f"{len(plan.phis)} test functions")
    try:
        records = _ordered_map(plan.threads, lambda r: _statistics_record(plan, r, 'clt'), range(plan.replicates))
        summary = summarize(records)
        predictions = _variance_predictions(plan)

        for label, entry in summary['statistics'].items():
            if entry['normality_flag']:
                logger.warning(f"{label}: skewness {entry['skewness']:.3f}, excess kurtosis {entry['excess_kurtosis']:.3f}")
            logger.info(f"{label}: variance {entry['variance']:.5f} ± {entry['variance_se']:.5f}")

        for phi in plan.phis:
            entry = summary['statistics'][phi.label]
            if phi.kind in BOUNDED_VARIATION_KINDS and abs(phi.amplitude) <= 1.0 and not entry['varN_within_bound']:
                logger.warning(f"{phi.label}: Var N_n/N = {entry['varN']:.3e} exceeds its bound {entry['varN_bound']:.3e}")

        return RunResult(experiment='clt', records=records, summary=summary, predictions=predictions)

    except Exception as e:
        logger.error(f"CLT experiment failed: {e}")
        raise


def run_scaling_experiment(plan: ExperimentPlan, ns: Sequence[int]) -> RunResult:
    """
    Var{N_n[phi]} across dimensions at fixed c, fitted by kappa n through the origin
    """
    if len(ns) < 2:
        raise ValueError("scaling experiment needs at least two dimensions")
    logger.info(f"Scaling experiment over n in {list(ns)}")

    try:
        records = []
        for n in ns:
            sub_plan = plan.with_dimension(int(n))
            records.extend(_ordered_map(sub_plan.threads,
                                        lambda r: _statistics_record(sub_plan, r, 'scaling'),
                                        range(sub_plan.replicates)))
        summary = summarize(records)
        for label, fit in summary['fits'].items():
            logger.info(f"{label}: kappa = {fit['kappa']:.4f}, R^2 = {fit['r_squared']:.4f}")
        return RunResult(experiment='scaling', records=records, summary=summary)

    except Exception as e:
        logger.error(f"Scaling experiment failed: {e}")
        raise


def run_bilinear_experiment(h: np.ndarray, model: VectorModel, n: int, reps: int, master_seed: int = 0,
                            threads: int = 1, chunk_size: int = BILINEAR_CHUNK,
                            memory_budget: int = DEFAULT_MEMORY_BUDGET) -> RunResult:
    """
    n Var{(HY, Y)} over independent Y = y (x) y' with H held fixed
    """
    h = np.asarray(h)
    if h.shape != (n * n, n * n):
        raise ValueError(f"H must be {n * n} x {n * n}, got {h.shape}")
    if reps < 2:
        raise ValueError(f"reps must be at least 2, got {reps}")

    logger.info(f"Bilinear experiment: {model.label}, n={n}, {reps} draws")
    try:
        n_chunks = -(-reps // chunk_size)

        def chunk(index: int) -> np.ndarray:
            size = min(chunk_size, reps - index * chunk_size)
            rows = tensor_samples(model, n, 2, size, derive_stream(master_seed, index), memory_budget)
            return np.einsum('ij,jk,ik->i', rows, h, rows)

        forms = np.concatenate(_ordered_map(threads, chunk, range(n_chunks)))
        records = [{'experiment': 'bilinear', 'replicate': r, 'n': n, 'form': [float(v.real), float(v.imag)]}
                   for r, v in enumerate(forms.astype(complex))]
        summary = summarize(records)

        predictions = {}
        constants = _prediction_constants(model, n)
        if constants is not None:
            a, b = constants
            rhs = bilinear_variance_rhs(h, a, b, n)
            predictions = {'a': a, 'b': b, 'rhs': rhs,
                           'relative_error': abs(summary['n_var'] - rhs) / abs(rhs) if rhs else None}
        logger.info(f"n Var(HY,Y) = {summary['n_var']:.4f} ± {summary['n_var_se']:.4f}")
        return RunResult(experiment='bilinear', records=records, summary=summary, predictions=predictions)

    except Exception as e:
        logger.error(f"Bilinear experiment failed: {e}")
        raise


def run_cov_experiment(plan: ExperimentPlan, z1: complex, z2: complex) -> RunResult:
    """
    C_n(z1, z2) = n^{-1} Cov{gamma_n(z1), gamma_n(z2)} against the limiting covariance;
    every pair of the plan's probes is summarized as well
    """
    if plan.replicates < MIN_COV_REPLICATES:
        raise ValueError(f"covariance experiment needs at least {MIN_COV_REPLICATES} replicates, got {plan.replicates}")
    z1, z2 = complex(z1), complex(z2)
    if z1.imag == 0.0 or z2.imag == 0.0:
        raise ValueError("covariance probes must lie off the real axis")

    probes = list(dict.fromkeys([z1, z2, *map(complex, plan.z_probes)]))
    config = plan.config
    logger.info(f"Covariance experiment: n={config.n}, {plan.replicates} replicates, {len(probes)} probes")

    try:
        zs = np.array(probes)

        def replicate(r: int) -> Dict[str, Any]:
            gamma = resolvent_traces(eigenvalues(_realize(plan, r)), zs)
            return {
                'experiment': 'cov', 'replicate': r, 'n': config.n, 'k': config.k,
                'dimension': config.dimension, 'm': config.sample_count,
                'z': [[z.real, z.imag] for z in probes],
                'gamma': [[float(g.real), float(g.imag)] for g in gamma],
            }

        records = _ordered_map(plan.threads, replicate, range(plan.replicates))
        summary = summarize(records)
        target = f"{complex_label(z1)}|{complex_label(z2)}"
        summary['target'] = target

        for label, entry in summary['varg'].items():
            if not entry['within_bound']:
                logger.warning(f"Var g_n({label}) = {entry['varg']:.3e} exceeds its bound {entry['varg_bound']:.3e}")

        predictions = {}
        constants = _prediction_constants(config.model, config.n)
        if constants is not None and config.k == 2:
            a, b = constants
            sigma = config.taus.limit_measure()
            for label, entry in summary['pairs'].items():
                limit = trace_covariance(sigma, config.ratio, a, b, complex(*entry['z1']), complex(*entry['z2']))
                empirical = complex(*entry['C_n'])
                predictions[label] = {
                    'C': [limit.real, limit.imag],
                    'relative_error': abs(empirical - limit) / abs(limit) if limit != 0 else None,
                }

        return RunResult(experiment='cov', records=records, summary=summary, predictions=predictions)

    except Exception as e:
        logger.error(f"Covariance experiment failed: {e}")
        raise
