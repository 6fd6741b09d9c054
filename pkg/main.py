import argparse
import json
import logging
import logging.config
import sys
import traceback
from pathlib import Path
from typing import Dict, Any, List, Optional

import numpy as np

from src.config.config_manager import ConfigManager
from src.config.config_loader import ConfigLoader, DEFAULT_REPLICATES
from src.config.config_validator import EXPERIMENTS
from src.ensemble.spectrum import write_spectrum_csv
from src.fluctuations.variance import clt_variance, clt_variance_closed_form
from src.montecarlo.experiment_runner import (
    MIN_COV_REPLICATES,
    build_bilinear_matrix,
    run_bilinear_experiment,
    run_clt_experiment,
    run_cov_experiment,
    run_esd_experiment,
    run_scaling_experiment,
)
from src.montecarlo.plan import RunResult, parse_complex
from src.mp_law.density import density
from src.mp_law.mpe_solver import solve_mpe_grid
from src.presentation.report_generator import ReportGenerator
from src.presentation.visualizer import SpectrumVisualizer
from src.utils.exceptions import ConfigValidationError, ConvergenceError
from src.utils.result_store import ResultStore, to_jsonable
from src.vectors.moment_profiles import (
    MIN_EMPIRICAL_REPS,
    empirical_moment_profile,
    moment_profile_or_none,
)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_NUMERICS = 3

DEFAULT_MOMENT_REPS = 100_000
DEFAULT_PROFILE_N = 64
# Keys that never change the numbers a run produces
NON_SEMANTIC_KEYS = ('output_dir', 'threads', 'log_level', 'plots', 'dump_spectrum')


class TensorMPLab:
    """
    Runs one experiment from a validated config and writes its outputs:
    manifest.json, records.jsonl, summary.json, report.txt plus experiment-specific files
    """

    def __init__(self, log_level: Optional[str] = None):
        self.config = ConfigManager()
        self.setup_logging(log_level)

        self.loader = ConfigLoader(self.config)
        self.reports = ReportGenerator()

    def setup_logging(self, log_level: Optional[str] = None):
        """Setup logging: console on stderr plus the run log file"""
        try:
            logging.config.dictConfig(self.config.get_logging_config(log_level))
            self.logger = logging.getLogger(__name__)
        except Exception as e:
            print(f"Logging setup failed: {e}", file=sys.stderr)
            logging.basicConfig(level=logging.INFO, format='%(levelname)s: %(message)s', stream=sys.stderr)
            self.logger = logging.getLogger(__name__)

    def load_config(self, experiment: str, args: argparse.Namespace) -> Dict[str, Any]:
        raw = self.loader.load(
            experiment,
            path=args.config,
            seed=args.seed,
            output_dir=args.out,
            replicates=args.replicates,
            threads=args.threads,
        )
        if getattr(args, 'dump_spectrum', False):
            raw = {**raw, 'dump_spectrum': True}
        return raw

    def run(self, experiment: str, raw: Dict[str, Any], plots: bool = False) -> Dict[str, Any]:
        """
        Execute one experiment; returns the one-line summary
        """
        out_dir = self.config.prepare_output_dir(
            raw.get('output_dir') or self.config.file_paths['output_dir'] / experiment)
        store = ResultStore(out_dir)
        seed = self.loader.seed(raw)

        self.logger.info("=" * 60)
        self.logger.info(f"{experiment.upper()}: output to {out_dir}")
        self.logger.info("=" * 60)

        store.save_manifest({k: v for k, v in raw.items() if k not in NON_SEMANTIC_KEYS}, seed, experiment)
        handler = getattr(self, f"run_{experiment.replace('-', '_')}")
        result, headline = handler(raw, store)

        store.save_records(result.records)
        store.save_summary({'summary': result.summary, 'predictions': result.predictions})
        with open(store.saved_paths['manifest'], 'r', encoding='utf-8') as f:
            manifest = json.load(f)
        store.save_text(self.reports.render_run_report(result, manifest))

        if plots or raw.get('plots'):
            self.render_figures(result, out_dir)

        self.logger.info(f"{experiment} completed; outputs: {sorted(store.saved_paths)}")
        return {'experiment': experiment, 'status': 'ok', 'output_dir': str(out_dir), **headline}

    # Monte Carlo experiments

    def run_esd(self, raw: Dict[str, Any], store: ResultStore):
        result = run_esd_experiment(self.loader.plan(raw))
        pooled = np.concatenate([record['eigenvalues'] for record in result.records])
        store.save_histogram(pooled, 'esd_histogram.csv', bins=100)
        store.save_density(result.metadata['density_curve'])
        if raw.get('dump_spectrum'):
            for r, spec in enumerate(result.metadata['spectra']):
                write_spectrum_csv(spec, store.output_dir / 'spectra' / f'spectrum_{r}.csv')
            self.logger.info(f"Dumped {len(result.metadata['spectra'])} spectra to {store.output_dir / 'spectra'}")
        return result, {'ks': result.summary['ks'], 'atom_at_zero': result.predictions['atom_at_zero']}

    def run_clt(self, raw: Dict[str, Any], store: ResultStore):
        plan = self.loader.plan(raw)
        result = run_clt_experiment(plan)
        n = plan.config.n
        for index, label in enumerate(result.summary['statistics']):
            samples = np.array([r['statistics'][label] for r in result.records], dtype=float)
            store.save_histogram((samples - samples.mean()) / np.sqrt(n), f'clt_histogram_{index}.csv')
        headline = {
            'variance': {label: entry['variance'] for label, entry in result.summary['statistics'].items()},
            'predicted_variance': {label: entry['V'] for label, entry in result.predictions.items()
                                   if isinstance(entry, dict)},
        }
        return result, headline

    def run_scaling(self, raw: Dict[str, Any], store: ResultStore):
        result = run_scaling_experiment(self.loader.plan(raw), [int(n) for n in raw['ns']])
        fits = result.summary['fits']
        return result, {'kappa': {label: fit['kappa'] for label, fit in fits.items()},
                        'r_squared': {label: fit['r_squared'] for label, fit in fits.items()}}

    def run_cov(self, raw: Dict[str, Any], store: ResultStore):
        if 'replicates' not in raw:
            raw = {**raw, 'replicates': MIN_COV_REPLICATES}
        z1, z2 = parse_complex(raw['z1']), parse_complex(raw['z2'])
        result = run_cov_experiment(self.loader.plan(raw), z1, z2)
        target = result.summary['target']
        headline = {'C_n': result.summary['pairs'][target]['C_n']}
        if target in result.predictions:
            headline['C'] = result.predictions[target]['C']
        return result, headline

    def run_bilinear(self, raw: Dict[str, Any], store: ResultStore):
        n = int(raw['n'])
        model = self.loader.model(raw)
        memory_budget = self.loader.memory_budget(raw)
        h = build_bilinear_matrix(raw['H'], model, n, memory_budget)
        result = run_bilinear_experiment(
            h, model, n,
            reps=int(raw.get('replicates', DEFAULT_REPLICATES)),
            master_seed=self.loader.seed(raw),
            threads=self.loader.threads(raw),
            chunk_size=int(raw.get('chunk_size', self.config.processing_config['chunk_size'])),
            memory_budget=memory_budget,
        )
        headline = {'n_var': result.summary['n_var'], 'n_var_se': result.summary['n_var_se']}
        if 'rhs' in result.predictions:
            headline['rhs'] = result.predictions['rhs']
        return result, headline

    # Deterministic computations

    def run_mp_solve(self, raw: Dict[str, Any], store: ResultStore):
        sigma, c = self.loader.sigma_and_ratio(raw)
        zs = self.loader.z_grid(raw)
        solution = solve_mpe_grid(sigma, c, zs)
        store.save_f_values(solution)

        records = [{
            'experiment': 'mp-solve', 'z': [z.real, z.imag], 'f': [f.real, f.imag],
            'fprime': [d.real, d.imag], 'residual': float(r),
        } for z, f, d, r in zip(solution.grid, solution.f_values, solution.fprime_values, solution.residuals)]
        summary = {'points': len(records), 'c': c, 'max_residual': float(np.max(solution.residuals)),
                   'iterations': int(np.max(solution.iterations))}

        lambdas = self.loader.lambda_grid(raw)
        if lambdas is not None:
            curve = density(sigma, c, lambdas, self.loader.eta_schedule(raw))
            store.save_density(curve)
            summary.update({'atom_at_zero': curve.atom_at_zero, 'total_mass': curve.total_mass(),
                            'atom_verified': curve.atom_verified})

        result = RunResult(experiment='mp-solve', records=records, summary=summary)
        return result, {'max_residual': summary['max_residual'], 'points': summary['points']}

    def _variance_constants(self, raw: Dict[str, Any]):
        """(a, b): explicit values first, then the model's analytic profile, then the gaussian values"""
        if 'a' in raw and 'b' in raw:
            return float(raw['a']), float(raw['b'])
        if 'model' in raw:
            profile = moment_profile_or_none(self.loader.model(raw), int(raw.get('n', DEFAULT_PROFILE_N)))
            if profile is None:
                raise ConfigValidationError("invalid experiment config", issues=[
                    "model has no analytic moment profile; give 'a' and 'b' explicitly"])
            return profile.a, profile.b
        self.logger.info("No model or constants given; using a = b = 0")
        return 0.0, 0.0

    def run_predict_variance(self, raw: Dict[str, Any], store: ResultStore):
        sigma, c = self.loader.sigma_and_ratio(raw)
        a, b = self._variance_constants(raw)
        schedule = self.loader.eta_schedule(raw)

        predictions = []
        for phi in self.loader.phis(raw):
            entry = clt_variance(sigma, c, a, b, phi, schedule).to_dict()
            if raw.get('closed_form'):
                if sigma.values.size == 1 and sigma.values[0] == 1.0:
                    entry['V_closed_form'] = clt_variance_closed_form(c, a, b, phi)
                else:
                    self.logger.warning("closed form needs tau = 1; skipped")
            predictions.append(entry)
        store.save_predictions(predictions)

        result = RunResult(experiment='predict-variance', records=predictions,
                           summary={'a': a, 'b': b, 'c': c, 'count': len(predictions)})
        return result, {'V': {entry['phi']: entry['V'] for entry in predictions}}

    def run_moments(self, raw: Dict[str, Any], store: ResultStore):
        model = self.loader.model(raw)
        n = int(raw['n'])
        reps = int(raw.get('replicates', DEFAULT_MOMENT_REPS))

        analytic = moment_profile_or_none(model, n)
        empirical = None
        if reps >= MIN_EMPIRICAL_REPS:
            empirical = empirical_moment_profile(
                model, n, reps, master_seed=self.loader.seed(raw),
                chunk_size=int(raw.get('chunk_size', self.config.processing_config['chunk_size'])))
        else:
            self.logger.warning(f"{reps} draws is below {MIN_EMPIRICAL_REPS}; empirical column skipped")

        table = self.reports.moments_table(analytic, empirical)
        store.save_table(table, 'moments.csv')
        print(self.reports.render_moments_table(table, model.label, n), end='')

        records = [profile.to_dict() for profile in (analytic, empirical) if profile is not None]
        reference = empirical or analytic
        summary = {'model': model.label, 'n': n, 'replicates': reps,
                   'a_plus_b_plus_2': reference.abc if reference else None}
        result = RunResult(experiment='moments', records=records, summary=summary)
        return result, {'a_plus_b_plus_2': summary['a_plus_b_plus_2']}

    def render_figures(self, result: RunResult, out_dir: Path):
        visualizer = SpectrumVisualizer(out_dir / 'figures')
        if result.experiment == 'esd':
            pooled = np.concatenate([record['eigenvalues'] for record in result.records])
            visualizer.plot_esd(pooled, result.metadata['density_curve'])
        elif result.experiment == 'clt':
            n = result.summary['n']
            for index, label in enumerate(result.summary['statistics']):
                samples = np.array([r['statistics'][label] for r in result.records], dtype=float)
                predicted = result.predictions.get(label, {}).get('V')
                visualizer.plot_clt_histogram((samples - samples.mean()) / np.sqrt(n), label, predicted,
                                              name=f'clt_{index}.png')
        elif result.experiment == 'scaling':
            for index, (label, fit) in enumerate(result.summary['fits'].items()):
                visualizer.plot_variance_scaling(fit['ns'], fit['variances'], fit['kappa'],
                                                 name=f'scaling_{index}.png')
        else:
            self.logger.info(f"No figures for {result.experiment}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', type=Path, help='experiment config (JSON)')
    common.add_argument('--seed', type=int, help='master seed, overrides the config')
    common.add_argument('--out', type=Path, help='output directory')
    common.add_argument('--replicates', type=int, help='replicate count, overrides the config')
    common.add_argument('--threads', type=int, help='worker threads (default TENSORMP_THREADS)')
    common.add_argument('--plots', action='store_true', help='render PNG figures')
    common.add_argument('--log-level', default=None, help='DEBUG, INFO, WARNING or ERROR')

    parser = argparse.ArgumentParser(
        prog='tensormp',
        description='Spectral laboratory for sample covariance matrices of tensor-product vectors')
    subparsers = parser.add_subparsers(dest='command', required=True)
    for experiment in EXPERIMENTS:
        sub = subparsers.add_parser(experiment, parents=[common])
        if experiment == 'esd':
            sub.add_argument('--dump-spectrum', action='store_true',
                             help='write every replicate spectrum to spectra/spectrum_<r>.csv')
    return parser


def _emit(payload: Dict[str, Any]):
    print(json.dumps(to_jsonable(payload), sort_keys=True))


def main(argv: Optional[List[str]] = None) -> int:
    """
    Command-line entry point; returns the process exit code
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_CONFIG if e.code else EXIT_OK

    lab = TensorMPLab(args.log_level)
    try:
        raw = lab.load_config(args.command, args)
        headline = lab.run(args.command, raw, plots=args.plots)
        _emit(headline)
        return EXIT_OK

    except ConfigValidationError as e:
        lab.logger.error(f"{args.command}: {e}")
        _emit({'experiment': args.command, 'status': 'error', 'exit_code': EXIT_CONFIG, 'error': str(e)})
        return EXIT_CONFIG
    except ConvergenceError as e:
        lab.logger.error(f"{args.command}: {e}")
        _emit({'experiment': args.command, 'status': 'error', 'exit_code': EXIT_NUMERICS, 'error': str(e)})
        return EXIT_NUMERICS
    except KeyboardInterrupt:
        print("\nRun interrupted by user", file=sys.stderr)
        return EXIT_FAILURE
    except Exception as e:
        lab.logger.error(f"{args.command} failed: {e}")
        lab.logger.debug(traceback.format_exc())
        _emit({'experiment': args.command, 'status': 'error', 'exit_code': EXIT_FAILURE, 'error': str(e)})
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
