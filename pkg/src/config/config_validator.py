import logging
from typing import Dict, Any, List

from src.fluctuations.functions import FUNCTION_KINDS, TestFunction
from src.measures.spectral_measures import TAU_KINDS, TauSpec
from src.montecarlo.experiment_runner import MIN_COV_REPLICATES
from src.montecarlo.plan import parse_complex
from src.utils.exceptions import ConfigValidationError
from src.vectors.vector_models import MODEL_KINDS, COMPONENT_LAWS, VectorModel

logger = logging.getLogger(__name__)

EXPERIMENTS = ('esd', 'clt', 'bilinear', 'cov', 'mp-solve', 'predict-variance', 'moments', 'scaling')
COMMON_KEYS = {'experiment', 'seed', 'output_dir', 'threads', 'log_level', 'plots'}

SCHEMA = {
    'esd': ({'ensemble'}, {'replicates', 'eta_schedule', 'memory_budget_mb', 'dump_spectrum'}),
    'clt': ({'ensemble', 'phis'}, {'replicates', 'eta_schedule', 'memory_budget_mb'}),
    'scaling': ({'ensemble', 'phis', 'ns'}, {'replicates', 'eta_schedule', 'memory_budget_mb'}),
    'cov': ({'ensemble', 'z1', 'z2'}, {'replicates', 'z_probes', 'memory_budget_mb'}),
    'bilinear': ({'n', 'model', 'H'}, {'replicates', 'chunk_size', 'memory_budget_mb'}),
    'mp-solve': ({'taus', 'c'}, {'z_grid', 'z', 'lambda_grid', 'eta_schedule'}),
    'predict-variance': ({'taus', 'c', 'phis'}, {'model', 'n', 'a', 'b', 'eta_schedule', 'closed_form'}),
    'moments': ({'model', 'n'}, {'replicates', 'chunk_size'}),
}

ENSEMBLE_KEYS = {'n', 'k', 'm', 'c', 'model', 'taus', 'seed'}
MODEL_KEYS = {'kind', 'law', 'p'}
TAU_KEYS = {'kind', 'value', 'values', 'atoms', 'seed'}
PHI_KEYS = {'kind', 'center', 'width', 'scale', 'lo', 'hi', 'eta', 'degree', 'value', 'amplitude', 'base'}
MATRIX_KINDS = ('identity', 'zero', 'single-diagonal', 'resolvent')
MATRIX_KEYS = {'kind', 'z', 'index', 'seed', 'c', 'taus'}
Z_GRID_KEYS = {'re_min', 're_max', 'points', 'eta'}
LAMBDA_GRID_KEYS = {'lo', 'hi', 'points'}


class ConfigValidator:
    """
    Schema checks for experiment configs: every issue is collected before failing
    """

    def __init__(self):
        self.validation_results = {}

    def validate(self, raw: Dict[str, Any]) -> dict:
        """
        Validate one experiment block; raises ConfigValidationError listing every issue
        """
        experiment = raw.get('experiment')
        validation_result = {
            'dataset': experiment,
            'checks': {},
            'issues': [],
            'overall_status': 'PASS'
        }

        try:
            # Check 1: experiment kind
            if experiment not in SCHEMA:
                self._fail(validation_result, 'experiment',
                           f"Unknown experiment '{experiment}'; valid experiments: {', '.join(EXPERIMENTS)}")
                return self._finish(validation_result)

            required, optional = SCHEMA[experiment]

            # Check 2: required fields and unknown keys
            for key in sorted(required - set(raw)):
                self._fail(validation_result, f'{key}_present', f"missing required field '{key}'")
            for key in sorted(set(raw) - required - optional - COMMON_KEYS):
                self._fail(validation_result, f'{key}_known', f"unknown key '{key}'")

            # Check 3: nested blocks
            if isinstance(raw.get('ensemble'), dict):
                self._check_ensemble(raw['ensemble'], validation_result)
            if 'model' in raw:
                self._check_model(raw['model'], 'model', validation_result)
            if 'taus' in raw:
                self._check_taus(raw['taus'], 'taus', validation_result)
            for i, phi in enumerate(raw.get('phis') or []):
                self._check_phi(phi, f'phis[{i}]', validation_result)
            if 'H' in raw:
                self._check_matrix(raw['H'], raw.get('n'), validation_result)
            self._check_keys(raw.get('z_grid'), Z_GRID_KEYS, 'z_grid', validation_result)
            self._check_keys(raw.get('lambda_grid'), LAMBDA_GRID_KEYS, 'lambda_grid', validation_result)

            # Check 4: scalar ranges
            for key in ('replicates', 'threads', 'n'):
                if key in raw and not (isinstance(raw[key], int) and raw[key] >= 1):
                    self._fail(validation_result, f'{key}_range', f"'{key}' must be a positive integer, got {raw[key]!r}")
            if 'c' in raw and not (isinstance(raw['c'], (int, float)) and raw['c'] > 0):
                self._fail(validation_result, 'c_range', f"'c' must be positive, got {raw['c']!r}")
            if 'ns' in raw and not (isinstance(raw['ns'], list) and len(raw['ns']) >= 2):
                self._fail(validation_result, 'ns_range', "'ns' must list at least two dimensions")

            # Check 5: experiment-specific constraints
            self._check_experiment(experiment, raw, validation_result)

            return self._finish(validation_result)

        except ConfigValidationError:
            raise
        except Exception as e:
            logger.error(f"Config validation error: {e}")
            raise

    def _check_keys(self, block, allowed: set, path: str, result: dict) -> bool:
        if block is None:
            return True
        if not isinstance(block, dict):
            self._fail(result, f'{path}_type', f"'{path}' must be an object")
            return False
        for key in sorted(set(block) - allowed):
            self._fail(result, f'{path}.{key}_known', f"unknown key '{path}.{key}'")
        return True

    def _check_ensemble(self, block: dict, result: dict):
        self._check_keys(block, ENSEMBLE_KEYS, 'ensemble', result)
        for key in ('n', 'model'):
            if key not in block:
                self._fail(result, f'ensemble.{key}_present', f"missing required field 'ensemble.{key}'")
        if 'm' not in block and 'c' not in block:
            self._fail(result, 'ensemble.m_present', "missing required field 'ensemble.m' (or 'ensemble.c')")
        if 'model' in block:
            self._check_model(block['model'], 'ensemble.model', result)
        if 'taus' in block:
            self._check_taus(block['taus'], 'ensemble.taus', result)

    def _check_model(self, block, path: str, result: dict):
        if not self._check_keys(block, MODEL_KEYS, path, result):
            return
        kind = block.get('kind')
        if kind not in MODEL_KINDS:
            self._fail(result, f'{path}.kind', f"invalid {path}.kind '{kind}'; valid kinds: {', '.join(MODEL_KINDS)}")
            return
        if kind == 'iid' and block.get('law', 'gaussian') not in COMPONENT_LAWS:
            self._fail(result, f'{path}.law',
                       f"invalid {path}.law '{block.get('law')}'; valid laws: {', '.join(COMPONENT_LAWS)}")
            return
        self._try_build(lambda: VectorModel.from_dict(block), path, result)

    def _check_taus(self, block, path: str, result: dict):
        if not self._check_keys(block, TAU_KEYS, path, result):
            return
        if block.get('kind') not in TAU_KINDS:
            self._fail(result, f'{path}.kind',
                       f"invalid {path}.kind '{block.get('kind')}'; valid kinds: {', '.join(TAU_KINDS)}")
            return
        self._try_build(lambda: TauSpec.from_dict(block), path, result)

    def _check_phi(self, block, path: str, result: dict):
        if not self._check_keys(block, PHI_KEYS, path, result):
            return
        kind = block.get('kind')
        if kind not in FUNCTION_KINDS:
            self._fail(result, f'{path}.kind', f"invalid {path}.kind '{kind}'; valid kinds: {', '.join(FUNCTION_KINDS)}")
            return
        if kind == 'monomial' and ('lo' not in block or 'hi' not in block):
            # Window filled in from the ensemble support when the plan is built
            return
        self._try_build(lambda: TestFunction.from_dict(block), path, result)

    def _check_matrix(self, block, n, result: dict):
        if not self._check_keys(block, MATRIX_KEYS, 'H', result):
            return
        if block.get('kind') not in MATRIX_KINDS:
            self._fail(result, 'H.kind', f"invalid H.kind '{block.get('kind')}'; valid kinds: {', '.join(MATRIX_KINDS)}")
        if block.get('kind') == 'resolvent' and 'z' not in block:
            self._fail(result, 'H.z_present', "missing required field 'H.z'")
        elif block.get('kind') == 'resolvent':
            self._check_off_axis(block['z'], 'H.z', result)
        if block.get('kind') == 'single-diagonal':
            index = block.get('index', 0)
            if not isinstance(index, int) or index < 0:
                self._fail(result, 'H.index_range', f"'H.index' must be a non-negative integer, got {index!r}")
            elif isinstance(n, int) and index >= n * n:
                self._fail(result, 'H.index_range', f"'H.index' must be below n^2 = {n * n}, got {index}")

    def _check_experiment(self, experiment: str, raw: dict, result: dict):
        replicates = raw.get('replicates')
        if experiment == 'cov' and isinstance(replicates, int) and replicates < MIN_COV_REPLICATES:
            self._fail(result, 'replicates_cov',
                       f"cov needs at least {MIN_COV_REPLICATES} replicates, got {replicates}")
        ensemble = raw.get('ensemble')
        if experiment == 'clt' and isinstance(ensemble, dict) and ensemble.get('k', 2) != 2:
            self._fail(result, 'ensemble.k_clt', f"clt needs 'ensemble.k' = 2, got {ensemble['k']!r}")
        for key in ('z1', 'z2'):
            if key in raw:
                self._check_off_axis(raw[key], key, result)
        for key in ('z_probes', 'z'):
            values = raw.get(key)
            for i, value in enumerate(values if isinstance(values, list) else []):
                self._check_off_axis(value, f'{key}[{i}]', result)
        if 'dump_spectrum' in raw and not isinstance(raw['dump_spectrum'], bool):
            self._fail(result, 'dump_spectrum_type', f"'dump_spectrum' must be true or false, got {raw['dump_spectrum']!r}")

    def _check_off_axis(self, value, path: str, result: dict):
        try:
            z = parse_complex(value)
        except (ValueError, TypeError) as e:
            self._fail(result, path, f"{path}: {e}")
            return
        if z.imag == 0.0:
            self._fail(result, f'{path}_off_axis', f"'{path}' must lie off the real axis, got {value!r}")

    def _try_build(self, build, path: str, result: dict):
        try:
            build()
            result['checks'][path] = {'status': 'PASS'}
        except (ValueError, TypeError) as e:
            self._fail(result, path, f"{path}: {e}")

    @staticmethod
    def _fail(result: dict, check: str, issue: str):
        result['checks'][check] = {'status': 'FAIL'}
        result['issues'].append(issue)
        result['overall_status'] = 'FAIL'

    def _finish(self, validation_result: dict) -> dict:
        self.validation_results[validation_result['dataset']] = validation_result
        self._log_validation_result(validation_result)
        if validation_result['overall_status'] == 'FAIL':
            raise ConfigValidationError("invalid experiment config", issues=validation_result['issues'])
        return validation_result

    def _log_validation_result(self, validation_result: dict):
        """Log validation results"""
        dataset = validation_result['dataset']
        status = validation_result['overall_status']
        total_checks = len(validation_result['checks'])
        failed_checks = len([c for c in validation_result['checks'].values() if c['status'] == 'FAIL'])

        logger.info(f"Validation {status} for {dataset}: {total_checks - failed_checks}/{total_checks} checks passed")

    def get_validation_summary(self) -> dict:
        """Summary of all validation results"""
        summary = {'overall_status': 'PASS', 'datasets': {}}
        for dataset, result in self.validation_results.items():
            summary['datasets'][dataset] = {
                'status': result['overall_status'],
                'checks_passed': len([c for c in result['checks'].values() if c['status'] == 'PASS']),
                'total_checks': len(result['checks']),
                'issues_count': len(result['issues'])
            }
            if result['overall_status'] == 'FAIL':
                summary['overall_status'] = 'FAIL'
        return summary
