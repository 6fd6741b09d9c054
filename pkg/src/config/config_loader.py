import functools
import json
import logging
from pathlib import Path
from typing import Dict, Any, Optional, Tuple

import numpy as np

from src.ensemble.sample_matrix import EnsembleConfig
from src.fluctuations.functions import TestFunction
from src.measures.spectral_measures import TauSpec, SpectralMeasure
from src.montecarlo.plan import ExperimentPlan, parse_complex
from src.mp_law.mpe_solver import support_bounds
from src.utils.exceptions import ConfigValidationError
from src.vectors.vector_models import VectorModel
from .config_manager import ConfigManager
from .config_validator import ConfigValidator

logger = logging.getLogger(__name__)

DEFAULT_REPLICATES = 100
DEFAULT_Z_GRID = {'re_min': -1.0, 're_max': 5.0, 'points': 200, 'eta': 0.05}


def config_builder(builder):
    """Builder errors on a validated config are still config errors"""
    @functools.wraps(builder)
    def wrapper(self, raw, *args, **kwargs):
        try:
            return builder(self, raw, *args, **kwargs)
        except ConfigValidationError:
            raise
        except (ValueError, TypeError, KeyError) as e:
            logger.error(f"Building {builder.__name__} from config failed: {e}")
            raise ConfigValidationError("invalid experiment config", issues=[f"{builder.__name__}: {e}"]) from e
    return wrapper


class ConfigLoader:
    """
    JSON experiment configs: file -> validated dict -> domain objects
    """

    def __init__(self, config_manager: Optional[ConfigManager] = None):
        self.config_manager = config_manager or ConfigManager()
        self.validator = ConfigValidator()
        self.raw_config = None
        self.source = None

    def load_raw_config(self, path) -> Dict[str, Any]:
        """
        Read one experiment block from a JSON file
        """
        path = Path(path)
        try:
            if not path.exists():
                raise ConfigValidationError(f"config file not found: {path}")

            logger.info(f"Loading experiment config from {path}")
            with open(path, 'r', encoding='utf-8') as f:
                raw = json.load(f)
            if not isinstance(raw, dict):
                raise ConfigValidationError(f"config {path} must hold a JSON object")

            self.source = path
            return raw

        except json.JSONDecodeError as e:
            logger.error(f"Config {path} is not valid JSON: {e}")
            raise ConfigValidationError(f"config {path} is not valid JSON: {e}") from e

    def load(self, experiment: str, path=None, seed: Optional[int] = None, output_dir=None,
             replicates: Optional[int] = None, threads: Optional[int] = None) -> Dict[str, Any]:
        """
        Config for one subcommand with CLI overrides applied, validated
        """
        raw = self.load_raw_config(path) if path else {}
        raw = dict(raw)
        raw.setdefault('experiment', experiment)
        if raw['experiment'] != experiment:
            raise ConfigValidationError("invalid experiment config", issues=[
                f"config is for experiment '{raw['experiment']}' but subcommand is '{experiment}'"])

        # Step 1: CLI overrides
        if seed is not None:
            raw['seed'] = seed
            if isinstance(raw.get('ensemble'), dict):
                raw['ensemble'] = {**raw['ensemble'], 'seed': seed}
        if output_dir is not None:
            raw['output_dir'] = str(output_dir)
        if replicates is not None:
            raw['replicates'] = replicates
        if threads is not None:
            raw['threads'] = threads

        # Step 2: schema validation
        self.validator.validate(raw)
        self.raw_config = raw
        return raw

    # Builders

    @config_builder
    def seed(self, raw: Dict[str, Any]) -> int:
        if 'seed' in raw:
            return int(raw['seed'])
        return int(raw.get('ensemble', {}).get('seed', 0))

    @config_builder
    def threads(self, raw: Dict[str, Any]) -> int:
        return int(raw.get('threads', self.config_manager.processing_config['threads']))

    @config_builder
    def memory_budget(self, raw: Dict[str, Any]) -> int:
        if 'memory_budget_mb' in raw:
            return int(raw['memory_budget_mb']) * 1024 * 1024
        return self.config_manager.processing_config['memory_budget_bytes']

    @config_builder
    def eta_schedule(self, raw: Dict[str, Any]) -> Tuple[float, ...]:
        schedule = raw.get('eta_schedule') or self.config_manager.solver_config['eta_schedule']
        return tuple(float(e) for e in schedule)

    @config_builder
    def ensemble(self, raw: Dict[str, Any]) -> EnsembleConfig:
        block = dict(raw['ensemble'])
        block.setdefault('seed', self.seed(raw))
        return EnsembleConfig.from_dict(block)

    @config_builder
    def model(self, raw: Dict[str, Any]) -> VectorModel:
        return VectorModel.from_dict(raw['model'])

    @config_builder
    def sigma_and_ratio(self, raw: Dict[str, Any]) -> Tuple[SpectralMeasure, float]:
        if 'ensemble' in raw:
            config = self.ensemble(raw)
            return config.taus.limit_measure(), config.ratio
        return TauSpec.from_dict(raw['taus']).limit_measure(), float(raw['c'])

    @config_builder
    def phis(self, raw: Dict[str, Any]) -> Tuple[TestFunction, ...]:
        """
        Test functions; a monomial without a window is kept exact on the support widened by one
        """
        sigma, c = self.sigma_and_ratio(raw)
        out = []
        for block in raw.get('phis', []):
            if block.get('kind') == 'monomial' and ('lo' not in block or 'hi' not in block):
                support = support_bounds(sigma, c)
                out.append(TestFunction.tapered_monomial(int(block.get('degree', 1)), support,
                                                         amplitude=float(block.get('amplitude', 1.0))))
            else:
                out.append(TestFunction.from_dict(block))
        return tuple(out)

    @config_builder
    def plan(self, raw: Dict[str, Any]) -> ExperimentPlan:
        return ExperimentPlan(
            config=self.ensemble(raw),
            replicates=int(raw.get('replicates', DEFAULT_REPLICATES)),
            phis=self.phis(raw) if 'phis' in raw else (),
            z_probes=tuple(parse_complex(z) for z in raw.get('z_probes', [])),
            threads=self.threads(raw),
            memory_budget=self.memory_budget(raw),
            eta_schedule=self.eta_schedule(raw),
            output_dir=Path(raw['output_dir']) if raw.get('output_dir') else None,
        )

    @config_builder
    def z_grid(self, raw: Dict[str, Any]) -> np.ndarray:
        """Explicit list under 'z', otherwise a horizontal line re_min..re_max at height eta"""
        if 'z' in raw:
            return np.array([parse_complex(z) for z in raw['z']])
        grid = {**DEFAULT_Z_GRID, **raw.get('z_grid', {})}
        return np.linspace(grid['re_min'], grid['re_max'], int(grid['points'])) + 1j * float(grid['eta'])

    @config_builder
    def lambda_grid(self, raw: Dict[str, Any]) -> Optional[np.ndarray]:
        if 'lambda_grid' not in raw:
            return None
        grid = raw['lambda_grid']
        sigma, c = self.sigma_and_ratio(raw)
        lo, hi = support_bounds(sigma, c)
        return np.linspace(float(grid.get('lo', min(lo, 0.0) - 0.5)), float(grid.get('hi', hi + 0.5)),
                           int(grid.get('points', 2001)))
