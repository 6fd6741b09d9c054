import os
import logging
from dotenv import load_dotenv
from pathlib import Path

load_dotenv()

logger = logging.getLogger(__name__)


class ConfigManager:
    """
    Centralized configuration with environment-based settings
    """

    def __init__(self, base_dir: Path = None):
        self.base_dir = Path(base_dir) if base_dir else Path(__file__).parent.parent.parent
        self._validate_environment()

    def _validate_environment(self):
        """Validate numeric environment variables"""
        numeric_vars = ['TENSORMP_THREADS', 'TENSORMP_MEMORY_BUDGET_MB']

        bad_vars = [var for var in numeric_vars if os.getenv(var) and not os.getenv(var).strip().isdigit()]
        if bad_vars:
            logger.warning(f"Ignoring non-integer environment variables: {bad_vars}")

    @staticmethod
    def _int_env(name: str, default: int) -> int:
        value = os.getenv(name, '').strip()
        return int(value) if value.isdigit() else default

    @property
    def file_paths(self):
        """Get file paths configuration"""
        return {
            'base_dir': self.base_dir,
            'output_dir': Path(os.getenv('TENSORMP_OUT_DIR', str(self.base_dir / 'runs'))),
            'configs': self.base_dir / 'assets' / 'configs',
            'logs': Path(os.getenv('TENSORMP_LOG_DIR', str(self.base_dir / 'logs'))),
        }

    @property
    def processing_config(self):
        """Get Monte Carlo processing configuration"""
        return {
            'threads': max(1, self._int_env('TENSORMP_THREADS', 1)),
            'log_level': os.getenv('TENSORMP_LOG_LEVEL', 'INFO').upper(),
            'memory_budget_bytes': self._int_env('TENSORMP_MEMORY_BUDGET_MB', 2048) * 1024 * 1024,
            'dense_cap': 4096,
            'chunk_size': 10000,
        }

    @property
    def solver_config(self):
        """Get fixed-point solver and quadrature defaults"""
        return {
            'damping': 0.5,
            'tolerance': 1e-13,
            'residual_acceptance': 1e-12,
            'max_iterations': 10_000,
            'eta_schedule': (0.05, 0.025, 0.0125),
            'quadrature_rtol': 1e-9,
        }

    def prepare_output_dir(self, output_dir: Path = None) -> Path:
        """Create the run output directory and the logs directory"""
        out = Path(output_dir) if output_dir else self.file_paths['output_dir']
        for directory in [out, self.file_paths['logs']]:
            directory.mkdir(parents=True, exist_ok=True)

        logger.debug(f"Output directory ready: {out}")
        return out

    def get_logging_config(self, level: str = None):
        """Get logging configuration"""
        level = (level or self.processing_config['log_level']).upper()
        log_dir = self.file_paths['logs']
        log_dir.mkdir(parents=True, exist_ok=True)

        return {
            'version': 1,
            'disable_existing_loggers': False,
            'formatters': {
                'standard': {
                    'format': '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
                },
            },
            'handlers': {
                'file': {
                    'level': level,
                    'class': 'logging.FileHandler',
                    'filename': str(log_dir / 'tensormp.log'),
                    'formatter': 'standard',
                },
                'console': {
                    'level': level,
                    'class': 'logging.StreamHandler',
                    'stream': 'ext://sys.stderr',
                    'formatter': 'standard',
                }
            },
            'loggers': {
                '': {
                    'handlers': ['file', 'console'],
                    'level': level,
                    'propagate': True
                }
            }
        }
