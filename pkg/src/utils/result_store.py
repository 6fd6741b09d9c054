import hashlib
import json
import logging
import platform
from datetime import datetime, timezone
from pathlib import Path
from typing import Dict, Any, List, Iterable, Optional

import numpy as np
import pandas as pd
import scipy

logger = logging.getLogger(__name__)


def to_jsonable(value):
    """Complex values become [re, im]; numpy scalars and arrays become plain Python"""
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, (complex, np.complexfloating)):
        return [float(value.real), float(value.imag)]
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, Path):
        return str(value)
    return value


def canonical_json(value) -> str:
    return json.dumps(to_jsonable(value), sort_keys=True, separators=(',', ':'))


def config_hash(raw_config: Dict[str, Any]) -> str:
    """SHA-256 of the canonical JSON form of a config"""
    return hashlib.sha256(canonical_json(raw_config).encode('utf-8')).hexdigest()


class ResultStore:
    """
    File outputs of one run, all under a single directory.
    Records and summaries carry no timestamps so reruns are byte-identical.
    """

    def __init__(self, output_dir):
        self.output_dir = Path(output_dir)
        self.output_dir.mkdir(parents=True, exist_ok=True)
        self.saved_paths = {}

    def _path(self, name: str) -> Path:
        return self.output_dir / name

    def _register(self, key: str, path: Path) -> str:
        self.saved_paths[key] = str(path)
        logger.debug(f"Saved {key} to {path}")
        return str(path)

    def save_records(self, records: Iterable[Dict[str, Any]], name: str = 'records.jsonl') -> str:
        """One record per line, sorted keys, full float precision"""
        path = self._path(name)
        try:
            count = 0
            with open(path, 'w', encoding='utf-8') as f:
                for record in records:
                    f.write(json.dumps(to_jsonable(record), sort_keys=True) + '\n')
                    count += 1
            logger.info(f"Saved {count} records to {path}")
            return self._register('records', path)
        except OSError as e:
            logger.error(f"Writing records to {path} failed: {e}")
            raise

    @staticmethod
    def load_records(path) -> List[Dict[str, Any]]:
        with open(path, 'r', encoding='utf-8') as f:
            return [json.loads(line) for line in f if line.strip()]

    def save_json(self, payload: Dict[str, Any], name: str, key: Optional[str] = None) -> str:
        path = self._path(name)
        with open(path, 'w', encoding='utf-8') as f:
            f.write(json.dumps(to_jsonable(payload), sort_keys=True, indent=2) + '\n')
        return self._register(key or Path(name).stem, path)

    def save_summary(self, summary: Dict[str, Any]) -> str:
        return self.save_json(summary, 'summary.json', 'summary')

    def save_predictions(self, predictions: List[Dict[str, Any]], name: str = 'predictions.jsonl') -> str:
        """Prediction records {phi, eta_schedule, V_eta, V}, one per line"""
        return self.save_records_as(predictions, name, 'predictions')

    def save_records_as(self, rows: Iterable[Dict[str, Any]], name: str, key: str) -> str:
        path = self._path(name)
        with open(path, 'w', encoding='utf-8') as f:
            for row in rows:
                f.write(json.dumps(to_jsonable(row), sort_keys=True) + '\n')
        return self._register(key, path)

    def save_histogram(self, samples: np.ndarray, name: str, bins: int = 50) -> str:
        """CSV with columns bin_left, bin_right, count"""
        counts, edges = np.histogram(np.asarray(samples, dtype=float), bins=bins)
        frame = pd.DataFrame({'bin_left': edges[:-1], 'bin_right': edges[1:], 'count': counts})
        path = self._path(name)
        frame.to_csv(path, index=False, float_format='%.17g')
        return self._register(Path(name).stem, path)

    def save_table(self, frame: pd.DataFrame, name: str) -> str:
        path = self._path(name)
        frame.to_csv(path, index=False, float_format='%.17g')
        return self._register(Path(name).stem, path)

    def save_f_values(self, solution, name: str = 'f_values.csv') -> str:
        """f and f' on a z-grid: z_re, z_im, f_re, f_im, fprime_re, fprime_im, residual"""
        frame = pd.DataFrame({
            'z_re': solution.grid.real, 'z_im': solution.grid.imag,
            'f_re': solution.f_values.real, 'f_im': solution.f_values.imag,
            'fprime_re': solution.fprime_values.real, 'fprime_im': solution.fprime_values.imag,
            'residual': solution.residuals,
        })
        return self.save_table(frame, name)

    def save_text(self, text: str, name: str = 'report.txt') -> str:
        path = self._path(name)
        with open(path, 'w', encoding='utf-8') as f:
            f.write(text)
        return self._register(Path(name).stem, path)

    def save_manifest(self, raw_config: Dict[str, Any], seed: int, command: str) -> str:
        """Config hash, seed and library versions needed to reproduce the run"""
        manifest = {
            'command': command,
            'config': raw_config,
            'config_hash': config_hash(raw_config),
            'seed': seed,
            'versions': {
                'python': platform.python_version(),
                'numpy': np.__version__,
                'scipy': scipy.__version__,
                'pandas': pd.__version__,
            },
            'created_at': datetime.now(timezone.utc).isoformat(),
        }
        return self.save_json(manifest, 'manifest.json', 'manifest')

    def save_density(self, curve, name: str = 'density.csv') -> str:
        """Density CSV lambda,density with its atom sidecar"""
        paths = curve.write_csv(self._path(name))
        self._register('density_sidecar', Path(paths['density_sidecar']))
        return self._register('density', Path(paths['density_csv']))
