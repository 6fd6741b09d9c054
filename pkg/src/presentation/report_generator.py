import logging
from typing import Dict, Any, Optional

import pandas as pd

from src.montecarlo.plan import RunResult
from src.vectors.moment_profiles import MomentProfile

logger = logging.getLogger(__name__)

MOMENT_ROWS = ('a22', 'kappa4', 'a222', 'a24', 'a6', 'a', 'b', 'a+b+2')


class ReportGenerator:
    """
    Plain-text run reports and the analytic vs empirical moments table
    """

    def render_run_report(self, result: RunResult, manifest: Optional[Dict[str, Any]] = None) -> str:
        """
        Text report of one run: header, summary figures, predictions
        """
        try:
            lines = []
            self._write_header(lines, f"{result.experiment.upper()} EXPERIMENT")
            if manifest:
                lines.append(f"Config hash: {manifest.get('config_hash', 'n/a')}")
                lines.append(f"Seed: {manifest.get('seed', 'n/a')}")
                lines.append("")

            self._write_section(lines, "SUMMARY", result.summary)
            if result.predictions:
                self._write_section(lines, "PREDICTIONS", result.predictions)
            self._write_footer(lines)
            return "\n".join(lines) + "\n"

        except Exception as e:
            logger.error(f"Run report generation failed: {e}")
            raise

    def _write_header(self, lines: list, title: str):
        lines.append("=" * 60)
        lines.append(title)
        lines.append("=" * 60)

    def _write_section(self, lines: list, title: str, payload: Dict[str, Any], indent: int = 0):
        if indent == 0:
            lines.append(title)
            lines.append("-" * 30)
        pad = "  " * indent
        for key, value in payload.items():
            if isinstance(value, dict):
                lines.append(f"{pad}{key}:")
                self._write_section(lines, title, value, indent + 1)
            elif isinstance(value, float):
                lines.append(f"{pad}{key}: {value:.6g}")
            elif isinstance(value, list) and len(value) > 12:
                lines.append(f"{pad}{key}: [{len(value)} values]")
            else:
                lines.append(f"{pad}{key}: {value}")
        if indent == 0:
            lines.append("")

    def _write_footer(self, lines: list):
        lines.append("=" * 60)
        lines.append("End of Report")
        lines.append("=" * 60)

    def moments_table(self, analytic: Optional[MomentProfile], empirical: Optional[MomentProfile]) -> pd.DataFrame:
        """
        One row per constant: analytic value (or n/a), empirical value, standard error
        """
        rows = []
        for name in MOMENT_ROWS:
            rows.append({
                'constant': name,
                'analytic': self._moment_value(analytic, name) if analytic else 'n/a',
                'empirical': self._moment_value(empirical, name) if empirical else 'n/a',
                'se': self._moment_error(empirical, name) if empirical else 'n/a',
            })
        return pd.DataFrame(rows)

    @staticmethod
    def _moment_value(profile: MomentProfile, name: str) -> float:
        if name == 'a+b+2':
            return profile.abc
        return float(getattr(profile, name))

    @staticmethod
    def _moment_error(profile: MomentProfile, name: str):
        errors = profile.standard_errors or {}
        if name == 'a+b+2':
            if 'a' in errors and 'b' in errors:
                return float((errors['a'] ** 2 + errors['b'] ** 2) ** 0.5)
            return 'n/a'
        return errors.get(name, 'n/a')

    def render_moments_table(self, table: pd.DataFrame, model: str, n: int) -> str:
        lines = []
        self._write_header(lines, f"MOMENT PROFILE: {model}, n = {n}")
        lines.append(table.to_string(index=False))
        self._write_footer(lines)
        return "\n".join(lines) + "\n"
