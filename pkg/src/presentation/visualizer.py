import logging
from pathlib import Path
from typing import Optional, Sequence

import matplotlib
matplotlib.use('Agg')
import matplotlib.pyplot as plt
import numpy as np
import seaborn as sns
from scipy import stats

from src.mp_law.density import DensityCurve

logger = logging.getLogger(__name__)


class SpectrumVisualizer:
    """
    Optional figures for a run: ESD against the limiting density, CLT histograms, variance scaling
    """

    def __init__(self, output_dir="runs/figures"):
        self.output_dir = Path(output_dir)
        self.output_dir.mkdir(parents=True, exist_ok=True)

        sns.set_theme(style='whitegrid')
        self.colors = ['#2E86AB', '#A23B72', '#F18F01', '#1B998B']
        plt.rcParams['font.size'] = 12

    def _save(self, fig, name: str) -> str:
        path = self.output_dir / name
        fig.tight_layout()
        fig.savefig(path, dpi=150, bbox_inches='tight', facecolor='white')
        plt.close(fig)
        logger.debug(f"Saved figure {path}")
        return str(path)

    def plot_esd(self, eigenvalues: np.ndarray, curve: DensityCurve, name: str = 'esd.png') -> str:
        """
        Histogram of the nonzero pooled eigenvalues (weighted to the full count) over the limiting density
        """
        try:
            eigenvalues = np.asarray(eigenvalues, dtype=float)
            nonzero = eigenvalues[eigenvalues != 0.0]
            fig, ax = plt.subplots(figsize=(9, 6))
            if nonzero.size:
                weights = np.full(nonzero.size, 1.0 / eigenvalues.size)
                bins = np.linspace(nonzero.min(), nonzero.max(), 80)
                width = bins[1] - bins[0]
                ax.hist(nonzero, bins=bins, weights=weights / width, color=self.colors[0], alpha=0.6,
                        edgecolor='black', label='pooled ESD')
            ax.plot(curve.lambdas, curve.density, color=self.colors[1], linewidth=2, label='limiting density')
            ax.set_title(f"Eigenvalue distribution (atom at 0: {curve.atom_at_zero:.3f})", fontweight='bold')
            ax.set_xlabel('lambda')
            ax.set_ylabel('density')
            ax.legend()
            return self._save(fig, name)

        except Exception as e:
            logger.error(f"ESD plot failed: {e}")
            return ""

    def plot_clt_histogram(self, samples: Sequence[float], label: str, predicted_variance: Optional[float] = None,
                           name: str = 'clt.png') -> str:
        """
        Normalized centered statistics against Normal(0, sample variance) and the predicted variance
        """
        try:
            samples = np.asarray(samples, dtype=float)
            fig, ax = plt.subplots(figsize=(9, 6))
            sns.histplot(samples, bins=50, stat='density', color=self.colors[0], alpha=0.6, ax=ax)

            grid = np.linspace(samples.min(), samples.max(), 400)
            variance = samples.var(ddof=1)
            if variance > 0:
                ax.plot(grid, stats.norm.pdf(grid, scale=np.sqrt(variance)), color=self.colors[1],
                        linewidth=2, label=f'N(0, {variance:.3f})')
            if predicted_variance:
                ax.plot(grid, stats.norm.pdf(grid, scale=np.sqrt(predicted_variance)), color=self.colors[2],
                        linestyle='--', linewidth=2, label=f'N(0, V = {predicted_variance:.3f})')
            ax.set_title(f"Centered statistic: {label}", fontweight='bold', fontsize=11)
            ax.set_xlabel('n^{-1/2} (N_n[phi] - mean)')
            ax.legend()
            return self._save(fig, name)

        except Exception as e:
            logger.error(f"CLT histogram failed: {e}")
            return ""

    def plot_variance_scaling(self, ns: Sequence[int], variances: Sequence[float], kappa: float,
                              name: str = 'scaling.png') -> str:
        try:
            fig, ax = plt.subplots(figsize=(8, 6))
            ax.scatter(ns, variances, color=self.colors[0], s=60, zorder=3, label='Var N_n[phi]')
            grid = np.linspace(0, max(ns) * 1.1, 50)
            ax.plot(grid, kappa * grid, color=self.colors[3], linewidth=2, label=f'kappa n, kappa = {kappa:.4f}')
            ax.set_xlabel('n')
            ax.set_ylabel('variance')
            ax.set_title('Variance growth in n', fontweight='bold')
            ax.legend()
            return self._save(fig, name)

        except Exception as e:
            logger.error(f"Scaling plot failed: {e}")
            return ""
