import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence, Optional, Dict

import numpy as np
import pandas as pd
from scipy import integrate

from src.measures.spectral_measures import SpectralMeasure
from .mpe_solver import solve_mpe_grid, support_bounds

logger = logging.getLogger(__name__)

DEFAULT_ETA_SCHEDULE = (0.05, 0.025, 0.0125)
MASS_TOLERANCE = 1e-3


@dataclass
class DensityCurve:
    """
    Density of the limiting law on a lambda grid, with the atom at zero reported separately
    """
    lambdas: np.ndarray
    density: np.ndarray
    atom_at_zero: float
    eta_schedule: tuple
    atom_verified: bool = True
    covers_support: bool = True
    per_eta: Dict[float, np.ndarray] = field(default_factory=dict)

    def total_mass(self) -> float:
        return float(integrate.trapezoid(self.density, self.lambdas)) + self.atom_at_zero

    def write_csv(self, path) -> Dict[str, str]:
        """CSV lambda,density plus a one-line JSON sidecar with the atom"""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        pd.DataFrame({'lambda': self.lambdas, 'density': self.density}).to_csv(
            path, index=False, float_format='%.17g')

        sidecar = path.with_suffix('.json')
        with open(sidecar, 'w', encoding='utf-8') as f:
            f.write(json.dumps({'atom_at_zero': self.atom_at_zero}) + '\n')

        logger.debug(f"Saved density curve to {path}")
        return {'density_csv': str(path), 'density_sidecar': str(sidecar)}


def atom_at_zero(sigma: SpectralMeasure, c: float) -> float:
    """Point mass at 0 implied by the rank bound: max(0, 1 - c sigma(tau != 0))"""
    return max(0.0, 1.0 - c * sigma.nonzero_mass())


def richardson(values_coarse: np.ndarray, values_fine: np.ndarray, eta_coarse: float, eta_fine: float) -> np.ndarray:
    """Two-point extrapolation to eta = 0 assuming an error linear in eta"""
    ratio = eta_coarse / eta_fine
    return (ratio * values_fine - values_coarse) / (ratio - 1.0)


def density(sigma: SpectralMeasure, c: float, lambda_grid: Sequence[float],
            eta_schedule: Optional[Sequence[float]] = None) -> DensityCurve:
    """
    Recover the density of N from Im f(lambda + i eta) / pi, extrapolated to eta = 0
    """
    schedule = tuple(float(e) for e in (eta_schedule or DEFAULT_ETA_SCHEDULE))
    if len(schedule) < 2:
        raise ValueError("eta schedule needs at least two values")
    if any(b >= a for a, b in zip(schedule, schedule[1:])) or schedule[-1] <= 0:
        raise ValueError(f"eta schedule must be positive and strictly decreasing, got {schedule}")

    lambdas = np.asarray(lambda_grid, dtype=float)
    atom = atom_at_zero(sigma, c)
    atom_verified = bool(np.all(sigma.values >= 0))
    if not atom_verified:
        logger.warning("Mixed-sign tau: atom at zero unverified")

    lo, hi = support_bounds(sigma, c)
    covers_support = bool(lambdas.min() <= lo and lambdas.max() >= hi)
    if not covers_support:
        logger.warning(f"Lambda grid [{lambdas.min():.3f}, {lambdas.max():.3f}] does not cover the estimated support [{lo:.3f}, {hi:.3f}]")

    per_eta = {}
    previous = None
    for eta in schedule:
        # Continuation in eta: the coarser solution seeds the finer one
        solution = solve_mpe_grid(sigma, c, lambdas + 1j * eta, initial=previous)
        previous = solution.f_values
        smoothed = solution.f_values.imag / np.pi
        # Remove the Poisson-smoothed atom so only the continuous part is extrapolated
        smoothed = smoothed - atom * eta / (np.pi * (lambdas ** 2 + eta ** 2))
        per_eta[eta] = smoothed

    values = richardson(per_eta[schedule[-2]], per_eta[schedule[-1]], schedule[-2], schedule[-1])
    values = np.clip(values, 0.0, None)

    curve = DensityCurve(lambdas=lambdas, density=values, atom_at_zero=atom, eta_schedule=schedule,
                         atom_verified=atom_verified, covers_support=covers_support, per_eta=per_eta)
    logger.info(f"Density recovered on {lambdas.size} points, total mass {curve.total_mass():.5f}")
    return curve


class LimitCDF:
    """
    Distribution function of the limiting law built from a density curve:
    integrated density plus a step of size atom_at_zero at 0.
    On a grid covering the support the continuous part is rescaled to mass 1 - atom_at_zero.
    """

    def __init__(self, curve: DensityCurve):
        self.lambdas = curve.lambdas
        self.cumulative = integrate.cumulative_trapezoid(curve.density, curve.lambdas, initial=0.0)
        self.atom = curve.atom_at_zero

        mass = float(self.cumulative[-1])
        if curve.covers_support and mass > 0.0:
            target = 1.0 - self.atom
            if abs(mass - target) > MASS_TOLERANCE:
                logger.warning(f"Continuous mass {mass:.5f} differs from {target:.5f}; rescaling the CDF")
            self.cumulative = self.cumulative * (target / mass)
            self.cumulative[-1] = target

    def _continuous(self, x: np.ndarray) -> np.ndarray:
        return np.interp(x, self.lambdas, self.cumulative, left=0.0, right=self.cumulative[-1])

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return self._continuous(x) + self.atom * (x >= 0)

    def left(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return self._continuous(x) + self.atom * (x > 0)


def mp_cdf(curve: DensityCurve) -> LimitCDF:
    return LimitCDF(curve)
