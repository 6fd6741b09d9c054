import logging
import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from src.measures.spectral_measures import SpectralMeasure
from src.utils.exceptions import ConvergenceError

logger = logging.getLogger(__name__)

DAMPING = 0.5
TOLERANCE = 1e-13
RESIDUAL_ACCEPTANCE = 1e-12
MAX_ITERATIONS = 10_000
NEWTON_ZONE = 1e-3


@dataclass
class StieltjesSolution:
    """
    Values of f and f' on a grid of spectral parameters
    """
    sigma: SpectralMeasure
    c: float
    grid: np.ndarray
    f_values: np.ndarray
    fprime_values: np.ndarray
    iterations: np.ndarray
    residuals: np.ndarray

    def max_residual(self) -> float:
        return float(np.max(self.residuals)) if self.residuals.size else 0.0


def _moments(tau: np.ndarray, weight: np.ndarray, f: np.ndarray):
    """
    int (1+tau f)^-1, int tau (1+tau f)^-1 and int tau (1+tau f)^-2 against sigma
    """
    denom = 1.0 + tau[:, None] * f[None, :]
    inv = weight[:, None] / denom
    s0 = inv.sum(axis=0)
    s1 = (tau[:, None] * inv).sum(axis=0)
    s2 = (tau[:, None] * inv / denom).sum(axis=0)
    return s0, s1, s2


def mpe_residual(sigma: SpectralMeasure, c: float, z, f) -> np.ndarray:
    """|z f - (c - 1) + c int (1 + tau f)^-1 dsigma|"""
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    f = np.atleast_1d(np.asarray(f, dtype=complex))
    s0, _, _ = _moments(sigma.values, sigma.masses, f)
    return np.abs(z * f - (c - 1.0) + c * s0)


def solve_mpe_grid(sigma: SpectralMeasure, c: float, zs, initial=None,
                   damping: float = DAMPING, tolerance: float = TOLERANCE,
                   residual_acceptance: float = RESIDUAL_ACCEPTANCE,
                   max_iterations: int = MAX_ITERATIONS) -> StieltjesSolution:
    """
    Solve z f = c - 1 - c int (1 + tau f)^-1 dsigma at every z of a grid.

    The damped fixed point runs on the equivalent form
    f = 1 / (-z + c int tau (1 + tau f)^-1 dsigma), which maps the upper half-plane
    into itself; once the residual is small, Newton steps polish the root and are
    kept only when they stay in the half-plane and reduce the residual.
    Points with Im z < 0 are solved by conjugation.
    """
    zs = np.atleast_1d(np.asarray(zs, dtype=complex))
    if np.any(zs.imag == 0.0):
        raise ValueError("MPE solver needs Im z != 0 at every grid point")
    if c <= 0:
        raise ValueError(f"c must be positive, got {c}")

    flip = zs.imag < 0
    work = np.where(flip, np.conj(zs), zs)
    tau, weight = sigma.values, sigma.masses

    if initial is None:
        f = -1.0 / work
    else:
        f = np.atleast_1d(np.asarray(initial, dtype=complex)).copy()
        f = np.where(flip, np.conj(f), f)
        f = np.where(f.imag > 0, f, -1.0 / work)

    iterations = np.zeros(work.shape, dtype=int)
    s0, s1, s2 = _moments(tau, weight, f)
    residual = np.abs(work * f - (c - 1.0) + c * s0)
    active = residual > tolerance

    for _ in range(max_iterations):
        if not np.any(active):
            break
        idx = np.nonzero(active)[0]
        fa, za = f[idx], work[idx]
        a0, a1, a2 = s0[idx], s1[idx], s2[idx]

        # Damped fixed-point candidate
        step = (1.0 - damping) * fa + damping / (-za + c * a1)

        # Newton candidate near the root
        near = residual[idx] < NEWTON_ZONE
        if np.any(near):
            big_f = za * fa - (c - 1.0) + c * a0
            derivative = za - c * a2
            with np.errstate(divide='ignore', invalid='ignore'):
                newton = fa - big_f / derivative
            n0, _, _ = _moments(tau, weight, newton)
            newton_residual = np.abs(za * newton - (c - 1.0) + c * n0)
            accept = near & np.isfinite(newton) & (newton.imag > 0) & (newton_residual < residual[idx])
            step = np.where(accept, newton, step)

        f[idx] = step
        iterations[idx] += 1
        b0, b1, b2 = _moments(tau, weight, step)
        s0[idx], s1[idx], s2[idx] = b0, b1, b2
        residual[idx] = np.abs(za * step - (c - 1.0) + c * b0)
        moved = np.abs(step - fa) > 4.0 * np.finfo(float).eps * np.abs(step)
        # Points stuck at round-off level stop here; acceptance is checked below
        active[idx] = (residual[idx] > tolerance) & moved

    if np.any(residual > residual_acceptance):
        worst = int(np.argmax(residual))
        logger.error(f"MPE solver stalled at z={zs[worst]}: residual {residual[worst]:.3e}")
        raise ConvergenceError(f"MPE fixed point did not converge at z={zs[worst]}",
                               residual=float(residual[worst]), iterations=int(iterations[worst]))

    fprime = f / (c * s2 - work)
    f = np.where(flip, np.conj(f), f)
    fprime = np.where(flip, np.conj(fprime), fprime)

    logger.debug(f"Solved MPE on {zs.size} points, max iterations {int(iterations.max(initial=0))}")
    return StieltjesSolution(sigma=sigma, c=float(c), grid=zs, f_values=f, fprime_values=fprime,
                             iterations=iterations, residuals=residual)


def solve_mpe(sigma: SpectralMeasure, c: float, z: complex, **kwargs) -> Tuple[complex, complex]:
    """
    f(z) and f'(z) at a single point; f' from c int tau (1+tau f)^-2 dsigma - z = f / f'
    """
    solution = solve_mpe_grid(sigma, c, [z], **kwargs)
    return complex(solution.f_values[0]), complex(solution.fprime_values[0])


def mp_closed_form(c: float, z):
    """
    Stieltjes transform for tau = 1: the root of z f^2 + (z - c + 1) f + 1 = 0
    with Im f Im z > 0
    """
    scalar = np.isscalar(z)
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    if np.any(z.imag == 0.0):
        raise ValueError("closed form needs Im z != 0")

    b = z - c + 1.0
    root = np.sqrt(b * b - 4.0 * z)
    plus = (-b + root) / (2.0 * z)
    minus = (-b - root) / (2.0 * z)
    # Branch by sign test, not by a fixed square-root branch
    f = np.where(plus.imag * z.imag > 0, plus, minus)
    return complex(f[0]) if scalar else f


def mp_edges(c: float) -> Tuple[float, float]:
    """a_-/+ = (1 -/+ sqrt(c))^2 for tau = 1"""
    return (1.0 - math.sqrt(c)) ** 2, (1.0 + math.sqrt(c)) ** 2


def mp_closed_form_density(c: float, lambdas) -> np.ndarray:
    """sqrt((a+ - l)(l - a-)) / (2 pi l) on the support, zero elsewhere"""
    lambdas = np.asarray(lambdas, dtype=float)
    lo, hi = mp_edges(c)
    inside = (lambdas > lo) & (lambdas < hi) & (lambdas > 0)
    out = np.zeros_like(lambdas)
    lam = lambdas[inside]
    out[inside] = np.sqrt((hi - lam) * (lam - lo)) / (2.0 * np.pi * lam)
    return out


def support_bounds(sigma: SpectralMeasure, c: float) -> Tuple[float, float]:
    """
    Interval containing the support of N; exact edges for a single positive atom
    """
    scale = (1.0 + math.sqrt(c)) ** 2
    tau_min, tau_max = sigma.atoms[0][0], sigma.atoms[-1][0]
    if len(sigma.atoms) == 1 and tau_min > 0:
        lo, hi = mp_edges(c)
        return tau_min * lo, tau_min * hi
    return min(0.0, tau_min) * scale, max(0.0, tau_max) * scale


def constant_sigma(value: float = 1.0) -> SpectralMeasure:
    return SpectralMeasure(((float(value), 1.0),))
