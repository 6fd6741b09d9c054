import logging
import math
from dataclasses import dataclass, field
from typing import Sequence, Optional, Dict, Any, List, Tuple

import numpy as np
from numpy.polynomial import chebyshev
from scipy import integrate

from src.measures.spectral_measures import SpectralMeasure
from src.mp_law.mpe_solver import solve_mpe_grid, solve_mpe, support_bounds
from src.mp_law.density import DEFAULT_ETA_SCHEDULE
from src.utils.exceptions import QuadratureError
from .functions import TestFunction

logger = logging.getLogger(__name__)

WINDOW_ETAS = 10.0
START_LEVEL = 10
MAX_LEVEL = 17
QUADRATURE_RTOL = 1e-9
CHEBYSHEV_NODES = 400


@dataclass
class VariancePrediction:
    """
    Limiting variance V[phi] of n^{-1/2} N_n[phi]: the per-eta values and their
    extrapolation to eta = 0
    """
    value: float
    eta_schedule: Tuple[float, ...]
    per_eta: List[float]
    a: float
    b: float
    c: float
    phi: str = ''
    window: Optional[Tuple[float, float]] = None
    metadata: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'phi': self.phi,
            'eta_schedule': list(self.eta_schedule),
            'V_eta': list(self.per_eta),
            'V': self.value,
            'a': self.a,
            'b': self.b,
            'c': self.c,
        }


def neville_at_zero(etas: Sequence[float], values: Sequence[float]) -> float:
    """
    Value at eta = 0 of the interpolating polynomial through (eta_j, value_j)
    """
    x = list(etas)
    p = list(values)
    for level in range(1, len(x)):
        for i in range(len(x) - level):
            # p_i <- (x_{i+level} p_i - x_i p_{i+1}) / (x_{i+level} - x_i), evaluated at 0
            p[i] = (x[i + level] * p[i] - x[i] * p[i + 1]) / (x[i + level] - x[i])
    return float(p[0])


def integration_window(sigma: SpectralMeasure, c: float, phi: TestFunction,
                       eta_schedule: Sequence[float]) -> Optional[Tuple[float, float]]:
    """
    Support of N widened by 10 eta_max, cut down to where phi is not negligible
    """
    lo, hi = support_bounds(sigma, c)
    pad = WINDOW_ETAS * max(eta_schedule)
    lo, hi = lo - pad, hi + pad
    hint = phi.support_hint()
    if hint is not None:
        lo, hi = max(lo, hint[0]), min(hi, hint[1])
    if hi <= lo:
        return None
    return lo, hi


def _refine(previous: np.ndarray) -> np.ndarray:
    """Warm start on the doubled grid: old points kept, new points interpolated"""
    out = np.empty(2 * previous.size - 1, dtype=complex)
    out[::2] = previous
    out[1::2] = 0.5 * (previous[:-1] + previous[1:])
    return out


def resolvent_integrals(sigma: SpectralMeasure, c: float, phi: TestFunction, eta: float,
                        window: Tuple[float, float], rtol: float = QUADRATURE_RTOL,
                        initial: Optional[np.ndarray] = None) -> Tuple[np.ndarray, np.ndarray]:
    """
    Im int f'(l + i eta) / (1 + tau f(l + i eta))^2 phi(l) dl for every atom tau of sigma,
    by Romberg integration on successively doubled grids
    """
    lo, hi = window
    tau = sigma.values
    f_start = initial
    previous = None
    for level in range(START_LEVEL, MAX_LEVEL + 1):
        lambdas = np.linspace(lo, hi, 2 ** level + 1)
        solution = solve_mpe_grid(sigma, c, lambdas + 1j * eta, initial=f_start)
        f, fprime = solution.f_values, solution.fprime_values

        integrand = (fprime[None, :] / (1.0 + tau[:, None] * f[None, :]) ** 2).imag * phi(lambdas)[None, :]
        current = integrate.romb(integrand, dx=lambdas[1] - lambdas[0], axis=-1)

        if previous is not None:
            change = float(np.max(np.abs(current - previous)))
            scale = max(1.0, float(np.max(np.abs(current))))
            if change <= rtol * scale:
                return current, f
        previous = current
        f_start = _refine(f)

    change = float(np.max(np.abs(current - previous)))
    if change > 1e-6 * max(1.0, float(np.max(np.abs(current)))):
        raise QuadratureError(f"lambda-integral at eta={eta} did not converge on 2^{MAX_LEVEL}+1 points: "
                              f"last change {change:.2e}", residual=change, iterations=MAX_LEVEL)
    logger.warning(f"lambda-integral at eta={eta} stopped at 2^{MAX_LEVEL}+1 points with change {change:.2e}")
    return current, f


def clt_variance(sigma: SpectralMeasure, c: float, a: float, b: float, phi: TestFunction,
                 eta_schedule: Optional[Sequence[float]] = None,
                 rtol: float = QUADRATURE_RTOL) -> VariancePrediction:
    """
    V_eta[phi] = (2(a+b+2)c / pi^2) int tau^2 (Im int f'/(1+tau f)^2 phi dl)^2 dsigma(tau)
    for each eta of the schedule, extrapolated to eta = 0
    """
    schedule = tuple(float(e) for e in (eta_schedule or DEFAULT_ETA_SCHEDULE))
    if any(e <= 0 for e in schedule):
        raise ValueError(f"eta schedule must be positive, got {schedule}")

    prefactor = 2.0 * (a + b + 2.0) * c / np.pi ** 2
    if prefactor < 0:
        logger.warning(f"a+b+2 = {a + b + 2.0:.4f} is negative; clamping the variance prefactor to 0")
        prefactor = 0.0

    window = integration_window(sigma, c, phi, schedule)
    if window is None or prefactor == 0.0 or phi.amplitude == 0.0:
        per_eta = [0.0] * len(schedule)
        return VariancePrediction(value=0.0, eta_schedule=schedule, per_eta=per_eta, a=a, b=b, c=c,
                                  phi=phi.label, window=window)

    try:
        per_eta = []
        warm = None
        for eta in sorted(schedule, reverse=True):
            inner, f_coarse = resolvent_integrals(sigma, c, phi, eta, window, rtol=rtol, initial=warm)
            # Coarsest grid of the finer eta starts from this eta's solution
            warm = f_coarse[::2 ** (int(math.log2(f_coarse.size - 1)) - START_LEVEL)]
            value = prefactor * float(np.sum(sigma.masses * sigma.values ** 2 * inner ** 2))
            per_eta.append((eta, value))
            logger.debug(f"V_eta[{phi.label}] at eta={eta}: {value:.8f}")

        etas = [e for e, _ in per_eta]
        values = [v for _, v in per_eta]
        limit = max(0.0, neville_at_zero(etas, values))

        prediction = VariancePrediction(value=limit, eta_schedule=tuple(etas), per_eta=values,
                                        a=a, b=b, c=c, phi=phi.label, window=window)
        logger.info(f"Predicted V[{phi.label}] = {limit:.6f} (a={a:.3f}, b={b:.3f}, c={c:.3f})")
        return prediction

    except Exception as e:
        logger.error(f"CLT variance for {phi.label} failed: {e}")
        raise


def clt_variance_closed_form(c: float, a: float, b: float, phi: TestFunction,
                             nodes: int = CHEBYSHEV_NODES) -> float:
    """
    tau = 1: V[phi] = ((a+b+2)/(2 c pi^2)) (int phi(mu)(mu - a_m) / sqrt((a_+ - mu)(mu - a_-)) dmu)^2,
    a_m = 1 + c, by Gauss-Chebyshev with mu = a_m + 2 sqrt(c) x
    """
    x, w = chebyshev.chebgauss(nodes)
    root = math.sqrt(c)
    mu = 1.0 + c + 2.0 * root * x
    singular_integral = 2.0 * root * float(np.sum(w * x * phi(mu)))
    return (a + b + 2.0) / (2.0 * c * np.pi ** 2) * singular_integral ** 2


def trace_covariance(sigma: SpectralMeasure, c: float, a: float, b: float,
                     z1: complex, z2: complex) -> complex:
    """
    C(z1, z2) = 2(a+b+2)c int tau^2 f'(z1) f'(z2) / ((1+tau f(z1))^2 (1+tau f(z2))^2) dsigma(tau)
    """
    f1, d1 = solve_mpe(sigma, c, z1)
    f2, d2 = solve_mpe(sigma, c, z2)
    tau, weight = sigma.values, sigma.masses
    terms = weight * tau ** 2 * d1 * d2 / ((1.0 + tau * f1) ** 2 * (1.0 + tau * f2) ** 2)
    return complex(2.0 * (a + b + 2.0) * c * np.sum(terms))
