import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np
import pandas as pd
from scipy import integrate, linalg

from .sample_matrix import SampleMatrix, dense_form, DENSE_CAP

logger = logging.getLogger(__name__)

ZERO_SNAP = 1e-10


@dataclass(frozen=True)
class Spectrum:
    """
    Real eigenvalues of one realization.
    `computed` holds the eigenvalues produced by the solver; `structural_zeros`
    counts the exact zeros implied by the rank bound on the Gram path.
    """
    computed: np.ndarray
    structural_zeros: int
    n: int
    k: int
    m: int
    path: str

    @property
    def dimension(self) -> int:
        return self.computed.shape[0] + self.structural_zeros

    @property
    def eigenvalues(self) -> np.ndarray:
        """All N eigenvalues, sorted"""
        return np.sort(np.concatenate([self.computed, np.zeros(self.structural_zeros)]))


def eigenvalues(mat: SampleMatrix, force_dense: bool = False, dense_cap: int = DENSE_CAP) -> Spectrum:
    """
    Full spectrum of M.
    Path A (tau >= 0 and m < N): eigenvalues of the m x m Gram form
    D^1/2 B^T B D^1/2 plus N - m structural zeros.
    Path B: dense symmetric solve of the N x N form.
    """
    if not (np.all(np.isfinite(mat.factor)) and np.all(np.isfinite(mat.tau))):
        raise ValueError("SampleMatrix has non-finite entries")

    n_dim, m = mat.dimension, mat.sample_count
    use_gram = not force_dense and bool(np.all(mat.tau >= 0)) and m < n_dim

    if use_gram:
        weighted = mat.factor * np.sqrt(mat.tau)
        gram = weighted.T @ weighted
        values = linalg.eigh((gram + gram.T) / 2.0, eigvals_only=True)
        values[np.abs(values) < ZERO_SNAP] = 0.0
        return Spectrum(computed=np.sort(values), structural_zeros=n_dim - m,
                        n=mat.n, k=mat.k, m=m, path='gram')

    values = linalg.eigh(dense_form(mat, dense_cap), eigvals_only=True)
    return Spectrum(computed=np.sort(values), structural_zeros=0, n=mat.n, k=mat.k, m=m, path='dense')


def linear_statistic(spec: Spectrum, phi: Callable) -> float:
    """
    N_n[phi] = sum_l phi(lambda_l); structural zeros contribute (N - m) phi(0)
    """
    total = float(np.sum(phi(spec.computed)))
    if spec.structural_zeros:
        total += spec.structural_zeros * float(phi(np.zeros(1))[0])
    return total


def resolvent_trace(spec: Spectrum, z: complex) -> complex:
    """gamma_n(z) = Tr (M - z)^-1"""
    z = complex(z)
    if z.imag == 0.0:
        raise ValueError(f"resolvent trace needs Im z != 0, got z={z}")

    total = complex(np.sum(1.0 / (spec.computed - z)))
    if spec.structural_zeros:
        total += spec.structural_zeros / (-z)
    return total


def resolvent_traces(spec: Spectrum, zs: np.ndarray) -> np.ndarray:
    """Vectorized gamma_n over an array of z"""
    zs = np.asarray(zs, dtype=complex)
    if np.any(zs.imag == 0.0):
        raise ValueError("resolvent traces need Im z != 0 at every point")

    total = np.sum(1.0 / (spec.computed[:, None] - zs[None, :]), axis=0)
    if spec.structural_zeros:
        total = total - spec.structural_zeros / zs
    return total


def smoothed_statistic(spec: Spectrum, phi: Callable, eta: float, lo: float, hi: float,
                       points: int = 8193) -> float:
    """
    (1/pi) int phi(mu) Im gamma_n(mu + i eta) dmu over [lo, hi], the resolvent
    representation of N_n[P_eta * phi] for phi supported in [lo, hi]
    """
    if eta <= 0:
        raise ValueError(f"eta must be positive, got {eta}")

    mu = np.linspace(lo, hi, points)
    integrand = phi(mu) * resolvent_traces(spec, mu + 1j * eta).imag
    return float(integrate.simpson(integrand, x=mu) / np.pi)


def write_spectrum_csv(spec: Spectrum, path) -> str:
    """One eigenvalue per line under the header `lambda`"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame({'lambda': spec.eigenvalues}).to_csv(path, index=False, float_format='%.17g')
    logger.debug(f"Saved spectrum to {path}")
    return str(path)
