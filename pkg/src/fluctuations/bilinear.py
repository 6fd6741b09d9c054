import logging
import string
from typing import Dict, Tuple, Optional

import numpy as np

logger = logging.getLogger(__name__)


def _tensor_side(h: np.ndarray, k: int, n: Optional[int] = None) -> int:
    """Side n of a square matrix acting on (R^n)^{otimes k}"""
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ValueError(f"H must be a square matrix, got shape {h.shape}")
    dim = h.shape[0]
    if n is None:
        n = int(round(dim ** (1.0 / k)))
    if n < 1 or n ** k != dim:
        raise ValueError(f"H has dimension {dim}, which is not n^{k}" + (f" for n={n}" if n else ''))
    return n


def _check_symmetric(h: np.ndarray):
    if not np.allclose(h, h.T, rtol=1e-10, atol=1e-12 * max(1.0, float(np.max(np.abs(h))))):
        raise ValueError("H must be symmetric")


def partial_trace(h: np.ndarray, n: int, k: int, keep: int) -> np.ndarray:
    """
    Trace of H over every tensor axis except `keep`: an n x n matrix
    """
    letters = string.ascii_letters
    rows = letters[:k]
    cols = ''.join(letters[k] if axis == keep else rows[axis] for axis in range(k))
    spec = f"{rows}{cols}->{rows[keep]}{letters[k]}"
    return np.einsum(spec, h.reshape((n,) * (2 * k)))


def partial_traces(h: np.ndarray, n: Optional[int] = None) -> Tuple[np.ndarray, np.ndarray]:
    """
    For N = n^2, H indexed by pairs (i, s):
    Gamma_{s,p} = sum_j H_{js,jp} and Gamma~_{i,j} = sum_s H_{is,js}
    """
    h = np.asarray(h)
    n = _tensor_side(h, 2, n)
    return partial_trace(h, n, 2, keep=1), partial_trace(h, n, 2, keep=0)


def g_functions(h1: np.ndarray, h2: np.ndarray, n: Optional[int] = None) -> Dict[str, complex]:
    """
    n^{-3} Tr Gamma(1) Gamma(2), n^{-3} sum_s Gamma(1)_ss Gamma(2)_ss and the same for Gamma~
    """
    gamma1, tilde1 = partial_traces(h1, n)
    gamma2, tilde2 = partial_traces(h2, n)
    n = gamma1.shape[0]
    scale = float(n) ** -3
    return {
        'g1': complex(scale * np.trace(gamma1 @ gamma2)),
        'g2': complex(scale * np.sum(np.diag(gamma1) * np.diag(gamma2))),
        'g1_tilde': complex(scale * np.trace(tilde1 @ tilde2)),
        'g2_tilde': complex(scale * np.sum(np.diag(tilde1) * np.diag(tilde2))),
    }


def bilinear_variance_rhs(h: np.ndarray, a: float, b: float, n: Optional[int] = None) -> float:
    """
    Leading term of n Var{(HY, Y)} for k = 2:
    2a |n^{-2} Tr H|^2 + 2(g1 + g1~) + b(g2 + g2~), with the g's built from (H, conj H)
    """
    h = np.asarray(h)
    n = _tensor_side(h, 2, n)
    _check_symmetric(h)

    g = g_functions(h, np.conj(h), n)
    mean_term = abs(np.trace(h) / n ** 2) ** 2
    value = 2.0 * a * mean_term + 2.0 * (g['g1'] + g['g1_tilde']).real + b * (g['g2'] + g['g2_tilde']).real
    logger.debug(f"Bilinear variance rhs at n={n}: {value:.6f}")
    return float(value)


def bilinear_variance_rhs_general(h: np.ndarray, n: int, k: int, a: float, b: float) -> float:
    """
    Leading term of n Var{(HY, Y)} for Y = y^(1) x ... x y^(k):
    k a |n^{-k} Tr H|^2 + n^{-2k+1} sum_i [2 ||Gamma^(i)||_F^2 + b sum_s |Gamma^(i)_ss|^2],
    Gamma^(i) the partial trace of H over all tensor axes except i
    """
    h = np.asarray(h)
    n = _tensor_side(h, k, n)
    _check_symmetric(h)

    total = k * a * abs(np.trace(h) / n ** k) ** 2
    scale = float(n) ** (-2 * k + 1)
    for axis in range(k):
        gamma = partial_trace(h, n, k, keep=axis)
        total += scale * (2.0 * float(np.sum(np.abs(gamma) ** 2)) + b * float(np.sum(np.abs(np.diag(gamma)) ** 2)))
    return float(total)
