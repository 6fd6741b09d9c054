import logging
from dataclasses import dataclass, field
from typing import Dict, Any, Optional

import numpy as np

from src.measures.spectral_measures import TauSpec, realize_taus
from src.utils.exceptions import BudgetExceededError, LengthMismatchError
from src.vectors.vector_models import VectorModel, tensor_samples, check_budget, DEFAULT_MEMORY_BUDGET

logger = logging.getLogger(__name__)

DENSE_CAP = 4096


@dataclass(frozen=True)
class EnsembleConfig:
    """
    One random ensemble M_{n,m,k}: dimension n, tensor order k, sample count m
    (given directly or as the ratio c with m = round(c n^k)), vector model, taus, seed
    """
    n: int
    k: int
    model: VectorModel
    taus: TauSpec
    m: Optional[int] = None
    c: Optional[float] = None
    master_seed: int = 0

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"n must be at least 2, got {self.n}")
        if self.k < 1:
            raise ValueError(f"k must be at least 1, got {self.k}")
        if self.m is None and self.c is None:
            raise ValueError("EnsembleConfig needs either m or c")
        if self.c is not None and not self.c > 0:
            raise ValueError(f"c must be positive, got {self.c}")
        if self.sample_count < 1:
            raise ValueError(f"m must be at least 1, got {self.sample_count}")

    @property
    def dimension(self) -> int:
        """N = n^k"""
        return self.n ** self.k

    @property
    def sample_count(self) -> int:
        if self.m is not None:
            return int(self.m)
        return int(round(self.c * self.dimension))

    @property
    def ratio(self) -> float:
        """m / n^k"""
        return self.sample_count / self.dimension

    def tau_values(self) -> np.ndarray:
        return np.asarray(realize_taus(self.taus, self.sample_count), dtype=float)

    @classmethod
    def from_dict(cls, raw: Dict[str, Any]) -> 'EnsembleConfig':
        return cls(
            n=int(raw['n']),
            k=int(raw.get('k', 2)),
            m=int(raw['m']) if raw.get('m') is not None else None,
            c=float(raw['c']) if raw.get('c') is not None else None,
            model=VectorModel.from_dict(raw['model']),
            taus=TauSpec.from_dict(raw.get('taus', {'kind': 'constant', 'value': 1.0})),
            master_seed=int(raw.get('seed', 0)),
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            'n': self.n,
            'k': self.k,
            'm': self.sample_count,
            'c': self.c,
            'model': self.model.to_dict(),
            'taus': self.taus.to_dict(),
            'seed': self.master_seed,
        }


@dataclass(frozen=True)
class SampleMatrix:
    """
    A realized M = B diag(tau) B^T kept in factored form.
    Column alpha of the factor is Y_alpha.
    """
    factor: np.ndarray
    tau: np.ndarray
    n: int = 0
    k: int = 1

    def __post_init__(self):
        object.__setattr__(self, 'factor', np.array(self.factor, dtype=float))
        object.__setattr__(self, 'tau', np.array(self.tau, dtype=float).reshape(-1))
        if self.factor.ndim != 2:
            raise ValueError("factor must be an N x m matrix")
        if self.factor.shape[1] != self.tau.shape[0]:
            raise LengthMismatchError(
                f"length mismatch: factor has {self.factor.shape[1]} columns but {self.tau.shape[0]} taus"
            )
        # Read-only once built
        self.factor.setflags(write=False)
        self.tau.setflags(write=False)

    @property
    def dimension(self) -> int:
        return self.factor.shape[0]

    @property
    def sample_count(self) -> int:
        return self.factor.shape[1]

    def trace(self) -> float:
        """Tr M = sum_alpha tau_alpha |Y_alpha|^2"""
        return float(np.dot(self.tau, np.einsum('ij,ij->j', self.factor, self.factor)))


def assemble(config: EnsembleConfig, stream: np.random.Generator,
             memory_budget: int = DEFAULT_MEMORY_BUDGET) -> SampleMatrix:
    """
    Draw the m tensor columns of one realization
    """
    n_cols = config.sample_count
    check_budget(config.dimension * n_cols, memory_budget,
                 f"factor B of size {config.dimension} x {n_cols}")

    rows = tensor_samples(config.model, config.n, config.k, n_cols, stream, memory_budget)
    return SampleMatrix(factor=rows.T, tau=config.tau_values(), n=config.n, k=config.k)


def dense_form(mat: SampleMatrix, dense_cap: int = DENSE_CAP) -> np.ndarray:
    """
    Materialize B diag(tau) B^T as an exactly symmetric N x N array
    """
    if mat.dimension > dense_cap:
        raise BudgetExceededError(f"dense form of size {mat.dimension} exceeds the dense cap {dense_cap}")

    dense = (mat.factor * mat.tau) @ mat.factor.T
    return (dense + dense.T) / 2.0


def apply(mat: SampleMatrix, v: np.ndarray) -> np.ndarray:
    """
    Matrix-free product M v = sum_alpha tau_alpha (Y_alpha, v) Y_alpha
    """
    v = np.asarray(v)
    if v.shape[0] != mat.dimension:
        raise LengthMismatchError(f"length mismatch: vector has {v.shape[0]} entries, matrix dimension is {mat.dimension}")
    return mat.factor @ (mat.tau * (mat.factor.T @ v))
