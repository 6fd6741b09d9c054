import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Tuple, Optional, List, Dict, Any

import numpy as np

from src.ensemble.sample_matrix import EnsembleConfig
from src.fluctuations.functions import TestFunction
from src.vectors.vector_models import DEFAULT_MEMORY_BUDGET

logger = logging.getLogger(__name__)


def parse_complex(raw) -> complex:
    """Accepts [re, im], {"re": .., "im": ..}, a number or a Python-style string such as '1+1j'"""
    if isinstance(raw, (list, tuple)):
        if len(raw) != 2:
            raise ValueError(f"complex value must be [re, im], got {raw!r}")
        return complex(float(raw[0]), float(raw[1]))
    if isinstance(raw, dict):
        return complex(float(raw.get('re', 0.0)), float(raw.get('im', 0.0)))
    if isinstance(raw, str):
        return complex(raw.replace(' ', '').replace('i', 'j'))
    return complex(raw)


def complex_label(z: complex) -> str:
    return f"{z.real:g}{z.imag:+g}i"


@dataclass(frozen=True)
class ExperimentPlan:
    """
    One replicated experiment: ensemble, replicate count, test functions, spectral probes
    """
    config: EnsembleConfig
    replicates: int
    phis: Tuple[TestFunction, ...] = ()
    z_probes: Tuple[complex, ...] = ()
    threads: int = 1
    memory_budget: int = DEFAULT_MEMORY_BUDGET
    eta_schedule: Optional[Tuple[float, ...]] = None
    output_dir: Optional[Path] = None

    def __post_init__(self):
        if self.replicates < 2:
            raise ValueError(f"replicates must be at least 2, got {self.replicates}")
        if self.threads < 1:
            raise ValueError(f"threads must be at least 1, got {self.threads}")
        for z in self.z_probes:
            if complex(z).imag == 0.0:
                raise ValueError(f"z probe {z} lies on the real axis")

    @property
    def master_seed(self) -> int:
        return self.config.master_seed

    def with_dimension(self, n: int) -> 'ExperimentPlan':
        """Same plan at another n, keeping the ratio c"""
        config = replace(self.config, n=n, m=None, c=self.config.ratio if self.config.c is None else self.config.c)
        return replace(self, config=config)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'ensemble': self.config.to_dict(),
            'replicates': self.replicates,
            'phis': [phi.to_dict() for phi in self.phis],
            'z_probes': [[z.real, z.imag] for z in map(complex, self.z_probes)],
            'eta_schedule': list(self.eta_schedule) if self.eta_schedule else None,
        }


@dataclass
class RunResult:
    """
    Ordered per-replicate records of one experiment with their summary
    """
    experiment: str
    records: List[Dict[str, Any]]
    summary: Dict[str, Any]
    predictions: Dict[str, Any] = field(default_factory=dict)
    metadata: Dict[str, Any] = field(default_factory=dict)

    def column(self, key: str) -> np.ndarray:
        return np.array([record[key] for record in self.records])
