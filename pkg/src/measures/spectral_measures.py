import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Any, List, Sequence, Tuple

import numpy as np

from src.utils.exceptions import LengthMismatchError

logger = logging.getLogger(__name__)

TAU_KINDS = ('constant', 'explicit-list', 'discrete-measure', 'sampled')
TAU_BOUND = 1e6
MASS_TOLERANCE = 1e-12
MAX_MOMENT_ORDER = 8


@dataclass(frozen=True)
class SpectralMeasure:
    """
    Discrete probability measure over tau-values (sigma or sigma_m)
    """
    atoms: Tuple[Tuple[float, float], ...]

    def __post_init__(self):
        if not self.atoms:
            raise ValueError("SpectralMeasure needs at least one atom")

        values = [v for v, _ in self.atoms]
        masses = [w for _, w in self.atoms]
        if any(b <= a for a, b in zip(values, values[1:])):
            raise ValueError("SpectralMeasure values must be strictly increasing")
        if any(not (0.0 < w <= 1.0) for w in masses):
            raise ValueError("SpectralMeasure masses must lie in (0, 1]")
        if abs(math.fsum(masses) - 1.0) > MASS_TOLERANCE:
            raise ValueError(f"SpectralMeasure total mass is {math.fsum(masses)!r}, expected 1")

    @property
    def values(self) -> np.ndarray:
        return np.array([v for v, _ in self.atoms], dtype=float)

    @property
    def masses(self) -> np.ndarray:
        return np.array([w for _, w in self.atoms], dtype=float)

    def cdf(self, x: float) -> float:
        return float(sum(w for v, w in self.atoms if v <= x))

    def nonzero_mass(self) -> float:
        """Mass carried by tau != 0"""
        return float(sum(w for v, w in self.atoms if v != 0.0))


@dataclass(frozen=True)
class TauSpec:
    """
    Description of the tau-side of an ensemble
    kind: constant(value) | explicit-list(values) | discrete-measure(atoms) | sampled(atoms, seed)
    """
    kind: str
    value: float = 1.0
    values: Tuple[float, ...] = ()
    atoms: Tuple[Tuple[float, float], ...] = ()
    seed: int = 0

    def __post_init__(self):
        if self.kind not in TAU_KINDS:
            raise ValueError(f"Unknown tau kind '{self.kind}'; valid kinds: {', '.join(TAU_KINDS)}")

        if self.kind == 'constant':
            _check_tau_values([self.value])
        elif self.kind == 'explicit-list':
            if not self.values:
                raise ValueError("explicit-list tau spec must be non-empty")
            _check_tau_values(self.values)
        else:
            if not self.atoms:
                raise ValueError(f"{self.kind} tau spec needs atoms")
            taus = [t for t, _ in self.atoms]
            weights = [w for _, w in self.atoms]
            _check_tau_values(taus)
            if any(w <= 0 for w in weights):
                raise ValueError("discrete-measure weights must be positive")
            if abs(math.fsum(weights) - 1.0) > 1e-9:
                raise ValueError(f"discrete-measure weights sum to {math.fsum(weights)!r}, expected 1")
            if any(b <= a for a, b in zip(taus, taus[1:])):
                raise ValueError("discrete-measure atoms must be sorted by strictly increasing tau")

    @classmethod
    def constant(cls, value: float) -> 'TauSpec':
        return cls(kind='constant', value=float(value))

    @classmethod
    def explicit(cls, values: Sequence[float]) -> 'TauSpec':
        return cls(kind='explicit-list', values=tuple(float(v) for v in values))

    @classmethod
    def discrete(cls, atoms: Sequence[Tuple[float, float]]) -> 'TauSpec':
        return cls(kind='discrete-measure', atoms=tuple(sorted((float(t), float(w)) for t, w in atoms)))

    @classmethod
    def from_dict(cls, raw: Dict[str, Any]) -> 'TauSpec':
        kind = raw.get('kind')
        if kind == 'constant':
            return cls.constant(raw.get('value', 1.0))
        if kind == 'explicit-list':
            return cls.explicit(raw.get('values', []))
        if kind in ('discrete-measure', 'sampled'):
            atoms = tuple(sorted((float(t), float(w)) for t, w in raw.get('atoms', [])))
            return cls(kind=kind, atoms=atoms, seed=int(raw.get('seed', 0)))
        raise ValueError(f"Unknown tau kind '{kind}'; valid kinds: {', '.join(TAU_KINDS)}")

    def to_dict(self) -> Dict[str, Any]:
        if self.kind == 'constant':
            return {'kind': self.kind, 'value': self.value}
        if self.kind == 'explicit-list':
            return {'kind': self.kind, 'values': list(self.values)}
        payload = {'kind': self.kind, 'atoms': [list(a) for a in self.atoms]}
        if self.kind == 'sampled':
            payload['seed'] = self.seed
        return payload

    def limit_measure(self) -> SpectralMeasure:
        """The measure sigma this spec converges to"""
        if self.kind == 'constant':
            return SpectralMeasure(((self.value, 1.0),))
        if self.kind == 'explicit-list':
            return ncm(self.values)
        return _normalized_measure(self.atoms)


def _check_tau_values(values: Sequence[float]):
    for v in values:
        if not math.isfinite(v):
            raise ValueError(f"tau values must be finite, got {v!r}")
        if abs(v) > TAU_BOUND:
            raise ValueError(f"|tau| must not exceed {TAU_BOUND:g}, got {v!r}")


def _normalized_measure(atoms: Sequence[Tuple[float, float]]) -> SpectralMeasure:
    # Re-normalize away the rounding noise of user-supplied weights
    total = math.fsum(w for _, w in atoms)
    return SpectralMeasure(tuple((float(t), w / total) for t, w in atoms))


def _largest_remainder_counts(weights: np.ndarray, m: int) -> np.ndarray:
    quotas = weights * m
    counts = np.floor(quotas).astype(int)
    shortfall = m - int(counts.sum())
    if shortfall > 0:
        remainders = quotas - counts
        # Stable sort keeps ties in atom order
        order = np.argsort(-remainders, kind='stable')
        counts[order[:shortfall]] += 1
    return counts


def realize_taus(spec: TauSpec, m: int) -> List[float]:
    """
    Produce the finite sequence tau_1..tau_m whose NCM approximates sigma
    """
    if m < 1:
        raise ValueError(f"m must be at least 1, got {m}")

    if spec.kind == 'constant':
        return [spec.value] * m

    if spec.kind == 'explicit-list':
        if len(spec.values) != m:
            raise LengthMismatchError(f"length mismatch: explicit tau list has {len(spec.values)} values, m={m}")
        return list(spec.values)

    taus = np.array([t for t, _ in spec.atoms], dtype=float)
    weights = np.array([w for _, w in spec.atoms], dtype=float)
    weights = weights / weights.sum()

    if spec.kind == 'sampled':
        rng = np.random.default_rng(spec.seed)
        return rng.choice(taus, size=m, p=weights).tolist()

    counts = _largest_remainder_counts(weights, m)
    logger.debug(f"Tau quota counts for m={m}: {counts.tolist()}")
    return np.repeat(taus, counts).tolist()


def ncm(values: Sequence[float]) -> SpectralMeasure:
    """
    Normalized counting measure of a finite sequence
    """
    if len(values) == 0:
        raise ValueError("ncm needs a non-empty list of values")

    distinct, counts = np.unique(np.asarray(values, dtype=float), return_counts=True)
    m = counts.sum()
    return SpectralMeasure(tuple((float(v), float(c) / m) for v, c in zip(distinct, counts)))


def measure_moment(mu: SpectralMeasure, p: int) -> float:
    """p-th moment of a discrete measure"""
    if p < 0 or p > MAX_MOMENT_ORDER:
        raise ValueError(f"moment order must be in [0, {MAX_MOMENT_ORDER}], got {p}")
    return math.fsum(v ** p * w for v, w in mu.atoms)


def measure_support(mu: SpectralMeasure) -> Tuple[float, float]:
    return mu.atoms[0][0], mu.atoms[-1][0]


def kolmogorov_distance(mu: SpectralMeasure, nu: SpectralMeasure) -> float:
    """sup_x |F_mu(x) - F_nu(x)|, attained at an atom of either measure"""
    points = sorted({v for v, _ in mu.atoms} | {v for v, _ in nu.atoms})
    return max(abs(mu.cdf(x) - nu.cdf(x)) for x in points)
