import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, Any

import numpy as np
from scipy import integrate, special, stats

from src.utils.exceptions import BudgetExceededError

logger = logging.getLogger(__name__)

MODEL_KINDS = ('iid', 'sphere', 'ball', 'lp')
COMPONENT_LAWS = ('gaussian', 'rademacher', 'uniform-sym', 'student-like-bounded')

# Student-t surrogate: 5 degrees of freedom, truncated to |x| <= 10
STUDENT_DOF = 5.0
STUDENT_CUTOFF = 10.0

DEFAULT_MEMORY_BUDGET = 2048 * 1024 * 1024


@dataclass(frozen=True)
class VectorModel:
    """
    Normalized isotropic vector model: E{y_i} = 0, E{y_i y_j} = delta_ij / n
    kind: iid(law) | sphere | ball | lp(p)
    """
    kind: str
    law: str = 'gaussian'
    p: float = 2.0

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise ValueError(f"Unknown vector model kind '{self.kind}'; valid kinds: {', '.join(MODEL_KINDS)}")
        if self.kind == 'iid' and self.law not in COMPONENT_LAWS:
            raise ValueError(f"Unknown component law '{self.law}'; valid laws: {', '.join(COMPONENT_LAWS)}")
        if self.kind == 'lp' and not self.p >= 1.0:
            raise ValueError(f"lp-ball model needs p >= 1, got {self.p}")

    @classmethod
    def iid(cls, law: str = 'gaussian') -> 'VectorModel':
        return cls(kind='iid', law=law)

    @classmethod
    def sphere(cls) -> 'VectorModel':
        return cls(kind='sphere')

    @classmethod
    def ball(cls) -> 'VectorModel':
        return cls(kind='ball')

    @classmethod
    def lp_ball(cls, p: float) -> 'VectorModel':
        return cls(kind='lp', p=float(p))

    @classmethod
    def from_dict(cls, raw: Dict[str, Any]) -> 'VectorModel':
        kind = raw.get('kind')
        if kind == 'iid':
            return cls.iid(raw.get('law', 'gaussian'))
        if kind == 'lp':
            return cls.lp_ball(raw.get('p', 2.0))
        return cls(kind=kind)

    def to_dict(self) -> Dict[str, Any]:
        if self.kind == 'iid':
            return {'kind': 'iid', 'law': self.law}
        if self.kind == 'lp':
            return {'kind': 'lp', 'p': self.p}
        return {'kind': self.kind}

    @property
    def label(self) -> str:
        if self.kind == 'iid':
            return f"iid-{self.law}"
        if self.kind == 'lp':
            return f"lp-{self.p:g}"
        return self.kind


@lru_cache(maxsize=None)
def _student_truncation() -> Dict[str, float]:
    """Normalizing constants of the truncated Student-t surrogate"""
    law = stats.t(df=STUDENT_DOF)
    mass = law.cdf(STUDENT_CUTOFF) - law.cdf(-STUDENT_CUTOFF)

    def moment(order):
        value, _ = integrate.quad(lambda x: x ** order * law.pdf(x), -STUDENT_CUTOFF, STUDENT_CUTOFF)
        return value / mass

    m2 = moment(2)
    return {
        'mass': mass,
        'scale': 1.0 / math.sqrt(m2),
        'm4': moment(4) / m2 ** 2,
        'm6': moment(6) / m2 ** 3,
    }


def component_moments(law: str) -> Dict[str, float]:
    """
    Fourth and sixth moments of the unit-variance component law
    """
    if law == 'gaussian':
        return {'m4': 3.0, 'm6': 15.0}
    if law == 'rademacher':
        return {'m4': 1.0, 'm6': 1.0}
    if law == 'uniform-sym':
        return {'m4': 9.0 / 5.0, 'm6': 27.0 / 7.0}
    if law == 'student-like-bounded':
        constants = _student_truncation()
        return {'m4': constants['m4'], 'm6': constants['m6']}
    raise ValueError(f"Unknown component law '{law}'; valid laws: {', '.join(COMPONENT_LAWS)}")


def _component_draws(law: str, shape, stream: np.random.Generator) -> np.ndarray:
    if law == 'gaussian':
        return stream.standard_normal(shape)
    if law == 'rademacher':
        return stream.integers(0, 2, size=shape).astype(float) * 2.0 - 1.0
    if law == 'uniform-sym':
        return stream.uniform(-math.sqrt(3.0), math.sqrt(3.0), size=shape)

    # Inverse-CDF sampling restricted to the truncation window
    constants = _student_truncation()
    law_t = stats.t(df=STUDENT_DOF)
    lo = law_t.cdf(-STUDENT_CUTOFF)
    u = lo + stream.random(shape) * constants['mass']
    return law_t.ppf(u) * constants['scale']


@lru_cache(maxsize=None)
def lp_scale(n: int, p: float) -> float:
    """
    Factor that makes the uniform law on the l_p ball isotropic with E{y_i^2} = 1/n.

    With g_i of density proportional to exp(-|x|^p) and W ~ Exp(1), the point
    g / (sum|g_i|^p + W)^(1/p) is uniform on the ball and independent of the
    Gamma(n/p + 1) radius variable, so E{y_i^2} = E{g^2} / E{R^(2/p)}.
    """
    norm, _ = integrate.quad(lambda x: math.exp(-abs(x) ** p), -np.inf, np.inf)
    second, _ = integrate.quad(lambda x: x * x * math.exp(-abs(x) ** p), -np.inf, np.inf)
    g2 = second / norm
    log_radius_moment = special.gammaln(n / p + 1.0 + 2.0 / p) - special.gammaln(n / p + 1.0)
    ey2 = g2 * math.exp(-log_radius_moment)
    return math.sqrt(1.0 / (n * ey2))


def sample_vectors(model: VectorModel, n: int, size: int, stream: np.random.Generator) -> np.ndarray:
    """
    Draw `size` independent vectors of the model as rows of a size x n array
    """
    if n < 2:
        raise ValueError(f"dimension n must be at least 2, got {n}")

    shape = (size, n)

    if model.kind == 'iid':
        return _component_draws(model.law, shape, stream) / math.sqrt(n)

    if model.kind == 'sphere':
        g = stream.standard_normal(shape)
        return g / np.linalg.norm(g, axis=1, keepdims=True)

    if model.kind == 'ball':
        g = stream.standard_normal(shape)
        direction = g / np.linalg.norm(g, axis=1, keepdims=True)
        radius = stream.random((size, 1)) ** (1.0 / n)
        return direction * radius * math.sqrt((n + 2.0) / n)

    if model.kind == 'lp':
        p = model.p
        # |g|^p ~ Gamma(1/p), random sign
        magnitude = stream.gamma(1.0 / p, 1.0, size=shape) ** (1.0 / p)
        signs = stream.integers(0, 2, size=shape).astype(float) * 2.0 - 1.0
        g = magnitude * signs
        w = stream.exponential(1.0, size=(size, 1))
        radius = (np.sum(np.abs(g) ** p, axis=1, keepdims=True) + w) ** (1.0 / p)
        return g / radius * lp_scale(n, p)

    raise ValueError(f"Unknown vector model kind '{model.kind}'")


def sample_vector(model: VectorModel, n: int, stream: np.random.Generator) -> np.ndarray:
    """One draw of the model"""
    return sample_vectors(model, n, 1, stream)[0]


def tensor_product_rows(factors: np.ndarray) -> np.ndarray:
    """
    Row-wise Kronecker product of k factor arrays of shape (k, size, n).
    Component at multi-index (j_1, ..., j_k) sits at j_1 n^(k-1) + ... + j_k.
    """
    k, size, n = factors.shape
    product = factors[0]
    for i in range(1, k):
        product = (product[:, :, None] * factors[i][:, None, :]).reshape(size, -1)
    return product


def check_budget(n_floats: int, memory_budget: int, what: str):
    needed = n_floats * 8
    if needed > memory_budget:
        raise BudgetExceededError(
            f"{what} needs {needed / 2**20:.1f} MiB, above the memory budget of "
            f"{memory_budget / 2**20:.1f} MiB; use the matrix-free apply path or raise TENSORMP_MEMORY_BUDGET_MB"
        )


def tensor_samples(model: VectorModel, n: int, k: int, size: int, stream: np.random.Generator,
                   memory_budget: int = DEFAULT_MEMORY_BUDGET) -> np.ndarray:
    """
    `size` independent tensor products Y = y(1) x ... x y(k), as rows
    """
    if k < 1:
        raise ValueError(f"tensor order k must be at least 1, got {k}")
    check_budget(size * n ** k, memory_budget, f"{size} tensor samples of length {n}^{k}")

    factors = sample_vectors(model, n, k * size, stream).reshape(k, size, n)
    return tensor_product_rows(factors)


def tensor_sample(model: VectorModel, n: int, k: int, stream: np.random.Generator,
                  memory_budget: int = DEFAULT_MEMORY_BUDGET) -> np.ndarray:
    """One tensor sample of length n^k"""
    return tensor_samples(model, n, k, 1, stream, memory_budget)[0]
