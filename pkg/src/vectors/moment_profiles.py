import logging
from dataclasses import dataclass, field, asdict
from typing import Dict, Any, Optional

import numpy as np

from src.utils.exceptions import EmpiricalOnlyError
from src.utils.resampling import jackknife
from src.utils.rng import derive_stream
from .vector_models import VectorModel, sample_vectors, component_moments

logger = logging.getLogger(__name__)

MIN_EMPIRICAL_REPS = 10_000
PROBE_SEED = 20_170_101


@dataclass
class MomentProfile:
    """
    Fourth and sixth moment constants of a vector model at dimension n.
    a and b are the n-independent constants of
    a22 = n^-2 + a n^-3 + O(n^-4) and kappa4 = b n^-2 + O(n^-3).
    """
    model: str
    n: int
    a: float
    b: float
    a22: float
    kappa4: float
    a222: float
    a24: float
    a6: float
    deltan_estimate: float = 0.0
    source: str = 'analytic'
    standard_errors: Dict[str, float] = field(default_factory=dict)

    @property
    def abc(self) -> float:
        """The constant a + b + 2 that scales the limiting variance"""
        return self.a + self.b + 2.0

    def to_dict(self) -> Dict[str, Any]:
        payload = asdict(self)
        payload['a_plus_b_plus_2'] = self.abc
        return payload


def analytic_moment_profile(model: VectorModel, n: int) -> MomentProfile:
    """
    Exact finite-n moments where closed forms exist
    """
    if model.kind == 'iid':
        moments = component_moments(model.law)
        m4, m6 = moments['m4'], moments['m6']
        return MomentProfile(
            model=model.label, n=n,
            a=0.0, b=m4 - 3.0,
            a22=n ** -2.0,
            kappa4=(m4 - 3.0) / n ** 2,
            a222=n ** -3.0,
            a24=m4 / n ** 3,
            a6=m6 / n ** 3,
        )

    if model.kind == 'sphere':
        # Dirichlet moments of the squared coordinates
        d4 = n * (n + 2.0)
        d6 = d4 * (n + 4.0)
        return MomentProfile(
            model=model.label, n=n,
            a=-2.0, b=0.0,
            a22=1.0 / d4,
            kappa4=0.0,
            a222=1.0 / d6,
            a24=3.0 / d6,
            a6=15.0 / d6,
        )

    if model.kind == 'ball':
        # Sphere moments times the rescaled radial moments E{(s r)^4}, E{(s r)^6}
        s2 = (n + 2.0) / n
        r4 = s2 ** 2 * n / (n + 4.0)
        r6 = s2 ** 3 * n / (n + 6.0)
        d4 = n * (n + 2.0)
        d6 = d4 * (n + 4.0)
        return MomentProfile(
            model=model.label, n=n,
            a=-2.0, b=0.0,
            a22=r4 / d4,
            kappa4=0.0,
            a222=r6 / d6,
            a24=3.0 * r6 / d6,
            a6=15.0 * r6 / d6,
        )

    raise EmpiricalOnlyError(f"{model.label}: empirical only, no closed-form moment profile")


def probe_matrices(n: int) -> Dict[str, np.ndarray]:
    """
    Fixed probe set used for the delta_n diagnostic
    """
    rng = np.random.default_rng(PROBE_SEED + n)
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    q = q * np.sign(np.diag(r))

    shift = np.roll(np.eye(n), 1, axis=1)
    rank_one = np.zeros((n, n))
    rank_one[0, 0] = 1.0

    return {
        'identity': np.eye(n),
        'alternating': np.diag([(-1.0) ** i for i in range(n)]),
        'orthogonal': q,
        'rank_one': rank_one,
        'shift': (shift + shift.T) / 2.0,
    }


def _per_draw_statistics(y: np.ndarray) -> Dict[str, np.ndarray]:
    """
    Unbiased per-draw estimators that pool disjoint index pairs and triples,
    which is legitimate under permutation invariance
    """
    n = y.shape[1]
    y2 = y * y
    pairs = n // 2
    triples = n // 3
    first, second = y2[:, 0:2 * pairs:2], y2[:, 1:2 * pairs:2]
    return {
        'a22': np.mean(first * second, axis=1),
        'a4': np.mean(y2 * y2, axis=1),
        'a222': np.mean(y2[:, 0:3 * triples:3] * y2[:, 1:3 * triples:3] * y2[:, 2:3 * triples:3], axis=1),
        'a24': np.mean(first * second * second, axis=1),
        'a6': np.mean(y2 ** 3, axis=1),
    }


def empirical_moment_profile(model: VectorModel, n: int, reps: int, master_seed: int = 0,
                             chunk_size: int = 10_000, blocks: int = 100) -> MomentProfile:
    """
    Monte Carlo estimates of the defining expectations with jackknife errors
    """
    if reps < MIN_EMPIRICAL_REPS:
        raise ValueError(f"empirical moment profile needs at least {MIN_EMPIRICAL_REPS} reps, got {reps}")

    logger.info(f"Estimating moment profile of {model.label} at n={n} from {reps} draws")

    probes = probe_matrices(n)
    collected = {key: [] for key in ('a22', 'a4', 'a222', 'a24', 'a6')}
    probe_forms = {name: [] for name in probes}

    n_chunks = -(-reps // chunk_size)
    for chunk_index in range(n_chunks):
        size = min(chunk_size, reps - chunk_index * chunk_size)
        y = sample_vectors(model, n, size, derive_stream(master_seed, chunk_index))
        for key, values in _per_draw_statistics(y).items():
            collected[key].append(values)
        for name, h in probes.items():
            probe_forms[name].append(np.einsum('ij,jk,ik->i', y, h, y))

    draws = {key: np.concatenate(values) for key, values in collected.items()}
    stacked = np.column_stack([draws['a22'], draws['a4'], draws['a222'], draws['a24'], draws['a6']])

    estimators = {
        'a22': lambda s: s[:, 0].mean(),
        'kappa4': lambda s: s[:, 1].mean() - 3.0 * s[:, 0].mean(),
        'a222': lambda s: s[:, 2].mean(),
        'a24': lambda s: s[:, 3].mean(),
        'a6': lambda s: s[:, 4].mean(),
    }
    values, errors = {}, {}
    for key, estimator in estimators.items():
        values[key], errors[key] = jackknife(stacked, estimator, blocks=blocks)

    a = n ** 3 * (values['a22'] - n ** -2.0)
    b = n ** 2 * values['kappa4']
    errors['a'] = n ** 3 * errors['a22']
    errors['b'] = n ** 2 * errors['kappa4']

    deltan = 0.0
    for name, forms in probe_forms.items():
        norm = np.linalg.norm(probes[name], 2)
        deltan = max(deltan, n * float(np.var(np.concatenate(forms), ddof=1)) / norm ** 2)

    profile = MomentProfile(
        model=model.label, n=n,
        a=float(a), b=float(b),
        a22=float(values['a22']), kappa4=float(values['kappa4']),
        a222=float(values['a222']), a24=float(values['a24']), a6=float(values['a6']),
        deltan_estimate=deltan,
        source='empirical',
        standard_errors={key: float(v) for key, v in errors.items()},
    )
    logger.info(f"{model.label}: a={profile.a:.3f}±{errors['a']:.3f}, b={profile.b:.3f}±{errors['b']:.3f}")
    return profile


def moment_profile_or_none(model: VectorModel, n: int) -> Optional[MomentProfile]:
    """Analytic profile, or None for empirical-only models"""
    try:
        return analytic_moment_profile(model, n)
    except EmpiricalOnlyError:
        return None
