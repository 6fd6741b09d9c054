import logging
import math
from dataclasses import dataclass, replace
from typing import Optional, Tuple, Dict, Any, List, Callable

import numpy as np
from scipy import integrate

from src.utils.exceptions import NotInSobolevSpaceError, QuadratureError

logger = logging.getLogger(__name__)

FUNCTION_KINDS = ('gaussian-bump', 'poisson-smoothed-indicator', 'cauchy', 'monomial',
                  'indicator', 'constant', 'smoothed')
MAX_DEGREE = 2
SOBOLEV_CHECK_ORDER = 3.0
QUAD_TOLERANCE = 1e-10
FFT_POINTS = 2 ** 18
DECAY_THRESHOLD = 1e-6


@dataclass(frozen=True)
class TestFunction:
    """
    Real test function phi used in linear eigenvalue statistics.

    gaussian-bump(center, width):           exp(-(x - center)^2 / (2 width^2))
    cauchy(center, width):                  width^2 / ((x - center)^2 + width^2)
    indicator(lo, hi):                      1 on [lo, hi]
    poisson-smoothed-indicator(lo, hi, eta) Poisson kernel convolution of indicator(lo, hi)
    monomial(degree, lo, hi):               x^degree on [lo, hi], cosine taper to 0 over one unit outside
    constant(value)
    smoothed(base, eta):                    Poisson kernel convolution of another test function

    Every kind is multiplied by `amplitude`.
    """
    __test__ = False

    kind: str
    center: float = 0.0
    width: float = 1.0
    lo: float = 0.0
    hi: float = 1.0
    eta: float = 0.0
    degree: int = 1
    value: float = 1.0
    amplitude: float = 1.0
    base: Optional['TestFunction'] = None

    def __post_init__(self):
        if self.kind not in FUNCTION_KINDS:
            raise ValueError(f"Unknown test function kind '{self.kind}', valid kinds: {', '.join(FUNCTION_KINDS)}")
        if self.kind in ('gaussian-bump', 'cauchy') and not self.width > 0:
            raise ValueError(f"{self.kind} width must be positive, got {self.width}")
        if self.kind in ('indicator', 'poisson-smoothed-indicator', 'monomial') and not self.hi > self.lo:
            raise ValueError(f"{self.kind} needs lo < hi, got [{self.lo}, {self.hi}]")
        if self.kind in ('poisson-smoothed-indicator', 'smoothed') and not self.eta > 0:
            raise ValueError(f"{self.kind} needs eta > 0, got {self.eta}")
        if self.kind == 'monomial' and self.degree not in range(MAX_DEGREE + 1):
            raise ValueError(f"monomial degree must be 0, 1 or 2, got {self.degree}")
        if self.kind == 'smoothed' and self.base is None:
            raise ValueError("smoothed test function needs a base function")

    # Constructors

    @classmethod
    def gaussian_bump(cls, center: float = 0.0, width: float = 1.0, amplitude: float = 1.0) -> 'TestFunction':
        return cls('gaussian-bump', center=center, width=width, amplitude=amplitude)

    @classmethod
    def cauchy(cls, center: float = 0.0, scale: float = 1.0, amplitude: float = 1.0) -> 'TestFunction':
        return cls('cauchy', center=center, width=scale, amplitude=amplitude)

    @classmethod
    def indicator(cls, lo: float, hi: float, amplitude: float = 1.0) -> 'TestFunction':
        return cls('indicator', lo=lo, hi=hi, amplitude=amplitude)

    @classmethod
    def poisson_smoothed_indicator(cls, lo: float, hi: float, eta: float, amplitude: float = 1.0) -> 'TestFunction':
        return cls('poisson-smoothed-indicator', lo=lo, hi=hi, eta=eta, amplitude=amplitude)

    @classmethod
    def monomial(cls, degree: int, lo: float, hi: float, amplitude: float = 1.0) -> 'TestFunction':
        return cls('monomial', degree=degree, lo=lo, hi=hi, amplitude=amplitude)

    @classmethod
    def tapered_monomial(cls, degree: int, support: Tuple[float, float], amplitude: float = 1.0) -> 'TestFunction':
        """x^degree kept exact on [support - 1, support + 1]"""
        return cls.monomial(degree, support[0] - 1.0, support[1] + 1.0, amplitude)

    @classmethod
    def constant(cls, value: float = 1.0) -> 'TestFunction':
        return cls('constant', value=value)

    @classmethod
    def from_dict(cls, raw: Dict[str, Any]) -> 'TestFunction':
        raw = dict(raw)
        kind = raw.pop('kind', None)
        if kind is None:
            raise ValueError("test function needs a 'kind'")
        if 'scale' in raw:
            raw['width'] = raw.pop('scale')
        if kind == 'smoothed':
            raw['base'] = cls.from_dict(raw['base'])
        return cls(kind=kind, **raw)

    def to_dict(self) -> Dict[str, Any]:
        fields = {
            'gaussian-bump': ('center', 'width'),
            'cauchy': ('center', 'width'),
            'indicator': ('lo', 'hi'),
            'poisson-smoothed-indicator': ('lo', 'hi', 'eta'),
            'monomial': ('degree', 'lo', 'hi'),
            'constant': ('value',),
            'smoothed': ('eta',),
        }[self.kind]
        out = {'kind': self.kind, **{name: getattr(self, name) for name in fields}}
        if self.amplitude != 1.0:
            out['amplitude'] = self.amplitude
        if self.base is not None:
            out['base'] = self.base.to_dict()
        return out

    @property
    def label(self) -> str:
        parts = ','.join(f"{key}={value}" for key, value in self.to_dict().items() if key not in ('kind', 'base'))
        inner = f"[{self.base.label}]" if self.base is not None else ''
        return f"{self.kind}{inner}({parts})"

    # Evaluation

    def __call__(self, x):
        scalar = np.isscalar(x)
        x = np.asarray(x, dtype=float)
        out = self.amplitude * self._shape(np.atleast_1d(x)).reshape(x.shape)
        return float(out) if scalar else out

    def _shape(self, x: np.ndarray) -> np.ndarray:
        if self.kind == 'gaussian-bump':
            return np.exp(-0.5 * ((x - self.center) / self.width) ** 2)
        if self.kind == 'cauchy':
            return self.width ** 2 / ((x - self.center) ** 2 + self.width ** 2)
        if self.kind == 'indicator':
            return ((x >= self.lo) & (x <= self.hi)).astype(float)
        if self.kind == 'poisson-smoothed-indicator':
            return _smoothed_indicator(x, self.lo, self.hi, self.eta)
        if self.kind == 'monomial':
            taper = self.taper(x)
            out = np.zeros_like(x)
            inside = taper > 0
            out[inside] = x[inside] ** self.degree * taper[inside]
            return out
        if self.kind == 'constant':
            return np.full_like(x, self.value)
        return _evaluate_smoothed(self.base, self.eta, x)

    def taper(self, x: np.ndarray) -> np.ndarray:
        """1 on [lo, hi], raised cosine down to 0 over one unit on each side"""
        dist = np.maximum(self.lo - x, x - self.hi)
        out = np.where(dist <= 0, 1.0, 0.5 * (1.0 + np.cos(np.pi * np.clip(dist, 0.0, 1.0))))
        return np.where(dist >= 1.0, 0.0, out)

    # Metadata

    def breakpoints(self) -> List[float]:
        """Points where phi or one of its first derivatives jumps"""
        if self.kind == 'indicator':
            return [self.lo, self.hi]
        if self.kind == 'monomial':
            return [self.lo - 1.0, self.lo, self.hi, self.hi + 1.0]
        return []

    def support_hint(self) -> Optional[Tuple[float, float]]:
        """Interval outside which phi is negligible; None for heavy tails and constants"""
        if self.kind == 'gaussian-bump':
            return self.center - 8.0 * self.width, self.center + 8.0 * self.width
        if self.kind == 'indicator':
            return self.lo, self.hi
        if self.kind == 'monomial':
            return self.lo - 1.0, self.hi + 1.0
        if self.kind == 'smoothed' and self.base.kind == 'gaussian-bump':
            return self.base.support_hint()
        return None

    @property
    def sobolev_limit(self) -> float:
        """Supremum of the s with a finite H_s norm"""
        if self.kind in ('gaussian-bump', 'cauchy', 'poisson-smoothed-indicator'):
            return math.inf
        if self.kind == 'monomial':
            # Raised-cosine taper is C^1 with a jump in the second derivative
            return 2.5
        if self.kind == 'indicator':
            return 0.5
        if self.kind == 'smoothed':
            return math.inf if self.base.kind != 'constant' else -math.inf
        return -math.inf

    @property
    def sobolev_ok(self) -> bool:
        """Finite H_s norm for every s <= 3"""
        return self.amplitude == 0.0 or self.sobolev_limit > SOBOLEV_CHECK_ORDER

    def scaled(self, factor: float) -> 'TestFunction':
        return replace(self, amplitude=self.amplitude * factor)


def _smoothed_indicator(x: np.ndarray, lo: float, hi: float, eta: float) -> np.ndarray:
    return (np.arctan((hi - x) / eta) - np.arctan((lo - x) / eta)) / np.pi


def _evaluate_smoothed(phi: TestFunction, eta: float, x: np.ndarray) -> np.ndarray:
    """
    (1/pi) int phi(t) eta / ((x - t)^2 + eta^2) dt, written as
    (1/pi) int_{-pi/2}^{pi/2} phi(x + eta tan(theta)) dtheta
    """
    # Closed forms: constants are fixed points, Cauchy kernels compose
    if phi.kind == 'constant':
        return np.full_like(x, phi.amplitude * phi.value)
    if phi.kind == 'indicator':
        return phi.amplitude * _smoothed_indicator(x, phi.lo, phi.hi, eta)
    if phi.kind == 'cauchy':
        s = phi.width
        return phi.amplitude * s * (s + eta) / ((x - phi.center) ** 2 + (s + eta) ** 2)

    out = np.empty_like(x)
    for i, point in enumerate(x):
        breaks = [math.atan((b - point) / eta) for b in phi.breakpoints()]
        breaks = sorted(t for t in breaks if -math.pi / 2 < t < math.pi / 2)
        value, error = integrate.quad(lambda t: phi(point + eta * math.tan(t)), -math.pi / 2, math.pi / 2,
                                      points=breaks or None, limit=200,
                                      epsabs=QUAD_TOLERANCE, epsrel=QUAD_TOLERANCE)
        if error > 1e-6 * max(1.0, abs(value)):
            raise QuadratureError(f"Poisson smoothing did not converge at x={point}: error estimate {error:.2e}",
                                  residual=error)
        out[i] = value / np.pi
    return out


def poisson_smooth(phi: TestFunction, eta: float) -> TestFunction:
    """
    P_eta * phi as a new test function
    """
    if not eta > 0:
        raise ValueError(f"eta must be positive, got {eta}")
    if phi.kind == 'constant':
        return phi
    if phi.kind == 'indicator':
        return TestFunction.poisson_smoothed_indicator(phi.lo, phi.hi, eta, amplitude=phi.amplitude)
    if phi.kind == 'cauchy':
        s = phi.width
        return TestFunction.cauchy(phi.center, s + eta, amplitude=phi.amplitude * s / (s + eta))
    return TestFunction('smoothed', eta=eta, base=phi)


def _fourier_weight(phi: TestFunction) -> Optional[Callable]:
    """|phi_hat(t)|^2 for kinds with a closed-form transform"""
    amp2 = phi.amplitude ** 2
    if phi.kind == 'gaussian-bump':
        w = phi.width
        return lambda t: amp2 * 2.0 * np.pi * w ** 2 * np.exp(-(w * t) ** 2)
    if phi.kind == 'cauchy':
        s = phi.width
        return lambda t: amp2 * np.pi ** 2 * s ** 2 * np.exp(-2.0 * s * np.abs(t))
    if phi.kind == 'poisson-smoothed-indicator':
        length, eta = phi.hi - phi.lo, phi.eta
        return lambda t: amp2 * length ** 2 * np.sinc(t * length / (2.0 * np.pi)) ** 2 * np.exp(-2.0 * eta * np.abs(t))
    return None


def _fft_weight(phi: TestFunction) -> Tuple[np.ndarray, np.ndarray]:
    """
    |phi_hat|^2 on the nonnegative frequencies of a wide sampling grid
    """
    hint = phi.support_hint() or (-50.0, 50.0)
    mid, span = 0.5 * (hint[0] + hint[1]), max(hint[1] - hint[0], 1.0)
    half_width = 20.0 * span
    x = mid + np.linspace(-half_width, half_width, FFT_POINTS, endpoint=False)
    h = x[1] - x[0]
    samples = phi(x)

    peak = np.max(np.abs(samples))
    if peak > 0 and max(abs(samples[0]), abs(samples[-1])) > DECAY_THRESHOLD * peak:
        raise NotInSobolevSpaceError(f"{phi.label} is not in H_s: no decay at the edges of the sampling window")

    spectrum = np.fft.rfft(samples) * h
    t = 2.0 * np.pi * np.fft.rfftfreq(FFT_POINTS, d=h)
    return t, np.abs(spectrum) ** 2


def sobolev_norm(phi: TestFunction, s: float, method: str = 'auto') -> float:
    """
    ||phi||_s = (int (1 + |t|)^{2s} |phi_hat(t)|^2 dt)^{1/2}, phi_hat(t) = int e^{itx} phi(x) dx
    """
    if phi.amplitude == 0.0 or (phi.kind == 'constant' and phi.value == 0.0):
        return 0.0
    if s >= phi.sobolev_limit:
        raise NotInSobolevSpaceError(f"{phi.label} is not in H_s for s={s}")

    weight = _fourier_weight(phi) if method == 'auto' else None
    if weight is not None:
        # |phi_hat|^2 is even for real phi
        value, error = integrate.quad(lambda t: (1.0 + t) ** (2.0 * s) * weight(t), 0.0, np.inf,
                                      limit=400, epsabs=0.0, epsrel=1e-12)
        return math.sqrt(2.0 * value)

    t, power = _fft_weight(phi)
    value = integrate.simpson((1.0 + t) ** (2.0 * s) * power, x=t)
    return math.sqrt(2.0 * value)
