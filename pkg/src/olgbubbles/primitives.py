"""Utility, technology and exogenous sequences.

Everything here is a closed-form evaluation over frozen dataclasses, so the
objects can be shared freely between worker processes.
"""

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Tuple

from .errors import NonPositiveCapital, NonPositiveConsumption, RegimeMismatch

LOG = "logarithmic"
ISOELASTIC = "isoelastic"
COBB_DOUGLAS = "cobb_douglas"
LINEAR = "linear"


@dataclass(frozen=True)
class Utility:
    family: str = LOG
    beta: float = 0.9
    sigma: Optional[float] = None

    def __post_init__(self):
        if self.family not in (LOG, ISOELASTIC):
            raise ValueError(f"unknown utility family {self.family!r}")
        if not 0.0 < self.beta < 1.0:
            raise ValueError("beta must lie in (0, 1)")
        if self.family == ISOELASTIC:
            if self.sigma is None or self.sigma <= 0.0:
                raise ValueError("isoelastic utility needs sigma > 0")
            if self.sigma == 1.0:
                raise ValueError("sigma = 1 is the logarithmic family")

    @classmethod
    def log(cls, beta):
        return cls(LOG, beta)

    @classmethod
    def crra(cls, sigma, beta):
        return cls(ISOELASTIC, beta, sigma)

    @property
    def curvature(self):
        return 1.0 if self.family == LOG else self.sigma

    def level(self, c):
        if c <= 0.0:
            raise NonPositiveConsumption(f"consumption {c!r} must be positive")
        if self.family == LOG:
            return math.log(c)
        return c ** (1.0 - self.sigma) / (1.0 - self.sigma)

    def marginal(self, c):
        return utility_marginal(self, c)


def utility_marginal(u, c):
    """u'(c): 1/c for log utility, c**-sigma for isoelastic."""
    if not c > 0.0:
        raise NonPositiveConsumption(f"consumption {c!r} must be positive")
    if u.family == LOG:
        return 1.0 / c
    return c ** (-u.sigma)


@dataclass(frozen=True)
class Technology:
    family: str = COBB_DOUGLAS
    A: float = 1.0
    alpha: Optional[float] = None
    B: Optional[float] = None
    delta: float = 1.0

    def __post_init__(self):
        if self.A <= 0.0:
            raise ValueError("A must be positive")
        if not 0.0 <= self.delta <= 1.0:
            raise ValueError("delta must lie in [0, 1]")
        if self.family == COBB_DOUGLAS:
            if self.alpha is None or not 0.0 < self.alpha < 1.0:
                raise ValueError("Cobb-Douglas needs alpha in (0, 1)")
        elif self.family == LINEAR:
            if self.B is None or self.B <= 0.0:
                raise ValueError("linear technology needs B > 0")
        else:
            raise ValueError(f"unknown technology family {self.family!r}")

    @classmethod
    def cobb_douglas(cls, A, alpha, delta=1.0):
        return cls(COBB_DOUGLAS, A=A, alpha=alpha, delta=delta)

    @classmethod
    def linear(cls, A, B, delta):
        return cls(LINEAR, A=A, B=B, delta=delta)

    def f(self, k):
        if self.family == COBB_DOUGLAS:
            return self.A * k**self.alpha
        return self.A * k + self.B

    def f_prime(self, k):
        if self.family == COBB_DOUGLAS:
            return self.alpha * self.A * k ** (self.alpha - 1.0)
        return self.A

    def wage(self, k):
        if self.family == COBB_DOUGLAS:
            return (1.0 - self.alpha) * self.A * k**self.alpha
        return self.B

    def gross_return(self, k):
        return 1.0 - self.delta + self.f_prime(k)


class TechValues(NamedTuple):
    f: float
    f_prime: float
    wage: float
    gross_return: float


def technology_eval(tech, k):
    """Output, marginal product, wage and gross return at capital ``k``.

    The Cobb-Douglas wage uses the closed form (1-alpha) A k^alpha, which is
    algebraically equal to f - k f' but avoids the cancellation.
    """
    if not k > 0.0:
        raise NonPositiveCapital(f"capital {k!r} must be positive")
    fp = tech.f_prime(k)
    return TechValues(tech.f(k), fp, tech.wage(k), 1.0 - tech.delta + fp)


CONSTANT = "constant"
GEOMETRIC = "geometric"
EXPLICIT = "explicit"


@dataclass(frozen=True)
class SequenceSpec:
    """A nonnegative sequence indexed by t >= 0.

    ``constant`` is c, ``geometric`` is c * g**t, ``explicit`` lists the first
    values and continues with ``tail`` ("constant" repeats the last value,
    "geometric" multiplies by ``tail_ratio``, defaulting to the ratio of the
    last two listed values).
    """

    kind: str = CONSTANT
    c: float = 0.0
    g: float = 1.0
    values: Tuple[float, ...] = field(default=())
    tail: str = CONSTANT
    tail_ratio: Optional[float] = None

    def __post_init__(self):
        if self.kind not in (CONSTANT, GEOMETRIC, EXPLICIT):
            raise ValueError(f"unknown sequence kind {self.kind!r}")
        if self.kind == EXPLICIT:
            object.__setattr__(self, "values", tuple(float(v) for v in self.values))
            if not self.values:
                raise ValueError("explicit sequences need at least one value")
            if any(v < 0.0 or not math.isfinite(v) for v in self.values):
                raise ValueError("sequence values must be finite and nonnegative")
            if self.tail not in (CONSTANT, GEOMETRIC):
                raise ValueError(f"unknown tail rule {self.tail!r}")
            if self.tail == GEOMETRIC and self._ratio() < 0.0:
                raise ValueError("geometric tail ratio must be nonnegative")
        else:
            if self.c < 0.0 or not math.isfinite(self.c):
                raise ValueError("sequence level must be finite and nonnegative")
            if self.kind == GEOMETRIC and not self.g > 0.0:
                raise ValueError("geometric ratio must be positive")

    @classmethod
    def constant(cls, c):
        return cls(CONSTANT, c=float(c))

    @classmethod
    def geometric(cls, c, g):
        return cls(GEOMETRIC, c=float(c), g=float(g))

    @classmethod
    def explicit(cls, values, tail=CONSTANT, tail_ratio=None):
        return cls(EXPLICIT, values=tuple(values), tail=tail, tail_ratio=tail_ratio)

    def _ratio(self):
        if self.tail_ratio is not None:
            return self.tail_ratio
        v = self.values
        if len(v) < 2 or v[-2] == 0.0:
            return 1.0
        return v[-1] / v[-2]

    def __call__(self, t):
        return sequence_eval(self, t)

    def array(self, n, start=0):
        return [sequence_eval(self, t) for t in range(start, start + n)]

    @property
    def is_parametric(self):
        return self.kind in (CONSTANT, GEOMETRIC)

    @property
    def ratio(self):
        """Growth factor of a parametric sequence (1 for constants)."""
        if self.kind == GEOMETRIC:
            return self.g
        if self.kind == CONSTANT:
            return 1.0
        raise ValueError("explicit sequences have no exact growth factor")

    @property
    def is_zero(self):
        if self.kind == EXPLICIT:
            return all(v == 0.0 for v in self.values) and (
                self.tail == CONSTANT or self.values[-1] == 0.0
            )
        return self.c == 0.0

    def scaled(self, factor):
        if self.kind == EXPLICIT:
            return SequenceSpec.explicit(
                [factor * v for v in self.values], self.tail, self.tail_ratio
            )
        return SequenceSpec(self.kind, c=factor * self.c, g=self.g)


def sequence_eval(s, t):
    if t < 0:
        raise ValueError("sequences are indexed from t = 0")
    if s.kind == CONSTANT:
        return s.c
    if s.kind == GEOMETRIC:
        return s.c * s.g**t
    n = len(s.values)
    if t < n:
        return s.values[t]
    last = s.values[-1]
    if s.tail == CONSTANT:
        return last
    return last * s._ratio() ** (t - n + 1)


ZERO = SequenceSpec.constant(0.0)


@dataclass(frozen=True)
class EconomyParams:
    utility: Utility
    technology: Optional[Technology] = None
    dividends: SequenceSpec = ZERO
    endow_young: SequenceSpec = ZERO
    endow_old: SequenceSpec = ZERO
    K0: float = 0.0
    a_init: float = 1.0
    b_init: float = 1.0

    def __post_init__(self):
        if self.K0 < 0.0:
            raise ValueError("K0 must be nonnegative")
        if self.K0 == 0.0 and self.endow_young(0) == 0.0:
            raise ValueError("(K0, e^y_0) must not both be zero")
        if self.a_init != 1.0 or self.b_init != 1.0:
            raise ValueError("asset supplies are fixed at one unit")

    @property
    def is_exchange(self):
        return self.technology is None

    @property
    def beta(self):
        return self.utility.beta


class SteadyState(NamedTuple):
    gamma: float
    rho: float
    K_star: float
    low_interest: bool


def steady_state_and_gamma(params):
    """Bubbleless steady state of the log / Cobb-Douglas / full-depreciation economy.

    gamma = beta/(1+beta) * (1-alpha)/alpha equals 1/f'(K*), so the low
    interest rate regime (f'(K*) < 1) is gamma > 1.
    """
    tech = params.technology
    if (
        params.utility.family != LOG
        or tech is None
        or tech.family != COBB_DOUGLAS
        or tech.delta != 1.0
        or not params.endow_young.is_zero
        or not params.endow_old.is_zero
    ):
        raise RegimeMismatch(
            "needs log utility, Cobb-Douglas technology, delta = 1 and no endowments"
        )
    beta, alpha = params.utility.beta, tech.alpha
    gamma = beta / (1.0 + beta) * (1.0 - alpha) / alpha
    rho = gamma * alpha * tech.A
    return SteadyState(gamma, rho, rho ** (1.0 / (1.0 - alpha)), gamma > 1.0)
