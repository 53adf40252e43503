"""Discount factors, fundamental values and bubble classification."""

import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .errors import HorizonExceeded, InvalidInput
from .primitives import CONSTANT, EXPLICIT, GEOMETRIC, SequenceSpec, sequence_eval

BUBBLY = "bubbly"
BUBBLELESS = "bubbleless"
UNDETERMINED = "undetermined"


def discount_factor(path, t, s):
    """Q_{t,t+s} = 1 / (R_{t+1} ... R_{t+s}); Q_{t,t} = 1."""
    if t < 0 or s < 0 or t + s > path.T:
        raise HorizonExceeded(f"Q_({t},{t + s}) needs horizon {t + s}, path has {path.T}")
    prod = 1.0
    for j in range(t + 1, t + s + 1):
        prod *= path.R[j]
    return 1.0 / prod


def discount_factors(path, t):
    """Vector of Q_{t,t+s} for s = 0..T-t, by cumulative product."""
    if not 0 <= t <= path.T:
        raise HorizonExceeded(f"t={t} outside horizon {path.T}")
    return np.concatenate(([1.0], 1.0 / np.cumprod(path.R[t + 1 :])))


def tail_growth(seq):
    """Asymptotic growth factor of a sequence, exact for every SequenceSpec."""
    if seq.kind == CONSTANT:
        return 1.0
    if seq.kind == GEOMETRIC:
        return seq.g
    return 1.0 if seq.tail == CONSTANT else seq._ratio()


def discounted_tail(seq, R, start):
    """Sum over s > start of seq(s) * R**(start - s) for a constant return R.

    Exact geometric closed form beyond the explicit prefix; inf when the
    series diverges.
    """
    g = tail_growth(seq)
    total = 0.0
    first = start + 1
    if seq.kind == EXPLICIT:
        n = len(seq.values)
        for s in range(first, n):
            total += seq.values[s] * R ** (start - s)
        first = max(first, n)
    lead = sequence_eval(seq, first)
    if lead == 0.0:
        return total
    if g >= R:
        return math.inf
    return total + lead * R ** (start - first) * R / (R - g)


@dataclass
class FundamentalValue:
    fv: float
    truncated: float
    exact_tail: Optional[float] = None
    tail_bound: Optional[float] = None

    @property
    def truncation_only(self):
        return self.exact_tail is None


def _constant_return(path, lo, hi):
    seg = path.R[lo : hi + 1]
    if len(seg) == 0 or not np.all(np.isfinite(seg)):
        return None
    r = seg[0]
    if np.all(np.abs(seg - r) <= 1e-15 * abs(r)):
        return float(r)
    return None


def fundamental_value(path, dividends, t, trunc, r_min=None):
    """Truncated fundamental value sum_{s=1}^{trunc} Q_{t,t+s} d_{t+s}.

    When the return is constant along the path and the dividends grow more
    slowly than it, the remainder is summed in closed form (``exact_tail``)
    on the assumption that the return stays at that level. Otherwise a
    declared lower bound ``r_min`` on future returns yields ``tail_bound``.
    """
    if trunc < 0 or t < 0 or t + trunc > path.T:
        raise HorizonExceeded(f"truncation {trunc} from t={t} exceeds horizon {path.T}")
    Q = discount_factors(path, t)[: trunc + 1]
    d = np.array([dividends(t + s) for s in range(1, trunc + 1)])
    truncated = float(np.dot(Q[1:], d)) if trunc else 0.0
    out = FundamentalValue(truncated, truncated)
    R = _constant_return(path, max(t + 1, 1), path.T)
    if R is not None:
        tail = Q[trunc] * discounted_tail(dividends, R, t + trunc)
        if math.isfinite(tail):
            out.exact_tail = tail
            out.fv = truncated + tail
            return out
    if r_min is not None:
        bound = Q[trunc] * discounted_tail(dividends, r_min, t + trunc)
        if math.isfinite(bound):
            out.tail_bound = bound
    return out


@dataclass
class MontrucchioResult:
    verdict: str
    partial_sums: List[float] = field(default_factory=list)
    ratio_estimate: Optional[float] = None


def _check_positive_spec(seq, what):
    if seq.kind == EXPLICIT:
        ok = all(v > 0.0 for v in seq.values) and (seq.tail == CONSTANT or seq._ratio() > 0.0)
    else:
        ok = seq.c > 0.0
    if not ok:
        raise InvalidInput(f"{what} must be strictly positive at every date")


def montrucchio_classify(dividends, prices, n_partial=50):
    """Bubble iff sum_t d_t / q_t converges (strictly positive dividends).

    Two SequenceSpecs are decided exactly by comparing their asymptotic growth
    factors. A numeric price path only yields partial sums and an estimated
    ratio of successive terms, with verdict ``undetermined``.
    """
    _check_positive_spec(dividends, "dividends")
    if isinstance(prices, SequenceSpec):
        _check_positive_spec(prices, "prices")
        terms = [dividends(t) / prices(t) for t in range(1, n_partial + 1)]
        gd, gq = tail_growth(dividends), tail_growth(prices)
        verdict = BUBBLY if gd < gq else BUBBLELESS
        return MontrucchioResult(verdict, list(np.cumsum(terms)), gd / gq)
    q = np.asarray(getattr(prices, "q", prices), dtype=float)
    if len(q) < 2:
        raise InvalidInput("need at least two prices")
    if np.any(q[1:] <= 0.0):
        raise InvalidInput("prices must be strictly positive")
    d = np.array([dividends(t) for t in range(1, len(q))])
    terms = d / q[1:]
    half = terms[len(terms) // 2 :]
    ratio = None
    if len(half) >= 2:
        slope = np.polyfit(np.arange(len(half)), np.log(half), 1)[0]
        ratio = float(np.exp(slope))
    return MontrucchioResult(UNDETERMINED, list(np.cumsum(terms)), ratio)


@dataclass
class BubbleReport:
    fv_truncated: np.ndarray
    fv: np.ndarray
    bubble_component: np.ndarray
    fiat_component: np.ndarray
    recursion_residual: float
    sign_constant: bool
    montrucchio: str
    montrucchio_partial_sums: List[float]
    pure_bubble: bool
    tail: str


def bubble_component_path(path, dividends=None, price_spec=None, tol=1e-10):
    """Split every price into fundamental value and bubble.

    FV_t uses one common truncation at T (plus the exact constant-return tail
    when available), so the bubble obeys b_{t+1} = R_{t+1} b_t exactly.
    The fiat asset pays nothing, so its whole price is a bubble.
    """
    if dividends is None:
        dividends = path.params.dividends
    T = path.T
    q, p, R = path.q, path.p, path.R
    d = np.array([dividends(t) for t in range(T + 1)])
    trunc = np.zeros(T + 1)
    for t in range(T - 1, -1, -1):
        trunc[t] = (trunc[t + 1] + d[t + 1]) / R[t + 1]
    fv = trunc
    tail = "truncation_only"
    Rc = _constant_return(path, 1, T) if T >= 1 else None
    if Rc is not None:
        last = discounted_tail(dividends, Rc, T)
        if math.isfinite(last):
            fv = np.empty(T + 1)
            fv[T] = last
            for t in range(T - 1, -1, -1):
                fv[t] = (fv[t + 1] + d[t + 1]) / R[t + 1]
            tail = "exact"
    bubble = q - fv
    resid = 0.0
    for t in range(T):
        resid = max(
            resid,
            abs(bubble[t + 1] - R[t + 1] * bubble[t]) / max(1.0, abs(bubble[t + 1])),
            abs(p[t + 1] - R[t + 1] * p[t]) / max(1.0, p[t + 1]),
        )
    scale = tol * max(1.0, float(np.max(np.abs(q))))
    signs = {int(np.sign(b)) if abs(b) > scale else 0 for b in bubble}
    sign_constant = len(signs - {0}) <= 1
    verdict, partial = UNDETERMINED, []
    try:
        res = montrucchio_classify(dividends, price_spec if price_spec is not None else path)
        verdict, partial = res.verdict, res.partial_sums
    except InvalidInput:
        pass
    pure = bool(dividends.is_zero and np.all(p > 0.0))
    return BubbleReport(trunc, fv, bubble, p.copy(), resid, sign_constant, verdict, partial, pure, tail)
