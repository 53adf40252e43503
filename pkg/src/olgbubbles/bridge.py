"""Two-cycle equilibria with two infinitely-lived agents.

Agent 1 (index 0) works and saves in even periods and dissaves in odd ones;
agent 2 (index 1) does the opposite and starts out owning the initial capital
and both assets. An OLG path maps into such an allocation period by period,
and the allocation projects back onto the OLG path.

A mapped allocation is a genuine equilibrium of the infinite-horizon economy
only if, on top of the OLG conditions, the non-saving agent does not want to
save (an inequality on marginal rates of substitution) and both agents'
transversality conditions hold.
"""

import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .errors import NonPositiveConsumption, PatternViolation
from .primitives import utility_marginal
from .simulator import EquilibriumPath

VERIFIED = "verified"
FAILED = "failed"
INCONCLUSIVE_TVC = "inconclusive_tvc"

TVC_NOTE = (
    "transversality terms include fiat holdings p_t inside both the marginal "
    "utility and the wealth factor"
)


@dataclass(frozen=True)
class Verdict:
    status: str
    reason: Optional[str] = None
    t: Optional[int] = None

    def __str__(self):
        if self.status == FAILED:
            return f"failed({self.reason}, t={self.t})"
        return self.status

    @property
    def ok(self):
        return self.status == VERIFIED


@dataclass
class CyclePrices:
    """Prices faced by both agents; ``K`` is the firm's capital demand."""

    q: np.ndarray
    p: np.ndarray
    R: np.ndarray
    r: np.ndarray
    w: np.ndarray
    K: Optional[np.ndarray] = None


def prices_from_path(path):
    tech = path.params.technology
    if tech is None:
        zeros = np.zeros(path.T + 1)
        return CyclePrices(path.q, path.p, path.R, zeros, zeros.copy(), None)
    r = np.array([tech.f_prime(k) for k in path.K[: path.T + 1]])
    return CyclePrices(path.q, path.p, path.R, r, path.w, path.K)


@dataclass
class TwoCycleAllocation:
    """Holdings and consumption of both agents over t = 0..T.

    ``k[i, t]`` is agent i's capital in use at t (t = 0..T+1); ``a``, ``b``,
    ``L`` are the tree, fiat and labour choices at t; ``e`` holds the
    relabelled endowments so that every check reads one source.
    """

    params: object
    c: np.ndarray
    k: np.ndarray
    a: np.ndarray
    b: np.ndarray
    L: np.ndarray
    e: np.ndarray
    a_init: np.ndarray = field(default_factory=lambda: np.array([0.0, 1.0]))
    b_init: np.ndarray = field(default_factory=lambda: np.array([0.0, 1.0]))

    @property
    def T(self):
        return self.c.shape[1] - 1

    def copy(self):
        return TwoCycleAllocation(
            self.params, self.c.copy(), self.k.copy(), self.a.copy(), self.b.copy(),
            self.L.copy(), self.e.copy(), self.a_init.copy(), self.b_init.copy(),
        )


def young_agent(t):
    return t % 2


def map_olg_to_two_cycle(params, path):
    """Build the two-agent allocation that replays an OLG path."""
    T = path.T
    ey, eo = path.endowments()
    d = path.dividends()
    q, p, R, w = path.q, path.p, path.R, path.w
    production = path.K is not None
    K = path.K if production else np.zeros(T + 2)
    c = np.empty((2, T + 1))
    k = np.zeros((2, T + 2))
    a = np.zeros((2, T + 1))
    b = np.zeros((2, T + 1))
    L = np.zeros((2, T + 1))
    e = np.empty((2, T + 1))
    k[1, 0] = K[0]
    young_c = ey + w - K[1:] - q - p if production else ey - q - p
    old_c = eo + R * K[: T + 1] + q + d + p if production else eo + q + d + p
    for t in range(T + 1):
        y, o = young_agent(t), 1 - young_agent(t)
        c[y, t], c[o, t] = young_c[t], old_c[t]
        e[y, t], e[o, t] = ey[t], eo[t]
        k[y, t + 1] = K[t + 1]
        a[y, t] = b[y, t] = L[y, t] = 1.0
    bad = np.argwhere(~(c > 0.0))
    if len(bad):
        i, t = bad[0]
        raise NonPositiveConsumption(
            f"agent {i + 1} consumes {c[i, t]!r} at t={t}; the path is not bridgeable"
        )
    return TwoCycleAllocation(params, c, k, a, b, L, e)


def check_pattern(alloc):
    """Raise PatternViolation at the first period breaking the alternation."""
    if alloc.a_init[0] != 0.0 or alloc.b_init[0] != 0.0 or alloc.k[0, 0] != 0.0:
        raise PatternViolation("agent 1 must start without capital or assets", t=0)
    if alloc.a_init[1] != 1.0 or alloc.b_init[1] != 1.0:
        raise PatternViolation("agent 2 must start with both assets", t=0)
    for t in range(alloc.T + 1):
        y, o = young_agent(t), 1 - young_agent(t)
        if not (alloc.a[y, t] == alloc.b[y, t] == alloc.L[y, t] == 1.0):
            raise PatternViolation(f"agent {y + 1} must hold both assets and work", t=t)
        if not (alloc.a[o, t] == alloc.b[o, t] == alloc.L[o, t] == 0.0):
            raise PatternViolation(f"agent {o + 1} must hold nothing and not work", t=t)
        if alloc.k[o, t + 1] != 0.0 or alloc.k[y, t + 1] < 0.0:
            raise PatternViolation("only the working agent accumulates capital", t=t)


def project_two_cycle_to_olg(alloc, prices):
    """Read the OLG path off a two-cycle allocation."""
    check_pattern(alloc)
    T = alloc.T
    idx = np.arange(T + 1)
    y, o = idx % 2, 1 - idx % 2
    K = None if prices.K is None else alloc.k[0] + alloc.k[1]
    return EquilibriumPath(
        alloc.params,
        np.array(prices.q, dtype=float),
        np.array(prices.p, dtype=float),
        np.array(prices.R, dtype=float),
        np.array(prices.w, dtype=float),
        alloc.c[y, idx].copy(),
        alloc.c[o, idx].copy(),
        K,
    )


@dataclass
class TVCFit:
    t: np.ndarray
    log_terms: np.ndarray
    slope: float
    initial: float
    final: float
    certified: bool

    @property
    def terms(self):
        return np.exp(self.log_terms)


def certify_decay(t, log_terms, horizon, min_slope=-1e-3, rel_final=1e-8):
    """Finite-horizon stand-in for a zero limit.

    Fit log(term) against t over the last third of the horizon; decay is
    certified when the slope is at most ``min_slope`` and the final term is
    below ``rel_final * (initial term + 1)``. Identically zero tails certify.
    """
    t = np.asarray(t, dtype=float)
    log_terms = np.asarray(log_terms, dtype=float)
    initial = float(np.exp(log_terms[0])) if len(log_terms) else 0.0
    final = float(np.exp(log_terms[-1])) if len(log_terms) else 0.0
    window = t >= 2.0 * horizon / 3.0
    lt = log_terms[window]
    finite = np.isfinite(lt)
    if not np.any(finite):
        return TVCFit(t, log_terms, -math.inf, initial, final, bool(len(lt)))
    if finite.sum() < 2:
        return TVCFit(t, log_terms, math.nan, initial, final, False)
    slope = float(np.polyfit(t[window][finite], lt[finite], 1)[0])
    ok = slope <= min_slope and final < rel_final * (initial + 1.0)
    return TVCFit(t, log_terms, slope, initial, final, bool(ok))


def _log_tvc_terms(beta, u, cons, wealth, ts):
    out = np.empty(len(ts))
    for j, t in enumerate(ts):
        if wealth[j] == 0.0:
            out[j] = -math.inf
        else:
            out[j] = t * math.log(beta) + math.log(utility_marginal(u, cons[j])) + math.log(wealth[j])
    return out


@dataclass
class SideConditions:
    foc_slacks: np.ndarray
    foc_scale: np.ndarray
    tvc_even: TVCFit
    tvc_odd: TVCFit
    verdict: Verdict

    @property
    def relative_slacks(self):
        return self.foc_slacks / self.foc_scale

    @property
    def tvc_even_tail(self):
        return self.tvc_even.terms

    @property
    def tvc_odd_tail(self):
        return self.tvc_odd.terms


def check_side_conditions(params, path, T=None, tol=1e-10):
    """The extra conditions making an OLG path a two-cycle equilibrium.

    slack_t = u'(c_old_t) - beta R_{t+1} u'(c_young_{t+1}) must be nonnegative
    (up to ``tol`` times the larger of the two terms), and the discounted
    value of the young's portfolio beta^t u'(c_young_t)(K_{t+1}+q_t+p_t)
    must vanish along even and odd dates.
    """
    if T is None:
        T = path.T
    if T > path.T:
        raise ValueError(f"path horizon {path.T} is shorter than {T}")
    u = params.utility
    beta = u.beta
    slacks = np.empty(T)
    scale = np.empty(T)
    for t in range(T):
        lhs = utility_marginal(u, path.c_old[t])
        rhs = beta * path.R[t + 1] * utility_marginal(u, path.c_young[t + 1])
        slacks[t] = lhs - rhs
        scale[t] = max(lhs, rhs)
    ts = np.arange(T + 1)
    wealth = path.savings()[: T + 1]
    logs = _log_tvc_terms(beta, u, path.c_young[: T + 1], wealth, ts)
    even = certify_decay(ts[0::2], logs[0::2], T)
    odd = certify_decay(ts[1::2], logs[1::2], T)
    bad = np.nonzero(slacks < -tol * scale)[0]
    if len(bad):
        verdict = Verdict(FAILED, "foc_inequality", int(bad[0]))
    elif not (even.certified and odd.certified):
        verdict = Verdict(INCONCLUSIVE_TVC)
    else:
        verdict = Verdict(VERIFIED)
    return SideConditions(slacks, scale, even, odd, verdict)


@dataclass
class VerificationReport:
    euler_equalities: float
    foc_inequalities: float
    tvc_even: TVCFit
    tvc_odd: TVCFit
    budget_residuals: float
    clearing_residuals: float
    profit_residual: float
    pricing_residual: float
    cs_violation: float
    multipliers: dict
    verdict: Verdict
    notes: List[str] = field(default_factory=list)


def _first_over(arr, limit):
    """(max |value|, first column index exceeding ``limit``) over a 1- or 2-D array."""
    arr = np.atleast_2d(np.abs(arr))
    if arr.size == 0:
        return 0.0, None
    clean = np.where(np.isnan(arr), 0.0, arr)
    over = np.nonzero((clean > limit).any(axis=0))[0]
    return float(clean.max()), (int(over[0]) if len(over) else None)


def verify_two_cycle_full(params, alloc, prices, tol=1e-10, cs_tol=1e-12):
    """Every equilibrium condition of the two-agent economy on a finite horizon.

    Equalities are checked to ``tol`` (relative where magnitudes exceed one),
    inequality slacks must be >= -tol, complementary slackness to ``cs_tol``.
    Multipliers on the capital, tree and fiat nonnegativity constraints are
    recovered from the first-order conditions; the fiat multiplier is reported
    per unit of fiat price. Transversality is certified by ``certify_decay``.
    """
    u = params.utility
    beta = u.beta
    tech = params.technology
    T = alloc.T
    q, p, R, r, w = prices.q, prices.p, prices.R, prices.r, prices.w
    d = np.array(params.dividends.array(T + 1))
    delta = tech.delta if tech is not None else 0.0
    failures = []
    notes = [TVC_NOTE]

    try:
        check_pattern(alloc)
    except PatternViolation as exc:
        failures.append(("pattern", exc.t))

    K = prices.K if prices.K is not None else np.zeros(T + 2)
    clearing = np.vstack([
        (alloc.k[0] + alloc.k[1] - K)[: T + 1] / np.maximum(1.0, K[: T + 1]),
        alloc.a[0] + alloc.a[1] - 1.0,
        alloc.b[0] + alloc.b[1] - 1.0,
        alloc.L[0] + alloc.L[1] - 1.0,
    ])
    clearing_max, t_bad = _first_over(clearing, tol)
    if t_bad is not None:
        failures.append(("market_clearing", t_bad))

    profit_max = 0.0
    if tech is not None:
        prof = np.empty((3, T + 1))
        for t in range(T + 1):
            f = tech.f(K[t])
            prof[0, t] = (f - r[t] * K[t] - w[t]) / max(1.0, f)
            prof[1, t] = r[t] - tech.f_prime(K[t])
            prof[2, t] = R[t] - (1.0 - delta + r[t])
        profit_max, t_bad = _first_over(prof, tol)
        if t_bad is not None:
            failures.append(("profit_maximization", t_bad))

    budget = np.empty((2, T + 1))
    for i in range(2):
        for t in range(T + 1):
            a_prev = alloc.a_init[i] if t == 0 else alloc.a[i, t - 1]
            b_prev = alloc.b_init[i] if t == 0 else alloc.b[i, t - 1]
            out = (alloc.c[i, t] + alloc.k[i, t + 1] - (1.0 - delta) * alloc.k[i, t]
                   + q[t] * alloc.a[i, t] + p[t] * alloc.b[i, t])
            inc = (r[t] * alloc.k[i, t] + (q[t] + d[t]) * a_prev + p[t] * b_prev
                   + w[t] * alloc.L[i, t] + alloc.e[i, t])
            budget[i, t] = (out - inc) / max(1.0, abs(inc))
    budget_max, t_bad = _first_over(budget, tol)
    if t_bad is not None:
        failures.append(("budget", t_bad))

    pricing = np.zeros((2, max(T, 0)))
    for t in range(T):
        pricing[0, t] = (q[t] * R[t + 1] - q[t + 1] - d[t + 1]) / max(1.0, q[t + 1] + d[t + 1])
        pricing[1, t] = (p[t] * R[t + 1] - p[t + 1]) / max(1.0, p[t + 1])
    pricing_max, t_bad = _first_over(pricing, tol)
    if t_bad is not None:
        failures.append(("pricing", t_bad))

    # multipliers from the first-order conditions
    mrs = np.empty((2, T))
    for i in range(2):
        for t in range(T):
            mrs[i, t] = beta * utility_marginal(u, alloc.c[i, t + 1]) / utility_marginal(u, alloc.c[i, t])
    psi = 1.0 / R[1 : T + 1] - mrs
    sigma = psi if tech is not None else np.full((2, T), math.nan)
    mu = np.full((2, T), math.nan)
    nu = np.full((2, T), math.nan)
    for t in range(T):
        if q[t + 1] + d[t + 1] > 0.0:
            mu[:, t] = q[t] / (q[t + 1] + d[t + 1]) - mrs[:, t]
        if p[t] > 0.0:
            nu[:, t] = 1.0 - mrs[:, t] * p[t + 1] / p[t]
        else:
            nu[:, t] = p[t] - mrs[:, t] * p[t + 1]
    holder = np.array([[young_agent(t) == i for t in range(T)] for i in range(2)])
    rel = psi * R[1 : T + 1]
    euler_max, t_bad = _first_over(np.where(holder, rel, 0.0), tol)
    if t_bad is not None:
        failures.append(("euler_equality", t_bad))
    nonholder = np.where(holder, math.inf, rel)
    foc_min = float(nonholder.min()) if T else math.inf
    if T and foc_min < -tol:
        t_bad = int(np.nonzero((nonholder < -tol).any(axis=0))[0][0])
        failures.append(("foc_inequality", t_bad))

    cs = 0.0
    for mult, hold in (
        (sigma, alloc.k[:, 1 : T + 1]),
        (mu, alloc.a[:, :T]),
        (nu, alloc.b[:, :T]),
    ):
        with np.errstate(invalid="ignore"):
            v = np.abs(np.minimum(mult, hold))
        v = v[~np.isnan(v)]
        if v.size:
            cs = max(cs, float(v.max()))
    if cs > cs_tol:
        failures.append(("complementary_slackness", None))

    logs = np.empty((2, T + 1))
    for i in range(2):
        for t in range(T + 1):
            wealth = alloc.k[i, t + 1] + q[t] * alloc.a[i, t] + p[t] * alloc.b[i, t]
            if wealth == 0.0:
                logs[i, t] = -math.inf
            else:
                logs[i, t] = (t * math.log(beta) + math.log(utility_marginal(u, alloc.c[i, t]))
                              + math.log(wealth))
    ts = np.arange(T + 1)
    tvc_even = certify_decay(ts[0::2], logs[0, 0::2], T)
    tvc_odd = certify_decay(ts[1::2], logs[1, 1::2], T)
    silent = np.isfinite(logs[1, 0::2]).any() or np.isfinite(logs[0, 1::2]).any()
    if silent:
        notes.append("an agent holds wealth in a period where the pattern forbids it")

    if failures:
        reason, t_fail = failures[0]
        verdict = Verdict(FAILED, reason, t_fail)
    elif not (tvc_even.certified and tvc_odd.certified):
        verdict = Verdict(INCONCLUSIVE_TVC)
    else:
        verdict = Verdict(VERIFIED)
    return VerificationReport(
        euler_equalities=euler_max,
        foc_inequalities=foc_min,
        tvc_even=tvc_even,
        tvc_odd=tvc_odd,
        budget_residuals=budget_max,
        clearing_residuals=clearing_max,
        profit_residual=profit_max,
        pricing_residual=pricing_max,
        cs_violation=cs,
        multipliers={"sigma": sigma, "mu": mu, "nu": nu, "return_gap": rel},
        verdict=verdict,
        notes=notes,
    )


def verify_path(params, path, tol=1e-10):
    """Map an OLG path to the two-agent economy and run the full battery."""
    alloc = map_olg_to_two_cycle(params, path)
    return verify_two_cycle_full(params, alloc, prices_from_path(path), tol)
