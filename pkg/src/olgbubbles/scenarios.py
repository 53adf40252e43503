"""Worked economies with closed-form or semi-closed-form equilibria.

Each builder returns paths in the same representation as the general
simulator so the two can be checked against each other.
"""

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .bubbles import discounted_tail, tail_growth
from .errors import NonEquilibriumPath, RegimeMismatch
from .primitives import (
    LOG,
    ZERO,
    EconomyParams,
    SequenceSpec,
    Technology,
    Utility,
    steady_state_and_gamma,
    utility_marginal,
)
from .rootfind import bisect
from .simulator import build_path

BUBBLELESS_KSTAR = "bubbleless_converging_Kstar"
BUBBLY_ASYMPTOTIC = "bubbly_asymptotic"
BUBBLY_VANISHING = "bubbly_vanishing"
NON_EQUILIBRIUM = "non_equilibrium"
CLASSIFICATIONS = (BUBBLELESS_KSTAR, BUBBLY_VANISHING, BUBBLY_ASYMPTOTIC, NON_EQUILIBRIUM)

CRITICAL_SNAP = 1e-12


@dataclass
class ScenarioResult:
    path: Optional[object]
    classification: str
    special_values: dict = field(default_factory=dict)
    params: Optional[EconomyParams] = None
    first_failure_t: Optional[int] = None
    diagnostics: dict = field(default_factory=dict)


def exchange_log_dividend_path(params, T):
    """Log utility, no old-age endowment, tree only: q_t = beta/(1+beta) e^y_t."""
    if (
        params.technology is not None
        or params.utility.family != LOG
        or not params.endow_old.is_zero
    ):
        raise RegimeMismatch("needs a log-utility exchange economy with e^o = 0")
    beta = params.beta
    ey = np.array(params.endow_young.array(T + 1))
    if np.any(ey <= 0.0):
        raise RegimeMismatch("young endowments must be positive")
    d = np.array(params.dividends.array(T + 1))
    q = beta / (1.0 + beta) * ey
    R = np.empty(T + 1)
    R[0] = math.nan
    R[1:] = (q[1:] + d[1:]) / q[:-1]
    return build_path(params, q, np.zeros(T + 1), R=R)


@dataclass
class StationaryPrice:
    p: Optional[float]
    feasible: bool
    iterations: int = 0


def fiat_stationary_price(y, d, e, sigma, beta):
    """Fiat price level p of the stationary-growth solution p_t = p e^t.

    Endowments are y e^t (young) and d e^t (old); p solves
    1 = beta e ((y - p) / ((d + p) e))^sigma, which exists in (0, y) exactly
    when 1 < beta e (y/(d e))^sigma < (y/d)^sigma.
    """
    lead = beta * e * (y / (d * e)) ** sigma
    if not (1.0 < lead < (y / d) ** sigma):
        return StationaryPrice(None, False)

    def h(p):
        return beta * e * ((y - p) / ((d + p) * e)) ** sigma - 1.0

    p, it = bisect(h, 0.0, y, lead - 1.0, -1.0)
    return StationaryPrice(p, True, it)


def _fiat_params(y_seq, o_seq, sigma, beta):
    u = Utility.log(beta) if sigma == 1.0 else Utility.crra(sigma, beta)
    return EconomyParams(u, None, ZERO, y_seq, o_seq)


def _stationary_ray(y_seq, o_seq, sigma, beta):
    """(p, e) when both endowments grow geometrically at a common rate e."""
    if not (y_seq.is_parametric and o_seq.is_parametric):
        return None
    e = y_seq.ratio
    if o_seq.ratio != e or y_seq.c <= 0.0 or o_seq.c <= 0.0:
        return None
    sp = fiat_stationary_price(y_seq.c, o_seq.c, e, sigma, beta)
    return (sp.p, e) if sp.feasible else None


def fiat_recursion_residual(path, sigma):
    """|p_t - beta p_{t+1} ((e^y_t - p_t)/(e^o_{t+1} + p_{t+1}))^sigma| / max(1, p_t)."""
    beta = path.params.beta
    ey, eo = path.endowments()
    p = path.p
    rhs = beta * p[1:] * ((ey[:-1] - p[:-1]) / (eo[1:] + p[1:])) ** sigma
    return np.abs(p[:-1] - rhs) / np.maximum(1.0, p[:-1])


def fiat_continuum_path(y_seq, o_seq, sigma, beta, p0, T):
    """Fiat-only exchange economy advanced forward from an initial price.

    Solves p_t = beta p' ((e^y_t - p_t)/(e^o_{t+1} + p'))^sigma for p' on the
    increasing branch of the right side, below both e^y_{t+1} and (for
    sigma > 1) the turning point e^o_{t+1}/(sigma - 1). Per-step notes in
    ``path.diagnostics`` record whether a second root exists past the turn.
    With endowments growing at a common geometric rate, an initial price
    within 1e-12 (relative) of the stationary level follows p_t = p_0 e^t.
    """
    if p0 < 0.0:
        raise ValueError("p0 must be nonnegative")
    params = _fiat_params(y_seq, o_seq, sigma, beta)
    g = tail_growth(y_seq)
    if not beta * g ** (1.0 - sigma) < 1.0:
        raise NonEquilibriumPath(
            f"beta^t (e^y_t)^(1-sigma) does not vanish (beta g^(1-sigma) = {beta * g ** (1.0 - sigma)!r})"
        )
    u = params.utility
    ey = np.array(y_seq.array(T + 2))
    eo = np.array(o_seq.array(T + 2))
    p = np.zeros(T + 1)
    R = np.full(T + 1, math.nan)
    p[0] = float(p0)
    ray = _stationary_ray(y_seq, o_seq, sigma, beta)
    if ray is not None and p0 > 0.0 and abs(p0 - ray[0]) <= CRITICAL_SNAP * ray[0]:
        # the stationary solution repels forward iterates, so follow it exactly
        e = ray[1]
        p[:] = p[0] * e ** np.arange(T + 1)
        R[1:] = p[1:] / p[:-1]
        bad = np.nonzero(~(ey[: T + 1] - eo[: T + 1] >= 2.0 * p))[0]
        if len(bad):
            raise NonEquilibriumPath("e^y - e^o is below twice the fiat price", t=int(bad[0]))
        path = build_path(params, np.zeros(T + 1), p, R=R)
        path.diagnostics = ["stationary_ray"] * T
        return path
    notes = []
    for t in range(T + 1):
        if not ey[t] - eo[t] >= 2.0 * p[t]:
            raise NonEquilibriumPath(
                f"e^y - e^o = {ey[t] - eo[t]!r} is below twice the fiat price {p[t]!r}", t=t
            )
        if t == T:
            break
        if p[t] == 0.0:
            R[t + 1] = utility_marginal(u, ey[t]) / (beta * utility_marginal(u, eo[t + 1]))
            notes.append("no_trade")
            continue
        ratio_base = ey[t] - p[t]

        def phi(x, t=t, ratio_base=ratio_base):
            return beta * x * (ratio_base / (eo[t + 1] + x)) ** sigma - p[t]

        cap = ey[t + 1] * (1.0 - 1e-15)
        turn = eo[t + 1] / (sigma - 1.0) if sigma > 1.0 else math.inf
        top = min(cap, turn)
        hi = min(p[t], top)
        while phi(hi) < 0.0 and hi < top:
            hi = min(2.0 * hi, top)
        if not phi(hi) >= 0.0:
            raise NonEquilibriumPath("no next-period fiat price solves the recursion", t=t + 1)
        x, _ = bisect(phi, 0.0, hi, -p[t])
        p[t + 1] = x
        R[t + 1] = x / p[t]
        second = top < cap and phi(cap) < 0.0 <= phi(top)
        notes.append("second_root_past_turn" if second else "unique")
    path = build_path(params, np.zeros(T + 1), p, R=R)
    path.diagnostics = notes
    return path


def _cd_params(alpha, A, beta, K0):
    return EconomyParams(Utility.log(beta), Technology.cobb_douglas(A, alpha), K0=K0)


def critical_bubble(alpha, A, beta, K0):
    """b_bar = w_0 beta/(1+beta) (gamma-1)/gamma."""
    params = _cd_params(alpha, A, beta, K0)
    ss = steady_state_and_gamma(params)
    w0 = params.technology.wage(K0)
    return w0 * (beta / (1.0 + beta)) * (ss.gamma - 1.0) / ss.gamma


def cobb_douglas_bubble_path(alpha, A, beta, K0, p0, T):
    """Pure-bubble economy with log utility and Cobb-Douglas technology.

    Savings S_t = beta/(1+beta) w_t split between capital and fiat according
    to z_t = K_{t+1}/p_t, which follows z_{t+1} = gamma z_t - 1. Working in z
    keeps the saddle path exact: an initial price within 1e-12 (relative) of
    the critical value is placed on it, where z is constant.
    """
    params = _cd_params(alpha, A, beta, K0)
    ss = steady_state_and_gamma(params)
    gamma = ss.gamma
    tech = params.technology
    sav = beta / (1.0 + beta)
    w0 = tech.wage(K0)
    b_bar = w0 * sav * (gamma - 1.0) / gamma if gamma > 1.0 else 0.0
    limit_K = (alpha * A) ** (1.0 / (1.0 - alpha))
    special = {
        "gamma": gamma,
        "rho": ss.rho,
        "K_star": ss.K_star,
        "b_bar": b_bar,
        "limit_K": None,
        "limit_p": None,
    }
    diagnostics = {}
    K = np.empty(T + 2)
    p = np.zeros(T + 1)
    K[0] = K0
    if p0 < 0.0:
        raise ValueError("p0 must be nonnegative")

    if p0 == 0.0:
        for t in range(T + 1):
            K[t + 1] = sav * tech.wage(K[t])
        cls = BUBBLELESS_KSTAR
        special.update(limit_K=ss.K_star, limit_p=0.0)
    elif gamma > 1.0 and abs(p0 - b_bar) <= CRITICAL_SNAP * b_bar:
        # saddle path: K_{t+1} = alpha A K_t^alpha, p_t = (gamma-1) K_{t+1}
        z0 = 1.0 / (gamma - 1.0)
        for t in range(T + 1):
            K[t + 1] = alpha * A * K[t] ** alpha
            p[t] = (gamma - 1.0) * K[t + 1]
        diagnostics["z"] = np.full(T + 1, z0)
        diagnostics["snapped_to_critical"] = p0 != b_bar
        cls = BUBBLY_ASYMPTOTIC
        special.update(limit_K=limit_K, limit_p=(gamma - 1.0) * limit_K)
    else:
        K1 = sav * w0 - p0
        z0 = K1 / p0
        z = np.empty(T + 1)
        if gamma > 1.0:
            lead = (gamma - 1.0) * z0 - 1.0
            t_idx = np.arange(T + 1)
            with np.errstate(over="ignore"):
                z[:] = (lead * gamma**t_idx + 1.0) / (gamma - 1.0)
        else:
            z[0] = z0
            for t in range(T):
                z[t + 1] = gamma * z[t] - 1.0
        diagnostics["z"] = z
        bad = np.nonzero(~(z > 0.0))[0]
        if len(bad):
            t_fail = int(bad[0])
            for t in range(t_fail):
                S = sav * tech.wage(K[t])
                K[t + 1] = S / (1.0 + 1.0 / z[t])
                p[t] = S / (1.0 + z[t])
            path = None
            if t_fail >= 1:
                path = build_path(params, np.zeros(t_fail), p[:t_fail], K=K[: t_fail + 1])
            return ScenarioResult(path, NON_EQUILIBRIUM, special, params, t_fail, diagnostics)
        for t in range(T + 1):
            S = sav * tech.wage(K[t])
            K[t + 1] = S / (1.0 + 1.0 / z[t])
            p[t] = S / (1.0 + z[t])
        cls = BUBBLY_VANISHING
        special.update(limit_K=ss.K_star, limit_p=0.0)
    path = build_path(params, np.zeros(T + 1), p, K=K)
    diagnostics["converged"] = bool(
        abs(K[T] - special["limit_K"]) < 1e-8 and abs(p[T] - special["limit_p"]) < 1e-8
    )
    return ScenarioResult(path, cls, special, params, None, diagnostics)


def condition17_ratio(path):
    """w_{t-1} beta^2 R_t R_{t+1} / w_{t+1} for t = 1..T-1.

    The extra FOC inequality of the log-production economy holds iff every
    entry is at most one.
    """
    beta = path.params.beta
    w, R = path.w, path.R
    return w[:-2] * beta**2 * R[1:-1] * R[2:] / w[2:]


def linear_tech_path(A, B, delta, beta, dividends, q0, p0, T, K0=None):
    """Log utility with F(K, L) = A K + B L and no endowments.

    The gross return R = 1 - delta + A and the wage B are constant, so
    savings S = beta/(1+beta) B are constant and
    q_t = R^t (q_0 - FV_0) + FV_t,  p_t = R^t p_0,  K_{t+1} = S - q_t - p_t,
    where FV_t is the exact fundamental value of the tree at t.
    """
    tech = Technology.linear(A, B, delta)
    R = 1.0 - delta + A
    if R > 1.0:
        raise RegimeMismatch(f"needs a gross return R <= 1, got {R!r}")
    S = beta / (1.0 + beta) * B
    fv = np.array([discounted_tail(dividends, R, t) for t in range(T + 1)])
    FV0 = fv[0]
    if not math.isfinite(FV0):
        raise NonEquilibriumPath("the tree's fundamental value is infinite", t=0)
    if p0 < 0.0:
        raise NonEquilibriumPath("p0 must be nonnegative", t=0)
    if q0 < FV0 - 1e-12 * max(1.0, FV0):
        raise NonEquilibriumPath(
            f"q0 = {q0!r} is below the fundamental value {float(FV0)!r}", t=0
        )
    if not q0 < S - p0:
        raise NonEquilibriumPath(f"q0 + p0 = {q0 + p0!r} exhausts savings {S!r}", t=0)
    cum = 0.0
    for t in range(1, T + 1):
        cum += dividends(t) / R**t
        if not (S >= cum and S >= R**t * (S - cum)):
            raise NonEquilibriumPath("savings bound on discounted dividends fails", t=t)
    bubble0 = max(q0 - FV0, 0.0)
    Rt = R ** np.arange(T + 1)
    q = Rt * bubble0 + fv
    p = Rt * p0
    K = np.empty(T + 2)
    K[1:] = S - q - p
    K[0] = S - q0 - p0 if K0 is None else K0
    bad = np.nonzero(~(K[1:] > 0.0))[0]
    if len(bad):
        raise NonEquilibriumPath("capital is not positive", t=int(bad[0]))
    params = EconomyParams(Utility.log(beta), tech, dividends, K0=float(K[0]))
    path = build_path(params, q, p, K=K)
    if bubble0 == 0.0 and p0 == 0.0:
        cls = BUBBLELESS_KSTAR
    elif R == 1.0:
        cls = BUBBLY_ASYMPTOTIC
    else:
        cls = BUBBLY_VANISHING
    special = {
        "K_star": S,
        "fv0": FV0,
        "tree_bubble": bubble0,
        "sup_p0": S - FV0,
        "limit_q": bubble0 if R == 1.0 else 0.0,
        "limit_p": p0 if R == 1.0 else 0.0,
        "limit_K": float(K[-1]),
        "gross_return": R,
    }
    return ScenarioResult(path, cls, special, params, None, {})


def kocherlakota_sequences():
    """Young and old endowments 70 (8/7)^t and 35 (8/7)^t."""
    e = 8.0 / 7.0
    return SequenceSpec.geometric(70.0, e), SequenceSpec.geometric(35.0, e)
