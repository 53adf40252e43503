"""Forward shooting of the two-period OLG equilibrium system.

Each step takes the period-t state (K_t, q_t, p_t) and solves the young
generation's Euler equation for next-period capital (production) or for the
gross return (exchange). The tree and fiat prices then follow from

    q_{t+1} = q_t R_{t+1} - d_{t+1},    p_{t+1} = p_t R_{t+1}.
"""

import math
from dataclasses import dataclass, field
from typing import List, NamedTuple, Optional, Tuple

import numpy as np

from .errors import BracketFailure, MultipleRoots, NonEquilibriumPath, OLGError
from .primitives import LOG, EconomyParams, utility_marginal
from .rootfind import bisect, log_grid, sign_change_brackets

SMALLEST = "smallest"
LARGEST = "largest"
ERROR_ON_MULTIPLE = "error"

R_GRID = (1e-6, 1e6, 512)
K_SCAN_POINTS = 64
NEG_PRICE_TOL = 1e-12


class State(NamedTuple):
    K: Optional[float]
    q: float
    p: float


@dataclass
class StepDiagnostics:
    gross_return: float
    euler_residual: float
    root_bracket: Tuple[float, float]
    iterations: int
    multiplicity_note: str = "unique"
    roots: Tuple[float, ...] = ()


@dataclass
class EquilibriumPath:
    """Finite equilibrium trajectory over t = 0..T.

    ``K`` has one more entry than the price arrays: K[t] is the capital in
    use at t for t = 0..T+1, so the savings of the period-T young are kept.
    ``R[t]`` is the gross return earned between t-1 and t; in exchange
    economies R[0] is undefined (nan).
    """

    params: EconomyParams
    q: np.ndarray
    p: np.ndarray
    R: np.ndarray
    w: np.ndarray
    c_young: np.ndarray
    c_old: np.ndarray
    K: Optional[np.ndarray] = None
    diagnostics: List[StepDiagnostics] = field(default_factory=list, repr=False)

    @property
    def T(self):
        return len(self.q) - 1

    @property
    def is_exchange(self):
        return self.K is None

    def dividends(self):
        return np.array(self.params.dividends.array(self.T + 1))

    def endowments(self):
        n = self.T + 1
        return (
            np.array(self.params.endow_young.array(n)),
            np.array(self.params.endow_old.array(n)),
        )

    def savings(self):
        """Value of the young generation's portfolio, K_{t+1} + q_t + p_t."""
        s = self.q + self.p
        if self.K is not None:
            s = self.K[1:] + s
        return s

    def identical(self, other):
        """Bitwise equality of every array (nan == nan)."""
        names = ("q", "p", "R", "w", "c_young", "c_old")
        if (self.K is None) != (other.K is None):
            return False
        if self.K is not None and not np.array_equal(self.K, other.K, equal_nan=True):
            return False
        return all(
            np.array_equal(getattr(self, n), getattr(other, n), equal_nan=True)
            for n in names
        ) and self.params == other.params

    def truncated(self, T):
        if T > self.T:
            raise ValueError("cannot extend a path by truncation")
        K = None if self.K is None else self.K[: T + 2].copy()
        return EquilibriumPath(
            self.params,
            self.q[: T + 1].copy(),
            self.p[: T + 1].copy(),
            self.R[: T + 1].copy(),
            self.w[: T + 1].copy(),
            self.c_young[: T + 1].copy(),
            self.c_old[: T + 1].copy(),
            K,
        )


def build_path(params, q, p, K=None, R=None):
    """Assemble a path from prices (and capital), filling w, R and consumptions.

    Production economies derive R and w from ``K`` (length T+2); exchange
    economies need ``R`` (length T+1) and have zero wage.
    """
    q = np.asarray(q, dtype=float)
    p = np.asarray(p, dtype=float)
    n = len(q)
    ey = np.array(params.endow_young.array(n))
    eo = np.array(params.endow_old.array(n))
    d = np.array(params.dividends.array(n))
    if params.technology is not None:
        if K is None or len(K) != n + 1:
            raise ValueError("production paths need K_0..K_{T+1}")
        K = np.asarray(K, dtype=float)
        tech = params.technology
        Kt = K[:n]
        w = np.array([tech.wage(k) for k in Kt])
        R = np.array([tech.gross_return(k) for k in Kt])
        c_young = ey + w - K[1:] - q - p
        c_old = eo + R * Kt + q + d + p
    else:
        if R is None or len(R) != n:
            raise ValueError("exchange paths need R_0..R_T")
        R = np.asarray(R, dtype=float)
        w = np.zeros(n)
        c_young = ey - q - p
        c_old = eo + q + d + p
    return EquilibriumPath(params, q, p, R, w, c_young, c_old, K)


def _select(roots, policy, t):
    if len(roots) == 1:
        return roots[0], "unique"
    if policy == SMALLEST:
        return roots[0], "multiple_roots"
    if policy == LARGEST:
        return roots[-1], "multiple_roots"
    raise MultipleRoots(
        f"{len(roots)} admissible Euler roots: {[r[0] for r in roots]}",
        [r[0] for r in roots],
        t=t,
    )


def _advance_prices(q, p, R1, d1, t):
    q1 = q * R1 - d1
    p1 = p * R1
    if q1 < 0.0:
        if q1 < -NEG_PRICE_TOL * max(q * R1, d1, 1.0):
            raise NonEquilibriumPath(f"tree price turns negative ({q1:.3e})", t=t + 1)
        q1 = 0.0
    if p1 < 0.0:
        raise NonEquilibriumPath("fiat price turns negative", t=t + 1)
    return q1, p1


def _check_dividend_pricing(params, q, t):
    if q == 0.0 and params.dividends(t + 1) > 0.0:
        raise NonEquilibriumPath(
            "zero tree price with a positive dividend next period", t=t
        )


def olg_step(params, state, t, policy=ERROR_ON_MULTIPLE):
    """One production-economy step: solve the Euler equation for K_{t+1}."""
    if params.technology is None:
        return olg_step_exchange(params, state, t, policy)
    tech, u = params.technology, params.utility
    beta = u.beta
    K, q, p = state
    if not K > 0.0:
        raise NonEquilibriumPath("capital must stay positive", t=t)
    if q < 0.0 or p < 0.0:
        raise NonEquilibriumPath("negative asset price", t=t)
    _check_dividend_pricing(params, q, t)
    d1 = params.dividends(t + 1)
    eo1 = params.endow_old(t + 1)
    held = q + p
    cash = params.endow_young(t) + tech.wage(K) - held
    if not cash > 0.0:
        raise NonEquilibriumPath("no resources left for positive capital", t=t)

    def resid(k1):
        R1 = tech.gross_return(k1)
        return utility_marginal(u, cash - k1) - beta * R1 * utility_marginal(
            u, eo1 + R1 * (k1 + held)
        )

    eps = 1e-14 * cash
    lo, hi = eps, cash - eps
    f_lo, f_hi = resid(lo), resid(hi)
    if (f_lo > 0.0) != (f_hi > 0.0):
        brackets = [(lo, hi, f_lo, f_hi)]
    else:
        brackets = sign_change_brackets(resid, log_grid(lo, hi, K_SCAN_POINTS))
    if not brackets:
        raise BracketFailure(
            "Euler residual keeps one sign on the admissible capital interval", t=t
        )
    roots = []
    for a, b, fa, fb in brackets:
        k1, it = (a, 0) if a == b else bisect(resid, a, b, fa, fb)
        roots.append((k1, it, (a, b)))
    (k1, iters, bracket), note = _select(roots, policy, t)
    R1 = tech.gross_return(k1)
    q1, p1 = _advance_prices(q, p, R1, d1, t)
    cy = cash - k1
    rel = 1.0 - beta * R1 * utility_marginal(u, eo1 + R1 * (k1 + held)) / utility_marginal(u, cy)
    diag = StepDiagnostics(R1, rel, bracket, iters, note, tuple(r[0] for r in roots))
    return State(k1, q1, p1), diag


def olg_step_exchange(params, state, t, policy=ERROR_ON_MULTIPLE):
    """One exchange-economy step: solve the Euler equation for R_{t+1}.

    With zero savings there is no trade and the reported return is the
    autarky shadow rate u'(e^y_t) / (beta u'(e^o_{t+1})).
    """
    u = params.utility
    beta = u.beta
    q, p = state.q, state.p
    if q < 0.0 or p < 0.0:
        raise NonEquilibriumPath("negative asset price", t=t)
    _check_dividend_pricing(params, q, t)
    ey, ey1 = params.endow_young(t), params.endow_young(t + 1)
    eo1 = params.endow_old(t + 1)
    d1 = params.dividends(t + 1)
    held = q + p
    cy = ey - held
    if not cy > 0.0:
        raise NonEquilibriumPath("young consumption is not positive", t=t)

    if held == 0.0:
        if not eo1 > 0.0:
            raise NonEquilibriumPath("no-trade path leaves the old without consumption", t=t + 1)
        shadow = utility_marginal(u, cy) / (beta * utility_marginal(u, eo1))
        return State(None, 0.0, 0.0), StepDiagnostics(shadow, 0.0, (shadow, shadow), 0, "none")

    mu_y = utility_marginal(u, cy)

    if u.family == LOG and eo1 == 0.0:
        # u'(R S) R is flat in R: the Euler equation pins savings, not the
        # return. The return is the one that lets the next young generation
        # satisfy its own Euler equation.
        rel = 1.0 - beta * cy / held
        if abs(rel) > 1e-10:
            raise NonEquilibriumPath("savings violate the log Euler equation", t=t)
        if params.endow_old(t + 2) != 0.0:
            raise BracketFailure("Euler equation does not pin the return", t=t)
        R1 = (beta / (1.0 + beta) * ey1 + d1) / held
        q1, p1 = _advance_prices(q, p, R1, d1, t)
        return State(None, q1, p1), StepDiagnostics(R1, rel, (R1, R1), 0, "unique", (R1,))

    def resid(R):
        return beta * R * utility_marginal(u, eo1 + R * held) - mu_y

    brackets = sign_change_brackets(resid, log_grid(*R_GRID))
    if not brackets:
        raise BracketFailure("no gross return on the search grid solves the Euler equation", t=t)
    roots = []
    for a, b, fa, fb in brackets:
        R1, it = (a, 0) if a == b else bisect(resid, a, b, fa, fb)
        q1, p1 = q * R1 - d1, p * R1
        if q1 < -NEG_PRICE_TOL * max(q * R1, d1, 1.0):
            continue
        if not ey1 - max(q1, 0.0) - p1 > 0.0:
            continue
        roots.append((R1, it, (a, b)))
    if not roots:
        raise NonEquilibriumPath("every Euler root leads to an infeasible next period", t=t)
    (R1, iters, bracket), note = _select(roots, policy, t)
    q1, p1 = _advance_prices(q, p, R1, d1, t)
    rel = 1.0 - beta * R1 * utility_marginal(u, eo1 + R1 * held) / mu_y
    return State(None, q1, p1), StepDiagnostics(
        R1, rel, bracket, iters, note, tuple(r[0] for r in roots)
    )


def simulate_olg(params, q0, p0, T, policy=ERROR_ON_MULTIPLE):
    """Shoot forward from (K0, q0, p0) for T periods.

    Raises the failing step's error with its period attached.
    """
    if T < 1:
        raise ValueError("horizon must be positive")
    production = params.technology is not None
    if production and not params.K0 > 0.0:
        raise NonEquilibriumPath("production economies need K0 > 0", t=0)
    state = State(params.K0 if production else None, float(q0), float(p0))
    q, p, K, R, diags = [state.q], [state.p], [state.K], [math.nan], []
    steps = T + 1 if production else T
    for t in range(steps):
        try:
            state, diag = olg_step(params, state, t, policy)
        except OLGError as exc:
            if getattr(exc, "t", None) is None:
                exc.t = t
            raise
        diags.append(diag)
        if production:
            K.append(state.K)
        if t + 1 <= T:
            q.append(state.q)
            p.append(state.p)
            R.append(diag.gross_return)
    if production:
        path = build_path(params, q, p, K=np.array(K))
    else:
        path = build_path(params, q, p, R=np.array(R, dtype=float))
    path.diagnostics = diags
    return path


@dataclass
class ResidualReport:
    euler: np.ndarray
    price: np.ndarray
    fiat: np.ndarray
    resource: np.ndarray

    @property
    def max(self):
        return {
            name: float(np.nanmax(np.abs(getattr(self, name)))) if len(getattr(self, name)) else 0.0
            for name in ("euler", "price", "fiat", "resource")
        }

    @property
    def max_norm(self):
        return max(self.max.values())

    def records(self):
        return [
            {
                "t": t,
                "euler": float(self.euler[t]),
                "price": float(self.price[t]),
                "fiat": float(self.fiat[t]),
                "resource": float(self.resource[t]),
            }
            for t in range(len(self.resource))
        ]


def residual_report(params, path):
    """Per-period residuals of the equilibrium system.

    Euler residuals are relative to u'(c_young); pricing and resource
    residuals are absolute for magnitudes below one and relative above.
    The three forward-looking residuals are nan at t = T.
    """
    u, tech = params.utility, params.technology
    beta = u.beta
    T = path.T
    q, p, R = path.q, path.p, path.R
    d = np.array(params.dividends.array(T + 1))
    ey = np.array(params.endow_young.array(T + 1))
    eo = np.array(params.endow_old.array(T + 1))
    euler = np.full(T + 1, math.nan)
    price = np.full(T + 1, math.nan)
    fiat = np.full(T + 1, math.nan)
    resource = np.empty(T + 1)
    K = path.K
    for t in range(T):
        if tech is not None:
            Rn = tech.gross_return(K[t + 1])
            cy = ey[t] + tech.wage(K[t]) - K[t + 1] - q[t] - p[t]
            co = eo[t + 1] + Rn * K[t + 1] + q[t + 1] + d[t + 1] + p[t + 1]
            euler[t] = _euler_rel(u, beta, Rn, cy, co)
        elif q[t] + p[t] == 0.0:
            euler[t] = 0.0
        else:
            Rn = R[t + 1]
            cy = ey[t] - q[t] - p[t]
            co = eo[t + 1] + q[t + 1] + d[t + 1] + p[t + 1]
            euler[t] = _euler_rel(u, beta, Rn, cy, co)
        price[t] = (q[t] * R[t + 1] - q[t + 1] - d[t + 1]) / max(1.0, q[t + 1] + d[t + 1])
        fiat[t] = (p[t] * R[t + 1] - p[t + 1]) / max(1.0, p[t + 1])
    for t in range(T + 1):
        if tech is not None:
            lhs = K[t + 1] + path.c_young[t] + path.c_old[t]
            rhs = tech.f(K[t]) + (1.0 - tech.delta) * K[t] + ey[t] + eo[t] + d[t]
        else:
            lhs = path.c_young[t] + path.c_old[t]
            rhs = ey[t] + eo[t] + d[t]
        resource[t] = (lhs - rhs) / max(1.0, abs(rhs))
    return ResidualReport(euler, price, fiat, resource)


def _euler_rel(u, beta, Rn, cy, co):
    if not (cy > 0.0 and co > 0.0):
        return math.inf
    return 1.0 - beta * Rn * utility_marginal(u, co) / utility_marginal(u, cy)
