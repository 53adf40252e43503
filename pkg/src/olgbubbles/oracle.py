"""Direct optimization of one agent's truncated problem.

At given prices an agent's problem collapses onto the value of its portfolio
S_t = k_{t+1} + q_t a_t + p_t b_t: wealth carried into t+1 is rho_{t+1} S_t,
where rho is the best available gross return, so

    c_t = y_t + rho_t S_{t-1} - S_t,    y_t = w_t L_t + e_t,

with S_T pinned to the candidate's terminal portfolio. The objective is
strictly concave in (S_0, ..., S_{T-1}) and each S_t enters only c_t and
c_{t+1}, so cyclic coordinate ascent with golden-section line searches
converges to the optimum.
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InfeasibleTerminal, InvalidInput
from .primitives import utility_marginal
from .rootfind import golden_max

MAX_T_SMALL = 12
MIN_GRID = 33
RETURN_TIE = 1e-12


@dataclass
class TruncatedProblem:
    """Agent ``agent``'s problem over t = 0..T at the candidate's prices.

    ``rho[t]`` is the best gross return from t-1 to t (rho[0] unused);
    ``wealth0`` is the value of the initial holdings at t = 0.
    """

    agent: int
    T: int
    utility: object
    y: np.ndarray
    rho: np.ndarray
    wealth0: float
    S_terminal: float
    vehicle: np.ndarray
    q: np.ndarray
    p: np.ndarray
    R: np.ndarray
    candidate_c: np.ndarray
    candidate_k: np.ndarray
    candidate_a: np.ndarray
    candidate_b: np.ndarray
    production: bool = False

    @property
    def beta(self):
        return self.utility.beta

    def consumption(self, S):
        c = np.empty(self.T + 1)
        c[0] = self.wealth0 + self.y[0] - S[0]
        c[1:] = self.y[1:] + self.rho[1:] * S[:-1] - S[1:]
        return c

    def utility_of(self, c):
        if np.any(c <= 0.0):
            return -math.inf
        return float(sum(self.beta**t * self.utility.level(ct) for t, ct in enumerate(c)))


def truncated_problem(alloc, prices, agent, T_small):
    """Build an agent's truncated problem from a two-cycle allocation."""
    if not 1 <= T_small <= MAX_T_SMALL:
        raise InvalidInput(f"T_small must lie in [1, {MAX_T_SMALL}]")
    if T_small > alloc.T - 1:
        raise InvalidInput("candidate horizon is too short")
    params = alloc.params
    tech = params.technology
    delta = tech.delta if tech is not None else 0.0
    n = T_small + 1
    q, p, r, w = (np.asarray(x[: n + 1], dtype=float) for x in (prices.q, prices.p, prices.r, prices.w))
    d = np.array(params.dividends.array(n + 1))
    R = 1.0 - delta + r
    rho = np.full(n, math.nan)
    vehicle = np.zeros(n, dtype=bool)
    for t in range(n):
        returns = []
        if tech is not None:
            returns.append(R[t + 1])
        if q[t] > 0.0:
            returns.append((q[t + 1] + d[t + 1]) / q[t])
        if p[t] > 0.0:
            returns.append(p[t + 1] / p[t])
        if returns:
            vehicle[t] = True
            if t + 1 < n:
                rho[t + 1] = max(returns)
    i = agent
    y = w[:n] * alloc.L[i, :n] + alloc.e[i, :n]
    wealth0 = (
        (1.0 - delta + r[0]) * alloc.k[i, 0]
        + (q[0] + d[0]) * alloc.a_init[i]
        + p[0] * alloc.b_init[i]
    )
    S_T = alloc.k[i, n] + q[n - 1] * alloc.a[i, n - 1] + p[n - 1] * alloc.b[i, n - 1]
    return TruncatedProblem(
        agent=i,
        T=T_small,
        utility=params.utility,
        y=y,
        rho=rho,
        wealth0=float(wealth0),
        S_terminal=float(S_T),
        vehicle=vehicle,
        q=q[:n],
        p=p[:n],
        R=R[: n + 1],
        candidate_c=alloc.c[i, :n].copy(),
        candidate_k=alloc.k[i, : n + 1].copy(),
        candidate_a=alloc.a[i, :n].copy(),
        candidate_b=alloc.b[i, :n].copy(),
        production=tech is not None,
    )


@dataclass
class Plan:
    c: np.ndarray
    S: np.ndarray
    k: np.ndarray
    a: np.ndarray
    b: np.ndarray
    utility: float
    sweeps: int = 0
    converged: bool = True


def _split(problem, S):
    """Holdings implementing portfolio values S.

    Savings go to the best-return vehicles; at tied returns (and for assets
    with a zero price) the candidate's split is kept.
    """
    T = problem.T
    k = problem.candidate_k.copy()
    a = problem.candidate_a.copy()
    b = problem.candidate_b.copy()
    for t in range(T):
        value = k[t + 1] + problem.q[t] * a[t] + problem.p[t] * b[t]
        if value > 0.0:
            scale = S[t] / value
            k[t + 1] *= scale
            a[t] *= scale if problem.q[t] > 0.0 else 1.0
            b[t] *= scale if problem.p[t] > 0.0 else 1.0
        elif S[t] > 0.0:
            best = problem.rho[t + 1] * (1.0 - RETURN_TIE)
            if problem.production and problem.R[t + 1] >= best:
                k[t + 1] = S[t]
            elif problem.p[t] > 0.0 and problem.p[t + 1] / problem.p[t] >= best:
                b[t] = S[t] / problem.p[t]
            else:
                a[t] = S[t] / problem.q[t]
    return k, a, b


def plan_from_savings(problem, S):
    S = np.asarray(S, dtype=float)
    c = problem.consumption(S)
    k, a, b = _split(problem, S)
    return Plan(c, S.copy(), k, a, b, problem.utility_of(c))


def candidate_plan(problem):
    """The candidate allocation expressed as a plan of the truncated problem."""
    T = problem.T
    S = np.empty(T + 1)
    for t in range(T + 1):
        S[t] = problem.candidate_k[t + 1] + problem.q[t] * problem.candidate_a[t] + problem.p[t] * problem.candidate_b[t]
    S[T] = problem.S_terminal
    c = problem.candidate_c.copy()
    return Plan(c, S, problem.candidate_k.copy(), problem.candidate_a.copy(),
                problem.candidate_b.copy(), problem.utility_of(c))


def _bounds(problem, S, t):
    lo = 0.0
    if t + 1 <= problem.T:
        lo = max(0.0, (S[t + 1] - problem.y[t + 1]) / problem.rho[t + 1])
    hi = problem.wealth0 + problem.y[0] if t == 0 else problem.y[t] + problem.rho[t] * S[t - 1]
    return lo, hi


def _local_objective(problem, S, t):
    u, beta = problem.utility, problem.beta
    y, rho = problem.y, problem.rho
    inflow = problem.wealth0 + y[0] if t == 0 else y[t] + rho[t] * S[t - 1]
    nxt = y[t + 1] - S[t + 1]

    def f(x):
        c0 = inflow - x
        c1 = nxt + rho[t + 1] * x
        if c0 <= 0.0 or c1 <= 0.0:
            return -math.inf
        return u.level(c0) + beta * u.level(c1)

    return f


def best_response_search(problem, grid_density=MIN_GRID, tol=1e-15, max_sweeps=5000):
    """Maximise sum beta^t u(c_t) over portfolio values S_0..S_{T-1} >= 0.

    Starts from the midpoints of the sequentially feasible intervals, scans
    each coordinate on ``grid_density`` points in the first sweep to bracket
    its maximum, then runs golden-section coordinate sweeps until a sweep
    raises total utility by no more than ``tol`` (relative).
    Periods without any positively priced asset force S_t = 0.
    """
    if grid_density < MIN_GRID:
        raise InvalidInput(f"grid_density must be at least {MIN_GRID}")
    T = problem.T
    S = np.zeros(T + 1)
    S[T] = problem.S_terminal
    free = [t for t in range(T) if problem.vehicle[t]]
    # lower bounds implied by the terminal portfolio
    lb = np.zeros(T + 1)
    lb[T] = S[T]
    for t in range(T - 1, -1, -1):
        if problem.vehicle[t]:
            lb[t] = max(0.0, (lb[t + 1] - problem.y[t + 1]) / problem.rho[t + 1])
        elif lb[t + 1] >= problem.y[t + 1]:
            raise InfeasibleTerminal(f"no asset to carry wealth into t={t + 1}")
    if not problem.wealth0 + problem.y[0] - lb[0] > 0.0:
        raise InfeasibleTerminal("initial resources cannot reach the terminal holdings")
    for t in free:
        _, hi = _bounds(problem, S, t)
        S[t] = 0.5 * (lb[t] + hi)

    sweeps, converged = 0, False
    value = problem.utility_of(problem.consumption(S))
    for sweeps in range(1, max_sweeps + 1):
        for t in free:
            lo, hi = _bounds(problem, S, t)
            f = _local_objective(problem, S, t)
            a, b = lo, hi
            if sweeps == 1:
                grid = np.linspace(lo, hi, grid_density)
                vals = [f(x) for x in grid]
                j = int(np.argmax(vals))
                a, b = grid[max(j - 1, 0)], grid[min(j + 1, grid_density - 1)]
            x, fx = golden_max(f, a, b, xtol=1e-15)
            if fx > f(S[t]):
                S[t] = x
        new_value = problem.utility_of(problem.consumption(S))
        gain, value = new_value - value, new_value
        if sweeps > 1 and gain <= tol * max(1.0, abs(value)):
            converged = True
            break
    plan = plan_from_savings(problem, S)
    plan.sweeps, plan.converged = sweeps, converged
    return plan


def optimality_gap(candidate, oracle, tol=1e-9):
    """Oracle utility minus candidate utility, floored at zero.

    Differences below ``tol`` in absolute value count as zero.
    """
    gap = oracle.utility - candidate.utility
    return gap if gap > tol else 0.0


def euler_residuals(problem, plan, interior=1e-8):
    """|1 - beta rho_{t+1} u'(c_{t+1}) / u'(c_t)| where S_t is interior.

    Periods with S_t at the zero bound (within ``interior`` times the scale)
    or without an asset are reported as nan.
    """
    u = problem.utility
    scale = max(1.0, float(np.max(np.abs(problem.y))))
    out = np.full(problem.T, math.nan)
    for t in range(problem.T):
        if problem.vehicle[t] and plan.S[t] > interior * scale:
            out[t] = abs(1.0 - problem.beta * problem.rho[t + 1]
                         * utility_marginal(u, plan.c[t + 1]) / utility_marginal(u, plan.c[t]))
    return out


@dataclass
class DeviationScan:
    best_improvement: float
    t: Optional[int]
    step: Optional[float]


def deviation_scan(problem, plan, steps=None):
    """Largest utility gain from moving a single S_t by a step, others fixed."""
    if steps is None:
        steps = np.concatenate([-np.logspace(-1, -8, 15), np.logspace(-8, -1, 15)])
    base = plan.utility
    best, where, how = 0.0, None, None
    for t in range(problem.T):
        if not problem.vehicle[t]:
            continue
        lo, hi = _bounds(problem, plan.S, t)
        width = hi - lo
        for h in steps:
            x = plan.S[t] + h * width
            if not lo <= x < hi:
                continue
            S = plan.S.copy()
            S[t] = x
            gain = problem.utility_of(problem.consumption(S)) - base
            if gain > best:
                best, where, how = gain, t, float(h * width)
    return DeviationScan(best, where, how)
