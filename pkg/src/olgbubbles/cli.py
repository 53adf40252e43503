"""Command-line runner: ``simulate``, ``sweep`` and ``verify``.

Configuration files are flat ``key = value`` text grouped under bracketed
section headers. Keys are lower_snake_case; anything unknown is rejected.
"""

import argparse
import configparser
import csv
import dataclasses
import math
import os
import re
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .bridge import FAILED, INCONCLUSIVE_TVC, VERIFIED, Verdict, verify_path as bridge_verify
from .bubbles import bubble_component_path
from .errors import ConfigError, NonEquilibriumPath, OLGError
from .primitives import (
    COBB_DOUGLAS,
    CONSTANT,
    EXPLICIT,
    GEOMETRIC,
    ISOELASTIC,
    LINEAR,
    LOG,
    ZERO,
    EconomyParams,
    SequenceSpec,
    Technology,
    Utility,
)
from .scenarios import (
    BUBBLELESS_KSTAR,
    BUBBLY_ASYMPTOTIC,
    BUBBLY_VANISHING,
    NON_EQUILIBRIUM,
    cobb_douglas_bubble_path,
    critical_bubble,
    exchange_log_dividend_path,
    fiat_continuum_path,
    linear_tech_path,
)
from .simulator import ERROR_ON_MULTIPLE, LARGEST, SMALLEST, build_path, residual_report, simulate_olg

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NON_EQUILIBRIUM = 2
EXIT_INCONCLUSIVE = 3

SCENARIOS = ("olg_general", "exchange_log", "fiat_continuum", "cobb_douglas_bubble", "linear_tech", "verify_path")
TRAJECTORY_HEADER = (
    "t", "K", "q", "p", "R", "w", "c_young", "c_old",
    "euler_resid", "price_resid", "fiat_resid", "resource_resid",
)
SECTIONS = {
    "scenario": {"name", "horizon", "output_dir", "root_policy", "model", "trajectory"},
    "utility": {"family", "beta", "sigma"},
    "technology": {"family", "a", "alpha", "b", "delta"},
    "initial": {"k0", "q0", "p0"},
    "dividends": {"kind", "c", "g", "values", "tail", "tail_ratio"},
    "endow_young": {"kind", "c", "g", "values", "tail", "tail_ratio"},
    "endow_old": {"kind", "c", "g", "values", "tail", "tail_ratio"},
    "sweep": {"variable", "min", "max", "count"},
}
KEY_RE = re.compile(r"^[a-z][a-z0-9_]*$")
CRITICAL_RE = re.compile(r"^\s*(?:([0-9.eE+-]+)\s*\*\s*)?critical\s*$")
VANISH_TOL = 1e-8


def fmt(x):
    """17 significant digits, enough to round-trip any double."""
    if x is None:
        return "none"
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


@dataclass(frozen=True)
class SweepSpec:
    variable: str
    lo: str
    hi: str
    count: int


@dataclass
class RunConfig:
    scenario: str
    horizon: int = 200
    utility: Optional[Utility] = None
    technology: Optional[Technology] = None
    dividends: SequenceSpec = ZERO
    endow_young: SequenceSpec = ZERO
    endow_old: SequenceSpec = ZERO
    K0: Optional[float] = None
    q0: str = "0"
    p0: str = "0"
    sweep: Optional[SweepSpec] = None
    output_dir: str = "out"
    root_policy: str = ERROR_ON_MULTIPLE
    model: Optional[str] = None
    trajectory: Optional[str] = None
    source: str = "<config>"
    lines: dict = field(default_factory=dict, repr=False)

    def line_of(self, section, key=None):
        return self.lines.get((section, key)) or self.lines.get((section, None))

    @property
    def model_scenario(self):
        return self.model if self.scenario == "verify_path" else self.scenario


def _line_index(text):
    """Map (section, key) -> 1-based line number."""
    out, section = {}, None
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line[0] in "#;":
            continue
        m = re.match(r"^\[([^\]]+)\]", line)
        if m:
            section = m.group(1).strip()
            out.setdefault((section, None), n)
            continue
        key = re.split(r"[=:]", line, maxsplit=1)[0].strip()
        out.setdefault((section, key), n)
    return out


def _number(value, section, key, lines, positive=False, nonneg=False):
    try:
        x = float(value)
    except ValueError:
        raise ConfigError(f"expected a number, got {value!r}", f"{section}.{key}", lines.get((section, key))) from None
    if not math.isfinite(x) or (positive and not x > 0.0) or (nonneg and x < 0.0):
        raise ConfigError(f"value {value!r} is out of range", f"{section}.{key}", lines.get((section, key)))
    return x


def _sequence(sec, name, lines):
    kind = sec.get("kind", CONSTANT)
    try:
        if kind == CONSTANT:
            return SequenceSpec.constant(_number(sec.get("c", "0"), name, "c", lines, nonneg=True))
        if kind == GEOMETRIC:
            return SequenceSpec.geometric(
                _number(sec.get("c", "0"), name, "c", lines, nonneg=True),
                _number(sec.get("g", "1"), name, "g", lines, positive=True),
            )
        if kind == EXPLICIT:
            if "values" not in sec:
                raise ConfigError("explicit sequences need values", f"{name}.values", lines.get((name, None)))
            vals = [_number(v, name, "values", lines, nonneg=True) for v in sec["values"].split(",")]
            ratio = sec.get("tail_ratio")
            return SequenceSpec.explicit(
                vals, sec.get("tail", CONSTANT),
                None if ratio is None else _number(ratio, name, "tail_ratio", lines, nonneg=True),
            )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc), f"{name}.kind", lines.get((name, "kind"))) from None
    raise ConfigError(f"unknown sequence kind {kind!r}", f"{name}.kind", lines.get((name, "kind")))


def parse_config(text, source="<config>"):
    """Parse configuration text into a RunConfig."""
    lines = _line_index(text)
    parser = configparser.ConfigParser(interpolation=None, default_section="__defaults__")
    parser.optionxform = str
    try:
        parser.read_string(text, source=source)
    except configparser.DuplicateOptionError as exc:
        raise ConfigError(f"duplicate key {exc.option!r}", f"{exc.section}.{exc.option}", exc.lineno) from None
    except configparser.DuplicateSectionError as exc:
        raise ConfigError(f"duplicate section {exc.section!r}", exc.section, exc.lineno) from None
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError("key outside any section", None, exc.lineno) from None
    except configparser.ParsingError as exc:
        lineno = exc.errors[0][0] if exc.errors else None
        raise ConfigError("unparseable line", None, lineno) from None

    for section in parser.sections():
        if section not in SECTIONS:
            raise ConfigError(f"unknown section [{section}]", section, lines.get((section, None)))
        for key in parser[section]:
            if not KEY_RE.match(key):
                raise ConfigError("keys must be lower_snake_case", f"{section}.{key}", lines.get((section, key)))
            if key not in SECTIONS[section]:
                raise ConfigError("unknown key", f"{section}.{key}", lines.get((section, key)))

    def sec(name):
        return dict(parser[name]) if parser.has_section(name) else {}

    scen = sec("scenario")
    if "name" not in scen:
        raise ConfigError("missing scenario name", "scenario.name", lines.get(("scenario", None)))
    name = scen["name"]
    if name not in SCENARIOS:
        raise ConfigError(f"unknown scenario {name!r}", "scenario.name", lines.get(("scenario", "name")))
    cfg = RunConfig(scenario=name, source=source, lines=lines)
    if "horizon" in scen:
        h = _number(scen["horizon"], "scenario", "horizon", lines)
        if h != int(h) or h < 2:
            raise ConfigError("horizon must be an integer >= 2", "scenario.horizon", lines.get(("scenario", "horizon")))
        cfg.horizon = int(h)
    cfg.output_dir = scen.get("output_dir", cfg.output_dir)
    policy = scen.get("root_policy", ERROR_ON_MULTIPLE)
    if policy not in (SMALLEST, LARGEST, ERROR_ON_MULTIPLE):
        raise ConfigError(f"unknown root policy {policy!r}", "scenario.root_policy", lines.get(("scenario", "root_policy")))
    cfg.root_policy = policy
    cfg.trajectory = scen.get("trajectory")
    cfg.model = scen.get("model")
    if name == "verify_path":
        if cfg.model not in SCENARIOS[:-1]:
            raise ConfigError("verify_path needs model set to a simulating scenario", "scenario.model",
                              lines.get(("scenario", "model"), lines.get(("scenario", None))))
    elif cfg.model is not None:
        raise ConfigError("model is only used by verify_path", "scenario.model", lines.get(("scenario", "model")))

    ut = sec("utility")
    if "beta" not in ut:
        raise ConfigError("missing discount factor", "utility.beta", lines.get(("utility", None)))
    beta = _number(ut["beta"], "utility", "beta", lines)
    family = ut.get("family", LOG)
    try:
        if family == LOG:
            cfg.utility = Utility.log(beta)
        elif family == ISOELASTIC:
            if "sigma" not in ut:
                raise ConfigError("isoelastic utility needs sigma", "utility.sigma", lines.get(("utility", None)))
            cfg.utility = Utility.crra(_number(ut["sigma"], "utility", "sigma", lines), beta)
        else:
            raise ConfigError(f"unknown utility family {family!r}", "utility.family", lines.get(("utility", "family")))
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc), "utility", lines.get(("utility", None))) from None

    tech = sec("technology")
    if tech:
        tfam = tech.get("family", COBB_DOUGLAS)
        delta = _number(tech.get("delta", "1"), "technology", "delta", lines)
        try:
            if tfam == COBB_DOUGLAS:
                for key in ("a", "alpha"):
                    if key not in tech:
                        raise ConfigError("missing technology parameter", f"technology.{key}", lines.get(("technology", None)))
                cfg.technology = Technology.cobb_douglas(
                    _number(tech["a"], "technology", "a", lines),
                    _number(tech["alpha"], "technology", "alpha", lines), delta)
            elif tfam == LINEAR:
                for key in ("a", "b"):
                    if key not in tech:
                        raise ConfigError("missing technology parameter", f"technology.{key}", lines.get(("technology", None)))
                cfg.technology = Technology.linear(
                    _number(tech["a"], "technology", "a", lines),
                    _number(tech["b"], "technology", "b", lines), delta)
            else:
                raise ConfigError(f"unknown technology family {tfam!r}", "technology.family", lines.get(("technology", "family")))
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(str(exc), "technology", lines.get(("technology", None))) from None

    for seq in ("dividends", "endow_young", "endow_old"):
        if parser.has_section(seq):
            setattr(cfg, seq, _sequence(sec(seq), seq, lines))

    init = sec("initial")
    if "k0" in init:
        cfg.K0 = _number(init["k0"], "initial", "k0", lines, nonneg=True)
    for key in ("q0", "p0"):
        if key in init:
            _price_value(init[key], key, cfg)
            setattr(cfg, key, init[key].strip())

    sw = sec("sweep")
    if sw:
        for key in ("variable", "min", "max", "count"):
            if key not in sw:
                raise ConfigError("incomplete sweep", f"sweep.{key}", lines.get(("sweep", None)))
        if sw["variable"] not in ("p0", "q0"):
            raise ConfigError("sweep variable must be p0 or q0", "sweep.variable", lines.get(("sweep", "variable")))
        count = _number(sw["count"], "sweep", "count", lines)
        if count != int(count) or count < 2:
            raise ConfigError("sweep count must be an integer >= 2", "sweep.count", lines.get(("sweep", "count")))
        for key in ("min", "max"):
            _price_value(sw[key], key, cfg, section="sweep")
        cfg.sweep = SweepSpec(sw["variable"], sw["min"].strip(), sw["max"].strip(), int(count))

    _check_required(cfg)
    return cfg


def _price_value(text, key, cfg, section="initial"):
    if CRITICAL_RE.match(text):
        return
    _number(text, section, key, cfg.lines, nonneg=True)


def _check_required(cfg):
    scen = cfg.model_scenario
    line = cfg.line_of

    def need(cond, fieldname, message):
        if not cond:
            sec = fieldname.split(".")[0]
            raise ConfigError(message, fieldname, line(sec, fieldname.split(".")[1]) or line("scenario"))

    if scen in ("cobb_douglas_bubble", "olg_general") and cfg.technology is not None:
        need(cfg.K0 is not None, "initial.k0", "production scenarios need K0")
    if scen == "cobb_douglas_bubble":
        need(cfg.technology is not None and cfg.technology.family == COBB_DOUGLAS,
             "technology.family", "needs Cobb-Douglas technology")
    if scen == "linear_tech":
        need(cfg.technology is not None and cfg.technology.family == LINEAR,
             "technology.family", "needs linear technology")
    if scen == "fiat_continuum":
        need(not cfg.endow_young.is_zero, "endow_young.kind", "needs young endowments")
    if scen == "exchange_log":
        need(not cfg.endow_young.is_zero, "endow_young.kind", "needs young endowments")
    if scen in ("exchange_log", "fiat_continuum"):
        need(cfg.technology is None, "technology.family", "exchange scenarios take no technology")
    if cfg.scenario == "verify_path" and cfg.trajectory is None:
        need(False, "scenario.trajectory", "verify_path needs a trajectory file")
    for key in ("q0", "p0"):
        if CRITICAL_RE.match(getattr(cfg, key)) and not (scen == "cobb_douglas_bubble" and key == "p0"):
            need(False, f"initial.{key}", "the critical sentinel applies only to p0 of cobb_douglas_bubble")


def load_config(path):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}") from None
    cfg = parse_config(text, source=path)
    if cfg.trajectory is not None and not os.path.isabs(cfg.trajectory):
        cfg.trajectory = os.path.join(os.path.dirname(os.path.abspath(path)), cfg.trajectory)
    return cfg


def resolve_price(cfg, text):
    m = CRITICAL_RE.match(text)
    if not m:
        return float(text)
    tech = cfg.technology
    b_bar = critical_bubble(tech.alpha, tech.A, cfg.utility.beta, cfg.K0)
    return (float(m.group(1)) if m.group(1) else 1.0) * b_bar


def build_params(cfg, K0=None):
    """EconomyParams implied by a config (for the model being run)."""
    scen = cfg.model_scenario
    k0 = cfg.K0 if K0 is None else K0
    try:
        if scen in ("exchange_log", "fiat_continuum"):
            return EconomyParams(cfg.utility, None, cfg.dividends if scen == "exchange_log" else ZERO,
                                 cfg.endow_young, cfg.endow_old)
        if scen == "cobb_douglas_bubble":
            return EconomyParams(Utility.log(cfg.utility.beta), cfg.technology, K0=k0)
        if scen == "linear_tech":
            if k0 is None:
                S = cfg.utility.beta / (1.0 + cfg.utility.beta) * cfg.technology.B
                k0 = S - resolve_price(cfg, cfg.q0) - resolve_price(cfg, cfg.p0)
            return EconomyParams(Utility.log(cfg.utility.beta), cfg.technology, cfg.dividends, K0=k0)
        return EconomyParams(cfg.utility, cfg.technology, cfg.dividends, cfg.endow_young,
                             cfg.endow_old, K0=k0 or 0.0)
    except ValueError as exc:
        raise ConfigError(str(exc), "initial.k0", cfg.line_of("initial", "k0")) from None


@dataclass
class RunOutcome:
    exit_code: int
    status: str
    classification: str
    path: Optional[object] = None
    params: Optional[EconomyParams] = None
    special_values: dict = field(default_factory=dict)
    verification: Optional[object] = None
    bubbles: Optional[object] = None
    residuals: Optional[object] = None
    failure: Optional[str] = None
    first_failure_t: Optional[int] = None
    initial: dict = field(default_factory=dict)


def classify_path(path):
    """Bubble classification of a finite path by its terminal bubble size.

    Prices are compared with the period's savings scale (young endowment,
    wage or capital), so growing economies are handled.
    """
    T = path.T
    report = bubble_component_path(path)
    bubble = np.abs(report.bubble_component) + path.p
    if np.all(bubble <= VANISH_TOL * np.maximum(1.0, np.abs(path.q))):
        return BUBBLELESS_KSTAR
    ey, _ = path.endowments()
    scale = max(ey[T], path.w[T], path.K[T] if path.K is not None else 0.0, 1e-300)
    return BUBBLY_VANISHING if bubble[T] / scale < VANISH_TOL else BUBBLY_ASYMPTOTIC


def _simulate(cfg, T):
    """Run the configured model; returns (path, params, classification, special)."""
    scen = cfg.model_scenario
    q0 = resolve_price(cfg, cfg.q0)
    p0 = resolve_price(cfg, cfg.p0)
    if scen == "cobb_douglas_bubble":
        t = cfg.technology
        res = cobb_douglas_bubble_path(t.alpha, t.A, cfg.utility.beta, cfg.K0, p0, T)
        return res.path, res.params, res.classification, res.special_values, res.first_failure_t
    if scen == "linear_tech":
        t = cfg.technology
        res = linear_tech_path(t.A, t.B, t.delta, cfg.utility.beta, cfg.dividends, q0, p0, T, cfg.K0)
        return res.path, res.params, res.classification, res.special_values, None
    if scen == "fiat_continuum":
        sigma = cfg.utility.curvature
        path = fiat_continuum_path(cfg.endow_young, cfg.endow_old, sigma, cfg.utility.beta, p0, T)
        ratio = path.p[1:] / path.p[:-1] if np.all(path.p > 0.0) else np.array([0.0])
        special = {"p_growth_ratio_min": float(ratio.min()), "p_growth_ratio_max": float(ratio.max())}
        special["p_growth_ratio"] = (
            float(ratio[0]) if np.all(np.abs(ratio - ratio[0]) <= 1e-12 * abs(ratio[0])) else "varying"
        )
        return path, path.params, classify_path(path), special, None
    params = build_params(cfg)
    if scen == "exchange_log":
        path = exchange_log_dividend_path(params, T)
    else:
        path = simulate_olg(params, q0, p0, T, cfg.root_policy)
    return path, params, classify_path(path), {}, None


def run_config(cfg, horizon=None, overrides=None):
    """Run one configuration without touching the file system."""
    if overrides:
        cfg = dataclasses.replace(cfg, **overrides)
    T = horizon or cfg.horizon
    initial = {"q0": cfg.q0, "p0": cfg.p0}
    try:
        if cfg.scenario == "verify_path":
            params, path = read_trajectory(cfg)
            classification, special, t_fail = classify_path(path), {}, None
        else:
            path, params, classification, special, t_fail = _simulate(cfg, T)
    except NonEquilibriumPath as exc:
        return RunOutcome(EXIT_NON_EQUILIBRIUM, "non_equilibrium", NON_EQUILIBRIUM,
                          failure=str(exc), first_failure_t=exc.t, initial=initial)
    except ConfigError:
        raise
    except OLGError as exc:
        return RunOutcome(EXIT_NON_EQUILIBRIUM, "non_equilibrium", NON_EQUILIBRIUM,
                          failure=str(exc), first_failure_t=getattr(exc, "t", None), initial=initial)
    if classification == NON_EQUILIBRIUM:
        return RunOutcome(EXIT_NON_EQUILIBRIUM, "non_equilibrium", NON_EQUILIBRIUM, path, params,
                          special, failure="path leaves the admissible region",
                          first_failure_t=t_fail, initial=initial)
    residuals = residual_report(params, path)
    try:
        report = bridge_verify(params, path)
        verdict = report.verdict
    except OLGError as exc:
        report, verdict = None, Verdict(FAILED, type(exc).__name__, getattr(exc, "t", None))
    code = {VERIFIED: EXIT_OK, INCONCLUSIVE_TVC: EXIT_INCONCLUSIVE}.get(verdict.status, EXIT_NON_EQUILIBRIUM)
    bubbles = bubble_component_path(path)
    return RunOutcome(code, str(verdict), classification, path, params, special, report, bubbles,
                      residuals, None if verdict.status != FAILED else verdict.reason,
                      verdict.t, initial)


def write_trajectory(path, residuals, filename):
    rows = residuals.records()
    K = path.K
    with open(filename, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRAJECTORY_HEADER)
        for t in range(path.T + 1):
            r = rows[t]
            writer.writerow([
                t,
                fmt(K[t]) if K is not None else "nan",
                fmt(path.q[t]), fmt(path.p[t]), fmt(path.R[t]), fmt(path.w[t]),
                fmt(path.c_young[t]), fmt(path.c_old[t]),
                fmt(r["euler"]), fmt(r["price"]), fmt(r["fiat"]), fmt(r["resource"]),
            ])


def read_trajectory(cfg):
    """Rebuild (params, path) from a trajectory file written by ``simulate``."""
    try:
        with open(cfg.trajectory, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise ConfigError(f"cannot read trajectory: {exc.strerror}", "scenario.trajectory",
                          cfg.line_of("scenario", "trajectory")) from None
    if not rows or tuple(rows[0]) != TRAJECTORY_HEADER:
        raise ConfigError("trajectory header mismatch", "scenario.trajectory", cfg.line_of("scenario", "trajectory"))
    data = np.array([[float(x) for x in row] for row in rows[1:]])
    col = {name: data[:, i] for i, name in enumerate(TRAJECTORY_HEADER)}
    T = len(data) - 1
    q, p = col["q"], col["p"]
    if np.all(np.isnan(col["K"])):
        params = build_params(cfg)
        return params, build_path(params, q, p, R=col["R"])
    params = build_params(cfg, K0=float(col["K"][0]))
    tech = params.technology
    ey = params.endow_young(T)
    K_next = ey + tech.wage(col["K"][T]) - q[T] - p[T] - col["c_young"][T]
    return params, build_path(params, q, p, K=np.append(col["K"], K_next))


def write_report(outcome, cfg, filename, horizon):
    out = []

    def section(name, items):
        out.append(f"[{name}]")
        for key, value in items:
            out.append(f"{key}={fmt(value)}")
        out.append("")

    section("run", [
        ("scenario", cfg.scenario),
        ("model", cfg.model_scenario),
        ("horizon", horizon),
        ("q0", outcome.initial.get("q0")),
        ("p0", outcome.initial.get("p0")),
        ("status", outcome.status),
        ("exit_code", outcome.exit_code),
        ("failure", outcome.failure),
        ("first_failure_t", outcome.first_failure_t),
    ])
    section("scenario", [("classification", outcome.classification)] + sorted(outcome.special_values.items()))
    if outcome.residuals is not None:
        section("residuals", [(f"{k}_max", v) for k, v in outcome.residuals.max.items()])
    rep = outcome.verification
    if rep is not None:
        items = [
            ("verdict", str(rep.verdict)),
            ("euler_equalities", rep.euler_equalities),
            ("foc_inequalities", rep.foc_inequalities),
            ("budget_residuals", rep.budget_residuals),
            ("clearing_residuals", rep.clearing_residuals),
            ("profit_residual", rep.profit_residual),
            ("pricing_residual", rep.pricing_residual),
            ("cs_violation", rep.cs_violation),
        ]
        for name, fit in (("tvc_even", rep.tvc_even), ("tvc_odd", rep.tvc_odd)):
            items += [
                (f"{name}_slope", fit.slope),
                (f"{name}_initial", fit.initial),
                (f"{name}_final", fit.final),
                (f"{name}_certified", fit.certified),
            ]
        items += [(f"note_{i}", n) for i, n in enumerate(rep.notes)]
        section("verification", items)
    b = outcome.bubbles
    if b is not None:
        section("bubbles", [
            ("montrucchio", b.montrucchio),
            ("pure_bubble", b.pure_bubble),
            ("fv_tail", b.tail),
            ("fv_0", b.fv[0]),
            ("bubble_component_0", b.bubble_component[0]),
            ("bubble_component_final", b.bubble_component[-1]),
            ("fiat_component_0", b.fiat_component[0]),
            ("fiat_component_final", b.fiat_component[-1]),
            ("recursion_residual", b.recursion_residual),
            ("sign_constant", b.sign_constant),
        ])
    with open(filename, "w") as fh:
        fh.write("\n".join(out))


def run_scenario(cfg, out_dir=None, horizon=None):
    """Run, then write ``trajectory.csv`` and ``report.txt``; returns the exit code."""
    T = horizon or cfg.horizon
    out_dir = out_dir or cfg.output_dir
    outcome = run_config(cfg, T)
    os.makedirs(out_dir, exist_ok=True)
    if outcome.path is not None and outcome.residuals is not None:
        write_trajectory(outcome.path, outcome.residuals, os.path.join(out_dir, "trajectory.csv"))
    write_report(outcome, cfg, os.path.join(out_dir, "report.txt"), T)
    return outcome.exit_code


def sweep_values(cfg):
    sw = cfg.sweep
    lo, hi = resolve_price(cfg, sw.lo), resolve_price(cfg, sw.hi)
    return [lo + (hi - lo) * i / (sw.count - 1) for i in range(sw.count)]


def _sweep_row(args):
    cfg, index, value, horizon = args
    outcome = run_config(cfg, horizon, {cfg.sweep.variable: fmt(value)})
    path = outcome.path
    limit_K = limit_q = limit_p = None
    if path is not None:
        limit_q, limit_p = float(path.q[-1]), float(path.p[-1])
        if path.K is not None:
            limit_K = float(path.K[path.T])
    return (index, value, outcome.classification, outcome.status, limit_K, limit_q, limit_p,
            outcome.first_failure_t)


SWEEP_HEADER = ("index", "value", "classification", "status", "limit_K", "limit_q", "limit_p", "first_failure_t")


def sweep_initial_prices(cfg, out_dir=None, horizon=None, jobs=1):
    """One row per grid point, written in grid order whatever the completion order."""
    if cfg.sweep is None:
        raise ConfigError("sweep section missing", "sweep", None)
    T = horizon or cfg.horizon
    out_dir = out_dir or cfg.output_dir
    tasks = [(cfg, i, v, T) for i, v in enumerate(sweep_values(cfg))]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_sweep_row, tasks))
    else:
        rows = [_sweep_row(task) for task in tasks]
    rows.sort(key=lambda r: r[0])
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "sweep.csv"), "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SWEEP_HEADER)
        for row in rows:
            writer.writerow([fmt(x) for x in row])
    return rows


def verify_path(cfg, out_dir=None, trajectory=None):
    """Re-verify a trajectory file under the config's economy."""
    if trajectory is not None:
        cfg = dataclasses.replace(cfg, trajectory=trajectory)
    if cfg.scenario != "verify_path":
        cfg = dataclasses.replace(cfg, model=cfg.scenario, scenario="verify_path")
    if cfg.trajectory is None:
        raise ConfigError("no trajectory given", "scenario.trajectory", cfg.line_of("scenario"))
    out_dir = out_dir or cfg.output_dir
    outcome = run_config(cfg)
    os.makedirs(out_dir, exist_ok=True)
    T = outcome.path.T if outcome.path is not None else None
    write_report(outcome, cfg, os.path.join(out_dir, "report.txt"), T)
    return outcome.exit_code


def build_parser():
    parser = argparse.ArgumentParser(prog="olgbubbles", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="verb", required=True)
    for verb in ("simulate", "sweep", "verify"):
        sp = sub.add_parser(verb)
        sp.add_argument("--config", required=True)
        sp.add_argument("--out", default=None)
        sp.add_argument("--horizon", type=int, default=None)
        sp.add_argument("--jobs", type=int, default=1)
        if verb == "verify":
            sp.add_argument("--trajectory", default=None)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.horizon is not None and args.horizon < 2:
            raise ConfigError("horizon must be >= 2", "--horizon")
        if args.jobs < 1:
            raise ConfigError("jobs must be >= 1", "--jobs")
        if args.verb == "simulate":
            return run_scenario(cfg, args.out, args.horizon)
        if args.verb == "sweep":
            sweep_initial_prices(cfg, args.out, args.horizon, args.jobs)
            return EXIT_OK
        return verify_path(cfg, args.out, args.trajectory)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
