"""Benchmark harness behind the command line: config, run, compare, certify.

Configs are flat ``key = value`` files; ``#`` starts a comment. Every run is
deterministic, so the same config always produces byte-identical CSV.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .core import ContractError, InnerGuardError, ProblemInstance, SolverAbort
from .gug import GugSchedule, gug_run
from .inner import ProjSubproblem, acgm_solve
from .objectives import make_instance
from .reference import fit_rate, ref_fstar, ref_min_phi
from .sets import ApproxLmo, Box, L1Ball, L2Ball, Simplex, approx_lmo
from .trace import RunTrace
from .universal import (
    L_ceiling,
    grad_eval_bound,
    lmo_call_bound,
    step_product_ceiling,
    ucgs_run,
)

EXIT_OK, EXIT_CONFIG, EXIT_ABORT, EXIT_CERTIFY = 0, 2, 3, 4

METHODS = ("cg", "gug-sliding", "ucgs")
DEFAULT_EPS_GRID = tuple(float(e) for e in np.geomspace(1e-1, 1e-4, 10))


class ConfigError(ContractError):
    """Bad config; the message names the offending line or field."""


def _bool(s: str) -> bool:
    t = s.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _floats(s: str) -> Tuple[float, ...]:
    return tuple(float(v) for v in s.split(",") if v.strip())


def _words(s: str) -> Tuple[str, ...]:
    return tuple(v.strip() for v in s.split(",") if v.strip())


# key -> (parser, default); None default means "unset"
SCHEMA = {
    "objective": (str, "quadratic"),
    "n": (int, 50),
    "rows": (int, None),
    "p": (float, 1.5),
    "seed": (int, 0),
    "set": (str, "simplex"),
    "radius": (float, 1.0),
    "start": (str, "vertex"),
    "method": (str, "ucgs"),
    "N": (int, 1000),
    "nu": (float, None),
    "M": (float, None),
    "epsilon": (float, None),
    "sigma": (float, 0.0),
    "cert_sigma": (float, None),
    "L0": (float, 1.0),
    "max_outer": (int, 100_000),
    "certify": (_bool, False),
    "timing": (_bool, False),
    "eta_scale": (float, 1.0),
    "methods": (_words, ("cg", "ucgs")),
    "eps_grid": (_floats, DEFAULT_EPS_GRID),
    "budget": (int, 1_000_000),
}


@dataclass
class RunConfig:
    values: Dict[str, object]
    origin: Dict[str, str]

    def __getitem__(self, key):
        return self.values[key]

    def given(self, key) -> bool:
        return key in self.origin

    def where(self, key) -> str:
        return self.origin.get(key, "default")


def _set_value(values, origin, key, raw, where):
    if key not in SCHEMA:
        raise ConfigError(f"{where}: unknown field {key!r}")
    parse = SCHEMA[key][0]
    try:
        values[key] = parse(raw.strip())
    except ValueError as exc:
        raise ConfigError(f"{where}: field {key!r}: {exc}") from None
    origin[key] = where


def parse_config(text: str = "", overrides: Sequence[str] = (), source: str = "config",
                 command: str = "run") -> RunConfig:
    """Parse config text plus ``KEY=VALUE`` overrides and validate them for ``command``."""
    values = {k: d for k, (_, d) in SCHEMA.items()}
    origin: Dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source} line {lineno}: expected key = value")
        key, raw = line.split("=", 1)
        _set_value(values, origin, key.strip(), raw, f"{source} line {lineno}")
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"--set {item!r}: expected KEY=VALUE")
        key, raw = item.split("=", 1)
        _set_value(values, origin, key.strip(), raw, f"--set {key.strip()}")
    cfg = RunConfig(values, origin)
    validate(cfg, command)
    return cfg


def _fail(cfg, key, msg):
    raise ConfigError(f"{cfg.where(key)}: field {key!r}: {msg}")


def validate(cfg: RunConfig, command: str = "run") -> None:
    v = cfg.values
    # compare uses the method list; run and certify use the single method
    used = tuple(v["methods"]) if command == "compare" else (v["method"],)
    if v["objective"] not in ("quadratic", "pnorm"):
        _fail(cfg, "objective", "choose quadratic or pnorm")
    if v["n"] < 1:
        _fail(cfg, "n", "must be positive")
    if v["rows"] is not None and v["rows"] < 1:
        _fail(cfg, "rows", "must be positive")
    if v["objective"] == "pnorm" and not 1.0 < v["p"] < 2.0:
        _fail(cfg, "p", "must lie in (1, 2)")
    if v["set"] not in ("simplex", "l1ball", "box", "l2ball"):
        _fail(cfg, "set", "choose simplex, l1ball, box or l2ball")
    if not v["radius"] > 0:
        _fail(cfg, "radius", "must be positive")
    if v["start"] not in ("vertex", "center"):
        _fail(cfg, "start", "choose vertex or center")
    if v["method"] not in METHODS:
        _fail(cfg, "method", f"choose from {', '.join(METHODS)}")
    if v["N"] < 1:
        _fail(cfg, "N", "must be positive")
    if v["epsilon"] is not None and not v["epsilon"] > 0:
        _fail(cfg, "epsilon", "must be positive")
    if v["sigma"] < 0:
        _fail(cfg, "sigma", "must be nonnegative")
    if v["cert_sigma"] is not None and v["cert_sigma"] < 0:
        _fail(cfg, "cert_sigma", "must be nonnegative")
    if not v["L0"] > 0:
        _fail(cfg, "L0", "must be positive")
    if not v["eta_scale"] > 0:
        _fail(cfg, "eta_scale", "must be positive")
    if v["budget"] < 1:
        _fail(cfg, "budget", "must be positive")
    for m in v["methods"]:
        if m not in METHODS:
            _fail(cfg, "methods", f"unknown method {m!r}")
    if any(not e > 0 for e in v["eps_grid"]) or not v["eps_grid"]:
        _fail(cfg, "eps_grid", "needs positive values")
    if used == ("ucgs",):
        for key in ("nu", "M"):
            if cfg.given(key):
                _fail(cfg, key, "ucgs is parameter-free and takes no smoothness constants")
    if cfg.given("nu") and not 0.0 < v["nu"] <= 1.0:
        _fail(cfg, "nu", "must lie in (0, 1]")
    if cfg.given("M") and not v["M"] > 0:
        _fail(cfg, "M", "must be positive")
    if "gug-sliding" in used:
        nu = v["nu"] if cfg.given("nu") else (1.0 if v["objective"] == "quadratic" else v["p"] - 1.0)
        if nu >= 1.0:
            key = "nu" if cfg.given("nu") else "objective"
            _fail(cfg, key, f"gug-sliding requires nu < 1, got nu = {nu:g}")


def build_instance(cfg: RunConfig) -> ProblemInstance:
    n, r = cfg["n"], cfg["radius"]
    kind = cfg["set"]
    if kind == "simplex":
        X = Simplex(n)
    elif kind == "l1ball":
        X = L1Ball(np.zeros(n), r)
    elif kind == "box":
        X = Box(-r * np.ones(n), r * np.ones(n))
    else:
        X = L2Ball(np.zeros(n), r)
    return make_instance(cfg["objective"], X, rows=cfg["rows"], p=cfg["p"], seed=cfg["seed"], start=cfg["start"])


def _schedule(cfg: RunConfig, prob: ProblemInstance, method: str) -> GugSchedule:
    obj = prob.objective
    if method == "cg":
        return GugSchedule("cg", obj.nu, obj.M)
    nu = cfg["nu"] if cfg.given("nu") else obj.nu
    M = cfg["M"] if cfg.given("M") else obj.M
    return GugSchedule("sliding", nu, M)


@dataclass
class RunOutcome:
    method: str
    trace: RunTrace
    converged: bool
    f_final: float
    certified_gap: Optional[float]
    lmo_calls: int
    grad_evals: int
    grad_evals_with_retries: int


def execute(cfg: RunConfig, method: Optional[str] = None, epsilon: Optional[float] = None,
            lmo_budget: Optional[int] = None) -> RunOutcome:
    """Run one method on the configured instance. May raise SolverAbort."""
    method = method or cfg["method"]
    eps = epsilon if epsilon is not None else cfg["epsilon"]
    prob = build_instance(cfg)
    if method == "ucgs":
        if eps is None:
            raise ConfigError("field 'epsilon': ucgs needs a target accuracy")
        r = ucgs_run(
            prob, eps, sigma=cfg["sigma"], L0=cfg["L0"], max_outer=cfg["max_outer"],
            eta_scale=cfg["eta_scale"], timing=cfg["timing"], lmo_budget=lmo_budget,
            cert_sigma=cfg["cert_sigma"],
        )
        return RunOutcome(method, r.trace, r.converged, r.f_final, r.certified_gap,
                          r.counters.lmo_calls, r.accepted_grad_evals, r.counters.grad_evals)
    certify = cfg["certify"] or eps is not None
    if eps is None:
        N = cfg["N"]
    else:
        # stopping on the certificate; the LMO budget, if any, bounds the run
        N = cfg["max_outer"] if lmo_budget is None else 10**9
    r = gug_run(prob, _schedule(cfg, prob, method), N, lmo_budget=lmo_budget, timing=cfg["timing"],
                certify=certify, stop_certified=eps)
    cert = r.trace[-1].certified_gap
    converged = eps is None or (cert is not None and cert <= eps)
    return RunOutcome(method, r.trace, converged, r.f_final, cert,
                      r.counters.lmo_calls, r.counters.grad_evals, r.counters.grad_evals)


def summary_line(out: RunOutcome) -> str:
    last = out.trace[-1]
    parts = [f"method={out.method}", f"k={last.k}", f"f_y={out.f_final:.6e}"]
    if last.true_gap is not None:
        parts.append(f"true_gap={last.true_gap:.6e}")
    if out.certified_gap is not None:
        parts.append(f"certified_gap={out.certified_gap:.6e}")
    parts += [
        f"converged={'yes' if out.converged else 'no'}",
        f"lmo_calls={out.lmo_calls}",
        f"grad_evals={out.grad_evals}",
        f"grad_evals_with_retries={out.grad_evals_with_retries}",
    ]
    return " ".join(parts)


# ---------------------------------------------------------------- compare


@dataclass
class CompareRow:
    method: str
    epsilon: float
    lmo_certified: Optional[int]
    lmo_true_gap: Optional[int]
    grad_evals: Optional[int]

    @property
    def censored(self) -> bool:
        return self.lmo_certified is None


def _first_hit(trace: RunTrace, column: str, eps: float):
    for row in trace:
        val = getattr(row, column)
        if val is not None and val <= eps:
            return row
    return None


def _compare_task(args) -> List[CompareRow]:
    cfg, method, eps_list = args
    budget = cfg["budget"]
    if method == "ucgs":
        rows = []
        for eps in eps_list:
            out = execute(cfg, "ucgs", eps, lmo_budget=budget)
            ok = out.converged and out.lmo_calls <= budget
            hit = _first_hit(out.trace, "true_gap", eps)
            rows.append(CompareRow(method, eps, out.lmo_calls if ok else None,
                                   hit.lmo_calls_cum if hit else None, out.grad_evals if ok else None))
        return rows
    # one certified run to the smallest target serves every epsilon
    out = execute(cfg, method, min(eps_list), lmo_budget=budget)
    rows = []
    for eps in eps_list:
        hit = _first_hit(out.trace, "certified_gap", eps)
        true_hit = _first_hit(out.trace, "true_gap", eps)
        ok = hit is not None and hit.lmo_calls_cum <= budget
        rows.append(CompareRow(method, eps, hit.lmo_calls_cum if ok else None,
                               true_hit.lmo_calls_cum if true_hit else None,
                               hit.grad_evals_cum if ok else None))
    return rows


@dataclass
class CompareReport:
    rows: List[CompareRow]
    slopes: Dict[str, Optional[float]]
    true_gap_slopes: Dict[str, Optional[float]]
    fitted: bool

    def slope_flag(self) -> Optional[bool]:
        a, b = self.slopes.get("ucgs"), self.slopes.get("cg")
        if a is None or b is None:
            return None
        return a < b

    def rows_for(self, method: str) -> List[CompareRow]:
        return [r for r in self.rows if r.method == method]

    def to_csv(self) -> str:
        lines = ["method,epsilon,lmo_certified,censored,lmo_true_gap,grad_evals"]
        for r in self.rows:
            cells = [r.method, "%.17g" % r.epsilon, "" if r.lmo_certified is None else str(r.lmo_certified),
                     "1" if r.censored else "0", "" if r.lmo_true_gap is None else str(r.lmo_true_gap),
                     "" if r.grad_evals is None else str(r.grad_evals)]
            lines.append(",".join(cells))
        return "\n".join(lines) + "\n"

    def render(self, budget: int) -> str:
        out = [f"{'method':<12} {'epsilon':>10} {'lmo(cert)':>12} {'lmo(true)':>12} {'grads':>8}"]
        for r in self.rows:
            cert = "censored" if r.censored else str(r.lmo_certified)
            true = "-" if r.lmo_true_gap is None else str(r.lmo_true_gap)
            grads = "-" if r.grad_evals is None else str(r.grad_evals)
            out.append(f"{r.method:<12} {r.epsilon:>10.3e} {cert:>12} {true:>12} {grads:>8}")
        out.append(f"censoring: runs that miss epsilon within {budget} LMO calls are excluded from the fits")
        if not self.fitted:
            out.append("fewer than 4 epsilon values: no slopes fitted")
            return "\n".join(out)
        for m, s in self.slopes.items():
            st = "n/a" if s is None else f"{s:.3f}"
            tg = self.true_gap_slopes.get(m)
            tgs = "n/a" if tg is None else f"{tg:.3f}"
            out.append(f"slope {m}: {st} (LMO calls vs 1/eps, certified gap); true-gap first hit: {tgs}")
        flag = self.slope_flag()
        out.append("ucgs slope below cg slope: " + ("n/a" if flag is None else ("yes" if flag else "no")))
        return "\n".join(out)


def _is_geometric(eps: Sequence[float]) -> bool:
    if len(eps) < 3:
        return True
    r = np.diff(np.log(np.asarray(eps)))
    return bool(np.all(np.abs(r - r[0]) <= 1e-6 * max(1.0, abs(r[0]))) and r[0] != 0.0)


def _slope(eps, counts) -> Optional[float]:
    pts = [(1.0 / e, c) for e, c in zip(eps, counts) if c is not None]
    if len(pts) < 4:
        return None
    return fit_rate([p[0] for p in pts], [p[1] for p in pts], 1.0, min_points=4)


def compare(cfg: RunConfig, jobs: int = 1) -> CompareReport:
    """LMO calls needed to reach each epsilon, per method, with fitted exponents."""
    methods = list(dict.fromkeys(cfg["methods"]))
    if len(methods) < 2:
        raise ConfigError(f"{cfg.where('methods')}: field 'methods': compare needs at least two methods")
    eps = list(cfg["eps_grid"])
    if not _is_geometric(eps):
        raise ConfigError(f"{cfg.where('eps_grid')}: field 'eps_grid': values must be geometrically spaced")
    tasks = [(cfg, m, eps) for m in methods]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_compare_task, tasks))
    else:
        results = [_compare_task(t) for t in tasks]
    rows = [r for chunk in results for r in chunk]
    fitted = len(eps) >= 4
    slopes, true_slopes = {}, {}
    if fitted:
        for m in methods:
            mine = [r for r in rows if r.method == m]
            slopes[m] = _slope([r.epsilon for r in mine], [r.lmo_certified for r in mine])
            true_slopes[m] = _slope([r.epsilon for r in mine], [r.lmo_true_gap for r in mine])
    return CompareReport(rows, slopes, true_slopes, fitted)


# ---------------------------------------------------------------- certify


@dataclass
class Verdict:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}: {self.detail}"


def _check_sets(prob, rng) -> List[Verdict]:
    X = prob.set
    pts = X.sample(rng, 500)
    worst_lmo, worst_approx, feas = -math.inf, -math.inf, True
    for _ in range(50):
        c = rng.standard_normal(X.n)
        v = X.lmo(c)
        feas &= X.contains(v, 1e-9)
        worst_lmo = max(worst_lmo, float(c @ v - np.min(pts @ c)))
        delta = float(rng.uniform(0.0, X.diameter()))
        w = approx_lmo(ApproxLmo(X, delta), c, 1)
        feas &= X.contains(w, 1e-9)
        worst_approx = max(worst_approx, float(c @ w - c @ v) - delta)
    return [
        Verdict("lmo optimality", worst_lmo <= 1e-12 and feas, f"max <c,v> - min sample = {worst_lmo:.2e}"),
        Verdict("approx lmo budget", worst_approx <= 1e-12, f"max excess over delta = {worst_approx:.2e}"),
    ]


def _check_objective(prob, rng) -> List[Verdict]:
    obj, X = prob.objective, prob.set
    worst = 0.0
    for x in X.sample(rng, 20):
        g = obj.grad(x)
        fd = np.empty_like(x)
        h = 1e-6
        for i in range(x.size):
            e = np.zeros_like(x)
            e[i] = h
            fd[i] = (obj.f(x + e) - obj.f(x - e)) / (2 * h)
        worst = max(worst, float(np.linalg.norm(fd - g) / max(np.linalg.norm(g), 1e-12)))
    tol = 1e-6 if obj.nu == 1.0 else 1e-4
    xs, ys = X.sample(rng, 200), X.sample(rng, 200)
    ratio = 0.0
    for a, b in zip(xs, ys):
        ratio = max(ratio, float(np.linalg.norm(obj.grad(a) - obj.grad(b)) / np.linalg.norm(a - b) ** obj.nu))
    return [
        Verdict("gradient vs finite differences", worst <= tol, f"max rel. error {worst:.2e} (tol {tol:g})"),
        Verdict("hoelder constant", ratio <= obj.M * (1 + 1e-9), f"observed {ratio:.3e} <= M = {obj.M:.3e}"),
    ]


def _check_inner(prob, rng, sigma) -> List[Verdict]:
    X = prob.set
    D = X.diameter()
    cap_bad = gap_bad = ref_bad = 0
    for _ in range(20):
        g = rng.standard_normal(X.n)
        beta = float(10 ** rng.uniform(-2, 1))
        eta = float(beta * D**2 * 10 ** rng.uniform(-2, 0))
        anchor = X.sample(rng, 1)[0]
        sub = ProjSubproblem(g, beta, anchor, X, eta, sigma)
        res = acgm_solve(sub, anchor)
        cap_bad += res.iterations > sub.iteration_cap()
        grad = g + beta * (res.u_plus - anchor)
        gap_bad += float(grad @ res.u_plus - grad @ X.lmo(grad)) > eta + 1e-12
        ref_bad += ref_min_phi(sub).value > sub.phi(res.u_plus) + 1e-9
    return [
        Verdict("inner iteration cap T", cap_bad == 0, f"{cap_bad} violations on 20 subproblems"),
        Verdict("inner wolfe gap <= eta", gap_bad == 0, f"{gap_bad} violations"),
        Verdict("reference phi below solver phi", ref_bad == 0, f"{ref_bad} violations"),
    ]


def _check_ucgs(cfg, prob, rng) -> List[Verdict]:
    eps = cfg["epsilon"] if cfg["epsilon"] is not None else 1e-3
    sigma = cfg["sigma"]
    X, obj = prob.set, prob.objective
    D = X.diameter()
    pts = X.sample(rng, 1000)
    f_pts = np.array([obj.f(x) for x in pts])
    fstar = ref_fstar(prob).value
    stats = {"cap": 0, "lower": -math.inf, "gamma": 0.0, "L": 0, "prod": 0, "k": 0}
    prev = {"Gamma": None}

    def check(info):
        cap = 1 + math.ceil((7 * sigma + 6) * info.k)
        stats["cap"] += sum(t > cap for t in info.inner_iterations)
        stats["lower"] = max(stats["lower"], float(np.max(info.model.c + pts @ info.model.w - f_pts)))
        if info.k >= 2:
            stats["gamma"] = max(stats["gamma"], abs(info.Gamma - (1 - info.gamma) * prev["Gamma"]) / prev["Gamma"])
        stats["L"] += info.L > L_ceiling(obj.nu, obj.M, eps, info.gamma) * (1 + 1e-12)
        stats["prod"] += info.L * info.gamma**2 > step_product_ceiling(obj.nu, obj.M, eps, info.k) * (1 + 1e-12)
        prev["Gamma"] = info.Gamma
        stats["k"] = info.k

    r = ucgs_run(prob, eps, sigma=sigma, L0=cfg["L0"], max_outer=cfg["max_outer"], callback=check,
                 eta_scale=cfg["eta_scale"], cert_sigma=cfg["cert_sigma"])
    trace = r.trace
    sound = min(row.certified_gap - (row.f_y - fstar) for row in trace)
    n_bound = grad_eval_bound(obj.nu, obj.M, D, eps, sigma)
    Ls = r.L_history
    retry_bound = n_bound * (2 + math.log2(max(Ls) / min(Ls)))
    mono = all(
        a.lmo_calls_cum <= b.lmo_calls_cum and a.grad_evals_with_retries_cum <= b.grad_evals_with_retries_cum
        for a, b in zip(trace, list(trace)[1:])
    )
    rt = RunTrace.from_csv(trace.to_csv()) == trace
    return [
        Verdict("ucgs terminates", r.converged and r.certified_gap <= eps,
                f"certified gap {r.certified_gap:.3e} <= {eps:g} after {r.accepted_grad_evals} steps"),
        Verdict("certified gap >= true gap", sound >= -1e-9, f"min margin {sound:.3e}"),
        Verdict("acgm cap 1 + ceil((7 sigma + 6) k)", stats["cap"] == 0, f"{stats['cap']} violations"),
        Verdict("lower model below f", stats["lower"] <= 1e-9, f"max l(x) - f(x) = {stats['lower']:.3e}"),
        Verdict("Gamma bookkeeping", stats["gamma"] <= 1e-12, f"max rel. mismatch {stats['gamma']:.2e}"),
        Verdict("L ceiling", stats["L"] == 0, f"{stats['L']} violations"),
        Verdict("L gamma^2 ceiling", stats["prod"] == 0, f"{stats['prod']} violations"),
        Verdict("gradient bound", r.accepted_grad_evals <= n_bound
                and r.counters.grad_evals <= retry_bound,
                f"{r.accepted_grad_evals} <= {n_bound}; with retries {r.counters.grad_evals} <= {retry_bound:.0f}"),
        Verdict("lmo bound", r.counters.lmo_calls <= lmo_call_bound(n_bound, sigma),
                f"{r.counters.lmo_calls} <= {lmo_call_bound(n_bound, sigma)}"),
        Verdict("trace counters nondecreasing", mono, f"{len(trace)} rows"),
        Verdict("csv round trip", rt, "parse(emit(trace)) == trace"),
    ]


def _check_guard(prob) -> Verdict:
    try:
        ucgs_run(prob, 1e-3, eta_scale=1e-6, max_outer=50)
    except InnerGuardError as exc:
        return Verdict("inner guard catches corrupted eta", True, str(exc).split(";")[0])
    return Verdict("inner guard catches corrupted eta", False, "no abort raised")


def certify(cfg: RunConfig) -> List[Verdict]:
    """Run every runnable invariant on the configured instance.

    A solver abort in the main run propagates to the caller.
    """
    prob = build_instance(cfg)
    rng = np.random.default_rng(cfg["seed"])
    out = _check_sets(prob, rng) + _check_objective(prob, rng) + _check_inner(prob, rng, cfg["sigma"])
    out += _check_ucgs(cfg, prob, rng)
    out.append(_check_guard(prob))
    return out


__all__ = [
    "ConfigError", "RunConfig", "parse_config", "build_instance", "execute", "summary_line",
    "compare", "CompareReport", "CompareRow", "certify", "Verdict", "SolverAbort",
    "EXIT_OK", "EXIT_CONFIG", "EXIT_ABORT", "EXIT_CERTIFY",
]
