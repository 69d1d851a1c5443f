"""Universal conditional gradient sliding (UCGS).

Parameter-free: the smoothness estimate L_k comes from a doubling
backtracking search, gamma_k is fixed implicitly by
L_k gamma_k^2 / k = (1 - gamma_k) Gamma_{k-1}, and termination is certified
by an aggregated affine lower model of f.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np

from .core import ContractError, OracleCounters, ProblemInstance, SolverAbort, convex_combine
from .inner import InnerResult, ProjSubproblem, acgm_solve
from .objectives import CountedObjective
from .sets import ApproxLmo, FeasibleSet, approx_lmo
from .trace import RunTrace, TraceRow

L_MIN = 1e-12
# backtracking gives up once L exceeds max(L0, L_MIN) * 2**60
_L_GROWTH_LIMIT = 2.0**60


@dataclass
class LowerModel:
    """Affine under-estimator l(x) = c + <w, x> of f on X."""

    c: float
    w: np.ndarray
    k: int = 0

    @classmethod
    def empty(cls, n: int) -> "LowerModel":
        return cls(0.0, np.zeros(n), 0)

    def __call__(self, x) -> float:
        return self.c + float(np.dot(self.w, x))


def update_lower_model(model: LowerModel, gamma: float, z, fz: float, gz) -> LowerModel:
    """Mix in the tangent plane at z with weight gamma (gamma = 1 resets)."""
    if not 0.0 < gamma <= 1.0:
        raise ContractError(f"gamma={gamma} outside (0, 1]")
    c_new = fz - float(np.dot(gz, z))
    if gamma == 1.0:
        return LowerModel(c_new, np.array(gz, dtype=np.float64), model.k + 1)
    return LowerModel(
        (1.0 - gamma) * model.c + gamma * c_new,
        (1.0 - gamma) * model.w + gamma * gz,
        model.k + 1,
    )


def gamma_from_L(Gamma_prev: float, L: float, k: int) -> float:
    """Positive root of L g^2 / k = (1 - g) Gamma_prev."""
    if not (Gamma_prev > 0 and L > 0 and k >= 2):
        raise ContractError("gamma_from_L needs Gamma_prev > 0, L > 0, k >= 2")
    a = k * Gamma_prev
    # rationalized root (2a / (a + sqrt(a^2 + 4 L a))) avoids cancellation for large L
    return 2.0 * a / (a + math.sqrt(a * a + 4.0 * L * a))


def c_nu(nu: float) -> float:
    """Constant in the bound on L_k gamma_k^2."""
    if not 0.0 < nu <= 1.0:
        raise ContractError(f"nu must lie in (0, 1], got {nu}")
    s = (1.0 + 3.0 * nu) / (1.0 + nu)
    r = (1.0 - nu) / (1.0 + nu)
    # r**r -> 1 as nu -> 1
    rr = 1.0 if r == 0.0 else r**r
    return ((1.0 + 2.0 * nu) / (1.0 + 3.0 * nu)) ** s * rr * 2.0 ** ((4.0 + 10.0 * nu) / (1.0 + nu))


def L_ceiling(nu: float, M: float, eps: float, gamma: float) -> float:
    """2 ((1-nu)/((1+nu) eps gamma))^{(1-nu)/(1+nu)} M^{2/(1+nu)}."""
    r = (1.0 - nu) / (1.0 + nu)
    base = 1.0 if r == 0.0 else (r / (eps * gamma)) ** r
    return 2.0 * base * M ** (2.0 / (1.0 + nu))


def step_product_ceiling(nu: float, M: float, eps: float, k: int) -> float:
    """C_nu M^{2/(1+nu)} / (k^{(1+3nu)/(1+nu)} eps^{(1-nu)/(1+nu)})."""
    return c_nu(nu) * M ** (2.0 / (1.0 + nu)) / (k ** ((1.0 + 3.0 * nu) / (1.0 + nu)) * eps ** ((1.0 - nu) / (1.0 + nu)))


def grad_eval_bound(nu: float, M: float, D: float, eps: float, sigma: float) -> int:
    """ceil(16 ((3 + sigma)^{(1+nu)/2} M D^{1+nu} / eps)^{2/(1+3nu)})."""
    q = (3.0 + sigma) ** ((1.0 + nu) / 2.0) * M * D ** (1.0 + nu) / eps
    return math.ceil(16.0 * q ** (2.0 / (1.0 + 3.0 * nu)))


def lmo_call_bound(n_grad: int, sigma: float) -> int:
    """ceil((7 sigma / 2 + 3) N^2 + (7 sigma / 2 + 6) N)."""
    return math.ceil((3.5 * sigma + 3.0) * n_grad**2 + (3.5 * sigma + 6.0) * n_grad)


def certify_gap(model: LowerModel, f_y: float, set_: FeasibleSet, eps_k: float, counters: Optional[OracleCounters] = None):
    """Return ``(s, gap_bound)`` with f(y) - min_X f <= gap_bound.

    s minimizes the model over X up to ``eps_k``; the budget is added back so
    the bound stays sound.
    """
    s = approx_lmo(ApproxLmo(set_, eps_k), model.w, 1, counters)
    return s, f_y - model(s) + eps_k


@dataclass
class UcgsStepInfo:
    """Handed to callbacks after each accepted step."""

    k: int
    L: float
    gamma: float
    Gamma: float
    Gamma_prev: Optional[float]
    beta: float
    eta: float
    eps_k: float
    x_prev: np.ndarray
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    f_y: float
    model: LowerModel
    s: np.ndarray
    certified_gap: float
    inner_iterations: List[int]
    trials: int


@dataclass
class UcgsResult:
    y_final: np.ndarray
    f_final: float
    certified_gap: float
    converged: bool
    counters: OracleCounters
    trace: RunTrace
    accepted_grad_evals: int
    inner_iterations: List[List[int]] = field(default_factory=list)
    L_history: List[float] = field(default_factory=list)


@dataclass
class UcgsState:
    k: int
    L: float
    Gamma: float
    x: np.ndarray
    y: np.ndarray
    model: LowerModel
    counters: OracleCounters
    sigma: float
    epsilon: float
    gamma: float = 1.0


def _trial(state: UcgsState, obj: CountedObjective, X: FeasibleSet, D2: float, k: int, L: float, eta_scale: float):
    gamma = 1.0 if k == 1 else gamma_from_L(state.Gamma, L, k)
    z = convex_combine(state.y, state.x, gamma)
    gz = obj.grad(z)
    fz = obj.f(z)
    beta = L * gamma
    eta = L * gamma * D2 / k * eta_scale
    sub = ProjSubproblem(gz, beta, state.x, X, eta, state.sigma)
    # the guard follows the nominal cap so a corrupted eta is caught
    cap = 1 + math.ceil((7.0 * state.sigma + 6.0) * k)
    res = acgm_solve(sub, state.x, state.counters, guard=10 * cap)
    y_new = convex_combine(state.y, res.u_plus, gamma)
    f_y = obj.f(y_new)
    d = y_new - z
    rhs = fz + float(np.dot(gz, d)) + 0.5 * L * float(np.dot(d, d)) + 0.5 * state.epsilon * gamma
    return f_y <= rhs, gamma, z, fz, gz, beta, eta, res, y_new, f_y


def linesearch_step(
    state: UcgsState,
    obj: CountedObjective,
    X: FeasibleSet,
    D2: float,
    eta_scale: float = 1.0,
    L_limit: float = L_MIN * _L_GROWTH_LIMIT,
):
    """Find an acceptable L for step ``state.k + 1``.

    Steps k >= 2 start from L_{k-1} / 2 and double on failure. The first step
    starts at the initial guess and, if that is accepted, keeps halving until
    a trial fails, so L_1 / 2 is always known to be rejected (or L_1 sits at
    the floor). Returns ``(k, L, trial_output, n_trials, inner_results)``.
    """
    k = state.k + 1
    L = state.L if k == 1 else max(state.L / 2.0, L_MIN)
    inner: List[InnerResult] = []
    out = _trial(state, obj, X, D2, k, L, eta_scale)
    inner.append(out[7])
    if out[0] and k == 1:
        while L > L_MIN:
            L_half = max(L / 2.0, L_MIN)
            cand = _trial(state, obj, X, D2, k, L_half, eta_scale)
            inner.append(cand[7])
            if not cand[0]:
                break
            L, out = L_half, cand
    while not out[0]:
        L *= 2.0
        if L > L_limit:
            raise SolverAbort(
                f"backtracking exceeded L={L_limit:.3e} at step {k}; "
                "objective may violate the Hoelder assumption or epsilon <= 0"
            )
        out = _trial(state, obj, X, D2, k, L, eta_scale)
        inner.append(out[7])
    return k, L, out, len(inner), inner


def ucgs_run(
    problem: ProblemInstance,
    epsilon: float,
    sigma: float = 0.0,
    L0: float = 1.0,
    max_outer: int = 100_000,
    callback: Optional[Callable[[UcgsStepInfo], None]] = None,
    eta_scale: float = 1.0,
    timing: bool = False,
    lmo_budget: Optional[int] = None,
    cert_sigma: Optional[float] = None,
) -> UcgsResult:
    """Run UCGS until the certified gap drops to ``epsilon``.

    Needs neither the Hoelder exponent nor its constant. ``eta_scale`` scales
    every inner tolerance and exists only for fault injection. Once
    ``lmo_budget`` LMO calls are spent the run stops unconverged.
    ``cert_sigma`` sets the accuracy of the certificate LMO separately from
    the inner one (default: ``sigma``).
    """
    if not epsilon > 0:
        raise ContractError("epsilon must be positive")
    if cert_sigma is None:
        cert_sigma = sigma
    if sigma < 0 or cert_sigma < 0:
        raise ContractError("sigma must be nonnegative")
    if not L0 > 0:
        raise ContractError("L0 must be positive")
    counters = OracleCounters()
    obj = CountedObjective(problem.objective, counters)
    X = problem.set
    D2 = X.diameter_squared()
    x0 = problem.x0.copy()
    L_limit = max(L0, L_MIN) * _L_GROWTH_LIMIT
    state = UcgsState(0, L0, 1.0, x0, x0.copy(), LowerModel.empty(X.n), counters, sigma, epsilon)
    trace = RunTrace()
    inner_log: List[List[int]] = []
    L_hist: List[float] = []
    t0 = time.perf_counter_ns()
    certified = math.inf
    f_y = math.nan
    converged = False
    for _ in range(max_outer):
        x_prev = state.x
        Gamma_prev = state.Gamma if state.k >= 1 else None
        k, L, out, trials, inner = linesearch_step(state, obj, X, D2, eta_scale, L_limit)
        _, gamma, z, fz, gz, beta, eta, res, y_new, f_y = out
        Gamma = L * gamma**2 / k
        model = update_lower_model(state.model, gamma, z, fz, gz)
        # s_k accuracy sigma L gamma^2 D^2 / 2 (within the allowance sigma L gamma D^2 / 2)
        eps_k = 0.5 * cert_sigma * L * gamma**2 * D2
        s, certified = certify_gap(model, f_y, X, eps_k, counters)
        state = UcgsState(k, L, Gamma, res.u_plus, y_new, model, counters, sigma, epsilon, gamma)
        inner_log.append([r.iterations for r in inner])
        L_hist.append(L)
        true_gap = None if problem.fstar is None else f_y - problem.fstar
        trace.append(
            TraceRow(
                k=k,
                f_y=f_y,
                true_gap=true_gap,
                certified_gap=certified,
                L_k=L,
                gamma_k=gamma,
                beta_k=beta,
                eta_k=eta,
                inner_iters=res.iterations,
                lmo_calls_cum=counters.lmo_calls,
                grad_evals_cum=k,
                grad_evals_with_retries_cum=counters.grad_evals,
                wall_ns=time.perf_counter_ns() - t0 if timing else 0,
            )
        )
        if callback is not None:
            callback(
                UcgsStepInfo(
                    k, L, gamma, Gamma, Gamma_prev, beta, eta, eps_k, x_prev, res.u_plus, y_new, z, f_y,
                    model, s, certified, [r.iterations for r in inner], trials,
                )
            )
        if certified <= epsilon:
            converged = True
            break
        if lmo_budget is not None and counters.lmo_calls >= lmo_budget:
            break
    return UcgsResult(state.y, f_y, certified, converged, counters, trace, state.k, inner_log, L_hist)
