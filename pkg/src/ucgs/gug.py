"""Generalized universal gradient outer loop with Frank-Wolfe subproblem solves.

Three parameter regimes share the same outer recursion::

    z_k = (1 - gamma_k) y_{k-1} + gamma_k x_{k-1}
    x_k ~ argmin_X <grad f(z_k), u> + (beta_k / 2) ||u - x_{k-1}||^2   (to Wolfe gap eta_k)
    y_k = (1 - gamma_k) y_{k-1} + gamma_k x_k

with gamma_k = 2 / (k + 1).
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np

from .core import ContractError, OracleCounters, ProblemInstance, convex_combine
from .inner import ProjSubproblem, cgm_solve
from .objectives import CountedObjective
from .sets import lmo
from .trace import RunTrace, TraceRow
from .universal import LowerModel, update_lower_model

REGIMES = ("cg", "cg_equiv", "sliding")


@dataclass(frozen=True)
class GugSchedule:
    """Parameter schedule.

    ``cg``: beta_k = eta_k = 0 (one exact LMO step per iteration).
    ``cg_equiv``: beta_k = M gamma_k^nu / D^{1-nu}, eta_k = 6 beta_k D^2.
    ``sliding``: beta_k = M k^{(1-3nu)/2} / D^{1-nu}, eta_k = 6 beta_k D^2 / k.
    """

    regime: str = "cg"
    nu: float = 1.0
    M: float = 1.0

    def __post_init__(self):
        if self.regime not in REGIMES:
            raise ContractError(f"unknown regime {self.regime!r}; choose from {REGIMES}")
        if not 0.0 < self.nu <= 1.0:
            raise ContractError(f"nu must lie in (0, 1], got {self.nu}")
        if self.regime == "sliding" and self.nu >= 1.0:
            raise ContractError("the sliding schedule requires nu < 1")
        if self.regime != "cg" and not self.M > 0:
            raise ContractError("M must be positive")

    @staticmethod
    def gamma(k: int) -> float:
        return 2.0 / (k + 1)

    def beta(self, k: int, D: float) -> float:
        if self.regime == "cg":
            return 0.0
        if self.regime == "cg_equiv":
            return self.M * self.gamma(k) ** self.nu / D ** (1.0 - self.nu)
        return self.M * k ** ((1.0 - 3.0 * self.nu) / 2.0) / D ** (1.0 - self.nu)

    def eta(self, k: int, D: float) -> float:
        if self.regime == "cg":
            return 0.0
        if self.regime == "cg_equiv":
            return 6.0 * self.beta(k, D) * D * D
        return 6.0 * self.beta(k, D) * D * D / k


@dataclass
class StepInfo:
    """Everything a callback may want to check about one outer step."""

    k: int
    gamma: float
    beta: float
    eta: float
    x_prev: np.ndarray
    x: np.ndarray
    y_prev: np.ndarray
    y: np.ndarray
    z: np.ndarray
    f_y: float
    f_y_prev: float
    inner_iterations: int
    inner_steps: int


@dataclass
class GugResult:
    y_final: np.ndarray
    y_best: np.ndarray
    f_final: float
    f_best: float
    counters: OracleCounters
    trace: RunTrace
    inner_iterations: List[int] = field(default_factory=list)
    inner_steps: List[int] = field(default_factory=list)


def xi_k(k: int, nu: float, M: float, beta_k: float, gamma_k: float) -> float:
    """Young's-inequality remainder (1-nu)/(2(1+nu)) M^{2/(1-nu)} (gamma/beta)^{(1+nu)/(1-nu)}."""
    if not 0.0 < nu < 1.0:
        raise ContractError(f"xi_k needs nu in (0, 1), got {nu}")
    if not beta_k > 0:
        raise ContractError("xi_k needs beta_k > 0")
    return (1.0 - nu) / (2.0 * (1.0 + nu)) * M ** (2.0 / (1.0 - nu)) * (gamma_k / beta_k) ** ((1.0 + nu) / (1.0 - nu))


def sliding_nominal_counts(nu: float, M: float, D: float, eps: float):
    """Order-of-magnitude gradient and LMO counts for the sliding schedule.

    Returns ``(q^{2/(1+3nu)}, q^{4/(1+3nu)})`` with q = M D^{1+nu} / eps.
    """
    q = M * D ** (1.0 + nu) / eps
    n_grad = q ** (2.0 / (1.0 + 3.0 * nu))
    return n_grad, n_grad**2


def gug_run(
    problem: ProblemInstance,
    schedule: GugSchedule,
    N: int,
    alpha_rule: str = "exact_linesearch",
    callback: Optional[Callable[[StepInfo], None]] = None,
    lmo_budget: Optional[int] = None,
    stop_gap: Optional[float] = None,
    timing: bool = False,
    certify: bool = False,
    stop_certified: Optional[float] = None,
) -> GugResult:
    """Run N outer iterations of the schedule from ``problem.x0``.

    ``lmo_budget`` and ``stop_gap`` (true gap, needs ``problem.fstar``) end the
    run early; both exist for benchmark harnesses.

    With ``certify`` the run also keeps the affine lower model
    l_k = (1 - gamma_k) l_{k-1} + gamma_k (tangent plane at z_k) and reports
    f(y_k) - min_X l_k, at the price of one extra LMO and one function value
    per step. ``stop_certified`` ends the run once that gap is small enough.
    """
    if stop_certified is not None:
        certify = True
    if N < 1:
        raise ContractError("N must be at least 1")
    counters = OracleCounters()
    obj = CountedObjective(problem.objective, counters)
    X = problem.set
    D = X.diameter()
    x = problem.x0.copy()
    y = problem.x0.copy()
    f_y = obj.f(y)
    y_best, f_best = y.copy(), f_y
    trace = RunTrace()
    model = LowerModel.empty(X.n)
    certified = None
    iters, steps = [], []
    t0 = time.perf_counter_ns()
    for k in range(1, N + 1):
        gamma = schedule.gamma(k)
        beta = schedule.beta(k, D)
        eta = schedule.eta(k, D)
        z = convex_combine(y, x, gamma)
        g = obj.grad(z)
        if certify:
            model = update_lower_model(model, gamma, z, obj.f(z), g)
        if schedule.regime == "cg":
            x_new = lmo(X, g, counters)
            n_iter = n_steps = 1
        else:
            sub = ProjSubproblem(g, beta, x, X, eta)
            res = cgm_solve(sub, x, alpha_rule, counters)
            x_new = res.u_plus
            n_iter, n_steps = res.iterations, res.steps
        y_new = convex_combine(y, x_new, gamma)
        f_prev = f_y
        f_y = obj.f(y_new)
        if certify:
            certified = f_y - model(lmo(X, model.w, counters))
        if callback is not None:
            callback(StepInfo(k, gamma, beta, eta, x, x_new, y, y_new, z, f_y, f_prev, n_iter, n_steps))
        x, y = x_new, y_new
        if f_y < f_best:
            y_best, f_best = y.copy(), f_y
        iters.append(n_iter)
        steps.append(n_steps)
        true_gap = None if problem.fstar is None else f_y - problem.fstar
        trace.append(
            TraceRow(
                k=k,
                f_y=f_y,
                true_gap=true_gap,
                certified_gap=certified,
                L_k=None,
                gamma_k=gamma,
                beta_k=beta,
                eta_k=eta,
                inner_iters=n_iter,
                lmo_calls_cum=counters.lmo_calls,
                grad_evals_cum=counters.grad_evals,
                grad_evals_with_retries_cum=counters.grad_evals,
                wall_ns=time.perf_counter_ns() - t0 if timing else 0,
            )
        )
        if lmo_budget is not None and counters.lmo_calls >= lmo_budget:
            break
        if stop_gap is not None and true_gap is not None and true_gap <= stop_gap:
            break
        if stop_certified is not None and certified <= stop_certified:
            break
    return GugResult(y, y_best, f_y, f_best, counters, trace, iters, steps)

