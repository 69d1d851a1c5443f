"""Frank-Wolfe solvers for the quadratic projection subproblem.

The subproblem is  min_{u in X} phi(u) = <g, u> + (beta/2) ||u - anchor||^2.
Both procedures stop on a Wolfe-gap certificate; one LMO per iteration
serves both the certificate and the step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .core import ContractError, InnerGuardError, OracleCounters
from .sets import ApproxLmo, FeasibleSet, approx_lmo, lmo


@dataclass(frozen=True)
class ProjSubproblem:
    g: np.ndarray
    beta: float
    anchor: np.ndarray
    set: FeasibleSet
    eta: float
    sigma: float = 0.0

    def __post_init__(self):
        if self.beta < 0:
            raise ContractError(f"beta must be nonnegative, got {self.beta}")
        if self.sigma < 0:
            raise ContractError(f"sigma must be nonnegative, got {self.sigma}")
        if self.eta < 0:
            raise ContractError(f"eta must be nonnegative, got {self.eta}")

    def phi(self, u) -> float:
        d = u - self.anchor
        return float(np.dot(self.g, u)) + 0.5 * self.beta * float(np.dot(d, d))

    def iteration_cap(self) -> float:
        """T = 1 + ceil((7 sigma + 6) beta D^2 / eta); infinite when eta = 0."""
        num = (7.0 * self.sigma + 6.0) * self.beta * self.set.diameter_squared()
        if num == 0.0:
            return 1
        if self.eta == 0.0:
            return math.inf
        return 1 + math.ceil(num / self.eta)


@dataclass
class InnerResult:
    u_plus: np.ndarray
    iterations: int
    lmo_calls_used: int
    final_certified_gap: float
    steps: int = 0
    converged: bool = True
    # exact Wolfe gaps of u^0, u^1, ... (only filled when recording)
    gap_history: List[float] = field(default_factory=list)
    phi_history: List[float] = field(default_factory=list)


def phi_grad(sub: ProjSubproblem, u) -> np.ndarray:
    return sub.g + sub.beta * (u - sub.anchor)


def exact_linesearch_alpha(u, v, sub: ProjSubproblem, grad_u=None) -> float:
    """Minimizer of phi((1 - a) u + a v) over a in [0, 1]."""
    d = v - u
    dd = float(np.dot(d, d))
    if dd == 0.0:
        return 0.0
    if grad_u is None:
        grad_u = phi_grad(sub, u)
    descent = -float(np.dot(grad_u, d))
    if descent <= 0.0:
        return 0.0
    curv = sub.beta * dd
    if curv == 0.0 or descent >= curv:
        return 1.0
    return descent / curv


_RULES = ("exact_linesearch", "open_loop_2_over_t1", "first_step_full")


def _fw_loop(
    sub: ProjSubproblem,
    u0,
    alpha_rule: str,
    oracle: Optional[ApproxLmo],
    counters: Optional[OracleCounters],
    max_iter: Optional[int],
    guard: Optional[float],
    record: bool,
) -> InnerResult:
    if alpha_rule not in _RULES:
        raise ContractError(f"unknown alpha rule {alpha_rule!r}")
    if guard is None:
        guard = 10 * max(sub.iteration_cap(), 2)
    u = np.array(u0, dtype=np.float64)
    g, beta, anchor, eta = sub.g, sub.beta, sub.anchor, sub.eta
    gaps, phis = [], []
    t = 0
    while True:
        t += 1
        if max_iter is not None and t > max_iter:
            return InnerResult(u, t - 1, t - 1, math.inf, t - 1, False, gaps, phis)
        if t > guard:
            raise InnerGuardError(
                f"inner loop exceeded {guard} iterations (beta={sub.beta:.3e}, eta={sub.eta:.3e}); "
                "tolerance configuration cannot be met"
            )
        grad = g + beta * (u - anchor)
        if record:
            exact_gap = float(np.dot(grad, u) - np.dot(grad, sub.set.lmo(grad)))
            gaps.append(exact_gap)
            phis.append(sub.phi(u))
        if oracle is None:
            delta = 0.0
            v = lmo(sub.set, grad, counters)
        else:
            delta = oracle.budget(t)
            v = approx_lmo(oracle, grad, t, counters)
        d = v - u
        gap_v = -float(grad @ d)
        if gap_v <= eta - delta:
            return InnerResult(u, t, t, gap_v + delta, t - 1, True, gaps, phis)
        if alpha_rule == "open_loop_2_over_t1":
            alpha = 2.0 / (t + 1)
        elif alpha_rule == "first_step_full" and t == 1:
            alpha = 1.0
        else:
            # exact linesearch, inlined
            curv = beta * float(d @ d)
            if gap_v <= 0.0:
                alpha = 0.0
            else:
                alpha = 1.0 if curv <= gap_v else gap_v / curv
        u = u + alpha * d


def cgm_solve(
    sub: ProjSubproblem,
    u0,
    alpha_rule: str = "exact_linesearch",
    counters: Optional[OracleCounters] = None,
    max_iter: Optional[int] = None,
    guard: Optional[float] = None,
    record: bool = False,
) -> InnerResult:
    """Plain conditional gradient on phi with exact LMOs.

    Loop: v^t = lmo(grad phi(u^{t-1})); stop with u^{t-1} once
    <grad phi(u^{t-1}), u^{t-1} - v^t> <= eta; otherwise step towards v^t.
    ``first_step_full`` forces alpha^1 = 1 and then uses exact linesearch.
    ``max_iter`` stops early without raising (returns ``converged=False``);
    ``guard`` defaults to ten times the theoretical iteration cap and raises.
    """
    return _fw_loop(sub, u0, alpha_rule, None, counters, max_iter, guard, record)


def acgm_solve(
    sub: ProjSubproblem,
    u0,
    counters: Optional[OracleCounters] = None,
    max_iter: Optional[int] = None,
    guard: Optional[float] = None,
    record: bool = False,
) -> InnerResult:
    """Conditional gradient with inexact LMOs of accuracy sigma beta D^2 / t.

    The stopping test <grad phi(u), u - v^t> <= eta - delta^t certifies the
    exact Wolfe gap of the returned point is at most eta. Steps use exact
    linesearch.
    """
    oracle = None
    if sub.sigma > 0.0:
        oracle = ApproxLmo.schedule(sub.set, sub.sigma, sub.beta)
    return _fw_loop(sub, u0, "exact_linesearch", oracle, counters, max_iter, guard, record)
