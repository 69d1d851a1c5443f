"""Slow, independent reference solvers used to check production outputs.

Nothing here shares step-size or stopping logic with the solvers: the
projection subproblem is solved in closed form through a Euclidean
projection, and generic optimal values come from a plain open-loop
Frank-Wolfe run that keeps a running dual bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import ContractError, ProblemInstance
from .inner import ProjSubproblem
from .objectives import Quadratic
from .sets import Box, FeasibleSet, L1Ball, L2Ball, Simplex


@dataclass(frozen=True)
class RefSolution:
    x: np.ndarray
    value: float
    accuracy_estimate: float


def _project_simplex(v: np.ndarray, radius: float = 1.0) -> np.ndarray:
    # sort-based projection onto {x >= 0, sum x = radius}
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - radius
    idx = np.arange(1, v.size + 1)
    rho = np.nonzero(u - css / idx > 0)[0][-1]
    tau = css[rho] / (rho + 1.0)
    return np.maximum(v - tau, 0.0)


def project(set_: FeasibleSet, v) -> np.ndarray:
    """Euclidean projection of ``v`` onto one of the shipped sets."""
    v = np.asarray(v, dtype=np.float64)
    if isinstance(set_, Simplex):
        return _project_simplex(v)
    if isinstance(set_, Box):
        return np.clip(v, set_.lo, set_.hi)
    if isinstance(set_, L2Ball):
        c = set_.center()
        d = v - c
        nrm = float(np.linalg.norm(d))
        return v.copy() if nrm <= set_.radius else c + d * (set_.radius / nrm)
    if isinstance(set_, L1Ball):
        c = set_.center()
        d = v - c
        if np.abs(d).sum() <= set_.radius:
            return v.copy()
        return c + np.sign(d) * _project_simplex(np.abs(d), set_.radius)
    raise ContractError(f"no reference projection for {type(set_).__name__}")


def ref_min_phi(sub: ProjSubproblem) -> RefSolution:
    """Exact minimizer of phi over the set.

    For beta > 0 the minimizer is the projection of anchor - g / beta.
    ``accuracy_estimate`` is the exact Wolfe gap at the returned point, an
    upper bound on phi(x) - min phi.
    """
    if sub.set.n > 50:
        raise ContractError("reference solver is limited to n <= 50")
    if sub.beta > 0:
        x = project(sub.set, sub.anchor - sub.g / sub.beta)
    else:
        x = sub.set.lmo(sub.g)
    grad = sub.g + sub.beta * (x - sub.anchor)
    gap = float(grad @ x - grad @ sub.set.lmo(grad))
    return RefSolution(x, sub.phi(x), max(gap, 0.0))


def ref_fstar(problem: ProblemInstance, max_iter: int = 10_000_000, tol: float = 1e-9) -> RefSolution:
    """Optimal value of ``problem``.

    Instances built around a planted minimizer return it with value exactly
    ``problem.fstar``. A least-squares objective whose unconstrained minimizer
    is feasible is solved in closed form. Otherwise Frank-Wolfe with steps 2 / (t + 2) runs
    until the best dual bound is within ``tol`` of the best primal value;
    ``value`` is that dual bound, so it never exceeds the true optimum.
    """
    if problem.fstar is not None and problem.xstar is not None:
        return RefSolution(np.array(problem.xstar), float(problem.fstar), 0.0)
    obj, X = problem.objective, problem.set
    if isinstance(obj, Quadratic):
        x = np.linalg.lstsq(obj.A, obj.b, rcond=None)[0]
        if X.contains(x):
            g = obj.grad(x)
            gap = max(float(g @ (x - X.lmo(g))), 0.0)
            return RefSolution(x, obj.f(x) - gap, gap)
    x = np.array(problem.x0, dtype=np.float64)
    best_x, best_f, lower = x.copy(), math.inf, -math.inf
    for t in range(max_iter):
        fx = obj.f(x)
        g = obj.grad(x)
        v = X.lmo(g)
        lower = max(lower, fx - float(g @ (x - v)))
        if fx < best_f:
            best_x, best_f = x.copy(), fx
        if best_f - lower <= tol:
            break
        step = 2.0 / (t + 2.0)
        x = (1.0 - step) * x + step * v
    return RefSolution(best_x, lower, best_f - lower)


def fit_rate(xs: Sequence[float], ys: Sequence[float], tail_fraction: float = 1.0, min_points: int = 10) -> float:
    """Least-squares slope of log y against log x over the last part of the data."""
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if xs.shape != ys.shape or xs.ndim != 1:
        raise ContractError("xs and ys must be 1-D of equal length")
    if not 0.0 < tail_fraction <= 1.0:
        raise ContractError("tail_fraction must lie in (0, 1]")
    if np.any(ys <= 0.0) or np.any(xs <= 0.0):
        raise ContractError("fit_rate needs positive x and y")
    keep = int(math.ceil(tail_fraction * xs.size))
    xs, ys = xs[xs.size - keep :], ys[ys.size - keep :]
    if xs.size < min_points:
        raise ContractError(f"need at least {min_points} points, got {xs.size}")
    slope, _ = np.polyfit(np.log(xs), np.log(ys), 1)
    return float(slope)
