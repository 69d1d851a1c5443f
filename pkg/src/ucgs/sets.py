"""Compact convex sets with exact linear minimization oracles.

Every set is immutable. ``lmo`` methods are pure; the module-level
:func:`lmo`, :func:`wolfe_gap` and :func:`approx_lmo` take an optional
:class:`~ucgs.core.OracleCounters` and charge one call each.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from .core import FEAS_TOL, ContractError, OracleCounters, as_vector


class FeasibleSet:
    """Base class. Subclasses provide ``n``, ``lmo``, ``diameter``, ``contains``."""

    kind: str = ""
    n: int

    def lmo(self, c: np.ndarray) -> np.ndarray:
        return self._lmo(self._check(c))

    def _lmo(self, c: np.ndarray) -> np.ndarray:
        """Unvalidated oracle; ``c`` must already be a finite float vector."""
        raise NotImplementedError

    def diameter(self) -> float:
        raise NotImplementedError

    def diameter_squared(self) -> float:
        """D^2, exact where the closed form allows (so caps built from it are integers)."""
        return self.diameter() ** 2

    def contains(self, x: np.ndarray, tol: float = FEAS_TOL) -> bool:
        raise NotImplementedError

    def center(self) -> np.ndarray:
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """``size`` feasible points, one per row."""
        raise NotImplementedError

    def vertex(self) -> np.ndarray:
        """A canonical extreme point, used as the default start."""
        return self.lmo(np.ones(self.n))

    def _check(self, c) -> np.ndarray:
        c = np.asarray(c, dtype=np.float64)
        if c.shape != (self.n,):
            raise ContractError(f"direction has shape {c.shape}, expected ({self.n},)")
        if not np.isfinite(c).all():
            raise ContractError("direction contains non-finite entries")
        return c


class Simplex(FeasibleSet):
    """Probability simplex {x >= 0, sum x = 1}."""

    kind = "simplex"

    def __init__(self, n: int):
        if n < 1:
            raise ContractError("simplex dimension must be positive")
        self.n = int(n)

    def __repr__(self):
        return f"Simplex(n={self.n})"

    def _lmo(self, c):
        i = int(c.argmin())  # lowest index on ties
        if c[i] == 0.0 and not c.any():
            return self.center()
        v = np.zeros(self.n)
        v[i] = 1.0
        return v

    def diameter(self):
        return math.sqrt(2.0) if self.n > 1 else 0.0

    def diameter_squared(self):
        return 2.0 if self.n > 1 else 0.0

    def contains(self, x, tol=FEAS_TOL):
        x = np.asarray(x, dtype=np.float64)
        return bool(x.shape == (self.n,) and np.all(x >= -tol) and abs(x.sum() - 1.0) <= tol * max(1, self.n))

    def center(self):
        return np.full(self.n, 1.0 / self.n)

    def sample(self, rng, size):
        return rng.dirichlet(np.ones(self.n), size=size)


class L1Ball(FeasibleSet):
    """{x : ||x - center||_1 <= radius}."""

    kind = "l1ball"

    def __init__(self, center, radius: float):
        self._center = as_vector(center, name="center")
        if not radius > 0:
            raise ContractError("radius must be positive")
        self.radius = float(radius)
        self.n = self._center.shape[0]

    def __repr__(self):
        return f"L1Ball(n={self.n}, radius={self.radius})"

    def _lmo(self, c):
        i = int(np.abs(c).argmax())
        if c[i] == 0.0:
            return self.center()
        v = np.array(self._center)
        v[i] -= self.radius * math.copysign(1.0, c[i])
        return v

    def diameter(self):
        return 2.0 * self.radius

    def contains(self, x, tol=FEAS_TOL):
        x = np.asarray(x, dtype=np.float64)
        return bool(x.shape == (self.n,) and np.abs(x - self._center).sum() <= self.radius + tol * max(1.0, self.radius))

    def center(self):
        return np.array(self._center)

    def sample(self, rng, size):
        # Uniform on the l1 ball: drop one coordinate of a uniform simplex point in R^{n+1}.
        w = rng.dirichlet(np.ones(self.n + 1), size=size)[:, : self.n]
        signs = rng.choice([-1.0, 1.0], size=(size, self.n))
        return self._center + self.radius * signs * w


class Box(FeasibleSet):
    """{lo <= x <= hi} componentwise."""

    kind = "box"

    def __init__(self, lo, hi):
        self.lo = as_vector(lo, name="lo")
        self.hi = as_vector(hi, self.lo.shape[0], "hi")
        if not np.all(self.lo < self.hi):
            raise ContractError("box requires lo < hi componentwise")
        self.n = self.lo.shape[0]

    def __repr__(self):
        return f"Box(n={self.n})"

    def _lmo(self, c):
        if not c.any():
            return self.center()
        # zero components take lo, the first vertex in lexicographic order
        return np.where(c < 0.0, self.hi, self.lo)

    def diameter(self):
        return float(np.linalg.norm(self.hi - self.lo))

    def diameter_squared(self):
        d = self.hi - self.lo
        return float(d @ d)

    def contains(self, x, tol=FEAS_TOL):
        x = np.asarray(x, dtype=np.float64)
        return bool(x.shape == (self.n,) and np.all(x >= self.lo - tol) and np.all(x <= self.hi + tol))

    def center(self):
        return 0.5 * (self.lo + self.hi)

    def sample(self, rng, size):
        return rng.uniform(self.lo, self.hi, size=(size, self.n))


class L2Ball(FeasibleSet):
    """{x : ||x - center||_2 <= radius}."""

    kind = "l2ball"

    def __init__(self, center, radius: float):
        self._center = as_vector(center, name="center")
        if not radius > 0:
            raise ContractError("radius must be positive")
        self.radius = float(radius)
        self.n = self._center.shape[0]

    def __repr__(self):
        return f"L2Ball(n={self.n}, radius={self.radius})"

    def _lmo(self, c):
        nrm = float(np.linalg.norm(c))
        if nrm == 0.0:
            return self.center()
        return self._center - (self.radius / nrm) * c

    def diameter(self):
        return 2.0 * self.radius

    def contains(self, x, tol=FEAS_TOL):
        x = np.asarray(x, dtype=np.float64)
        return bool(x.shape == (self.n,) and np.linalg.norm(x - self._center) <= self.radius + tol * max(1.0, self.radius))

    def center(self):
        return np.array(self._center)

    def vertex(self):
        v = self.center()
        v[0] -= self.radius
        return v

    def sample(self, rng, size):
        d = rng.standard_normal((size, self.n))
        d /= np.linalg.norm(d, axis=1, keepdims=True)
        r = self.radius * rng.uniform(size=(size, 1)) ** (1.0 / self.n)
        return self._center + r * d


def lmo(set_: FeasibleSet, c, counters: Optional[OracleCounters] = None) -> np.ndarray:
    """Exact minimizer of <c, x> over the set."""
    if counters is not None:
        counters.lmo_calls += 1
    return set_.lmo(c)


def wolfe_gap(set_: FeasibleSet, g, u, counters: Optional[OracleCounters] = None):
    """Return ``(max_x <g, u - x>, argmin_x <g, x>)`` using one LMO call."""
    v = lmo(set_, g, counters)
    gap = float(np.dot(g, u) - np.dot(g, v))
    return gap, v


Budget = Union[float, Callable[[int], float]]


@dataclass(frozen=True)
class ApproxLmo:
    """Deterministic inexact LMO that spends its full error budget.

    ``error_budget`` is either a constant or a function of the call index ``t``.
    The returned point slides from the exact minimizer towards the maximizer
    until the linear suboptimality equals the budget (or the whole range).
    """

    base: FeasibleSet
    error_budget: Budget = 0.0

    def budget(self, t: int) -> float:
        b = self.error_budget
        delta = float(b(t)) if callable(b) else float(b)
        if delta < 0:
            raise ContractError(f"error budget must be nonnegative, got {delta}")
        return delta

    @classmethod
    def schedule(cls, base: FeasibleSet, sigma: float, beta: float) -> "ApproxLmo":
        """delta^t = sigma * beta * D^2 / t."""
        scale = sigma * beta * base.diameter_squared()
        return cls(base, lambda t: scale / t)


def approx_lmo(w: ApproxLmo, c, t: int, counters: Optional[OracleCounters] = None) -> np.ndarray:
    delta = w.budget(t)
    c = w.base._check(c)
    if counters is not None:
        counters.lmo_calls += 1
    v_best = w.base._lmo(c)
    if delta == 0.0:
        return v_best
    v_worst = w.base._lmo(-c)
    span = float(c @ v_worst - c @ v_best)
    if span <= 0.0:
        return v_best
    theta = min(delta, span) / span
    return (1.0 - theta) * v_best + theta * v_worst
