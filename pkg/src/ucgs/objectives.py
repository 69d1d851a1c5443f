"""Convex test objectives with known Hoelder constants."""

from __future__ import annotations

from typing import Optional

import numpy as np

from .core import ContractError, OracleCounters, ProblemInstance
from .sets import FeasibleSet


class Objective:
    """f(x) built from the residual r = A x - b.

    Subclasses set ``nu`` and ``M`` such that
    ||grad f(x) - grad f(y)|| <= M ||x - y||^nu on the whole space.
    """

    nu: float
    M: float

    def __init__(self, A, b):
        A = np.array(A, dtype=np.float64)
        b = np.array(b, dtype=np.float64)
        if A.ndim != 2 or b.shape != (A.shape[0],):
            raise ContractError(f"incompatible shapes A{A.shape}, b{b.shape}")
        A.setflags(write=False)
        b.setflags(write=False)
        self.A, self.b = A, b
        self.n = A.shape[1]

    def residual(self, x):
        return self.A @ x - self.b

    def f(self, x) -> float:
        raise NotImplementedError

    def grad(self, x) -> np.ndarray:
        raise NotImplementedError


class Quadratic(Objective):
    """f(x) = 1/2 ||A x - b||^2, Lipschitz gradient (nu = 1, M = lambda_max(A^T A))."""

    kind = "quadratic"

    def __init__(self, A, b):
        super().__init__(A, b)
        self.nu = 1.0
        self.M = float(np.linalg.norm(self.A, 2) ** 2)

    def f(self, x):
        r = self.residual(x)
        return 0.5 * float(r @ r)

    def grad(self, x):
        return self.A.T @ self.residual(x)


class PNormResidual(Objective):
    """f(x) = (1/p) sum_i |a_i^T x - b_i|^p with 1 < p < 2.

    The gradient is (p - 1)-Hoelder. With psi(t) = |t|^{p-1} sign(t),
    |psi(s) - psi(t)| <= 2^{2-p} |s - t|^{p-1}; summing over m rows costs a
    further m^{(2-p)/2}, and the two factors of A give ||A||^p. Hence
    M = 2^{2-p} m^{(2-p)/2} ||A||_2^p.
    """

    kind = "pnorm"

    def __init__(self, A, b, p: float):
        super().__init__(A, b)
        if not 1.0 < p < 2.0:
            raise ContractError(f"p must lie in (1, 2), got {p}")
        self.p = float(p)
        self.nu = self.p - 1.0
        m = self.A.shape[0]
        self.M = float(2.0 ** (2.0 - p) * m ** ((2.0 - p) / 2.0) * np.linalg.norm(self.A, 2) ** p)

    def f(self, x):
        r = self.residual(x)
        return float(np.sum(np.abs(r) ** self.p)) / self.p

    def grad(self, x):
        r = self.residual(x)
        return self.A.T @ (np.abs(r) ** (self.p - 1.0) * np.sign(r))


class CountedObjective:
    """Wraps an objective, charging every evaluation to ``counters``.

    A gradient request at a point bit-identical to the previous request is
    served from cache and not charged again.
    """

    def __init__(self, inner: Objective, counters: Optional[OracleCounters] = None):
        self.inner = inner
        self.counters = counters if counters is not None else OracleCounters()
        self._key = None
        self._g = None

    @property
    def nu(self):
        return self.inner.nu

    @property
    def M(self):
        return self.inner.M

    def f(self, x) -> float:
        self.counters.f_evals += 1
        return self.inner.f(x)

    def grad(self, x) -> np.ndarray:
        key = np.asarray(x, dtype=np.float64).tobytes()
        if key != self._key:
            self._g = self.inner.grad(x)
            self._key = key
            self.counters.grad_evals += 1
        return self._g


def eval_f(obj, x) -> float:
    return obj.f(x)


def eval_grad(obj, x) -> np.ndarray:
    return obj.grad(x)


def estimate_holder(obj: Objective, set_: FeasibleSet, nu: float, samples: int, seed=0) -> float:
    """Largest observed ||grad f(x) - grad f(y)|| / ||x - y||^nu over random feasible pairs.

    A lower bound on the true Hoelder constant; reproducible for a fixed seed.
    """
    if samples < 2:
        raise ContractError("need at least two samples")
    rng = np.random.default_rng(seed)
    xs = set_.sample(rng, samples)
    ys = set_.sample(rng, samples)
    best = 0.0
    for x, y in zip(xs, ys):
        d = float(np.linalg.norm(x - y))
        if d == 0.0:
            continue
        ratio = float(np.linalg.norm(obj.grad(x) - obj.grad(y))) / d**nu
        best = max(best, ratio)
    return best


def make_instance(
    kind: str,
    set_: FeasibleSet,
    rows: Optional[int] = None,
    p: float = 1.5,
    seed: int = 0,
    start: str = "vertex",
    normalize: bool = True,
) -> ProblemInstance:
    """Random instance with a known minimizer and optimal value zero.

    A has Gaussian entries scaled by 1/sqrt(rows); the planted minimizer is
    drawn from the interior of ``set_`` and b = A xbar, so f(xbar) = 0.
    With ``normalize`` A is rescaled so that M D^{1+nu} = 1, which makes
    ``epsilon`` a relative accuracy.
    """
    rng = np.random.default_rng(seed)
    n = set_.n
    m = n if rows is None else int(rows)
    A = rng.standard_normal((m, n)) / np.sqrt(m)
    # shrink a random sample towards the center so xbar sits in the relative interior
    xbar = 0.5 * set_.center() + 0.5 * set_.sample(rng, 1)[0]
    if kind == "quadratic":
        build = Quadratic
    elif kind == "pnorm":
        def build(A_, b_):
            return PNormResidual(A_, b_, p)
    else:
        raise ContractError(f"unknown objective kind {kind!r}")
    obj = build(A, A @ xbar)
    if normalize:
        # M is homogeneous of degree 1 + nu in A
        scale = (obj.M * set_.diameter() ** (1.0 + obj.nu)) ** (-1.0 / (1.0 + obj.nu))
        A = A * scale
        obj = build(A, A @ xbar)
    if start == "vertex":
        x0 = set_.vertex()
    elif start == "center":
        x0 = set_.center()
    else:
        raise ContractError(f"unknown start {start!r}")
    return ProblemInstance(obj, set_, x0, fstar=0.0, xstar=xbar)
