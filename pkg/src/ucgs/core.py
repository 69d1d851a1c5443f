"""Vector helpers, problem bundling and oracle-call accounting."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

# Membership tolerance shared by every feasibility check.
FEAS_TOL = 1e-12


class ContractError(ValueError):
    """Raised when a caller violates an operation's preconditions."""


class SolverAbort(RuntimeError):
    """Raised when a solver cannot make progress (guard tripped)."""


class InnerGuardError(SolverAbort):
    """Inner Frank-Wolfe loop exceeded its iteration guard."""


def as_vector(x, n: Optional[int] = None, name: str = "x") -> np.ndarray:
    """Return ``x`` as a read-only, finite float64 1-D array."""
    v = np.array(x, dtype=np.float64)
    if v.ndim != 1:
        raise ContractError(f"{name} must be one-dimensional, got shape {v.shape}")
    if n is not None and v.shape[0] != n:
        raise ContractError(f"{name} has dimension {v.shape[0]}, expected {n}")
    if not np.all(np.isfinite(v)):
        raise ContractError(f"{name} contains non-finite entries")
    v.setflags(write=False)
    return v


def convex_combine(a: np.ndarray, b: np.ndarray, gamma: float) -> np.ndarray:
    """(1 - gamma) * a + gamma * b, evaluated in exactly that order."""
    if a.shape != b.shape:
        raise ContractError(f"dimension mismatch: {a.shape} vs {b.shape}")
    if not 0.0 <= gamma <= 1.0:
        raise ContractError(f"gamma={gamma} outside [0, 1]")
    return (1.0 - gamma) * a + gamma * b


def gamma_sequence_product(gammas: Sequence[float]) -> np.ndarray:
    """Averaging weights Gamma_1 = 1, Gamma_k = Gamma_{k-1} (1 - gamma_k).

    The first entry of ``gammas`` is ignored.
    """
    gammas = np.asarray(gammas, dtype=np.float64)
    if gammas.size == 0:
        raise ContractError("gammas must be nonempty")
    out = np.empty_like(gammas)
    out[0] = 1.0
    for k in range(1, gammas.size):
        out[k] = out[k - 1] * (1.0 - gammas[k])
    return out


def telescoping_bound(a0: float, bs: Sequence[float], gammas: Sequence[float]) -> float:
    """Upper bound Gamma_K * sum_i (gamma_i / Gamma_i) b_i on a_K.

    Valid for any sequence with a_k <= (1 - gamma_k) a_{k-1} + gamma_k b_k and
    gamma_1 = 1; ``a0`` drops out because the first weight is one.
    """
    bs = np.asarray(bs, dtype=np.float64)
    gammas = np.asarray(gammas, dtype=np.float64)
    if bs.shape != gammas.shape or bs.size == 0:
        raise ContractError("bs and gammas must be nonempty and of equal length")
    if gammas[0] != 1.0:
        raise ContractError(f"gammas[0] must equal 1, got {gammas[0]}")
    if np.any(gammas < 0.0) or np.any(gammas > 1.0):
        raise ContractError("gammas must lie in [0, 1]")
    # Gamma_K / Gamma_i = prod_{j>i} (1 - gamma_j); the product form stays
    # finite when some Gamma_i is exactly zero.
    tail = np.ones_like(gammas)
    for i in range(gammas.size - 2, -1, -1):
        tail[i] = tail[i + 1] * (1.0 - gammas[i + 1])
    return float(np.sum(tail * gammas * bs))


@dataclass
class OracleCounters:
    """Running tallies of oracle calls for one solver run."""

    grad_evals: int = 0
    f_evals: int = 0
    lmo_calls: int = 0

    def snapshot(self) -> "OracleCounters":
        return OracleCounters(self.grad_evals, self.f_evals, self.lmo_calls)


@dataclass(frozen=True)
class ProblemInstance:
    """Objective, feasible set and a feasible starting point.

    ``fstar`` is only used to report true gaps; solvers never read it.
    ``xstar`` is a known minimizer when the instance was constructed with one.
    """

    objective: object
    set: object
    x0: np.ndarray
    fstar: Optional[float] = None
    xstar: Optional[np.ndarray] = None

    def __post_init__(self):
        x0 = as_vector(self.x0, self.set.n, "x0")
        object.__setattr__(self, "x0", x0)
        if not self.set.contains(x0, FEAS_TOL):
            raise ContractError("x0 is not a member of the feasible set")
        if self.xstar is not None:
            object.__setattr__(self, "xstar", as_vector(self.xstar, self.set.n, "xstar"))
