"""scikit-learn style wrapper: constrained linear regression solved projection-free."""

from __future__ import annotations

import warnings

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.exceptions import ConvergenceWarning
from sklearn.utils.validation import check_is_fitted, validate_data

from .core import ProblemInstance
from .gug import GugSchedule, gug_run
from .objectives import PNormResidual, Quadratic
from .sets import Box, L1Ball, L2Ball, Simplex
from .universal import ucgs_run


class ConstrainedLinearRegression(RegressorMixin, BaseEstimator):
    """Linear regression with coefficients restricted to a simple convex set.

    Minimizes the mean of |x_i^T w - y_i|^p / p (p = 2 for ``loss="squared"``)
    over ``constraint``, which is one of ``simplex``, ``l1ball``, ``box``
    (the cube [-radius, radius]^n) or ``l2ball``. Only linear minimization
    over the set is used, never a projection.

    ``solver="ucgs"`` needs no smoothness constants and stops once the
    certified gap is below ``epsilon``. ``solver="cg"`` runs plain
    conditional gradient with the same certificate.

    Attributes
    ----------
    coef_ : ndarray of shape (n_features,)
    certified_gap_ : float
        Upper bound on the objective suboptimality of ``coef_``.
    converged_ : bool
    n_iter_ : int
        Outer iterations (gradient evaluations at accepted steps).
    trace_ : RunTrace
    """

    def __init__(self, loss="squared", p=1.5, constraint="simplex", radius=1.0, solver="ucgs",
                 epsilon=1e-4, sigma=0.0, max_iter=100_000):
        self.loss = loss
        self.p = p
        self.constraint = constraint
        self.radius = radius
        self.solver = solver
        self.epsilon = epsilon
        self.sigma = sigma
        self.max_iter = max_iter

    def _set(self, n):
        r = float(self.radius)
        if self.constraint == "simplex":
            return Simplex(n)
        if self.constraint == "l1ball":
            return L1Ball(np.zeros(n), r)
        if self.constraint == "box":
            return Box(-r * np.ones(n), r * np.ones(n))
        if self.constraint == "l2ball":
            return L2Ball(np.zeros(n), r)
        raise ValueError(f"unknown constraint {self.constraint!r}")

    def _objective(self, X, y):
        m = X.shape[0]
        if self.loss == "squared":
            s = np.sqrt(m)
            return Quadratic(X / s, y / s)
        if self.loss == "pnorm":
            s = m ** (1.0 / self.p)
            return PNormResidual(X / s, y / s, self.p)
        raise ValueError(f"unknown loss {self.loss!r}")

    def fit(self, X, y):
        X, y = validate_data(self, X, y, dtype=np.float64, y_numeric=True)
        if self.solver not in ("ucgs", "cg"):
            raise ValueError(f"unknown solver {self.solver!r}")
        C = self._set(X.shape[1])
        prob = ProblemInstance(self._objective(X, y), C, C.vertex())
        if self.solver == "ucgs":
            res = ucgs_run(prob, self.epsilon, sigma=self.sigma, max_outer=self.max_iter)
            self.coef_, self.certified_gap_, self.converged_ = res.y_final, res.certified_gap, res.converged
            self.n_iter_ = res.accepted_grad_evals
        else:
            obj = prob.objective
            res = gug_run(prob, GugSchedule("cg", obj.nu, obj.M), self.max_iter, stop_certified=self.epsilon)
            self.coef_ = res.y_final
            self.certified_gap_ = res.trace[-1].certified_gap
            self.converged_ = self.certified_gap_ <= self.epsilon
            self.n_iter_ = len(res.trace)
        self.trace_ = res.trace
        if not self.converged_:
            warnings.warn(f"certified gap {self.certified_gap_:.3e} above epsilon after {self.n_iter_} iterations",
                          ConvergenceWarning)
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        X = validate_data(self, X, dtype=np.float64, reset=False)
        return X @ self.coef_
