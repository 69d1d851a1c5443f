"""Projection-free convex optimization: conditional gradient, sliding and UCGS."""

from .core import (
    ContractError,
    InnerGuardError,
    OracleCounters,
    ProblemInstance,
    SolverAbort,
    convex_combine,
    gamma_sequence_product,
    telescoping_bound,
)
from .gug import GugSchedule, gug_run, sliding_nominal_counts, xi_k
from .inner import ProjSubproblem, acgm_solve, cgm_solve, exact_linesearch_alpha, phi_grad
from .objectives import CountedObjective, PNormResidual, Quadratic, estimate_holder, make_instance
from .sets import ApproxLmo, Box, L1Ball, L2Ball, Simplex, approx_lmo, lmo, wolfe_gap
from .estimators import ConstrainedLinearRegression
from .reference import RefSolution, fit_rate, ref_fstar, ref_min_phi
from .trace import RunTrace, TraceRow
from .universal import LowerModel, c_nu, certify_gap, gamma_from_L, ucgs_run, update_lower_model

__version__ = "0.1.0"
