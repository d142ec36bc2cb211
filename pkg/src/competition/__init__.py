"""Steady states of Dirichlet competition-diffusion systems.

Discrete Laplacian and principal eigenpair, growth-rate expressions with
symbolic partials, logistic solutions, coexistence states from monotone
upper/lower iteration, and the algebraic existence / uniqueness tests.
"""
from .errors import (
    CompetitionError,
    ConvergenceError,
    CriterionMarginError,
    MonotonicityError,
    NonexistenceError,
    RatioDegeneracyError,
)
from .kernels import COMPILED_AVAILABLE, use_backend
from .lingrid import Grid, LinearOperator, ScalarField, solve_spd
from .expr import parse, evaluate, differentiate, to_text
from .growth import GrowthModel, build as build_model, from_text as model_from_text
from .eigen import principal_eigenpair, rayleigh_quotient
from .logistic import solve_logistic
from .coexist import build_pair, solve_coexistence, verify_pair, verify_sandwich, decay_check
from .criteria import (
    check_existence,
    check_nonexistence,
    check_uniqueness_2sp,
    check_uniqueness_Nsp,
    evaluate_criteria,
    verify_uniqueness_empirically,
)

__version__ = "0.1.0"
