"""Proximal operators of perspective functions and the solvers built on them.

The package covers closed-form and root-finding proxes for perspectives of
power laws, radial functions, Huber and Vapnik losses (:mod:`.perspective`),
a batched Douglas-Rachford solver (:mod:`.solvers`), generalized TREX and
the concomitant Lasso (:mod:`.trex`, :mod:`.estimators`) and reproducible
experiment harnesses (:mod:`.experiments`).
"""

__version__ = "0.1.0"

from .errors import ConvergenceError, DomainError, NotSPDError, ProspectError
from .estimators import ConcomitantLassoRegressor, TrexRegressor
from .perspective import (
    HuberSpec,
    PowerSpec,
    RadialSpec,
    VapnikSpec,
    prox_perspective_distance_ball,
    prox_perspective_huber,
    prox_perspective_orthant,
    prox_perspective_power,
    prox_perspective_quadratic,
    prox_perspective_radial,
    prox_perspective_sqrt,
    prox_perspective_vapnik,
    prox_separable_perspective,
)
from .solvers import DRConfig, douglas_rachford, dr_composite
from .trex import (
    TrexPath,
    TrexProblem,
    dr_sel,
    solve_concomitant_lasso,
    solve_standard_trex,
    solve_trex_full,
    trex_alpha_path,
)

__all__ = [
    "ConcomitantLassoRegressor",
    "ConvergenceError",
    "DRConfig",
    "DomainError",
    "HuberSpec",
    "NotSPDError",
    "PowerSpec",
    "ProspectError",
    "RadialSpec",
    "TrexPath",
    "TrexProblem",
    "TrexRegressor",
    "VapnikSpec",
    "douglas_rachford",
    "dr_composite",
    "dr_sel",
    "prox_perspective_distance_ball",
    "prox_perspective_huber",
    "prox_perspective_orthant",
    "prox_perspective_power",
    "prox_perspective_quadratic",
    "prox_perspective_radial",
    "prox_perspective_sqrt",
    "prox_perspective_vapnik",
    "prox_separable_perspective",
    "solve_concomitant_lasso",
    "solve_standard_trex",
    "solve_trex_full",
    "trex_alpha_path",
]
