"""frontspeed: minimal travelling-wave speeds for solvable monostable
reaction-diffusion equations u_t = u_xx + h(u)(A(beta) - B(beta) h'(u)).

Closed-form linear and quadrature-front speeds, phase-plane shooting,
Hadeler-Rothe-type min-max bounds, weighted-action certificates, direct PDE
cross-validation, and detection of the parameter where speed selection
switches between the linear and nonlinear mechanisms.
"""

from .expr import DomainError, ExprSyntaxError, differentiate, evaluate, parse
from .family import (BUILTIN_NAMES, HprimeExtrema, SolvableFamily,
                     ValidationReport, builtin, eval_f, hprime_extrema,
                     make_family, validate)
from .lmn import phi, potential_G, pushed_certificate
from .pde import SimConfig, simulate
from .profile import FrontProfile, explicit_profile, profile_from_F, residual
from .shoot import CminResult, ShootOptions, minimal_speed, shoot_once, steep_speed
from .speeds import (ExchangePoint, SpeedReport, classify, exchange_candidate,
                     gamma, linear_speed, monotonicity_hypotheses,
                     nonlinear_speed)
from .sweep import SweepOptions, family_cmin, refine_exchange, run_sweep
from .variational import hr_bound_nu_family, numeric_minmax, numeric_sup

__version__ = "0.1.0"

__all__ = [
    "BUILTIN_NAMES", "CminResult", "DomainError", "ExchangePoint",
    "ExprSyntaxError", "FrontProfile", "HprimeExtrema", "ShootOptions",
    "SimConfig", "SolvableFamily", "SpeedReport", "SweepOptions",
    "ValidationReport", "builtin", "classify", "differentiate", "eval_f",
    "evaluate", "exchange_candidate", "explicit_profile", "family_cmin",
    "gamma", "hprime_extrema", "hr_bound_nu_family", "linear_speed",
    "make_family", "minimal_speed", "monotonicity_hypotheses",
    "nonlinear_speed", "numeric_minmax", "numeric_sup", "parse", "phi",
    "potential_G", "profile_from_F", "pushed_certificate", "refine_exchange",
    "residual", "run_sweep", "shoot_once", "simulate", "steep_speed",
    "validate",
]
