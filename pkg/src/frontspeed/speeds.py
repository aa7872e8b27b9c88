"""Closed-form speeds, exchange-point location and regime classification.

For a valid family: c_l = 2 sqrt(A - B) is the linearly selected speed,
c_nl = A / sqrt(B) the speed of the quadrature front F = gamma h with
gamma = sqrt(B).  The two coincide exactly where A = 2B; that root of
D(beta) = A - 2B is the candidate exchange point.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import bisect

from .family import hprime_extrema

__all__ = [
    "SpeedReport", "ExchangePoint", "Classification", "InvalidFamilyError",
    "NoExchangeError", "linear_speed", "nonlinear_speed", "gamma",
    "exchange_candidate", "classify", "monotonicity_hypotheses",
    "report_to_json_dict",
]

PULLED = "pulled"
PUSHED = "pushed"
DEGENERATE = "degenerate"

DEFAULT_CLASS_TOL = 5e-3  # speed units; shooting noise is ~1e-6, PDE ~1e-2


class InvalidFamilyError(ValueError):
    """A closed-form speed was requested where its formula is undefined."""


class NoExchangeError(ValueError):
    """A(beta) - 2 B(beta) does not change sign on the requested interval."""


@dataclass
class SpeedReport:
    beta: float
    c_l: float
    c_nl: float
    gamma: float
    c_min: float
    regime: str
    bounds: list = field(default_factory=list)  # (label, value)
    phi_cert: bool | None = None
    prediction: str | None = None
    near_exchange: bool = False
    error: str | None = None


@dataclass(frozen=True)
class ExchangePoint:
    beta_star: float
    nondegenerate: bool
    slope: float
    multiple_roots: bool = False


@dataclass(frozen=True)
class Classification:
    regime: str
    prediction: str   # "pulled" | "pushed" | "no prediction"
    mechanism: str


def linear_speed(fam, beta):
    """c_l = 2 sqrt(A(beta) - B(beta))."""
    d = fam.A_at(beta) - fam.B_at(beta)
    if d <= 0.0:
        raise InvalidFamilyError(f"A - B = {d!r} <= 0 at beta={beta!r}")
    return 2.0 * math.sqrt(d)


def nonlinear_speed(fam, beta):
    """c_nl = A(beta) / sqrt(B(beta)) (speed of the quadrature front)."""
    b = fam.B_at(beta)
    if b <= 0.0:
        raise InvalidFamilyError(f"B = {b!r} <= 0 at beta={beta!r}")
    return fam.A_at(beta) / math.sqrt(b)


def gamma(fam, beta):
    """gamma = sqrt(B(beta)); the quadrature front is F = gamma h."""
    b = fam.B_at(beta)
    if b <= 0.0:
        raise InvalidFamilyError(f"B = {b!r} <= 0 at beta={beta!r}")
    return math.sqrt(b)


def exchange_candidate(fam, beta_lo, beta_hi, scan_n=200, xtol=1e-10):
    """Root of D(beta) = A - 2B on [beta_lo, beta_hi] by bisection.

    A 200-point coarse scan detects multiple sign changes; the first root is
    returned with ``multiple_roots`` set when more than one cell flips.
    """
    a_fn = fam.compiled("A")
    b_fn = fam.compiled("B")

    def D(beta):
        return float(a_fn(beta) - 2.0 * b_fn(beta))

    grid = np.linspace(beta_lo, beta_hi, scan_n)
    vals = np.array([D(b) for b in grid])
    sign = np.sign(vals)
    flips = [i for i in range(len(grid) - 1)
             if sign[i] != 0 and sign[i + 1] != 0 and sign[i] != sign[i + 1]]
    exact = [i for i in range(len(grid)) if sign[i] == 0]

    if exact:
        root = float(grid[exact[0]])
        multiple = len(exact) + len(flips) > 1
    elif flips:
        i = flips[0]
        root = float(bisect(D, grid[i], grid[i + 1], xtol=xtol))
        multiple = len(flips) > 1
    else:
        raise NoExchangeError(
            f"A - 2B has no sign change on [{beta_lo}, {beta_hi}] "
            f"(D({beta_lo})={vals[0]:.3e}, D({beta_hi})={vals[-1]:.3e})")

    step = 1e-5
    slope = (D(root + step) - D(root - step)) / (2 * step)
    return ExchangePoint(beta_star=root, nondegenerate=abs(slope) > 1e-6,
                         slope=slope, multiple_roots=multiple)


def monotonicity_hypotheses(fam, beta_lo, beta_hi, grid_n=200):
    """(A nondecreasing, B nondecreasing, A - B nonincreasing) on a beta grid."""
    grid = np.linspace(beta_lo, beta_hi, grid_n)
    a = fam.compiled("A")(grid) * np.ones_like(grid)
    b = fam.compiled("B")(grid) * np.ones_like(grid)
    tol = 1e-12
    a_up = bool(np.all(np.diff(a) >= -tol))
    b_up = bool(np.all(np.diff(b) >= -tol))
    gap_down = bool(np.all(np.diff(a - b) <= tol))
    return a_up, b_up, gap_down


def _theory_prediction(fam, beta, beta_range):
    a = fam.A_at(beta)
    b = fam.B_at(beta)
    if a < 2.0 * b:
        return "pushed", "A < 2B: the quadrature front is minimal"
    ext = hprime_extrema(fam)
    if a > 2.0 * b and ext.L <= 1.0 + 1e-9:
        return "pulled", "A > 2B and sup h' = 1: linear selection"
    if a > 2.0 * b and beta_range is not None:
        hyps = monotonicity_hypotheses(fam, *beta_range)
        if all(hyps):
            try:
                xp = exchange_candidate(fam, *beta_range)
            except NoExchangeError:
                xp = None
            if xp is not None and xp.nondegenerate and beta <= xp.beta_star:
                return "pulled", ("monotone A, B with nonincreasing A - B: "
                                  "linear selection below the exchange point")
    return "no prediction", "outside the proved regimes (sup h' > 1, A > 2B)"


def classify(fam, beta, c_min_numeric, tol=DEFAULT_CLASS_TOL, beta_range=None):
    """Numeric regime from a measured c_min, plus the theory's prediction.

    pushed when c_min - c_l > tol; pulled when |c_min - c_l| <= tol; degenerate
    when additionally |c_l - c_nl| <= tol (at the exchange point).  The theory
    prediction needs a beta_range only for the monotonicity-based mechanism.
    """
    c_l = linear_speed(fam, beta)
    c_nl = nonlinear_speed(fam, beta)
    if c_min_numeric - c_l > tol:
        regime = PUSHED
    elif abs(c_l - c_nl) <= tol:
        regime = DEGENERATE
    else:
        regime = PULLED
    prediction, mechanism = _theory_prediction(fam, beta, beta_range)
    return Classification(regime=regime, prediction=prediction, mechanism=mechanism)


def report_to_json_dict(report):
    """Stable JSON layout: beta, c_l, c_nl, gamma, c_min, regime, bounds[]."""
    out = {
        "beta": report.beta,
        "c_l": report.c_l,
        "c_nl": report.c_nl,
        "gamma": report.gamma,
        "c_min": report.c_min,
        "regime": report.regime,
        "bounds": [[label, value] for label, value in report.bounds],
    }
    if report.phi_cert is not None:
        out["phi_cert"] = report.phi_cert
    if report.prediction is not None:
        out["prediction"] = report.prediction
    if report.near_exchange:
        out["near_exchange"] = True
    if report.error is not None:
        out["error"] = report.error
    return out


def report_to_json(report, indent=None):
    return json.dumps(report_to_json_dict(report), indent=indent)
