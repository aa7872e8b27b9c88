"""Min-max upper bounds on the minimal speed.

Any admissible trial g (g > 0 on (0,1), g(0) = 0, g'(0) > 0) bounds the
minimal speed by sup_U { g'(U) + f(U)/g(U) }.  With the one-parameter family
g = nu * h the sup is piecewise linear in h' and the optimal nu has a closed
form: the bound is A/sqrt(B) when A <= 2 L B and 2 sqrt(L) sqrt(A - L B)
when A > 2 L B, with L = sup h'.  A polynomial trial family plus Nelder-Mead
gives a direct numeric min-max for cross-checking.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .family import hprime_extrema

__all__ = [
    "BoundResult", "TrialFunction", "TrialFunctionError",
    "hr_bound_nu_family", "nu_sup_closed_form", "numeric_sup",
    "nu_trial", "poly_trial", "numeric_minmax",
]

CASE_I = "case_i"
CASE_II_A = "case_ii_a"
CASE_II_B = "case_ii_b"

_PENALTY = 1e6


class TrialFunctionError(ValueError):
    """Trial function violates positivity or slope admissibility."""


@dataclass(frozen=True)
class TrialFunction:
    value: object          # vectorized g(U)
    deriv: object          # vectorized g'(U)
    description: str


@dataclass
class BoundResult:
    value: float
    arg_nu: float
    case_label: str | None
    trial_description: str


def hr_bound_nu_family(fam, beta, extrema=None):
    """Optimal upper bound over the trial family g = nu * h (closed form)."""
    a = fam.A_at(beta)
    b = fam.B_at(beta)
    ext = extrema or hprime_extrema(fam)
    L = ext.L
    if a <= 2.0 * L * b:
        return BoundResult(value=a / math.sqrt(b), arg_nu=math.sqrt(b),
                           case_label=CASE_II_A,
                           trial_description="g = nu*h, nu = sqrt(B)")
    nu0 = math.sqrt((a - L * b) / L)
    return BoundResult(value=2.0 * math.sqrt(L) * math.sqrt(a - L * b),
                       arg_nu=nu0, case_label=CASE_II_B,
                       trial_description="g = nu*h, nu = sqrt((A - L B)/L)")


def nu_sup_closed_form(fam, beta, nu, extrema=None):
    """sup_U of the g = nu*h expression, evaluated from the h' extrema.

    The coefficient of h'(U) is nu - B/nu: nonpositive for nu^2 <= B (sup at
    inf h' = l, case i), nonnegative for nu^2 >= B (sup at sup h' = L,
    case ii).  Returned as (value, case_label).
    """
    a = fam.A_at(beta)
    b = fam.B_at(beta)
    ext = extrema or hprime_extrema(fam)
    if nu * nu <= b:
        return (a - ext.l * b) / nu + ext.l * nu, CASE_I
    return (a - ext.L * b) / nu + ext.L * nu, CASE_II_A


def nu_trial(fam, nu):
    """Trial function g = nu * h with its exact derivative."""
    h = fam.compiled("h")
    hp = fam.compiled("hprime")
    return TrialFunction(value=lambda u: nu * h(u),
                         deriv=lambda u: nu * hp(u),
                         description=f"g = {nu!r}*h")


def poly_trial(coeffs):
    """Trial g(U) = U * (p0 + p1 U + ... ), derivative taken analytically."""
    p = np.asarray(coeffs, dtype=float)

    def g(u):
        acc = np.zeros_like(np.asarray(u, dtype=float))
        for c in p[::-1]:
            acc = acc * u + c
        return u * acc

    def gp(u):
        acc = np.zeros_like(np.asarray(u, dtype=float))
        for k in range(len(p) - 1, -1, -1):
            acc = acc * u + (k + 1) * p[k]
        return acc

    return TrialFunction(value=g, deriv=gp,
                         description="g = U*poly, coeffs=" + repr(list(p)))


def _sup_on_grid(fam, beta, trial, grid_n, checked=True):
    u = np.linspace(0.0, 1.0, grid_n + 2)[1:-1]
    g = np.asarray(trial.value(u), dtype=float)
    gp = np.asarray(trial.deriv(u), dtype=float)
    g0 = float(np.asarray(trial.value(np.array([0.0]))[0]))
    gp0 = float(np.asarray(trial.deriv(np.array([0.0]))[0]))
    if checked:
        if abs(g0) > 1e-9:
            raise TrialFunctionError(f"g(0) = {g0!r} must vanish")
        if gp0 <= 0.0:
            raise TrialFunctionError(f"g'(0) = {gp0!r} must be positive")
        if not np.all(g > 0.0):
            bad = u[g <= 0.0][0]
            raise TrialFunctionError(f"g({bad:.4f}) <= 0 on the interior grid")
    elif abs(g0) > 1e-9 or gp0 <= 0.0 or not np.all(g > 0.0):
        return None

    a = fam.A_at(beta)
    b = fam.B_at(beta)
    h = fam.compiled("h")
    hp = fam.compiled("hprime")
    f_vals = h(u) * (a - b * hp(u))
    interior = float(np.max(gp + f_vals / g))

    # endpoint limits: f and g both vanish at 0; f vanishes at 1
    fp0 = fam.fprime0(beta)
    v0 = gp0 + fp0 / gp0
    g1 = float(np.asarray(trial.value(np.array([1.0]))[0]))
    gp1 = float(np.asarray(trial.deriv(np.array([1.0]))[0]))
    if abs(g1) > 1e-12:
        v1 = gp1
    else:
        v1 = gp1 + fam.fprime1(beta) / gp1 if gp1 != 0.0 else -math.inf
    return max(interior, v0, v1)


def numeric_sup(fam, beta, trial, grid_n=4001):
    """sup over (0,1) of g' + f/g on a grid, endpoint limits analytic.

    At U -> 0 both f and g vanish and the limit is g'(0) + f'(0)/g'(0); at
    U -> 1 the limit is g'(1) when g(1) > 0 and g'(1) + f'(1)/g'(1) when g
    vanishes there too (needed for g = nu*h to match the closed forms).
    """
    return _sup_on_grid(fam, beta, trial, grid_n, checked=True)


def numeric_minmax(fam, beta, param_count=4, iterations=400, restarts=8,
                   seed=0, grid_n=4001):
    """Nelder-Mead min-max over the polynomial trial family.

    Deterministic given the seed: restart k perturbs the least-squares fit of
    sqrt(B) * h by 30% relative noise from a seeded generator.  Infeasible
    trials cost a flat penalty.  Returns the best bound found even when the
    optimizer did not converge (flagged in the description).
    """
    if not 1 <= param_count <= 4:
        raise ValueError("param_count must be between 1 and 4")

    def objective(p):
        val = _sup_on_grid(fam, beta, poly_trial(p), grid_n, checked=False)
        return _PENALTY if val is None else val

    u = np.linspace(0.0, 1.0, 513)[1:-1]
    target = math.sqrt(fam.B_at(beta)) * fam.compiled("h")(u)
    basis = np.vstack([u ** (k + 1) for k in range(param_count)]).T
    p_init, *_ = np.linalg.lstsq(basis, target, rcond=None)
    if objective(p_init) >= _PENALTY:
        p_init = np.zeros(param_count)
        p_init[0] = math.sqrt(fam.B_at(beta))  # g ~ sqrt(B) U is always admissible

    rng = np.random.default_rng(seed)
    best_val = math.inf
    best_p = p_init
    converged = False
    for k in range(max(1, restarts)):
        p0 = p_init if k == 0 else p_init * (1.0 + 0.3 * rng.standard_normal(param_count))
        res = minimize(objective, p0, method="Nelder-Mead",
                       options={"maxiter": iterations, "xatol": 1e-10,
                                "fatol": 1e-12})
        if res.fun < best_val:
            best_val = float(res.fun)
            best_p = res.x
            converged = bool(res.success)
    tag = "" if converged else " (not converged)"
    return BoundResult(
        value=best_val, arg_nu=float("nan"), case_label=None,
        trial_description=(f"Nelder-Mead over U*poly({param_count - 1}), "
                           f"{restarts} restarts, seed={seed}, "
                           f"coeffs={[float(c) for c in best_p]}{tag}"))
