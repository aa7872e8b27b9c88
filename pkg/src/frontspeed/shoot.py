"""Minimal-speed computation by phase-plane shooting.

Two marches on the reduced front equation F dF/dU - c F + f(U) = 0:

* saddle side: integrate P = F^2 down from U = 1-eps (started on the
  unstable manifold of (1,0), slope mu) to U = delta.  For monostable f the
  field keeps P > 0, so "no front at this c" shows up as the trajectory
  missing the origin from above - detected by the endpoint slope
  sqrt(P)/U blowing past the fast linearization rate lambda_plus.

* origin side: integrate F up from the strong-stable (steep) direction
  (delta, lambda_plus * delta).  Whether the trajectory dies (F -> 0) or
  overshoots the saddle slope mu at U = 1-eps is a hard sign in c, so the
  speed of a steep connection is found by bisection to near machine
  precision.  Pushed selection means the minimal front is steep, so the
  sign flip locates c_min in the pushed case; no flip means pulled.

The saddle-side miss test is soft near tangencies (the miss height decays
like a power of c_min - c whose exponent blows up as lambda_plus ->
lambda_minus), which is why the origin-side march is the primary detector.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.integrate import solve_ivp

__all__ = [
    "ShootOptions", "ShootOutcome", "CminResult", "ShootError", "BracketError",
    "shoot_once", "steep_speed", "minimal_speed",
    "saddle_slope_mu", "linear_rates",
]

FAST = "fast_lambda_plus"
SLOW = "slow_lambda_minus"
AMBIGUOUS = "ambiguous"


class ShootError(RuntimeError):
    """Integration failed (step-size underflow or invalid preconditions)."""


class BracketError(ShootError):
    """The speed bracket does not behave as a success/failure bracket."""


@dataclass(frozen=True)
class ShootOptions:
    eps: float = 1e-6            # start offset below U = 1
    delta: float = 1e-6          # stop offset above U = 0
    rtol: float = 1e-9
    atol: float = 1e-12
    trajectory_points: int = 2001
    slope_u: float = 1e-4        # where sqrt(P)/U is read off (above atol noise)
    slope_cap_factor: float = 1.5
    c_tol: float = 1e-6          # reported c_min accuracy
    steep_c_tol: float = 1e-8    # origin-side bisection tolerance
    max_iterations: int = 200


@dataclass
class ShootOutcome:
    success: bool
    crossing_u: float | None
    trajectory: tuple            # (U array, F array), U decreasing
    slope_at_zero: float | None
    c: float


@dataclass
class CminResult:
    c_min: float
    iterations: int
    bracket: tuple
    decay: str
    steep_root: float | None = None
    slope_at_zero: float | None = None
    note: str = ""


def saddle_slope_mu(c, fprime1):
    """Positive slope of the unstable manifold of (U,F) = (1,0)."""
    if fprime1 >= 0.0:
        raise ShootError(f"f'(1) = {fprime1!r} must be negative")
    return 0.5 * (-c + math.sqrt(c * c - 4.0 * fprime1))


def linear_rates(c, fprime0):
    """Decay rates (lambda_minus, lambda_plus) of the origin linearization."""
    disc = c * c - 4.0 * fprime0
    if disc < 0.0:
        return None, None
    r = math.sqrt(disc)
    return 0.5 * (c - r), 0.5 * (c + r)


def _fd_fprime0(f, h=1e-7):
    # f(0) = 0 for monostable f
    return f(h) / h


def _fd_fpp0(f, h=1e-5):
    return (f(2 * h) - 2.0 * f(h)) / (h * h)


def shoot_once(f, fprime1, c, opts=None, fprime0=None):
    """March P = F^2 from U = 1-eps down to U = delta at speed c.

    success means the trajectory reaches delta with P > 0 throughout and an
    endpoint slope consistent with a front (slope <= slope_cap_factor *
    lambda_plus); a large endpoint slope is an origin miss (no front at this
    c).  A P <= 0 crossing at U > 10*delta also fails (it cannot occur for
    f > 0 on (0,1), but shoot_once accepts general f); a crossing at
    U <= 10*delta is the legitimate arrival at the origin and succeeds.
    """
    opts = opts or ShootOptions()
    if c <= 0.0:
        raise ShootError(f"speed c = {c!r} must be positive")
    mu = saddle_slope_mu(c, fprime1)
    if fprime0 is None:
        fprime0 = _fd_fprime0(f)
    eps, delta = opts.eps, opts.delta
    p0 = (mu * eps) ** 2

    def rhs(u, y):
        p = y[0]
        return (2.0 * c * math.sqrt(p) - 2.0 * f(u),) if p > 0.0 else (-2.0 * f(u),)

    def crossing(u, y):
        return y[0]
    crossing.terminal = True
    crossing.direction = -1

    sol = solve_ivp(rhs, (1.0 - eps, delta), [p0], method="RK45",
                    rtol=opts.rtol, atol=opts.atol, events=crossing,
                    dense_output=True)
    if sol.status < 0:
        raise ShootError(f"integration failed at c={c!r}: {sol.message}")

    crossed = sol.t_events[0].size > 0
    u_cross = float(sol.t_events[0][0]) if crossed else None
    u_end = float(sol.t[-1])

    n = opts.trajectory_points
    u_samp = np.linspace(1.0 - eps, u_end, n)
    p_samp = np.maximum(sol.sol(u_samp)[0], 0.0)
    traj = (u_samp, np.sqrt(p_samp))

    if crossed and u_cross > 10.0 * delta:
        return ShootOutcome(success=False, crossing_u=u_cross, trajectory=traj,
                            slope_at_zero=None, c=c)

    # slope read at slope_u (clipped into the integrated range)
    u_read = min(max(opts.slope_u, u_end), 1.0 - eps)
    p_read = max(float(sol.sol(np.array([u_read]))[0][0]), 0.0)
    slope = math.sqrt(p_read) / u_read

    lam_m, lam_p = linear_rates(c, fprime0)
    cap = opts.slope_cap_factor * (lam_p if lam_p is not None else 0.5 * c)
    success = slope <= cap
    return ShootOutcome(success=success, crossing_u=None, trajectory=traj,
                        slope_at_zero=slope, c=c)


def _origin_sign(f, fprime0, fpp0, fprime1, c, opts):
    """+1 when the steep origin manifold overshoots the saddle, -1 otherwise.

    Marched as P = F^2 so an undershoot is a transversal P -> 0 crossing
    (dP/dU = -2f there) instead of a singular F -> 0 collapse.
    """
    lam_m, lam_p = linear_rates(c, fprime0)
    if lam_p is None:
        return +1
    mu = saddle_slope_mu(c, fprime1)
    delta, eps = opts.delta, opts.eps
    # second-order manifold expansion F = lam_p U + q U^2; the linear-only
    # start leaks slow mode ~ delta/(lam_p - lam_m), fatal near degeneracy
    q = 0.5 * fpp0 / (c - 3.0 * lam_p)
    f0 = lam_p * delta + q * delta * delta

    def rhs(u, y):
        p = y[0]
        return (2.0 * c * math.sqrt(p) - 2.0 * f(u),) if p > 0.0 \
            else (-2.0 * f(u),)

    p_start = f0 * f0
    p_floor = 1e-6 * p_start  # genuine manifolds only grow away from the start

    def died(u, y):
        return y[0] - p_floor
    died.terminal = True
    died.direction = -1

    sol = solve_ivp(rhs, (delta, 1.0 - eps), [p_start], method="RK45",
                    rtol=1e-10, atol=1e-8 * p_start, events=died)
    if sol.t_events[0].size > 0:
        return -1
    p_end = max(float(sol.y[0, -1]), 0.0)
    if sol.status < 0:
        # solver stalled: a collapsing trajectory counts as an undershoot
        if p_end < p_start:
            return -1
        raise ShootError(
            f"origin-side integration failed at c={c!r}: {sol.message}")
    return +1 if math.sqrt(p_end) - mu * eps > 0.0 else -1


def steep_speed(f, fprime0, fprime1, c_lo, c_hi, opts=None):
    """Speed of the steep (fast-decay) front connection on [c_lo, c_hi].

    Returns (root, iterations); root is None when the steep manifold
    overshoots already at c_lo (no steep connection above c_lo).  Raises
    BracketError when there is no overshoot even at c_hi.
    """
    opts = opts or ShootOptions()
    fpp0 = _fd_fpp0(f)
    iters = 0

    def sign(c):
        nonlocal iters
        iters += 1
        return _origin_sign(f, fprime0, fpp0, fprime1, c, opts)

    if sign(c_lo) > 0:
        return None, iters
    if sign(c_hi) < 0:
        raise BracketError(
            f"steep manifold still undershoots at c_hi={c_hi!r}; raise cUpper")
    lo, hi = c_lo, c_hi
    while hi - lo > opts.steep_c_tol and iters < opts.max_iterations:
        mid = 0.5 * (lo + hi)
        if sign(mid) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi), iters


def _decay_from_slope(slope, c, fprime0):
    lam_m, lam_p = linear_rates(c, fprime0)
    if slope is None or lam_p is None:
        return AMBIGUOUS
    d_m, d_p = abs(slope - lam_m), abs(slope - lam_p)
    nearest, dist = (lam_p, d_p) if d_p < d_m else (lam_m, d_m)
    if dist > 0.1 * max(slope, nearest):
        return AMBIGUOUS
    return FAST if nearest == lam_p else SLOW


def minimal_speed(f, fprime0, fprime1, c_upper, opts=None):
    """Minimal front speed on [c_l, c_upper] with c_l = 2 sqrt(f'(0)).

    Looks for a steep connection first; its absence means linear selection
    (c_min = c_l).  When one is found at speed R the result is pushed with
    c_min = R.  Callers with structural knowledge (solvable families) should
    cross-check R against the explicit-front speed: an isolated steep
    connection that is not minimal is indistinguishable, in double precision,
    from a near-tangent miss of the saddle, and suppressing it is a
    theory-level decision (see sweep.family_cmin).
    """
    opts = opts or ShootOptions()
    if fprime0 <= 0.0:
        raise ShootError(f"f'(0) = {fprime0!r} must be positive")
    c_l = 2.0 * math.sqrt(fprime0)
    if c_upper < c_l:
        raise ShootError(f"c_upper = {c_upper!r} below c_l = {c_l!r}")

    c_probe = c_l * (1.0 + 1e-6)
    hi_pad = c_upper * (1.0 + 1e-4) + 1e-4
    root, iters = steep_speed(f, fprime0, fprime1, c_probe, hi_pad, opts)

    if root is None:
        probe = shoot_once(f, fprime1, c_probe, opts, fprime0=fprime0)
        iters += 1
        if not probe.success:
            upper = shoot_once(f, fprime1, c_upper, opts, fprime0=fprime0)
            iters += 1
            if not upper.success:
                raise BracketError(
                    f"shoot fails at cUpper={c_upper!r}: no front found "
                    "(cUpper below c_min, or numerical trouble)")
            raise BracketError(
                "near-c_l shot misses the origin but no steep connection was "
                "found; cannot bracket c_min")
        return CminResult(c_min=c_l, iterations=iters,
                          bracket=(c_l, c_probe), decay=SLOW,
                          steep_root=None,
                          slope_at_zero=probe.slope_at_zero,
                          note="no steep connection: linear selection")

    at_root = shoot_once(f, fprime1, root, opts, fprime0=fprime0)
    iters += 1
    decay = _decay_from_slope(at_root.slope_at_zero, root, fprime0)
    return CminResult(c_min=root, iterations=iters,
                      bracket=(root - opts.steep_c_tol, root + opts.steep_c_tol),
                      decay=decay, steep_root=root,
                      slope_at_zero=at_root.slope_at_zero,
                      note="steep connection located by origin-side bisection")
