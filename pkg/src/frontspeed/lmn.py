"""Exponentially weighted action functional and pushed-selection certificates.

Phi_c[u] = int e^{cz} ( u_z^2 / 2 - G(u) ) dz with G(u) = int_0^u f, which
for the solvable family is G(u) = A H(u) - (B/2) h(u)^2, H = int_0^u h.
A trial u with decay faster than e^{-cz/2} and Phi_c[u] <= 0 at some c > c_l
certifies nonlinear (pushed) selection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import PchipInterpolator

from .speeds import linear_speed

__all__ = [
    "PhiResult", "DivergenceError", "potential_G", "phi", "h1c_member",
    "fit_decay_rate", "pushed_certificate",
]

DEFAULT_PHI_TOL = 1e-4  # on the normalized value


class DivergenceError(ArithmeticError):
    """The weighted integral diverges: decay too slow for this c."""


@dataclass
class PhiResult:
    value: float
    truncation_z: tuple
    weight_overflow_guard: bool
    normalization: float


def _h_antiderivative(fam, grid_n=2000, gl_order=5):
    """Cached H(u) = int_0^u h via per-cell Gauss-Legendre + monotone interp."""
    key = ("H", grid_n, gl_order)
    cached = fam._cache.get(key)
    if cached is not None:
        return cached
    nodes, weights = np.polynomial.legendre.leggauss(gl_order)
    edges = np.linspace(0.0, 1.0, grid_n + 1)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * np.diff(edges)
    h = fam.compiled("h")
    pts = mid[None, :] + half[None, :] * nodes[:, None]
    increments = half * np.sum(weights[:, None] * h(pts), axis=0)
    H = np.concatenate([[0.0], np.cumsum(increments)])
    interp = PchipInterpolator(edges, H)
    fam._cache[key] = interp
    return interp


def potential_G(fam, beta, u):
    """G(u) = A(beta) H(u) - (B(beta)/2) h(u)^2; accepts scalars or arrays."""
    H = _h_antiderivative(fam)
    a = fam.A_at(beta)
    b = fam.B_at(beta)
    h = fam.compiled("h")
    out = a * H(u) - 0.5 * b * h(u) ** 2
    return float(out) if np.isscalar(u) else out


def fit_decay_rate(profile, tail_fraction=0.25, floor=1e-12):
    """Exponential decay rate at z -> +inf: -slope of log u on the last
    quarter of the grid (restricted to u > floor)."""
    z, u = profile.z, profile.u
    mask = u > floor
    z, u = z[mask], u[mask]
    k = max(int(len(z) * (1.0 - tail_fraction)), 0)
    z_t, u_t = z[k:], u[k:]
    if len(z_t) < 5:
        raise ValueError("profile tail too short to fit a decay rate")
    A = np.vstack([z_t, np.ones_like(z_t)]).T
    slope, _ = np.linalg.lstsq(A, np.log(u_t), rcond=None)[0]
    return -float(slope)


def h1c_member(decay_rate, c):
    """Membership in the weighted space: decay strictly faster than c/2."""
    return c < 2.0 * decay_rate


def phi(profile, c, fam, beta, tail_rtol=1e-14):
    """Trapezoid evaluation of Phi_c on the profile's grid.

    The fitted decay rate must exceed c/2 (else DivergenceError: the integral
    does not exist).  Both ends are truncated where the integrand falls below
    ``tail_rtol`` of its peak; the normalization divides by the weighted mass
    int e^{cz} u^2 over the same window.
    """
    if c <= 0.0:
        raise ValueError("c must be positive")
    rate = fit_decay_rate(profile)
    if not h1c_member(rate, c):
        raise DivergenceError(
            f"decay rate {rate:.6g} <= c/2 = {c / 2:.6g}: weighted integral diverges")

    z, u = profile.z, profile.u
    u_z = np.gradient(u, z)
    g_vals = potential_G(fam, beta, np.clip(u, 0.0, 1.0))

    guard = bool(c * z[-1] > 700.0)
    w = np.exp(np.minimum(c * z, 700.0))
    integrand = w * (0.5 * u_z ** 2 - g_vals)

    peak = float(np.max(np.abs(integrand)))
    keep = np.abs(integrand) >= tail_rtol * peak
    idx = np.nonzero(keep)[0]
    i0, i1 = int(idx[0]), int(idx[-1])
    sl = slice(i0, i1 + 1)

    value = float(np.trapezoid(integrand[sl], z[sl]))
    mass = float(np.trapezoid(w[sl] * u[sl] ** 2, z[sl]))
    return PhiResult(value=value, truncation_z=(float(z[i0]), float(z[i1])),
                     weight_overflow_guard=guard,
                     normalization=value / mass)


def pushed_certificate(fam, beta, c, profile, class_tol=5e-3,
                       phi_tol=DEFAULT_PHI_TOL):
    """True when (c, profile) witnesses nonlinear selection.

    Requires c above c_l by the classification margin, membership of the
    profile in the weighted space, and normalized Phi <= phi_tol (one-sided:
    a genuinely minimal steep front has Phi exactly zero).
    """
    c_l = linear_speed(fam, beta)
    if c <= c_l + class_tol:
        return False
    if not h1c_member(fit_decay_rate(profile), c):
        return False
    try:
        result = phi(profile, c, fam, beta)
    except DivergenceError:
        return False
    return result.normalization <= phi_tol
