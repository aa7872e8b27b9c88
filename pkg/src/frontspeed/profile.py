"""Front profiles U(z) reconstructed by quadratures from an F-curve.

Given F(U) = -U' > 0 on (0,1) and the pivot U(0) = 1/2, the profile is
z(U) = -int_{1/2}^{U} dV / F(V).  Node placement uses a cheap RK4 pre-pass
on dU/dz = -F(U) so the output z values are roughly uniform; each z is then
computed exactly by adaptive quadrature, so the table itself is
quadrature-accurate (z is the output grid; z(U) is monotone so no inversion
is needed).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import PchipInterpolator

__all__ = [
    "FrontProfile", "ProfileError", "profile_from_F", "explicit_profile",
    "profile_from_trajectory", "residual", "write_csv",
]

_U_STALL = 1e-15  # U-motion below which the tail is flat beyond resolution


class ProfileError(RuntimeError):
    """Quadrature failure (F vanishing too fast inside (0,1))."""


@dataclass
class FrontProfile:
    z: np.ndarray          # strictly increasing
    u: np.ndarray          # strictly decreasing, in (0,1)
    c: float
    source: str            # "explicit" | "numeric"
    truncated: bool = False

    def __len__(self):
        return len(self.z)


def _rk4_nodes(F, dz, n_side, direction):
    """March dU/dz = -F(U) from U=1/2; direction=+1 toward U->0."""
    nodes = []
    u = 0.5
    step = direction * dz
    for _ in range(n_side):
        k1 = -F(u)
        k2 = -F(min(max(u + 0.5 * step * k1, 1e-300), 1 - 1e-16))
        k3 = -F(min(max(u + 0.5 * step * k2, 1e-300), 1 - 1e-16))
        k4 = -F(min(max(u + step * k3, 1e-300), 1 - 1e-16))
        u_next = u + (step / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        u_next = min(max(u_next, 1e-300), 1.0 - 1e-16)
        if abs(u_next - u) < _U_STALL * max(u, 1.0 - u):
            break
        nodes.append(u_next)
        u = u_next
    return nodes


def profile_from_F(F, c, z_span=40.0, n=2001, source="explicit"):
    """Tabulate the front with speed c from its F-curve.

    ``n`` nodes cover |z| <= z_span/2 (fewer when the profile flattens below
    floating-point resolution first).  Each output z is the cumulative
    adaptive quadrature of 1/F between consecutive U nodes; U = 1/2 maps to
    z = 0 exactly.
    """
    if n < 100:
        raise ValueError("n must be at least 100")
    f_half = F(0.5)
    if not (f_half > 0.0 and math.isfinite(f_half)):
        raise ProfileError(f"F(1/2) = {f_half!r} must be positive")

    dz = z_span / (n - 1)
    n_side = (n - 1) // 2
    down = _rk4_nodes(F, dz, n_side, +1.0)   # toward U -> 0, z > 0
    up = _rk4_nodes(F, dz, n_side, -1.0)     # toward U -> 1, z < 0

    u_nodes = list(reversed(down)) + [0.5] + up  # increasing in U
    u_arr = np.array(u_nodes)
    i_half = len(down)

    truncated = False
    seg = np.zeros(len(u_arr) - 1)
    for i in range(len(u_arr) - 1):
        try:
            val, _ = quad(lambda v: 1.0 / F(v), u_arr[i], u_arr[i + 1], limit=200)
        except Exception:
            val = math.nan
        if not math.isfinite(val):
            truncated = True
            seg = seg[:i]
            u_arr = u_arr[: i + 1]
            i_half = min(i_half, len(u_arr) - 1)
            break
        seg[i] = val

    # z decreases as U increases; anchor z = 0 at U = 1/2, output ascending z
    z_arr = np.concatenate([[0.0], -np.cumsum(seg)])
    z_arr = z_arr - z_arr[i_half]
    return FrontProfile(z=z_arr[::-1].copy(), u=u_arr[::-1].copy(),
                        c=c, source=source, truncated=truncated)


def explicit_profile(fam, beta, c, z_span=40.0, n=2001):
    """Profile of the quadrature front F = sqrt(B) * h."""
    g = math.sqrt(fam.B_at(beta))
    h = fam.compiled("h", "math")
    return profile_from_F(lambda u: g * h(u), c, z_span=z_span, n=n,
                          source="explicit")


def profile_from_trajectory(u_traj, f_traj, c, z_span=40.0, n=2001):
    """Profile from a sampled shooting trajectory (U decreasing).

    Inside the sampled range F comes from monotone cubic interpolation;
    beyond it the linear tails F = slope * U and F = mu * (1 - U) extend the
    curve so the requested z-span can be covered.
    """
    u = np.asarray(u_traj)[::-1]
    f = np.asarray(f_traj)[::-1]
    keep = np.concatenate([[True], np.diff(u) > 0])
    u, f = u[keep], f[keep]
    interp = PchipInterpolator(u, np.maximum(f, 0.0))
    u_lo, u_hi = float(u[0]), float(u[-1])
    s_lo = max(f[0] / u[0], 1e-300)
    s_hi = max(f[-1] / (1.0 - u[-1]), 1e-300)

    def F(v):
        if v <= u_lo:
            return s_lo * v
        if v >= u_hi:
            return s_hi * (1.0 - v)
        return float(interp(v))

    return profile_from_F(F, c, z_span=z_span, n=n, source="numeric")


def residual(profile, f, c, dz=None):
    """max |U'' + c U' + f(U)| over a uniform grid (2nd-order differences).

    The profile is resampled onto the uniform grid by monotone cubic
    interpolation; ``dz`` defaults to the profile's median spacing.
    """
    z, u = profile.z, profile.u
    if dz is None:
        dz = float(np.median(np.diff(z)))
    interp = PchipInterpolator(z, u)
    m = int(math.floor((z[-1] - z[0]) / dz))
    zu = z[0] + dz * np.arange(m + 1)
    uu = interp(zu)
    upp = (uu[2:] - 2.0 * uu[1:-1] + uu[:-2]) / (dz * dz)
    up = (uu[2:] - uu[:-2]) / (2.0 * dz)
    fv = f(uu[1:-1])
    return float(np.max(np.abs(upp + c * up + fv)))


def write_csv(profile, path):
    """Dump the (z, u) table with round-trip-exact floats."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("z,u\n")
        for z, u in zip(profile.z, profile.u):
            fh.write(f"{z:.17g},{u:.17g}\n")
