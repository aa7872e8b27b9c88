"""Direct simulation of u_t = u_xx + f(u, beta) on a line segment.

Method of lines: second-order central Laplacian, classical RK4 in time with
dt = 0.2 dx^2, Dirichlet data u = 1 on the left and u = 0 on the right.
Compactly supported initial data select the minimal front speed; the speed
is the least-squares slope of the tracked level crossing over the fit
window.  Pulled fronts approach c_min from below with an O(1/t) lag, so
their tolerances are necessarily loose.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "SimConfig", "SpeedMeasurement", "SimulationError", "InstabilityError",
    "FrontAtBoundaryError", "simulate", "config_for_speed",
    "write_front_track_csv", "write_snapshot_csv",
]


class SimulationError(RuntimeError):
    pass


class InstabilityError(SimulationError):
    """u left [-0.1, 1.1] or went non-finite."""


class FrontAtBoundaryError(SimulationError):
    """The front ran out of domain before t_end."""


@dataclass
class SimConfig:
    domain_length: float
    dx: float = 0.1
    dt: float | None = None        # defaults to 0.2 dx^2
    t_end: float = 60.0
    initial_condition: str = "step"   # "step" | "bump"
    track_level: float = 0.5
    step_position: float = 20.0
    sample_dt: float = 0.5
    fit_window: tuple | None = None   # defaults to the last half of [0, t_end]

    def __post_init__(self):
        if self.dt is None:
            self.dt = 0.2 * self.dx * self.dx
        if self.dx <= 0 or self.t_end <= 0 or self.domain_length <= 0:
            raise ValueError("dx, t_end and domain_length must be positive")
        if self.dt > 0.5 * self.dx * self.dx + 1e-15:
            raise ValueError(
                f"dt = {self.dt!r} violates the stability bound 0.5*dx^2")
        if not 0.0 < self.track_level < 1.0:
            raise ValueError("track_level must lie in (0,1)")
        if self.initial_condition not in ("step", "bump"):
            raise ValueError("initial_condition must be 'step' or 'bump'")


@dataclass
class SpeedMeasurement:
    speed: float
    fit_window: tuple
    fit_residual: float
    front_track: np.ndarray          # rows (t, x_front)
    final_state: tuple = field(default=None, repr=False)  # (x, u) arrays


def config_for_speed(c_estimate, t_end, dx=0.1, **kwargs):
    """Config whose domain outruns a front of the given speed by 50+ units."""
    x0 = kwargs.pop("step_position", 20.0)
    length = x0 + max(c_estimate, 0.0) * t_end + 60.0
    return SimConfig(domain_length=length, dx=dx, t_end=t_end,
                     step_position=x0, **kwargs)


def _initial(cfg, x):
    if cfg.initial_condition == "step":
        u = np.where(x < cfg.step_position, 1.0, 0.0)
    else:
        # compactly supported cosine bump of half-width 10
        r = np.abs(x - cfg.step_position) / 10.0
        u = np.where(r < 1.0, 0.5 * (1.0 + np.cos(math.pi * np.minimum(r, 1.0))), 0.0)
    u[0] = 1.0
    u[-1] = 0.0
    return u


def _front_position(x, u, level, dx):
    above = np.nonzero(u >= level)[0]
    if above.size == 0 or above[-1] >= len(u) - 1:
        return None
    i = above[-1]
    return float(x[i] + dx * (u[i] - level) / (u[i] - u[i + 1]))


def simulate(f, beta, cfg):
    """Run the simulation and fit the front speed.

    ``f(u, beta)`` must accept numpy arrays.  Raises InstabilityError when the
    solution leaves [-0.1, 1.1] and FrontAtBoundaryError when the tracked
    front comes within 10 units of the right boundary.
    """
    n = int(round(cfg.domain_length / cfg.dx)) + 1
    x = np.linspace(0.0, cfg.domain_length, n)
    dx = x[1] - x[0]
    u = _initial(cfg, x)
    dt = cfg.dt
    inv_dx2 = 1.0 / (dx * dx)

    def rhs(v):
        out = np.zeros_like(v)
        out[1:-1] = (v[2:] - 2.0 * v[1:-1] + v[:-2]) * inv_dx2 + f(v[1:-1], beta)
        return out

    n_steps = int(round(cfg.t_end / dt))
    sample_every = max(1, int(round(cfg.sample_dt / dt)))
    track = []
    t = 0.0
    for k in range(n_steps):
        k1 = rhs(u)
        k2 = rhs(u + 0.5 * dt * k1)
        k3 = rhs(u + 0.5 * dt * k2)
        k4 = rhs(u + dt * k3)
        u = u + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        u[0], u[-1] = 1.0, 0.0
        t += dt
        if (k + 1) % sample_every == 0 or k == n_steps - 1:
            if not np.isfinite(u).all() or u.min() < -0.1 or u.max() > 1.1:
                raise InstabilityError(
                    f"solution left [-0.1, 1.1] at t={t:.3f} "
                    f"(min={u.min():.3f}, max={u.max():.3f})")
            xf = _front_position(x, u, cfg.track_level, dx)
            if xf is None or xf > cfg.domain_length - 10.0:
                raise FrontAtBoundaryError(
                    f"front reached the boundary region at t={t:.3f}; "
                    "increase domain_length")
            track.append((t, xf))

    track = np.asarray(track)
    lo, hi = cfg.fit_window or (0.5 * cfg.t_end, cfg.t_end)
    m = (track[:, 0] >= lo) & (track[:, 0] <= hi)
    if m.sum() < 3:
        raise SimulationError("fit window contains fewer than 3 samples")
    A = np.vstack([track[m, 0], np.ones(int(m.sum()))]).T
    coef, res, *_ = np.linalg.lstsq(A, track[m, 1], rcond=None)
    residual = math.sqrt(float(res[0]) / int(m.sum())) if res.size else 0.0
    return SpeedMeasurement(speed=float(coef[0]), fit_window=(lo, hi),
                            fit_residual=residual, front_track=track,
                            final_state=(x, u))


def write_front_track_csv(measurement, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("t,x_front\n")
        for t, xf in measurement.front_track:
            fh.write(f"{t:.17g},{xf:.17g}\n")


def write_snapshot_csv(measurement, path):
    x, u = measurement.final_state
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("x,u\n")
        for xi, ui in zip(x, u):
            fh.write(f"{xi:.17g},{ui:.17g}\n")
