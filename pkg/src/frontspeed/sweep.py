"""Parameter sweeps, exchange detection and family-aware minimal speeds.

family_cmin ties the shooting result back to the family structure: a steep
connection whose speed matches A/sqrt(B) is the quadrature front and settles
pushed selection; a steep candidate at any other speed is either a genuine
non-explicit steep front or a near-tangent miss of the saddle (the two are
indistinguishable in double precision), so it is suppressed when the
monotonicity conditions prove linear selection at that beta and kept, with a
warning note, where the theory is silent.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

from . import lmn, profile, shoot, speeds, variational
from .family import hprime_extrema, validate

__all__ = [
    "SweepOptions", "SweepTable", "NonMonotoneExchangeError",
    "family_cmin", "run_sweep", "refine_exchange",
    "sweep_to_csv", "sweep_to_json_dict",
]


class NonMonotoneExchangeError(RuntimeError):
    """The pushed predicate is not a single step across the bracket."""


@dataclass
class SweepOptions:
    class_tol: float = speeds.DEFAULT_CLASS_TOL
    shoot_opts: shoot.ShootOptions = field(default_factory=shoot.ShootOptions)
    certificates: bool = True
    workers: int = 1
    near_exchange_margin: float = 0.02
    refine_pred_tol: float = 5e-6
    steep_match_rtol: float = 1e-6
    z_span: float = 40.0
    profile_n: int = 2001
    grid_n: int = 1000
    suppress_unmatched_steep: bool = True


@dataclass
class SweepTable:
    rows: list                      # SpeedReport, sorted by beta
    exchange_empirical: float | None
    exchange_analytic: speeds.ExchangePoint | None
    agreement: float | None


def _theory_window(beta):
    return (beta / 100.0 + 1e-12, beta * 100.0)


def _pulled_by_theory(fam, beta):
    """Linear selection certified by the paper-level structure at this beta."""
    a = fam.A_at(beta)
    b = fam.B_at(beta)
    if a <= 2.0 * b:
        return False, ""
    ext = hprime_extrema(fam)
    if ext.L <= 1.0 + 1e-9:
        return True, "sup h' = 1 and A > 2B"
    lo, hi = _theory_window(beta)
    hyps = speeds.monotonicity_hypotheses(fam, lo, hi)
    if all(hyps):
        try:
            xp = speeds.exchange_candidate(fam, lo, hi)
        except speeds.NoExchangeError:
            return False, ""
        if xp.nondegenerate and beta <= xp.beta_star:
            return True, (f"monotone A,B with nonincreasing A-B and "
                          f"beta <= beta* = {xp.beta_star:.6g}")
    return False, ""


def family_cmin(fam, beta, opts=None):
    """Minimal speed for a solvable family, shooting + structure.

    The steep-connection speed from shooting is accepted outright when it
    agrees with A/sqrt(B) (the quadrature front); otherwise the monotonicity
    theory decides whether it can be minimal (see module docstring).
    """
    opts = opts or SweepOptions()
    c_l = speeds.linear_speed(fam, beta)
    c_nl = speeds.nonlinear_speed(fam, beta)
    f = fam.f_callable(beta, "math")
    res = shoot.minimal_speed(f, fam.fprime0(beta), fam.fprime1(beta),
                              c_upper=c_nl, opts=opts.shoot_opts)
    root = res.steep_root
    if root is None:
        return res
    if abs(root - c_nl) <= opts.steep_match_rtol * (1.0 + c_nl):
        return replace(res, note="steep connection matches A/sqrt(B)")
    if opts.suppress_unmatched_steep:
        pulled, why = _pulled_by_theory(fam, beta)
        if pulled:
            return replace(
                res, c_min=c_l, decay=shoot.SLOW, bracket=(c_l, root),
                note=(f"steep candidate at c={root:.8g} does not match "
                      f"A/sqrt(B)={c_nl:.8g}; suppressed ({why})"))
    return replace(res, note=(f"steep candidate at c={root:.8g} does not match "
                              f"A/sqrt(B)={c_nl:.8g}; kept (theory silent)"))


def _build_row(fam, beta, opts, beta_range):
    try:
        report = speeds.SpeedReport(
            beta=float(beta), c_l=math.nan, c_nl=math.nan, gamma=math.nan,
            c_min=math.nan, regime="invalid")
        vr = validate(fam, beta, grid_n=opts.grid_n)
        if not vr.ok:
            failed = "; ".join(name for name, ok, _ in vr.checks if not ok)
            report.error = f"validation failed: {failed}"
            return report
        report.c_l = speeds.linear_speed(fam, beta)
        report.c_nl = speeds.nonlinear_speed(fam, beta)
        report.gamma = speeds.gamma(fam, beta)
        res = family_cmin(fam, beta, opts)
        report.c_min = res.c_min
        cls = speeds.classify(fam, beta, res.c_min, tol=opts.class_tol,
                              beta_range=beta_range)
        report.regime = cls.regime
        report.prediction = cls.prediction
        bound = variational.hr_bound_nu_family(fam, beta)
        report.bounds = [("c_l", report.c_l), ("c_nl", report.c_nl),
                         ("hr_nu_family", bound.value)]
        if opts.certificates:
            prof = profile.explicit_profile(fam, beta, report.c_nl,
                                            z_span=opts.z_span, n=opts.profile_n)
            report.phi_cert = lmn.pushed_certificate(
                fam, beta, report.c_nl, prof, class_tol=opts.class_tol)
        return report
    except Exception as exc:  # per-beta failures stay in the row
        report.error = f"{type(exc).__name__}: {exc}"
        return report


def run_sweep(fam, beta_grid, opts=None):
    """Compute a SpeedReport per beta and locate the regime flip."""
    opts = opts or SweepOptions()
    betas = sorted(float(b) for b in beta_grid)
    beta_range = (betas[0], betas[-1])

    if opts.workers > 1:
        with ThreadPoolExecutor(max_workers=opts.workers) as pool:
            rows = list(pool.map(
                lambda b: _build_row(fam, b, opts, beta_range), betas))
    else:
        rows = [_build_row(fam, b, opts, beta_range) for b in betas]

    analytic = None
    try:
        analytic = speeds.exchange_candidate(fam, betas[0], betas[-1])
    except speeds.NoExchangeError:
        pass

    if analytic is not None:
        for row in rows:
            if abs(row.beta - analytic.beta_star) < opts.near_exchange_margin:
                row.near_exchange = True

    empirical = None
    valid = [r for r in rows if r.error is None]
    for prev, nxt in zip(valid, valid[1:]):
        if prev.regime in (speeds.PULLED, speeds.DEGENERATE) \
                and nxt.regime == speeds.PUSHED:
            empirical = 0.5 * (prev.beta + nxt.beta)
            break

    agreement = None
    if empirical is not None and analytic is not None:
        agreement = abs(empirical - analytic.beta_star)
    return SweepTable(rows=rows, exchange_empirical=empirical,
                      exchange_analytic=analytic, agreement=agreement)


def refine_exchange(fam, bracket, tol=1e-3, opts=None):
    """Bisect the pushed predicate (c_min - c_l > refine_pred_tol) in beta."""
    opts = opts or SweepOptions()
    lo, hi = float(bracket[0]), float(bracket[1])

    def pushed(beta):
        res = family_cmin(fam, beta, opts)
        return res.c_min - speeds.linear_speed(fam, beta) > opts.refine_pred_tol

    p_lo, p_hi = pushed(lo), pushed(hi)
    if p_lo or not p_hi:
        raise NonMonotoneExchangeError(
            f"predicate is not False->True across [{lo}, {hi}]: "
            f"pushed({lo})={p_lo}, pushed({hi})={p_hi}")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if pushed(mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# serialization

def _fmt(x):
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    return f"{x:.17g}"


def sweep_to_csv(table):
    lines = ["beta,c_l,c_nl,gamma,c_min,regime,hr_bound,phi_cert"]
    for r in table.rows:
        hr_bound = next((v for label, v in r.bounds if label == "hr_nu_family"),
                        None)
        cert = "" if r.phi_cert is None else ("true" if r.phi_cert else "false")
        lines.append(",".join([
            _fmt(r.beta), _fmt(r.c_l), _fmt(r.c_nl), _fmt(r.gamma),
            _fmt(r.c_min), r.regime, _fmt(hr_bound), cert]))
    return "\n".join(lines) + "\n"


def sweep_to_json_dict(table):
    exchange = {
        "empirical": table.exchange_empirical,
        "analytic": None,
        "agreement": table.agreement,
    }
    if table.exchange_analytic is not None:
        xp = table.exchange_analytic
        exchange["analytic"] = {
            "beta_star": xp.beta_star,
            "nondegenerate": xp.nondegenerate,
            "slope": xp.slope,
            "multiple_roots": xp.multiple_roots,
        }
    return {
        "rows": [speeds.report_to_json_dict(r) for r in table.rows],
        "exchange": exchange,
    }


def sweep_to_json(table, indent=None):
    return json.dumps(sweep_to_json_dict(table), indent=indent)
