"""Command-line interface.

Subcommands: validate, speeds, cmin, sweep, profile, lmn, simulate, bound.
Global flags: --config FILE, --family NAME, --output PATH, --format csv|json,
--seed N.  Exit codes: 0 success, 1 usage error, 2 numerical failure.

The JSON config mirrors the command-line surface; a custom family looks like

    {"family": {"custom": {"h": "exp(2*u)*u*(1-u)", "A": "1", "B": "beta/2"}}}
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import lmn, pde, profile, shoot, speeds, sweep, variational
from .expr import DomainError, ExprSyntaxError
from .family import BUILTIN_NAMES, builtin, make_family, validate
from .lmn import DivergenceError
from .pde import SimulationError
from .profile import ProfileError
from .shoot import ShootError
from .speeds import InvalidFamilyError, NoExchangeError
from .sweep import NonMonotoneExchangeError
from .variational import TrialFunctionError

_NUMERICAL_ERRORS = (
    ShootError, InvalidFamilyError, NoExchangeError, DomainError,
    ProfileError, SimulationError, DivergenceError, TrialFunctionError,
    NonMonotoneExchangeError, ExprSyntaxError,
)

_SANE_RANGES = {
    "grid_n": (100, 10**6), "profile_n": (100, 10**6),
    "class_tol": (1e-9, 0.5), "z_span": (5.0, 1000.0),
    "c_tol": (1e-12, 1e-2), "workers": (1, 64),
    "dx": (1e-4, 1.0), "t_end": (1e-3, 1e5), "domain_length": (1.0, 1e6),
    "track_level": (1e-6, 1.0 - 1e-6), "sample_dt": (1e-4, 1e3),
}


class _UsageError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


class _ValidationFailure(RuntimeError):
    pass


def _check_range(name, value):
    lo, hi = _SANE_RANGES.get(name, (None, None))
    if lo is not None and not (lo <= value <= hi):
        raise _UsageError(f"{name}={value!r} outside the sane range [{lo}, {hi}]")
    return value


def _load_config(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise _UsageError(f"cannot read config {path!r}: {exc}")
    if not isinstance(cfg, dict):
        raise _UsageError("config must be a JSON object")
    return cfg


def _resolve_family(args, cfg):
    spec = cfg.get("family")
    if args.family is not None:
        spec = args.family
    if spec is None:
        raise _UsageError("no family given (use --family or a config file)")
    if isinstance(spec, str):
        if spec not in BUILTIN_NAMES:
            raise _UsageError(
                f"unknown family {spec!r}; builtins: {', '.join(BUILTIN_NAMES)}")
        return builtin(spec)
    if isinstance(spec, dict):
        keys = set(spec) & {"builtin", "custom"}
        if len(keys) != 1:
            raise _UsageError("family must name exactly one of builtin/custom")
        if "builtin" in keys:
            name = spec["builtin"]
            if name not in BUILTIN_NAMES:
                raise _UsageError(f"unknown builtin family {name!r}")
            return builtin(name)
        custom = spec["custom"]
        missing = {"h", "A", "B"} - set(custom)
        if missing:
            raise _UsageError(f"custom family missing keys: {sorted(missing)}")
        return make_family(custom["h"], custom["A"], custom["B"],
                           name=custom.get("name", "custom"))
    raise _UsageError("family must be a name or an object")


def _numerics(cfg):
    num = dict(cfg.get("numerics", {}))
    sim = dict(num.pop("sim", {}))
    for k, v in {**num, **sim}.items():
        if k in _SANE_RANGES:
            _check_range(k, v)
    return num, sim


def _sweep_opts(num, seed=0):
    opts = sweep.SweepOptions()
    if "class_tol" in num:
        opts.class_tol = num["class_tol"]
    if "grid_n" in num:
        opts.grid_n = int(num["grid_n"])
    if "z_span" in num:
        opts.z_span = num["z_span"]
    if "profile_n" in num:
        opts.profile_n = int(num["profile_n"])
    if "workers" in num:
        opts.workers = int(num["workers"])
    if "c_tol" in num:
        opts.shoot_opts = shoot.ShootOptions(c_tol=num["c_tol"])
    return opts


def _require_valid(fam, beta, grid_n):
    report = validate(fam, beta, grid_n=grid_n)
    if not report.ok:
        failed = "; ".join(f"{n} ({d})" for n, ok, d in report.checks if not ok)
        raise _ValidationFailure(f"family invalid at beta={beta}: {failed}")
    return report


def _emit(args, text):
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text if text.endswith("\n") else text + "\n")
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _fmt_json(payload):
    return json.dumps(payload, indent=2)


# ---------------------------------------------------------------------------
# subcommand implementations

def _cmd_validate(args, fam, num, sim):
    report = validate(fam, args.beta, grid_n=int(num.get("grid_n", 1000)))
    payload = {
        "beta": args.beta, "ok": report.ok, "normalized": report.normalized,
        "checks": [[n, ok, d] for n, ok, d in report.checks],
    }
    if args.format == "csv":
        lines = ["check,passed,detail"]
        lines += [f"{n},{str(ok).lower()},{d!r}" for n, ok, d in report.checks]
        return "\n".join(lines), 0 if report.ok else 2
    return _fmt_json(payload), 0 if report.ok else 2


def _speed_row(args, fam, num):
    opts = _sweep_opts(num, seed=args.seed)
    table = sweep.run_sweep(fam, [args.beta], opts)
    row = table.rows[0]
    if row.error:
        raise _ValidationFailure(row.error)
    return row


def _cmd_speeds(args, fam, num, sim):
    row = _speed_row(args, fam, num)
    if args.format == "csv":
        table = sweep.SweepTable([row], None, None, None)
        return sweep.sweep_to_csv(table), 0
    return _fmt_json(speeds.report_to_json_dict(row)), 0


def _cmd_cmin(args, fam, num, sim):
    opts = _sweep_opts(num, seed=args.seed)
    _require_valid(fam, args.beta, opts.grid_n)
    res = sweep.family_cmin(fam, args.beta, opts)
    payload = {
        "beta": args.beta,
        "c_l": speeds.linear_speed(fam, args.beta),
        "c_nl": speeds.nonlinear_speed(fam, args.beta),
        "c_min": res.c_min,
        "iterations": res.iterations,
        "bracket": list(res.bracket),
        "decay": res.decay,
        "note": res.note,
    }
    if args.format == "csv":
        keys = list(payload)
        vals = [str(payload[k]) for k in keys]
        return ",".join(keys) + "\n" + ",".join(vals), 0
    return _fmt_json(payload), 0


def _cmd_sweep(args, fam, num, sim):
    if args.steps < 2:
        raise _UsageError("--steps must be at least 2")
    grid = np.linspace(args.beta_from, args.beta_to, args.steps)
    opts = _sweep_opts(num, seed=args.seed)
    table = sweep.run_sweep(fam, grid, opts)
    refined = None
    if args.refine:
        valid = [r for r in table.rows if r.error is None]
        bracket = None
        for prev, nxt in zip(valid, valid[1:]):
            if prev.regime in (speeds.PULLED, speeds.DEGENERATE) \
                    and nxt.regime == speeds.PUSHED:
                bracket = (prev.beta, nxt.beta)
                break
        if bracket is None:
            raise NoExchangeError("no pulled->pushed flip found to refine")
        refined = sweep.refine_exchange(fam, bracket, opts=opts)
    if args.format == "csv":
        if refined is not None:
            sys.stderr.write(f"refined exchange beta* = {refined:.6f}\n")
        return sweep.sweep_to_csv(table), 0
    payload = sweep.sweep_to_json_dict(table)
    if refined is not None:
        payload["exchange"]["refined"] = refined
    return _fmt_json(payload), 0


def _cmd_profile(args, fam, num, sim):
    opts = _sweep_opts(num, seed=args.seed)
    _require_valid(fam, args.beta, opts.grid_n)
    c_nl = speeds.nonlinear_speed(fam, args.beta)
    if args.numeric:
        res = sweep.family_cmin(fam, args.beta, opts)
        c = args.c if args.c is not None else res.c_min
        out = shoot.shoot_once(fam.f_callable(args.beta, "math"),
                               fam.fprime1(args.beta), c, opts.shoot_opts,
                               fprime0=fam.fprime0(args.beta))
        prof = profile.profile_from_trajectory(*out.trajectory, c,
                                               z_span=opts.z_span,
                                               n=opts.profile_n)
    else:
        c = args.c if args.c is not None else c_nl
        prof = profile.explicit_profile(fam, args.beta, c,
                                        z_span=opts.z_span, n=opts.profile_n)
    if args.format == "json":
        payload = {"beta": args.beta, "c": prof.c, "source": prof.source,
                   "truncated": prof.truncated,
                   "z": list(prof.z), "u": list(prof.u)}
        return _fmt_json(payload), 0
    lines = ["z,u"] + [f"{z:.17g},{u:.17g}" for z, u in zip(prof.z, prof.u)]
    return "\n".join(lines), 0


def _cmd_lmn(args, fam, num, sim):
    opts = _sweep_opts(num, seed=args.seed)
    _require_valid(fam, args.beta, opts.grid_n)
    prof = profile.explicit_profile(fam, args.beta, args.c,
                                    z_span=opts.z_span, n=opts.profile_n)
    rate = lmn.fit_decay_rate(prof)
    member = lmn.h1c_member(rate, args.c)
    payload = {
        "beta": args.beta, "c": args.c, "decay_rate": rate,
        "h1c_member": member,
        "certificate": lmn.pushed_certificate(fam, args.beta, args.c, prof,
                                              class_tol=opts.class_tol),
    }
    if member:
        result = lmn.phi(prof, args.c, fam, args.beta)
        payload.update(phi=result.value, phi_normalized=result.normalization,
                       truncation_z=list(result.truncation_z),
                       weight_overflow_guard=result.weight_overflow_guard)
    if args.format == "csv":
        keys = list(payload)
        return ",".join(keys) + "\n" + ",".join(str(payload[k]) for k in keys), 0
    return _fmt_json(payload), 0


def _cmd_simulate(args, fam, num, sim):
    opts = _sweep_opts(num, seed=args.seed)
    _require_valid(fam, args.beta, opts.grid_n)
    c_nl = speeds.nonlinear_speed(fam, args.beta)
    kwargs = dict(sim)
    for name in ("dx", "dt", "t_end", "domain_length", "track_level",
                 "sample_dt"):
        v = getattr(args, name, None)
        if v is not None:
            _check_range(name, v)
            kwargs[name] = v
    if args.ic is not None:
        kwargs["initial_condition"] = args.ic
    t_end = kwargs.pop("t_end", 60.0)
    length = kwargs.pop("domain_length", None)
    if length is None:
        cfg = pde.config_for_speed(c_nl, t_end, **kwargs)
    else:
        cfg = pde.SimConfig(domain_length=length, t_end=t_end, **kwargs)
    fn = fam.compiled("h")  # force numpy cache before timing-sensitive loop
    a, b = fam.A_at(args.beta), fam.B_at(args.beta)
    hp = fam.compiled("hprime")

    def f(u, _beta):
        return fn(u) * (a - b * hp(u))

    meas = pde.simulate(f, args.beta, cfg)
    if args.snapshot:
        pde.write_snapshot_csv(meas, args.snapshot)
    if args.format == "csv":
        lines = ["t,x_front"] + [f"{t:.17g},{x:.17g}" for t, x in meas.front_track]
        return "\n".join(lines), 0
    payload = {
        "beta": args.beta, "speed": meas.speed,
        "fit_window": list(meas.fit_window), "fit_residual": meas.fit_residual,
        "c_l": speeds.linear_speed(fam, args.beta), "c_nl": c_nl,
        "samples": len(meas.front_track),
    }
    return _fmt_json(payload), 0


def _cmd_bound(args, fam, num, sim):
    opts = _sweep_opts(num, seed=args.seed)
    _require_valid(fam, args.beta, opts.grid_n)
    res = variational.hr_bound_nu_family(fam, args.beta)
    payload = {
        "beta": args.beta, "hr_nu_family": res.value, "arg_nu": res.arg_nu,
        "case": res.case_label, "trial": res.trial_description,
    }
    if args.numeric_minmax:
        mm = variational.numeric_minmax(fam, args.beta, seed=args.seed)
        payload["numeric_minmax"] = mm.value
        payload["numeric_minmax_trial"] = mm.trial_description
    if args.format == "csv":
        keys = list(payload)
        return ",".join(keys) + "\n" + ",".join(str(payload[k]) for k in keys), 0
    return _fmt_json(payload), 0


# ---------------------------------------------------------------------------

def _build_parser():
    parser = _Parser(prog="frontspeed",
                     description="Minimal travelling-wave speeds for solvable "
                                 "monostable reaction-diffusion equations")
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument("--family", help="builtin family name")
    parser.add_argument("--output", help="write the result to a file")
    parser.add_argument("--format", choices=("csv", "json"), default="json")
    parser.add_argument("--seed", type=int, default=0,
                        help="seed for stochastic restarts")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, **extra):
        p = sub.add_parser(name)
        p.set_defaults(handler=fn)
        return p

    p = add("validate", _cmd_validate)
    p.add_argument("--beta", type=float, required=True)

    p = add("speeds", _cmd_speeds)
    p.add_argument("--beta", type=float, required=True)

    p = add("cmin", _cmd_cmin)
    p.add_argument("--beta", type=float, required=True)

    p = add("sweep", _cmd_sweep)
    p.add_argument("--beta-from", type=float, required=True, dest="beta_from")
    p.add_argument("--beta-to", type=float, required=True, dest="beta_to")
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--refine", action="store_true")

    p = add("profile", _cmd_profile)
    p.add_argument("--beta", type=float, required=True)
    group = p.add_mutually_exclusive_group()
    group.add_argument("--explicit", action="store_true")
    group.add_argument("--numeric", action="store_true")
    p.add_argument("--c", type=float, default=None)

    p = add("lmn", _cmd_lmn)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--c", type=float, required=True)

    p = add("simulate", _cmd_simulate)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--dx", type=float)
    p.add_argument("--dt", type=float)
    p.add_argument("--t-end", type=float, dest="t_end")
    p.add_argument("--domain-length", type=float, dest="domain_length")
    p.add_argument("--track-level", type=float, dest="track_level")
    p.add_argument("--sample-dt", type=float, dest="sample_dt")
    p.add_argument("--ic", choices=("step", "bump"))
    p.add_argument("--snapshot", help="write the final u(x) to a CSV file")

    p = add("bound", _cmd_bound)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--numeric-minmax", action="store_true",
                   dest="numeric_minmax")
    return parser


def main(argv=None):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        sys.stderr.write(f"usage error: {exc}\n")
        parser.print_usage(sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)

    try:
        cfg = _load_config(args.config) if args.config else {}
        fam = _resolve_family(args, cfg)
        num, sim = _numerics(cfg)
        out_cfg = cfg.get("output", {})
        if args.output is None and "path" in out_cfg:
            args.output = out_cfg["path"]
        if "--format" not in (argv or sys.argv) and "format" in out_cfg:
            if out_cfg["format"] not in ("csv", "json"):
                raise _UsageError(f"bad output format {out_cfg['format']!r}")
            args.format = out_cfg["format"]
        text, code = args.handler(args, fam, num, sim)
    except _UsageError as exc:
        sys.stderr.write(f"usage error: {exc}\n")
        return 1
    except _ValidationFailure as exc:
        sys.stderr.write(f"validation failure: {exc}\n")
        return 2
    except _NUMERICAL_ERRORS as exc:
        sys.stderr.write(f"numerical failure ({type(exc).__name__}): {exc}\n")
        return 2
    _emit(args, text)
    return code


if __name__ == "__main__":
    sys.exit(main())
