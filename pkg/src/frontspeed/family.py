"""Solvable reaction nonlinearities f(u, beta) = h(u) * (A(beta) - B(beta) h'(u)).

A family stores the expression trees for h, h', A, B.  Construction rescales
(h, A, B) -> (h/a, a*A, a^2*B) with a = h'(0) when h'(0) differs from 1, which
leaves f pointwise unchanged and normalizes h'(0) = 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from . import expr
from .expr import DomainError

__all__ = [
    "SolvableFamily", "HprimeExtrema", "ValidationReport",
    "builtin", "make_family", "validate", "eval_f", "hprime_extrema",
    "BUILTIN_NAMES",
]

_BUILTINS = {
    # name: (h(u), A(beta), B(beta))
    "hadeler_rothe": ("u*(1-u)", "1 + beta/2", "beta/2"),
    "cgm_sine": ("sin(pi*u)/pi", "1/2", "beta/2"),
    "exp_demo": ("exp(2*u)*u*(1-u)", "1", "beta/2"),
}

BUILTIN_NAMES = tuple(_BUILTINS)


@dataclass(frozen=True)
class HprimeExtrema:
    """sup/inf of h' over (0,1) (endpoint limits included) and the arg-sup."""
    L: float
    l: float
    argmax_u: float


@dataclass
class ValidationReport:
    ok: bool
    normalized: bool
    checks: list  # (name, passed, detail)
    beta_tested: float

    def failures(self):
        return [c for c in self.checks if not c[1]]


@dataclass(eq=False)
class SolvableFamily:
    """Immutable-by-convention family (h, h', A, B); caches are internal."""

    name: str
    h: expr.ExprTree
    hprime: expr.ExprTree
    A: expr.ExprTree
    B: expr.ExprTree
    scale: float = 1.0          # h'(0) of the user-supplied h before rescaling
    source_text: dict = field(default_factory=dict)
    _cache: dict = field(default_factory=dict, repr=False)

    # -- strict evaluation ---------------------------------------------------
    def h_at(self, u):
        return expr.evaluate(self.h, u)

    def hprime_at(self, u):
        return expr.evaluate(self.hprime, u)

    def A_at(self, beta):
        return expr.evaluate(self.A, beta)

    def B_at(self, beta):
        return expr.evaluate(self.B, beta)

    # -- compiled fast paths ---------------------------------------------------
    def compiled(self, which, backend="numpy"):
        key = (which, backend)
        fn = self._cache.get(key)
        if fn is None:
            fn = expr.compile_fn(getattr(self, which), backend)
            self._cache[key] = fn
        return fn

    def f_callable(self, beta, backend="numpy"):
        """f(u) with A, B bound at ``beta``; vectorized for the numpy backend."""
        a = self.A_at(beta)
        b = self.B_at(beta)
        h = self.compiled("h", backend)
        hp = self.compiled("hprime", backend)
        return lambda u: h(u) * (a - b * hp(u))

    def fprime0(self, beta):
        """f'(0) = A - B (using h(0)=0, h'(0)=1)."""
        return self.A_at(beta) - self.B_at(beta)

    def fprime1(self, beta):
        """f'(1) = h'(1) * (A - B h'(1))."""
        hp1 = self.hprime_at(1.0)
        return hp1 * (self.A_at(beta) - self.B_at(beta) * hp1)


def _scaled_trees(h, hprime, A, B, alpha):
    h2 = expr.ExprTree(expr._fold_bin("/", h.root, expr.Num(alpha)), h.variable)
    hp2 = expr.ExprTree(expr._fold_bin("/", hprime.root, expr.Num(alpha)), hprime.variable)
    A2 = expr.ExprTree(expr._fold_bin("*", expr.Num(alpha), A.root), A.variable)
    B2 = expr.ExprTree(expr._fold_bin("*", expr.Num(alpha * alpha), B.root), B.variable)
    return h2, hp2, A2, B2


def make_family(h_text, A_text, B_text, name="custom"):
    """Build a family from expression text; rescales so that h'(0) = 1."""
    h = expr.parse(h_text, "u")
    hprime = expr.differentiate(h)
    A = expr.parse(A_text, "beta")
    B = expr.parse(B_text, "beta")
    alpha = 1.0
    try:
        alpha = expr.evaluate(hprime, 0.0)
    except DomainError:
        pass  # leave unscaled; validation will report the h'(0) failure
    if alpha > 0.0 and abs(alpha - 1.0) > 1e-8:
        h, hprime, A, B = _scaled_trees(h, hprime, A, B, alpha)
    else:
        alpha = 1.0 if alpha <= 0.0 else alpha
    return SolvableFamily(
        name=name, h=h, hprime=hprime, A=A, B=B, scale=alpha,
        source_text={"h": h_text, "A": A_text, "B": B_text})


def builtin(name):
    """One of the bundled example families: hadeler_rothe, cgm_sine, exp_demo."""
    try:
        h_text, A_text, B_text = _BUILTINS[name]
    except KeyError:
        raise ValueError(
            f"unknown builtin family {name!r}; choose from {sorted(_BUILTINS)}") from None
    return make_family(h_text, A_text, B_text, name=name)


def eval_f(fam, u, beta):
    """f(u, beta) = h(u) (A(beta) - B(beta) h'(u)); strict evaluation path."""
    return fam.h_at(u) * (fam.A_at(beta) - fam.B_at(beta) * fam.hprime_at(u))


def validate(fam, beta, grid_n=1000):
    """Grid-based admissibility checks at a given beta.

    Checks the root conditions h(0)=h(1)=0, interior positivity of h,
    the normalization h'(0)=1, positivity of A, B and of A - B h'(u) on the
    grid, and monostability f'(0) > 0 > f'(1).  Positivity between grid
    points is not certified (probabilistic check by design).
    """
    if grid_n < 100:
        raise ValueError("grid_n must be at least 100")
    checks = []

    def record(name, passed, detail=""):
        checks.append((name, bool(passed), detail))

    def guarded(name, fn):
        try:
            fn()
        except DomainError as exc:
            record(name, False, f"domain error: {exc}")

    u_grid = np.linspace(0.0, 1.0, grid_n + 1)[1:-1]

    guarded("h(0)=0", lambda: record(
        "h(0)=0", abs(fam.h_at(0.0)) <= 1e-10, f"h(0)={fam.h_at(0.0):.3e}"))
    guarded("h(1)=0", lambda: record(
        "h(1)=0", abs(fam.h_at(1.0)) <= 1e-10, f"h(1)={fam.h_at(1.0):.3e}"))

    def do_hpos():
        hv = fam.compiled("h")(u_grid)
        bad = ~(np.isfinite(hv) & (hv > 0.0))
        record("h>0 on (0,1)", not bad.any(),
               "" if not bad.any() else f"h({u_grid[bad][0]:.4f})={hv[bad][0]:.3e}")
    guarded("h>0 on (0,1)", do_hpos)

    def do_hp0():
        hp0 = fam.hprime_at(0.0)
        record("h'(0)=1", abs(hp0 - 1.0) <= 1e-8, f"h'(0)={hp0!r}")
    guarded("h'(0)=1", do_hp0)

    def do_ab():
        a = fam.A_at(beta)
        b = fam.B_at(beta)
        record("A(beta)>0", a > 0.0, f"A={a!r}")
        record("B(beta)>0", b > 0.0, f"B={b!r}")

        hp = fam.compiled("hprime")(u_grid)
        margin = a - b * hp
        # include the endpoint limits u -> 0, 1
        m0 = a - b * fam.hprime_at(0.0)
        m1 = a - b * fam.hprime_at(1.0)
        worst = min(float(np.min(margin)), m0, m1) if margin.size else min(m0, m1)
        record("A - B h' > 0 on [0,1]", worst > 0.0 and np.isfinite(margin).all(),
               f"min={worst:.6e}")
        record("f'(0) = A - B > 0", a - b > 0.0, f"A-B={a - b!r}")
        fp1 = fam.fprime1(beta)
        record("f'(1) < 0", fp1 < 0.0, f"f'(1)={fp1!r}")
    guarded("A,B checks", do_ab)

    ok = all(passed for _, passed, _ in checks)
    return ValidationReport(ok=ok, normalized=(fam.scale != 1.0),
                            checks=checks, beta_tested=float(beta))


def hprime_extrema(fam, grid_n=1000, refine_tol=1e-10):
    """sup and inf of h' over (0,1) via grid scan plus golden-section refinement.

    Endpoint limits u -> 0 and u -> 1 are included (the sup of an open-interval
    scan must account for them; for concave h the sup is h'(0) = 1).
    """
    key = ("extrema", grid_n, refine_tol)
    cached = fam._cache.get(key)
    if cached is not None:
        return cached

    hp = fam.compiled("hprime")
    u = np.linspace(0.0, 1.0, grid_n + 1)
    vals = hp(u)

    def refine(idx, sign):
        # golden refinement around an interior grid best; sign=+1 for max
        if idx == 0 or idx == len(u) - 1:
            return u[idx], vals[idx]
        bracket = (u[idx - 1], u[idx], u[idx + 1])
        try:
            res = minimize_scalar(lambda x: -sign * hp(x), bracket=bracket,
                                  method="golden", options={"xtol": refine_tol})
            return float(res.x), sign * (-res.fun)
        except ValueError:
            return u[idx], vals[idx]

    imax = int(np.argmax(vals))
    imin = int(np.argmin(vals))
    arg_l, big = refine(imax, +1.0)
    _, small = refine(imin, -1.0)
    out = HprimeExtrema(L=float(big), l=float(small), argmax_u=float(arg_l))
    fam._cache[key] = out
    return out
