"""Constant z-curves: characteristic roots and the solutions they generate.

With ``x(t) = e^{-t} f(e^{-t})`` a constant ``z = c`` turns into a linear
delay equation whose exponential solutions ``e^{m t}`` satisfy

    (a m) e^{a m} = (-a) e^{-a},    a = -log c.

Writing ``w = a m = theta + i eta`` with ``eta > 0``, the imaginary part
forces ``theta = -eta cot(eta)`` and the real part becomes a scalar
equation in ``eta`` on each window where ``sin(eta) > 0``.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .calib_point import solve_xi_from_c
from .dist_core import QuantileCurve
from .errors import DomainError, MonotonicityError, PreconditionError, SolverFailureError

ROOT_TOL = 1e-10
_INV_E = math.exp(-1.0)


def _check_c(c):
    c = float(c)
    if not 0.0 < c < 1.0:
        raise DomainError(f"c must lie in (0, 1), got {c!r}")
    return c


def _rhs(c):
    return c * math.log(c)  # (-a) e^{-a}


def characteristic_residual(c, m):
    """``|(a m) e^{a m} - (-a) e^{-a}|``."""
    a = -math.log(c)
    w = a * complex(m)
    return abs(w * cmath.exp(w) - _rhs(c))


def solve_alpha(c):
    """The ``alpha > -1`` with ``(alpha + 1)^(-1/alpha) = c``."""
    c = _check_c(c)
    if abs(c - _INV_E) < 1e-15:
        return 0.0
    return -solve_xi_from_c(1.0 / c)


@dataclass(frozen=True)
class RealRoots:
    m1: float
    m2: float
    degenerate: bool

    def __iter__(self):
        return iter((self.m1, self.m2))


def real_roots(c):
    """``m1 = -1`` and ``m2 = -1 - alpha``; equal (and flagged) at ``c = 1/e``."""
    c = _check_c(c)
    alpha = solve_alpha(c)
    return RealRoots(-1.0, -1.0 - alpha, alpha == 0.0)


@dataclass(frozen=True)
class CharacteristicRoot:
    lam: float
    sigma: float
    branch: int
    residual: float

    @property
    def m(self):
        return complex(self.lam, self.sigma)

    def to_json(self):
        return {"branch": self.branch, "lambda": self.lam, "sigma": self.sigma, "residual": self.residual}


@dataclass
class RootSearch:
    roots: list
    failures: dict = field(default_factory=dict)

    def __iter__(self):
        return iter(self.roots)

    def __len__(self):
        return len(self.roots)

    def __getitem__(self, i):
        return self.roots[i]


def _polish(w, b, steps=8):
    for _ in range(steps):
        ew = cmath.exp(w)
        step = (w * ew - b) / (ew * (1.0 + w))
        w -= step
        if abs(step) < 1e-16 * abs(w):
            break
    return w


def _branch_root(c, k):
    a = -math.log(c)
    b = _rhs(c)
    target = math.log(-b)
    lo, hi = 2 * k * math.pi, (2 * k + 1) * math.pi

    def h(eta):
        return math.log(eta) - eta / math.tan(eta) - math.log(math.sin(eta)) - target

    # h runs from -inf to +inf across the window; shrink the ends until the signs show
    d = 1e-3
    while h(lo + d) > 0 and d > 1e-15:
        d *= 0.1
    e = 1e-3
    while h(hi - e) < 0 and e > 1e-15:
        e *= 0.1
    eta = brentq(h, lo + d, hi - e, xtol=1e-15, rtol=1e-15, maxiter=500)
    w = _polish(complex(-eta / math.tan(eta), eta), b)
    m = w / a
    res = characteristic_residual(c, m)
    if not res < ROOT_TOL:
        raise SolverFailureError(f"branch {k}: residual {res:.3g} after polish", interval=k)
    return CharacteristicRoot(m.real, abs(m.imag), k, res)


def complex_roots(c, k_max=1):
    """The first ``k_max`` non-real roots (one per conjugate pair, ``sigma >= 0``),
    by decreasing real part. Failed branches are reported in ``failures``."""
    c = _check_c(c)
    if k_max < 1:
        raise DomainError("k_max must be at least 1")
    roots, failures = [], {}
    for k in range(1, k_max + 1):
        try:
            roots.append(_branch_root(c, k))
        except (SolverFailureError, ValueError) as exc:
            failures[k] = str(exc)
    roots.sort(key=lambda r: -r.lam)
    return RootSearch(roots, failures)


@dataclass
class OscillatorySolutionSpec:
    """Three-term solution ``C1 + C2 y^alpha + C3 y^zeta sin(-sigma log y)``."""

    c: float
    alpha: float
    zeta: float
    sigma_osc: float
    C1: float
    C2: float
    C3: float

    @classmethod
    def from_root(cls, c, root, C1=1.0, C2=None, C3=0.0):
        alpha = solve_alpha(c)
        if C2 is None:
            C2 = -1.0 if alpha > 0 else 1.0
        return cls(c, alpha, -root.lam - 1.0, root.sigma, C1, C2, C3)

    @property
    def theta(self):
        return (self.zeta + 1.0) * math.log(self.c)

    @property
    def eta(self):
        return -abs(self.sigma_osc) * math.log(self.c)

    def c3_bound(self):
        return -self.C2 * self.alpha / (self.zeta + abs(self.sigma_osc))

    def system_residual(self):
        """Max residual of ``c log c = -eta e^{-eta/tan eta}/sin eta`` and ``theta = -eta/tan eta``."""
        eta, theta = self.eta, self.theta
        r1 = self.c * math.log(self.c) + eta * math.exp(-eta / math.tan(eta)) / math.sin(eta)
        r2 = theta + eta / math.tan(eta)
        return max(abs(r1), abs(r2))

    def check(self):
        if not self.C2 * self.alpha < 0:
            raise MonotonicityError("need C2 * alpha < 0")
        if not self.zeta > max(0.0, self.alpha):
            raise MonotonicityError("need zeta > max(0, alpha)")
        if self.C3 != 0.0 and not 0.0 < self.C3 < self.c3_bound():
            raise MonotonicityError(
                f"C3={self.C3!r} outside (0, {self.c3_bound()!r}); f would not be strictly decreasing")

    def to_json(self):
        return {"c": self.c, "alpha": self.alpha, "zeta": self.zeta, "sigma": self.sigma_osc,
                "C1": self.C1, "C2": self.C2, "C3": self.C3, "theta": self.theta, "eta": self.eta}


class OscillatoryCurve(QuantileCurve):
    family = "oscillatory"

    def __init__(self, spec):
        super().__init__(strict=True, name=f"oscillatory c={spec.c!r}")
        self.spec = spec

    def _value_array(self, s):
        sp = self.spec
        with np.errstate(divide="ignore", invalid="ignore"):
            ls = np.log(s)
            out = sp.C1 + sp.C2 * np.exp(sp.alpha * ls) + sp.C3 * np.exp(sp.zeta * ls) * np.sin(-sp.sigma_osc * ls)
        return np.where(s > 0, out, sp.C1 + sp.C2 * np.inf if sp.alpha < 0 else sp.C1)

    def _integral_array(self, s):
        sp = self.spec
        p, sg = sp.zeta + 1.0, sp.sigma_osc
        pos = s > 0
        ss = np.where(pos, s, 1.0)
        ls = np.log(ss)
        osc = np.exp(p * ls) * (sg * np.cos(sg * ls) - p * np.sin(sg * ls)) / (p * p + sg * sg)
        out = sp.C1 * ss + sp.C2 * np.exp((sp.alpha + 1.0) * ls) / (sp.alpha + 1.0) + sp.C3 * osc
        return np.where(pos, out, 0.0)

    @property
    def has_closed_form(self):
        return True


def oscillatory_solution(spec):
    """Closed-form curve for ``spec``; raises MonotonicityError when the
    coefficient bounds that guarantee strict decrease fail."""
    spec.check()
    return OscillatoryCurve(spec)


@dataclass
class StructureReport:
    c: float
    alpha: float
    zeta: float | None
    C1: float | None
    C2: float | None
    K: float | None
    max_remainder: float | None
    bounded: bool
    degenerate: bool
    window: tuple

    def to_json(self):
        return {k: getattr(self, k) for k in
                ("c", "alpha", "zeta", "C1", "C2", "K", "max_remainder", "bounded", "degenerate")} | {
                    "window": list(self.window)}


def structure_check(f, c, window=(1e-4, 1e-1), n=200, z_tol=1e-3):
    """Fit ``C1 + C2 y^alpha`` near 0 and measure the remainder against ``y^zeta``.

    ``zeta`` comes from the first complex root. The fit is weighted by
    ``y^-zeta`` so it targets the ratio ``|R(y)| / y^zeta``; ``bounded`` is
    a heuristic comparison of that ratio on the two halves of the window.
    """
    from .pelve_engine import z_of_curve

    c = _check_c(c)
    probe = np.geomspace(max(window[0], 1e-3), 1.0, 7)
    zs = np.array([z_of_curve(f, y) for y in probe])
    if np.max(np.abs(zs - c)) > z_tol:
        raise PreconditionError(f"z_f is not constant at c={c!r} (max deviation {np.max(np.abs(zs - c)):.3g})")
    alpha = solve_alpha(c)
    if alpha == 0.0:
        return StructureReport(c, 0.0, None, None, None, None, None, True, True, tuple(window))
    zeta = -complex_roots(c, 1)[0].lam - 1.0
    y = np.geomspace(window[0], window[1], n)
    fy = np.asarray(f.value(y), dtype=float)
    yz = y ** zeta
    keep = yz > 1e-10 * np.maximum(1.0, np.abs(fy))
    y, fy, yz = y[keep], fy[keep], yz[keep]
    if y.size < 4:
        raise PreconditionError("window too close to 0 for the remainder to be resolved")
    design = np.column_stack([np.ones_like(y), y ** alpha]) / yz[:, None]
    (C1, C2), *_ = np.linalg.lstsq(design, fy / yz, rcond=None)
    rem = fy - C1 - C2 * y ** alpha
    ratio = np.abs(rem) / yz
    half = y.size // 2
    K = float(np.max(ratio))
    bounded = bool(np.max(ratio[:half]) <= 2.0 * np.max(ratio[half:]) + 1e-6)
    return StructureReport(c, alpha, zeta, float(C1), float(C2), K, float(np.max(np.abs(rem))),
                           bounded, False, tuple(window))


theorem51_structure_check = structure_check  # name kept for callers of the original API
