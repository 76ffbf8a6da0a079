"""Recover a quantile curve from a target z-curve (equivalently a dual
PELVE curve ``1/z``) by the method of steps.

With ``omega(y) = y z(y)`` and ``u`` its inverse, the integral equation
``int_0^y f = y f(omega(y))`` taken between ``y`` and ``a_{n-1}`` gives, for
``w`` in ``[a_{n+1}, a_n]``,

    f(w) = (a_{n-1} f(a_n) - int_{u(w)}^{a_{n-1}} f) / u(w),

which only needs ``f`` on the previous interval ``[a_n, a_{n-1}]``. The
first interval ``[a, 1]`` is seeded with a GPD shape.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import Chebyshev
from scipy.interpolate import PchipInterpolator

from .calib_point import solve_xi_from_c
from .dist_core import GPD, QuantileCurve, gpd_quantile_shape, gpd_shape_integral
from .errors import DegenerateZError, DomainError, InvalidZCurveError, SolverFailureError

MAX_STEPS = 10_000
_NAMED = {"1/2": 0.5, "1/e": math.exp(-1.0), "0.9^10": 0.9 ** 10}


class ZCurve:
    """Target ``z(y)`` on ``(0, 1]``, extended by ``z(y) = z(1)`` for ``y > 1``."""

    def __init__(self, func, name="custom", constant=None, validate=True):
        self._func = func
        self.name = name
        self.constant = constant
        self.a = float(self._raw(np.array([1.0]))[0])
        if validate:
            self.validate()

    def _raw(self, y):
        return np.asarray(self._func(y), dtype=float) * np.ones_like(y)

    def __call__(self, y):
        arr = np.asarray(y, dtype=float)
        flat = np.atleast_1d(arr)
        out = np.where(flat > 1.0, self.a, self._raw(np.minimum(flat, 1.0)))
        return float(out[0]) if arr.ndim == 0 else out.reshape(arr.shape)

    def omega(self, y):
        return np.asarray(y, dtype=float) * self(y)

    def validate(self, n=4001):
        y = np.logspace(-8, 0, n)
        z = self(y)
        if not np.all(np.isfinite(z)) or np.any(z <= 0) or np.any(z > 1):
            raise InvalidZCurveError(f"z-curve {self.name!r} leaves (0, 1]")
        if np.any(np.diff(y * z) <= 0):
            raise InvalidZCurveError(f"y*z(y) is not strictly increasing for {self.name!r}")

    @classmethod
    def constant_curve(cls, c):
        c = float(c)
        if not 0.0 < c <= 1.0:
            raise InvalidZCurveError("constant z must lie in (0, 1]")
        return cls(lambda y: np.full(np.shape(y), c), name=f"constant {c!r}", constant=c)

    @classmethod
    def exponential_case(cls):
        """``z(y) = log(y / (1 - e^{-y})) / y``, the z-curve of ``e^{-x}``-type quantiles."""

        def z(y):
            y = np.asarray(y, dtype=float)
            # the direct form cancels for small y; the series is exact to 1e-15 below 1e-2
            small = y < 1e-2
            ys = np.where(small, 1.0, y)
            exact = np.log(ys / -np.expm1(-ys)) / ys
            series = 0.5 - y / 24.0 + y ** 3 / 2880.0 - y ** 5 / 181440.0
            return np.where(small, series, exact)

        return cls(z, name="exponential_case")

    @classmethod
    def tabulated(cls, ys, zs):
        ys = np.asarray(ys, dtype=float)
        zs = np.asarray(zs, dtype=float)
        order = np.argsort(ys)
        ys, zs = ys[order], zs[order]
        if ys.size < 2 or ys[0] <= 0 or ys[-1] < 1.0:
            raise InvalidZCurveError("table needs at least two points in (0, 1] including y = 1")
        om = ys * zs
        if np.any(np.diff(om) <= 0):
            raise InvalidZCurveError("tabulated y*z(y) is not strictly increasing")
        spline = PchipInterpolator(np.log(ys), np.log(om))
        y0, z0 = ys[0], zs[0]

        def z(y):
            y = np.asarray(y, dtype=float)
            inner = np.exp(spline(np.log(np.clip(y, y0, 1.0)))) / np.clip(y, y0, 1.0)
            return np.where(y < y0, z0, inner)

        return cls(z, name="table")

    @classmethod
    def from_json(cls, doc):
        if isinstance(doc, str):
            doc = json.loads(doc)
        kind = doc.get("type", "constant")
        if kind == "constant":
            c = doc["c"]
            if isinstance(c, str):
                if c not in _NAMED:
                    raise InvalidZCurveError(f"unknown named constant {c!r}")
                c = _NAMED[c]
            return cls.constant_curve(c)
        if kind == "exponential_case":
            return cls.exponential_case()
        if kind == "table":
            pts = np.asarray(doc["points"], dtype=float)
            return cls.tabulated(pts[:, 0], pts[:, 1])
        raise InvalidZCurveError(f"unknown z-curve type {kind!r}")


def u_from_z(z):
    """Inverse of ``omega(y) = y z(y)``, extended by ``u(w) = w / z(1)`` above ``z(1)``."""
    a = z.a
    if z.constant is not None:
        c = z.constant

        def u_const(w):
            return np.asarray(w, dtype=float) / c

        return u_const

    def u(w):
        arr = np.asarray(w, dtype=float)
        w1 = np.atleast_1d(arr).astype(float)
        out = w1 / a
        inside = (w1 > 0) & (w1 <= a)
        if np.any(inside):
            target = w1[inside]
            lo = np.log(target)  # omega(w) <= w, so u(w) >= w
            hi = np.zeros_like(lo)
            for _ in range(90):
                mid = 0.5 * (lo + hi)
                below = z.omega(np.exp(mid)) < target
                lo = np.where(below, mid, lo)
                hi = np.where(below, hi, mid)
            out[inside] = np.exp(0.5 * (lo + hi))
        return float(out[0]) if arr.ndim == 0 else out.reshape(arr.shape)

    return u


def seed_f0(a):
    """GPD-shaped seed on ``[a, 1]`` with ``(1 - xi)^(1/xi) = a``."""
    a = float(a)
    if not 0.0 < a < 1.0:
        raise DomainError("seed needs a in (0, 1)")
    xi = 0.0 if abs(a - math.exp(-1.0)) < 1e-15 else solve_xi_from_c(1.0 / a)
    return GPD(xi, domain_lo=a)


class SteppedSolution(QuantileCurve):
    """Piecewise solution: seed on ``[a_1, 1]``, Chebyshev interpolants on
    ``[a_{n+1}, a_n]``, and an affine GPD-shaped tail below ``a_N``."""

    family = "stepped_solution"

    def __init__(self, breakpoints, seed, segments, tail, f0_xi, z=None):
        super().__init__(knots=breakpoints[1:], strict=True)
        self.breakpoints = np.asarray(breakpoints, dtype=float)
        self.seed = seed
        self.segments = segments
        self.tail = tail  # (loc, scale, xi) of loc + scale*k_xi below a_N
        self.f0_xi = f0_xi
        self.z = z
        a = self.breakpoints
        n = len(a) - 1
        cum = np.zeros(n + 1)
        loc, scale, txi = tail
        cum[n] = loc * a[n] + scale * float(gpd_shape_integral(txi, a[n]))
        for i in range(n - 1, 0, -1):
            seg, anti = segments[i - 1]
            cum[i] = cum[i + 1] + float(anti(a[i]))
        cum[0] = cum[1] + float(seed.integral(1.0) - seed.integral(a[1]))
        self._cum = cum

    @property
    def n_intervals(self):
        return len(self.breakpoints) - 1

    def _locate(self, s):
        # interval index: 0 for [a_1, 1], i for [a_{i+1}, a_i], n for below a_n
        desc = self.breakpoints
        return np.clip(np.searchsorted(-desc, -s, side="left") - 1, 0, len(desc) - 1)

    def _value_array(self, s):
        out = np.empty_like(s)
        idx = self._locate(s)
        n = self.n_intervals
        for i in np.unique(idx):
            m = idx == i
            if i == 0:
                out[m] = self.seed._value_array(s[m])
            elif i >= n:
                loc, scale, txi = self.tail
                out[m] = loc + scale * gpd_quantile_shape(txi, np.maximum(s[m], 1e-300))
            else:
                out[m] = self.segments[i - 1][0](s[m])
        return out

    def _integral_array(self, s):
        out = np.empty_like(s)
        idx = self._locate(s)
        n = self.n_intervals
        a = self.breakpoints
        for i in np.unique(idx):
            m = idx == i
            if i == 0:
                out[m] = self._cum[1] + self.seed._integral_array(s[m]) - float(self.seed.integral(a[1]))
            elif i >= n:
                loc, scale, txi = self.tail
                out[m] = loc * s[m] + scale * gpd_shape_integral(txi, s[m])
            else:
                out[m] = self._cum[i + 1] + self.segments[i - 1][1](s[m])
        return out

    @property
    def has_closed_form(self):
        return True

    def knot_table(self, per_interval=8):
        """Sample points ``(s, f(s))`` covering every interval, for export."""
        pts = [1.0]
        a = self.breakpoints
        for i in range(self.n_intervals):
            pts.extend(np.linspace(a[i], a[i + 1], per_interval + 1)[1:])
        s = np.array(pts)
        return np.column_stack([s, self.value(s)])

    def to_json(self, per_interval=8):
        return {
            "family": "stepped_solution",
            "z": getattr(self.z, "name", None),
            "f0_xi": self.f0_xi,
            "breakpoints": [float(v) for v in self.breakpoints],
            "tail": {"loc": self.tail[0], "scale": self.tail[1], "xi": self.tail[2]},
            "knots": self.knot_table(per_interval).tolist(),
        }


def _check_decreasing(seg, lo, hi, n):
    w = np.linspace(lo, hi, n)
    v = seg(w)
    return bool(np.all(np.diff(v) < 0))


def solve_advanced_ode(z, eps_min=1e-3, mesh=32, seed=None, max_steps=MAX_STEPS):
    """Solve for ``f`` with ``z_f = z`` down to ``eps_min``.

    Parameters
    ----------
    z : ZCurve
    eps_min : float
        Stop once an interval reaches below this level.
    mesh : int
        Chebyshev nodes per interval (at least 16).
    seed : QuantileCurve, optional
        Curve on ``[z(1), 1]`` with closed-form ``integral``; defaults to
        :func:`seed_f0`.
    """
    a = z.a
    if a >= 1.0:
        raise DegenerateZError("z(1) >= 1: the intervals do not shrink")
    if not 0.0 < eps_min < a:
        raise DomainError("eps_min must lie in (0, z(1))")
    if mesh < 16:
        raise DomainError("mesh must be at least 16")
    seed = seed_f0(a) if seed is None else seed
    f0_xi = getattr(seed, "xi", None)
    u = u_from_z(z)

    bps = [1.0, a]
    segments = []
    prev_val = seed.value
    prev_int = seed.integral
    for n in range(1, max_steps + 1):
        hi_prev, lo_prev = bps[-2], bps[-1]  # a_{n-1}, a_n
        anchor = hi_prev * float(prev_val(lo_prev))
        top_int = float(prev_int(hi_prev))
        a_next = float(z.omega(lo_prev))
        if not a_next < lo_prev:
            raise SolverFailureError("interval sequence stopped decreasing", interval=n)

        def rhs(w, anchor=anchor, top_int=top_int, prev_int=prev_int):
            uw = np.asarray(u(w), dtype=float)
            return (anchor - (top_int - np.asarray(prev_int(uw), dtype=float))) / uw

        seg = Chebyshev.interpolate(rhs, mesh - 1, domain=[a_next, lo_prev])
        anti = seg.integ(lbnd=a_next)
        if not _check_decreasing(seg, a_next, lo_prev, 4 * mesh):
            raise SolverFailureError(f"solution not strictly decreasing on interval {n}", interval=n)
        segments.append((seg, anti))
        bps.append(a_next)
        prev_val = seg

        def prev_int(s, anti=anti, base=a_next):
            return anti(np.asarray(s, dtype=float))

        # shift so the recurrence sees int_0^s as a consistent antiderivative:
        # only differences of prev_int enter, so the base point is irrelevant
        if a_next <= eps_min:
            break
    else:
        raise SolverFailureError("step limit reached before eps_min", interval=max_steps)

    # affine GPD tail below a_N, matched in value and slope
    last_seg = segments[-1][0]
    aN = bps[-1]
    zN = float(z(aN))
    txi = 0.0 if abs(zN - math.exp(-1.0)) < 1e-15 else solve_xi_from_c(1.0 / zN)
    slope = float(last_seg.deriv()(aN))
    scale = -slope * aN ** (txi + 1.0)
    if not scale > 0:
        raise SolverFailureError("solution is not decreasing at the last breakpoint", interval=len(segments))
    loc = float(last_seg(aN)) - scale * float(gpd_quantile_shape(txi, aN))
    return SteppedSolution(bps, seed, segments, (loc, scale, txi), f0_xi, z=z)


@dataclass
class ResidualReport:
    grid: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    residual: np.ndarray
    sup: float
    normalized_sup: float

    def to_csv(self, fmt=repr):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["y", "lhs", "rhs", "residual"])
        for row in zip(self.grid, self.lhs, self.rhs, self.residual):
            w.writerow([fmt(float(v)) for v in row])
        return buf.getvalue()

    def to_json(self):
        return {"sup": self.sup, "normalized_sup": self.normalized_sup,
                "points": [{"y": float(y), "residual": float(r)} for y, r in zip(self.grid, self.residual)]}


def validate_solution(f, z, grid):
    """Residual ``int_0^y f - y f(z(y) y)`` of the integral equation on ``grid``."""
    y = np.asarray(grid, dtype=float)
    lhs = np.asarray(f.integral(y), dtype=float)
    fy = np.asarray(f.value(y), dtype=float)
    rhs = y * np.asarray(f.value(np.asarray(z(y)) * y), dtype=float)
    r = lhs - rhs
    return ResidualReport(y, lhs, rhs, r, float(np.max(np.abs(r))),
                          float(np.max(np.abs(r) / (np.abs(fy) + 1.0))))
