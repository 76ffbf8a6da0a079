"""PELVE, dual PELVE, the linking function and the integral-equation z.

All solvers are bisections on monotone maps:

* ``c -> ES_{1-c eps} - VaR_{1-eps}`` is decreasing in ``c`` (PELVE);
* ``s -> f(s)`` is decreasing, and the dual PELVE is ``eps / s*`` where
  ``f(s*) = ES_{1-eps}``.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .dist_core import DistributionModel, PiecewiseQuantile, QuantileCurve
from .errors import ConvergenceError, DomainError, PelveError, UnsupportedModelError

PELVE_RTOL = 1e-10
PELVE_MAX_ITER = 200
DUAL_RTOL = 1e-13
KINDS = ("pelve", "dual_pelve", "z_curve")


def pelve(model, eps, *, rtol=PELVE_RTOL, max_iter=PELVE_MAX_ITER):
    """``inf{c in [1, 1/eps] : ES_{1-c eps} <= VaR_{1-eps}}``; ``math.inf`` if empty."""
    eps = float(eps)
    if not 0.0 < eps < 1.0:
        raise DomainError(f"eps must lie in (0, 1), got {eps!r}")
    if isinstance(model, PiecewiseQuantile):
        c, iters = _kernels.pw_pelve(model.S, model.F, *model._args, eps, rtol, max_iter)
        if iters < 0:
            raise ConvergenceError("PELVE bisection hit the iteration cap", residual=None)
        return float(c)

    v = float(model.value(eps))
    top = float(model.value(eps * _kernels.TINY_FACTOR))
    if top - v <= _kernels.FLAT_RTOL * (abs(top) + abs(v)):
        return 1.0
    mean = model.mean
    if mean - v > _kernels.FLAT_RTOL * (abs(mean) + abs(v)):
        return math.inf

    def gap(c):
        s = min(c * eps, 1.0)
        return float(model.integral(s)) / s - v

    lo, hi = 1.0, 1.0 / eps
    glo, ghi = gap(lo), mean - v
    for _ in range(max_iter):
        if hi - lo <= rtol * hi:
            return _kernels.final_point(lo, hi, glo, ghi)
        mid = math.sqrt(lo * hi) if hi > 4.0 * lo else 0.5 * (lo + hi)
        g = gap(mid)
        if g <= 0.0:
            hi, ghi = mid, g
        else:
            lo, glo = mid, g
    raise ConvergenceError("PELVE bisection hit the iteration cap", residual=hi - lo)


def _level_crossing(curve, target, s_max, rtol=DUAL_RTOL):
    """The ``s`` in ``(0, s_max]`` with ``f(s) = target`` (bisection in log s)."""
    if float(curve.value(s_max)) >= target:
        return s_max
    lo = s_max
    for _ in range(2000):
        lo *= 0.5
        if lo < 1e-300:
            raise ConvergenceError("no level crossing above 1e-300", residual=target)
        if float(curve.value(lo)) > target:
            break
    hi = lo * 2.0
    for _ in range(400):
        if hi - lo <= rtol * hi:
            break
        mid = math.sqrt(lo * hi)
        if float(curve.value(mid)) > target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _require_strict(model):
    if not getattr(model, "strict", False):
        raise UnsupportedModelError(
            f"{getattr(model, 'name', model)!r} is not continuous and strictly decreasing; "
            "the dual PELVE needs a continuous, strictly increasing distribution function")


def dual_pelve(model, eps):
    """The ``d >= 1`` with ``ES_{1-eps} = VaR_{1-eps/d}``."""
    eps = float(eps)
    if not 0.0 < eps <= 1.0:
        raise DomainError(f"eps must lie in (0, 1], got {eps!r}")
    _require_strict(model)
    target = float(model.integral(eps)) / eps
    s = _level_crossing(model, target, eps)
    return eps / s


@dataclass(frozen=True)
class LinkPoint:
    epsilon: float
    gamma: float


def gamma_link(model, eps):
    """``Gamma(eps) = 1 - F(ES_{1-eps})`` computed from the survival function."""
    eps = float(eps)
    if not 0.0 < eps <= 1.0:
        raise DomainError(f"eps must lie in (0, 1], got {eps!r}")
    _require_strict(model)
    level = float(model.integral(eps)) / eps
    if isinstance(model, DistributionModel):
        gamma = float(model.sf(level))
    else:
        gamma = _level_crossing(model, level, eps)
    return LinkPoint(epsilon=eps, gamma=gamma)


def z_of_curve(f, y):
    """Solve ``int_0^y f = y * f(z y)`` for ``z`` in ``(0, 1]``."""
    y = float(y)
    if not 0.0 < y <= 1.0:
        raise DomainError(f"y must lie in (0, 1], got {y!r}")
    _require_strict(f)
    level = float(f.integral(y)) / y
    return _level_crossing(f, level, y) / y


# ---------------------------------------------------------------- batches

@dataclass
class PelveCurve:
    """Sampled PELVE-type values on a grid.

    ``values`` holds ``math.inf`` for infinite PELVE and ``nan`` where the
    point failed; ``errors`` maps grid indices to messages.
    """

    grid: np.ndarray
    values: np.ndarray
    kind: str = "pelve"
    errors: dict = field(default_factory=dict)

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.kind not in KINDS:
            raise DomainError(f"unknown curve kind {self.kind!r}")
        if self.grid.shape != self.values.shape:
            raise DomainError("grid and values differ in length")
        for i, (e, v) in enumerate(zip(self.grid, self.values)):
            if not math.isfinite(v):
                continue
            if self.kind == "pelve":
                ok = 1.0 - 1e-9 <= v <= (1.0 / e) * (1 + 1e-9)
            elif self.kind == "dual_pelve":
                ok = v >= 1.0 - 1e-9
            else:
                ok = 0.0 < v <= 1.0 + 1e-9
            if not ok:
                raise DomainError(f"value {v!r} at epsilon={e!r} violates the {self.kind} range")

    @property
    def finite(self):
        return np.isfinite(self.values)

    def product_monotone(self, slack=1e-9):
        """Whether ``eps * Pi(eps)`` is non-decreasing over the finite points."""
        ok = self.finite
        prod = self.grid[ok] * self.values[ok]
        return bool(np.all(np.diff(prod) >= -slack * np.maximum(1.0, prod[1:])))

    def to_csv(self, fmt=None):
        fmt = fmt or repr
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["epsilon", "value", "finite"])
        for e, v, ok in zip(self.grid, self.values, self.finite):
            w.writerow([fmt(float(e)), fmt(float(v)), "true" if ok else "false"])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text, kind="pelve"):
        rows = list(csv.DictReader(io.StringIO(text)))
        if rows and list(rows[0].keys()) != ["epsilon", "value", "finite"]:
            raise DomainError("expected header epsilon,value,finite")
        grid = [float(r["epsilon"]) for r in rows]
        values = [float(r["value"]) for r in rows]
        errors = {i: "recorded failure" for i, v in enumerate(values) if math.isnan(v)}
        return cls(grid, values, kind=kind, errors=errors)

    def to_json(self):
        pts = []
        for i, (e, v) in enumerate(zip(self.grid, self.values)):
            pts.append({
                "epsilon": float(e),
                "value": float(v) if math.isfinite(v) else None,
                "finite": bool(math.isfinite(v)),
                "error": self.errors.get(i),
            })
        return {"kind": self.kind, "points": pts}

    @classmethod
    def from_json(cls, doc):
        if isinstance(doc, str):
            doc = json.loads(doc)
        grid, values, errors = [], [], {}
        for i, p in enumerate(doc["points"]):
            grid.append(p["epsilon"])
            if p.get("error"):
                errors[i] = p["error"]
                values.append(math.nan)
            elif p["finite"]:
                values.append(p["value"])
            else:
                values.append(math.inf)
        return cls(grid, values, kind=doc.get("kind", "pelve"), errors=errors)


def default_threads():
    try:
        return max(1, int(os.environ.get("PELVE_LAB_THREADS", "1")))
    except ValueError:
        return 1


def pelve_curve(model, grid, kind="pelve", threads=None):
    """Evaluate ``kind`` over ``grid``; per-point failures are recorded, not raised."""
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise DomainError("grid must be a non-empty 1-d sequence")
    if np.any(np.diff(grid) <= 0):
        raise DomainError("grid must be strictly increasing")
    hi_ok = grid[-1] <= 1.0 if kind != "pelve" else grid[-1] < 1.0
    if grid[0] <= 0.0 or not hi_ok:
        raise DomainError("grid must lie inside (0, 1)")
    func = {"pelve": pelve, "dual_pelve": dual_pelve, "z_curve": z_of_curve}.get(kind)
    if func is None:
        raise DomainError(f"unknown curve kind {kind!r}")

    def one(e):
        try:
            return func(model, e), None
        except PelveError as exc:
            return math.nan, f"{type(exc).__name__}: {exc}"

    n = threads or default_threads()
    if n > 1:
        with ThreadPoolExecutor(max_workers=n) as pool:
            results = list(pool.map(one, grid))
    else:
        results = [one(e) for e in grid]
    values = [r[0] for r in results]
    errors = {i: r[1] for i, r in enumerate(results) if r[1] is not None}
    return PelveCurve(grid, values, kind=kind, errors=errors)


__all__ = [
    "LinkPoint", "PelveCurve", "dual_pelve", "gamma_link", "pelve", "pelve_curve", "z_of_curve",
    "QuantileCurve",
]
