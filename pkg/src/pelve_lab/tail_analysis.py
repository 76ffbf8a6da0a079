"""Monotonicity of the (dual) PELVE from the shape of the inverse hazard
``1/eta = S/f``, tail conditioning, and the PELVE ladder towards zero."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .dist_core import (GPD, Exponential, LocationScale, LogNormal, Normal, StudentT,
                        TailConditioned)
from .errors import DomainError, PreconditionError, UnsupportedModelError
from .pelve_engine import pelve

CONVEXITY_RTOL = 1e-8
DEFAULT_REGION = (0.9, 1.0 - 1e-6)
CERTIFICATE_DELTA = 0.99
CLOSED_FORM_FLOOR = 1e-6
_TAIL_FAMILIES = (Normal, StudentT, LogNormal, GPD, Exponential)


@dataclass
class HazardProfile:
    grid: np.ndarray
    inv_hazard: np.ndarray
    second_diff: np.ndarray  # same length as grid, nan at the two ends
    region: tuple

    @property
    def tolerance(self):
        return CONVEXITY_RTOL * float(np.max(np.abs(self.inv_hazard)))

    def to_csv(self, fmt=repr):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "inv_hazard", "second_diff"])
        for row in zip(self.grid, self.inv_hazard, self.second_diff):
            w.writerow([fmt(float(v)) for v in row])
        return buf.getvalue()


def _inv_hazard(model, x):
    log_ih = getattr(model, "log_inv_hazard", None)
    if log_ih is not None:
        return np.exp(log_ih(x))
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.asarray(model.sf(x), dtype=float) / np.asarray(model.pdf(x), dtype=float)


def hazard_profile(model, q_lo=DEFAULT_REGION[0], q_hi=DEFAULT_REGION[1], n=512):
    """``1/eta`` on a uniform x-grid between the ``q_lo`` and ``q_hi`` quantiles."""
    if not getattr(model, "has_density", False):
        raise UnsupportedModelError(f"{getattr(model, 'name', model)!r} has no density")
    if not 0.0 < q_lo < q_hi < 1.0:
        raise DomainError("need 0 < q_lo < q_hi < 1")
    if n < 64:
        raise DomainError("need at least 64 grid points")
    x = np.linspace(float(model.quantile(q_lo)), float(model.quantile(q_hi)), n)
    ih = _inv_hazard(model, x)
    if not np.all(np.isfinite(ih)) or np.any(ih <= 0):
        raise DomainError("1/eta is not finite and positive on the region; the density vanishes there")
    sd = np.full(n, np.nan)
    sd[1:-1] = ih[2:] - 2.0 * ih[1:-1] + ih[:-2]
    return HazardProfile(x, ih, sd, (q_lo, q_hi))


@dataclass(frozen=True)
class MonotonicityVerdict:
    verdict: str
    evidence: float
    region: tuple

    def to_json(self):
        return {"verdict": self.verdict, "evidence": self.evidence, "region": list(self.region)}


def classify_monotonicity(model, region=DEFAULT_REGION, n=512):
    """Convex ``1/eta`` means a decreasing dual PELVE, concave an increasing one."""
    prof = hazard_profile(model, region[0], region[1], n)
    sd = prof.second_diff[1:-1]
    tol = prof.tolerance
    convex = sd >= -tol
    concave = sd <= tol
    if np.all(convex) and np.all(concave):
        return MonotonicityVerdict("constant", 1.0, tuple(region))
    if np.all(convex):
        return MonotonicityVerdict("decreasing", 1.0, tuple(region))
    if np.all(concave):
        return MonotonicityVerdict("increasing", 1.0, tuple(region))
    return MonotonicityVerdict("inconclusive", float(max(convex.mean(), concave.mean())), tuple(region))


def tail_condition(model, p):
    """``X`` given ``X > F^{-1}(p)``."""
    return TailConditioned(model, p)


@dataclass
class LimitEstimate:
    epsilons: np.ndarray
    values: np.ndarray
    last: float
    ladder_monotone: bool
    limit_detected: bool
    certificate: MonotonicityVerdict | None

    def to_json(self):
        return {
            "ladder": [{"epsilon": float(e), "value": float(v)} for e, v in zip(self.epsilons, self.values)],
            "last": self.last,
            "ladder_monotone": self.ladder_monotone,
            "limit_detected": self.limit_detected,
            "certificate": None if self.certificate is None else self.certificate.to_json(),
        }


def _closed_form_tail(model):
    while isinstance(model, (LocationScale, TailConditioned)):
        model = model.base
    return isinstance(model, _TAIL_FAMILIES)


def limit_at_zero(model, eps_floor=1e-10, eps_start=1e-2, per_decade=1, tol=5e-4):
    """PELVE on a geometric ladder down to ``eps_floor``.

    A monotone ladder is bounded and reported as converging; oscillation
    with amplitude above ``tol`` is reported as no limit detected. The
    certificate classifies ``1/eta`` beyond the 0.99 quantile when the
    model has a density.
    """
    eps_floor = float(eps_floor)
    if not 0.0 < eps_floor < eps_start:
        raise DomainError("need 0 < eps_floor < eps_start")
    if eps_floor < CLOSED_FORM_FLOOR and not _closed_form_tail(model):
        raise PreconditionError("levels below 1e-6 need a closed-form tail ES (normal, t, lognormal, GPD, exponential)")
    n = int(round(math.log10(eps_start / eps_floor) * per_decade)) + 1
    eps = np.geomspace(eps_start, eps_floor, n)
    vals = np.array([pelve(model, e) for e in eps])
    d = np.diff(vals)
    big = d[np.abs(d) > tol]
    monotone = bool(np.all(d <= tol) or np.all(d >= -tol))
    detected = monotone or not np.any(np.diff(np.sign(big)) != 0)
    cert = None
    if getattr(model, "has_density", False):
        q_hi = 1.0 - max(eps_floor, 1e-12)
        try:
            cert = classify_monotonicity(model, (CERTIFICATE_DELTA, q_hi))
        except DomainError:
            cert = None
    return LimitEstimate(eps, vals, float(vals[-1]), monotone, detected, cert)
