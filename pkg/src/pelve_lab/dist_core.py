"""Quantile curves, distribution families and the VaR / ES engine.

A model is stored through its tail quantile ``f(s) = VaR_{1-s}``, so that
``s`` is the probability of the upper tail and ``f`` is decreasing.
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from . import _kernels
from .errors import (
    ConvergenceError,
    DomainError,
    IntegrabilityError,
    ParameterError,
    UnsupportedModelError,
)

DEFAULT_TOL = 1e-10
BETA_CANTOR = math.log(2.0) / math.log(3.0)


@dataclass(frozen=True)
class RiskLevel:
    p: float

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise DomainError(f"probability level must lie in [0, 1], got {self.p!r}")


def _as_array(s):
    arr = np.asarray(s, dtype=float)
    return arr, arr.ndim == 0


def _scalar_or_array(out, scalar):
    return float(out.reshape(())) if scalar else out


class QuantileCurve:
    """Tail quantile function ``s -> VaR_{1-s}`` on ``(domain_lo, domain_hi)``.

    Parameters
    ----------
    func : callable, optional
        ``f(s)``. Vectorized callables are used as is; scalar ones are wrapped.
    tail_integral : callable, optional
        Closed form of ``s -> int_0^s f``. Without it, integrals go through
        :func:`integrate_quantile`.
    knots : sequence of float
        Interior points where ``f`` is not smooth; quadrature splits there.
    strict : bool
        Whether ``f`` is continuous and strictly decreasing.
    """

    family = "curve"

    def __init__(self, func=None, tail_integral=None, domain_lo=0.0, domain_hi=1.0,
                 knots=(), strict=True, name=None):
        self._func = func
        self._tail = tail_integral
        self.domain_lo = float(domain_lo)
        self.domain_hi = float(domain_hi)
        self.knots = tuple(float(k) for k in knots)
        self.strict = bool(strict)
        self.name = name or self.family

    # subclasses override these two
    def _value_array(self, s):
        try:
            out = np.asarray(self._func(s), dtype=float)
            if out.shape == s.shape:
                return out
        except (TypeError, ValueError):
            pass
        return np.array([float(self._func(float(x))) for x in s.ravel()]).reshape(s.shape)

    def _integral_array(self, s):
        if self._tail is not None:
            return np.asarray(self._tail(s), dtype=float) * np.ones_like(s)
        flat = [integrate_quantile(self, 0.0, float(x)) if x > 0 else 0.0 for x in s.ravel()]
        return np.array(flat).reshape(s.shape)

    @property
    def has_closed_form(self):
        return self._tail is not None

    def value(self, s):
        """Evaluate ``f(s)``; scalars in, scalar out."""
        arr, scalar = _as_array(s)
        return _scalar_or_array(self._value_array(np.atleast_1d(arr)).reshape(arr.shape), scalar)

    __call__ = value

    def eval(self, s):
        return self.value(s)

    def integral(self, s):
        """``int_0^s f``, in closed form when the family has one."""
        arr, scalar = _as_array(s)
        if np.any((arr < 0) | (arr > 1)):
            raise DomainError("tail probability must lie in [0, 1]")
        return _scalar_or_array(self._integral_array(np.atleast_1d(arr)).reshape(arr.shape), scalar)

    @property
    def mean(self):
        return float(self.integral(1.0))

    @property
    def ess_sup(self):
        return float(self.value(1e-300))

    @property
    def ess_inf(self):
        return float(self.value(1.0 - 1e-16))

    def __repr__(self):
        return f"{type(self).__name__}({self.name})"


class DistributionModel(QuantileCurve):
    """A quantile curve that also knows its distribution function.

    Families override ``sf``/``pdf`` with closed forms; the defaults invert
    the quantile numerically.
    """

    has_density = True

    def __init__(self, knots=(), strict=True, name=None):
        super().__init__(knots=knots, strict=strict, name=name)

    @property
    def has_closed_form(self):
        return True

    def quantile(self, p):
        arr, scalar = _as_array(p)
        if np.any((arr < 0) | (arr > 1)):
            raise DomainError("probability must lie in [0, 1]")
        return self.value(1.0 - arr) if not scalar else self.value(1.0 - float(arr))

    def sf(self, x):
        arr, scalar = _as_array(x)
        lo = np.zeros(arr.shape)
        hi = np.ones(arr.shape)
        for _ in range(110):
            mid = 0.5 * (lo + hi)
            above = self._value_array(np.atleast_1d(mid)).reshape(mid.shape) >= arr
            lo = np.where(above, mid, lo)
            hi = np.where(above, hi, mid)
        return _scalar_or_array(0.5 * (lo + hi), scalar)

    def cdf(self, x):
        arr, scalar = _as_array(x)
        return _scalar_or_array(1.0 - np.asarray(self.sf(arr)), scalar)

    def pdf(self, x):
        raise UnsupportedModelError(f"{self.name} has no density")

    @property
    def support(self):
        return self.ess_inf, self.ess_sup

    def to_json(self):
        raise UnsupportedModelError(f"{self.name} has no JSON form")


# ---------------------------------------------------------------- families

class Uniform(DistributionModel):
    family = "uniform"

    def __init__(self, lo=0.0, hi=1.0):
        if not hi > lo:
            raise ParameterError("uniform needs hi > lo")
        super().__init__()
        self.lo, self.hi = float(lo), float(hi)

    def _value_array(self, s):
        return self.hi - (self.hi - self.lo) * s

    def _integral_array(self, s):
        return self.hi * s - 0.5 * (self.hi - self.lo) * s * s

    def sf(self, x):
        arr, scalar = _as_array(x)
        return _scalar_or_array(np.clip((self.hi - arr) / (self.hi - self.lo), 0.0, 1.0), scalar)

    def pdf(self, x):
        arr, scalar = _as_array(x)
        inside = (arr >= self.lo) & (arr <= self.hi)
        return _scalar_or_array(np.where(inside, 1.0 / (self.hi - self.lo), 0.0), scalar)

    @property
    def ess_sup(self):
        return self.hi

    @property
    def ess_inf(self):
        return self.lo

    def to_json(self):
        return {"family": "uniform", "lo": self.lo, "hi": self.hi}


class Exponential(DistributionModel):
    family = "exponential"

    def __init__(self, rate=1.0):
        if not rate > 0:
            raise ParameterError("exponential rate must be positive")
        super().__init__()
        self.rate = float(rate)

    def _value_array(self, s):
        with np.errstate(divide="ignore"):
            return -np.log(s) / self.rate

    def _integral_array(self, s):
        with np.errstate(divide="ignore", invalid="ignore"):
            out = s * (1.0 - np.log(s)) / self.rate
        return np.where(s > 0, out, 0.0)

    def sf(self, x):
        arr, scalar = _as_array(x)
        return _scalar_or_array(np.where(arr > 0, np.exp(-self.rate * np.maximum(arr, 0.0)), 1.0), scalar)

    def pdf(self, x):
        arr, scalar = _as_array(x)
        return _scalar_or_array(np.where(arr >= 0, self.rate * np.exp(-self.rate * np.maximum(arr, 0.0)), 0.0), scalar)

    @property
    def ess_sup(self):
        return math.inf

    @property
    def ess_inf(self):
        return 0.0

    def to_json(self):
        return {"family": "exponential", "rate": self.rate}


def gpd_quantile_shape(xi, eps):
    """The GPD tail-quantile shape ``k(eps) = (eps^-xi - 1)/xi`` (``-log eps`` at 0).

    A three-term series in ``xi`` is used for ``|xi| < 1e-6`` so the shape is
    continuous through ``xi = 0``.
    """
    xi = float(xi)
    if xi >= 1.0:
        raise ParameterError("GPD shape needs xi < 1 for a finite mean")
    arr, scalar = _as_array(eps)
    if np.any((arr <= 0) | (arr > 1)):
        raise DomainError("eps must lie in (0, 1]")
    return _scalar_or_array(np.asarray(_kernels.shape(xi, arr), dtype=float), scalar)


def gpd_shape_integral(xi, s):
    """Closed form of ``int_0^s k``."""
    arr, scalar = _as_array(s)
    return _scalar_or_array(_kernels.shape_integral(float(xi), np.atleast_1d(arr)).reshape(arr.shape), scalar)


class GPD(DistributionModel):
    """Generalized Pareto: ``VaR_{1-s} = mu + sigma * k_xi(s)``."""

    family = "gpd"

    def __init__(self, xi=0.0, mu=0.0, sigma=1.0, domain_lo=0.0):
        if not xi < 1.0:
            raise ParameterError("GPD shape needs xi < 1 for a finite mean")
        if not sigma > 0:
            raise ParameterError("GPD scale must be positive")
        super().__init__()
        self.xi, self.mu, self.sigma = float(xi), float(mu), float(sigma)
        self.domain_lo = float(domain_lo)

    def _value_array(self, s):
        with np.errstate(divide="ignore", over="ignore"):
            return self.mu + self.sigma * _kernels.shape(self.xi, s)

    def _integral_array(self, s):
        return self.mu * s + self.sigma * _kernels.shape_integral(self.xi, s)

    def _log_sf(self, z):
        xi = self.xi
        with np.errstate(divide="ignore", invalid="ignore"):
            if abs(xi) < 1e-12:
                return -z
            return -np.log1p(xi * z) / xi

    def sf(self, x):
        arr, scalar = _as_array(x)
        z = (arr - self.mu) / self.sigma
        out = np.exp(self._log_sf(np.maximum(z, 0.0)))
        out = np.where(z <= 0, 1.0, out)
        if self.xi < 0:
            out = np.where(z >= -1.0 / self.xi, 0.0, out)
        return _scalar_or_array(out, scalar)

    def pdf(self, x):
        arr, scalar = _as_array(x)
        z = (arr - self.mu) / self.sigma
        zc = np.maximum(z, 0.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.exp((1.0 + self.xi) * self._log_sf(zc)) / self.sigma
        inside = z >= 0
        if self.xi < 0:
            inside &= z < -1.0 / self.xi
        return _scalar_or_array(np.where(inside, out, 0.0), scalar)

    @property
    def ess_sup(self):
        return self.mu - self.sigma / self.xi if self.xi < 0 else math.inf

    @property
    def ess_inf(self):
        return self.mu

    def to_json(self):
        return {"family": "gpd", "xi": self.xi, "mu": self.mu, "sigma": self.sigma}


class Normal(DistributionModel):
    family = "normal"

    def __init__(self, mu=0.0, sigma=1.0):
        if not sigma > 0:
            raise ParameterError("normal sigma must be positive")
        super().__init__()
        self.mu, self.sigma = float(mu), float(sigma)

    def _value_array(self, s):
        return self.mu - self.sigma * special.ndtri(s)

    def _integral_array(self, s):
        z = special.ndtri(s)
        with np.errstate(invalid="ignore", over="ignore"):
            dens = np.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)
        dens = np.where(np.isfinite(z), dens, 0.0)
        return self.mu * s + self.sigma * dens

    def quantile(self, p):
        arr, scalar = _as_array(p)
        return _scalar_or_array(self.mu + self.sigma * special.ndtri(arr), scalar)

    def sf(self, x):
        arr, scalar = _as_array(x)
        return _scalar_or_array(special.ndtr(-(arr - self.mu) / self.sigma), scalar)

    def pdf(self, x):
        arr, scalar = _as_array(x)
        z = (arr - self.mu) / self.sigma
        return _scalar_or_array(np.exp(-0.5 * z * z) / (self.sigma * math.sqrt(2 * math.pi)), scalar)

    def log_inv_hazard(self, x):
        z = (np.asarray(x, dtype=float) - self.mu) / self.sigma
        return special.log_ndtr(-z) - (-0.5 * z * z - 0.5 * math.log(2 * math.pi)) + math.log(self.sigma)

    @property
    def ess_sup(self):
        return math.inf

    @property
    def ess_inf(self):
        return -math.inf

    def to_json(self):
        return {"family": "normal", "mu": self.mu, "sigma": self.sigma}


class StudentT(DistributionModel):
    family = "t"

    def __init__(self, nu, mu=0.0, sigma=1.0):
        if not nu > 1:
            raise ParameterError("Student-t needs nu > 1 for a finite mean")
        if not sigma > 0:
            raise ParameterError("Student-t sigma must be positive")
        super().__init__()
        self.nu, self.mu, self.sigma = float(nu), float(mu), float(sigma)
        nu = self.nu
        self._log_norm = special.gammaln((nu + 1) / 2) - special.gammaln(nu / 2) - 0.5 * math.log(nu * math.pi)

    def _std_pdf(self, q):
        return np.exp(self._log_norm - 0.5 * (self.nu + 1) * np.log1p(q * q / self.nu))

    def _upper(self, s):
        return -special.stdtrit(self.nu, s)

    def _value_array(self, s):
        return self.mu + self.sigma * self._upper(s)

    def _integral_array(self, s):
        q = self._upper(np.clip(s, 1e-300, 1.0))
        with np.errstate(invalid="ignore", over="ignore"):
            part = (self.nu + q * q) / (self.nu - 1.0) * self._std_pdf(q)
        part = np.where(np.isfinite(q), part, 0.0)
        out = self.mu * s + self.sigma * part
        return np.where(s <= 0, 0.0, np.where(s >= 1, self.mu, out))

    def quantile(self, p):
        arr, scalar = _as_array(p)
        return _scalar_or_array(self.mu + self.sigma * special.stdtrit(self.nu, arr), scalar)

    def sf(self, x):
        arr, scalar = _as_array(x)
        return _scalar_or_array(special.stdtr(self.nu, -(arr - self.mu) / self.sigma), scalar)

    def pdf(self, x):
        arr, scalar = _as_array(x)
        return _scalar_or_array(self._std_pdf((arr - self.mu) / self.sigma) / self.sigma, scalar)

    @property
    def ess_sup(self):
        return math.inf

    @property
    def ess_inf(self):
        return -math.inf

    def to_json(self):
        return {"family": "t", "nu": self.nu, "mu": self.mu, "sigma": self.sigma}


class LogNormal(DistributionModel):
    family = "lognormal"

    def __init__(self, sigma=1.0, mu=0.0):
        if not sigma > 0:
            raise ParameterError("lognormal sigma must be positive")
        super().__init__()
        self.sigma, self.mu = float(sigma), float(mu)

    def _value_array(self, s):
        return np.exp(self.mu - self.sigma * special.ndtri(s))

    def _integral_array(self, s):
        return math.exp(self.mu + 0.5 * self.sigma ** 2) * special.ndtr(self.sigma + special.ndtri(s))

    def quantile(self, p):
        arr, scalar = _as_array(p)
        return _scalar_or_array(np.exp(self.mu + self.sigma * special.ndtri(arr)), scalar)

    def _z(self, x):
        with np.errstate(divide="ignore"):
            return (np.log(np.maximum(x, 0.0)) - self.mu) / self.sigma

    def sf(self, x):
        arr, scalar = _as_array(x)
        return _scalar_or_array(special.ndtr(-self._z(arr)), scalar)

    def pdf(self, x):
        arr, scalar = _as_array(x)
        z = self._z(arr)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.exp(-0.5 * z * z) / (np.maximum(arr, 1e-300) * self.sigma * math.sqrt(2 * math.pi))
        return _scalar_or_array(np.where(arr > 0, out, 0.0), scalar)

    @property
    def ess_sup(self):
        return math.inf

    @property
    def ess_inf(self):
        return 0.0

    def to_json(self):
        return {"family": "lognormal", "sigma": self.sigma, "mu": self.mu}


class Constant(DistributionModel):
    """Point mass; only usable on the PELVE path."""

    family = "constant"
    has_density = False

    def __init__(self, value=0.0):
        super().__init__(strict=False)
        self.level = float(value)

    def _value_array(self, s):
        return np.full(s.shape, self.level)

    def _integral_array(self, s):
        return self.level * s

    def sf(self, x):
        arr, scalar = _as_array(x)
        return _scalar_or_array(np.where(arr < self.level, 1.0, 0.0), scalar)

    @property
    def ess_sup(self):
        return self.level

    @property
    def ess_inf(self):
        return self.level

    def to_json(self):
        return {"family": "constant", "value": self.level}


_HEAD_FORMS = {"gpd": _kernels.HEAD_GPD, "power": _kernels.HEAD_POWER}


class PiecewiseQuantile(DistributionModel):
    """Linear interpolation between knots ``(s, f(s))``, optionally below the
    first knot a GPD-shaped head ``loc + scale*k_xi(s)`` (form ``"gpd"``) or
    ``loc + scale*s^-xi/xi`` (form ``"power"``).

    Knot values may be flat; flat pieces put the model outside the strict
    class, so the dual PELVE refuses it.
    """

    family = "piecewise"

    def __init__(self, knots, head=None):
        pts = np.asarray(knots, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 1:
            raise ParameterError("knots must be a list of [s, f(s)] pairs")
        S, F = pts[:, 0].copy(), pts[:, 1].copy()
        if np.any(np.diff(S) <= 0):
            raise ParameterError("knot s values must be strictly increasing")
        if S[0] < 0 or S[-1] != 1.0:
            raise ParameterError("knots must lie in [0, 1] and end at s = 1")
        if np.any(np.diff(F) > 0):
            raise ParameterError("knot values must be non-increasing")
        self.head = None
        form, xi, loc, scale, ref = _kernels.HEAD_NONE, 0.0, 0.0, 1.0, 1.0
        if S[0] > 0:
            if head is None:
                raise ParameterError("a head is required when the first knot is above s = 0")
            xi = float(head.get("xi", 0.0))
            loc = float(head.get("loc", 0.0))
            scale = float(head.get("scale", 1.0))
            ref = float(head.get("ref", 1.0))
            form_name = head.get("form", "gpd")
            if form_name not in _HEAD_FORMS:
                raise ParameterError(f"unknown head form {form_name!r}")
            form = _HEAD_FORMS[form_name]
            if not xi < 1.0 or not scale > 0 or not ref > 0:
                raise ParameterError("head needs xi < 1, scale > 0 and ref > 0")
            if form == _kernels.HEAD_POWER and xi == 0.0:
                raise ParameterError("power head needs xi != 0")
            self.head = {"xi": xi, "loc": loc, "scale": scale, "form": form_name}
            if form == _kernels.HEAD_POWER:
                self.head["ref"] = ref
        elif len(S) < 2:
            raise ParameterError("need at least two knots without a head")
        flat = bool(np.any(np.diff(F) == 0))
        super().__init__(knots=S, strict=not flat)
        self.S, self.F = S, F
        self._args = (form, xi, loc, scale, math.log(ref))
        if self.head is not None:
            at_knot = float(_kernels._head_value_np(form, xi, loc, scale, math.log(ref), np.array([S[0]]))[0])
            if not math.isclose(at_knot, F[0], rel_tol=1e-9, abs_tol=1e-12 * (1 + abs(F[0]))):
                raise ParameterError("head does not meet the first knot continuously")

    def _value_array(self, s):
        return _kernels.pw_value(self.S, self.F, *self._args, np.ascontiguousarray(s.ravel(), dtype=float)).reshape(s.shape)

    def _integral_array(self, s):
        return _kernels.pw_integral(self.S, self.F, *self._args, np.ascontiguousarray(s.ravel(), dtype=float)).reshape(s.shape)

    @property
    def has_density(self):
        return self.strict

    def slope(self, s):
        """Left-continuous derivative of f at s."""
        s = float(s)
        if s < self.S[0]:
            form, xi, loc, scale, lref = self._args
            if form == _kernels.HEAD_POWER:
                return -scale * math.exp(-xi * (math.log(s) - lref)) / s
            return -scale * s ** (-xi - 1.0)
        j = min(max(int(np.searchsorted(self.S, s, side="right")) - 1, 0), len(self.S) - 2)
        return (self.F[j + 1] - self.F[j]) / (self.S[j + 1] - self.S[j])

    def pdf(self, x):
        if not self.strict:
            raise UnsupportedModelError("piecewise quantile with flat pieces has atoms")
        arr, scalar = _as_array(x)
        s = np.atleast_1d(np.asarray(self.sf(arr)))
        out = np.array([-1.0 / self.slope(v) if 0 < v < 1 else 0.0 for v in s.ravel()])
        return _scalar_or_array(out.reshape(arr.shape), scalar)

    @property
    def ess_sup(self):
        if self.head is None:
            return float(self.F[0])
        form, xi, loc, scale, _ = self._args
        if xi >= 0:
            return math.inf
        return loc + (scale * (-1.0 / xi) if form == _kernels.HEAD_GPD else 0.0)

    @property
    def ess_inf(self):
        return float(self.F[-1])

    def to_json(self):
        out = {"family": "piecewise", "knots": [[float(s), float(f)] for s, f in zip(self.S, self.F)]}
        if self.head is not None:
            out["head"] = dict(self.head)
        return out


class TriangleDensity(DistributionModel):
    """Two-humped density ``|x|/2`` on ``[-1, 1]`` and ``(2-|x|)/2`` on
    ``1 <= |x| <= 2``; its PELVE is not monotone.

    The CDF is piecewise quadratic with F(-1)=1/4, F(0)=1/2, F(1)=3/4, and
    the quantile is its closed-form inverse per branch.
    """

    family = "triangle"

    def __init__(self):
        super().__init__(knots=(0.25, 0.5, 0.75))

    def _value_array(self, s):
        s = np.clip(s, 0.0, 1.0)
        out = np.empty_like(s)
        b1 = s <= 0.25
        b2 = (s > 0.25) & (s <= 0.5)
        b3 = (s > 0.5) & (s <= 0.75)
        b4 = s > 0.75
        out[b1] = 2.0 - 2.0 * np.sqrt(s[b1])
        out[b2] = np.sqrt(np.maximum(2.0 - 4.0 * s[b2], 0.0))
        out[b3] = -np.sqrt(np.maximum(4.0 * s[b3] - 2.0, 0.0))
        out[b4] = -2.0 + 2.0 * np.sqrt(1.0 - s[b4])
        return out

    def _integral_array(self, s):
        s = np.clip(s, 0.0, 1.0)
        out = np.empty_like(s)
        b1 = s <= 0.25
        b2 = (s > 0.25) & (s <= 0.5)
        b3 = (s > 0.5) & (s <= 0.75)
        b4 = s > 0.75
        out[b1] = 2.0 * s[b1] - (4.0 / 3.0) * s[b1] ** 1.5
        out[b2] = 1.0 / 3.0 + (1.0 - np.maximum(2.0 - 4.0 * s[b2], 0.0) ** 1.5) / 6.0
        out[b3] = 0.5 - np.maximum(4.0 * s[b3] - 2.0, 0.0) ** 1.5 / 6.0
        out[b4] = 1.0 / 3.0 - 2.0 * (s[b4] - 0.75) + (4.0 / 3.0) * (0.125 - (1.0 - s[b4]) ** 1.5)
        return out

    def cdf(self, x):
        arr, scalar = _as_array(x)
        x = np.clip(arr, -2.0, 2.0)
        out = np.where(
            x <= -1, (x + 2) ** 2 / 4.0,
            np.where(x <= 0, 0.5 - x * x / 4.0,
                     np.where(x <= 1, 0.5 + x * x / 4.0, 1.0 - (2 - x) ** 2 / 4.0)))
        return _scalar_or_array(out, scalar)

    def sf(self, x):
        arr, scalar = _as_array(x)
        return _scalar_or_array(1.0 - np.asarray(self.cdf(arr)), scalar)

    def pdf(self, x):
        arr, scalar = _as_array(x)
        a = np.abs(arr)
        out = np.where(a <= 1, a / 2.0, np.where(a <= 2, (2 - a) / 2.0, 0.0))
        return _scalar_or_array(out, scalar)

    @property
    def ess_sup(self):
        return 2.0

    @property
    def ess_inf(self):
        return -2.0

    def to_json(self):
        return {"family": "triangle"}


class CantorExample(DistributionModel):
    """``f(s) = -c(s) - s^beta`` with ``c`` the Cantor function and
    ``beta = log 2 / log 3``; singular, so no density."""

    family = "cantor"
    has_density = False

    def _value_array(self, s):
        s = np.ascontiguousarray(s.ravel(), dtype=float)
        return (-_kernels.cantor(s) - s ** BETA_CANTOR).reshape(s.shape)

    def _integral_array(self, s):
        s = np.ascontiguousarray(s.ravel(), dtype=float)
        return -_kernels.cantor_integral(s) - s ** (BETA_CANTOR + 1.0) / (BETA_CANTOR + 1.0)

    @property
    def ess_sup(self):
        return 0.0

    @property
    def ess_inf(self):
        return -2.0

    def to_json(self):
        return {"family": "cantor"}


# ---------------------------------------------------------------- wrappers

class LocationScale(DistributionModel):
    """The law of ``loc + scale * X`` for ``scale > 0``."""

    family = "location_scale"

    def __init__(self, base, scale=1.0, loc=0.0):
        if not scale > 0:
            raise ParameterError("scale must be positive")
        super().__init__(knots=base.knots, strict=base.strict)
        self.base, self.scale, self.loc = base, float(scale), float(loc)
        self.has_density = getattr(base, "has_density", False)

    def _value_array(self, s):
        return self.loc + self.scale * self.base._value_array(s)

    def _integral_array(self, s):
        return self.loc * s + self.scale * self.base._integral_array(s)

    @property
    def has_closed_form(self):
        return self.base.has_closed_form

    def sf(self, x):
        return self.base.sf((np.asarray(x, dtype=float) - self.loc) / self.scale)

    def pdf(self, x):
        return np.asarray(self.base.pdf((np.asarray(x, dtype=float) - self.loc) / self.scale)) / self.scale

    @property
    def ess_sup(self):
        return self.loc + self.scale * self.base.ess_sup

    @property
    def ess_inf(self):
        return self.loc + self.scale * self.base.ess_inf


class MonotoneTransform(DistributionModel):
    """The law of ``g(X)`` for a strictly increasing ``g``; ES by quadrature."""

    family = "transform"

    def __init__(self, base, func, inverse=None, derivative=None, name="transform"):
        super().__init__(knots=base.knots, strict=base.strict, name=name)
        self.base, self.func, self.inverse, self.derivative = base, func, inverse, derivative
        self.has_density = inverse is not None and derivative is not None and getattr(base, "has_density", False)

    def _value_array(self, s):
        return np.asarray(self.func(self.base._value_array(s)), dtype=float)

    def _integral_array(self, s):
        return QuantileCurve._integral_array(self, s)

    @property
    def has_closed_form(self):
        return False

    def sf(self, x):
        if self.inverse is None:
            return super().sf(x)
        return self.base.sf(self.inverse(np.asarray(x, dtype=float)))

    def pdf(self, x):
        if not self.has_density:
            raise UnsupportedModelError("transform without inverse/derivative has no density")
        y = self.inverse(np.asarray(x, dtype=float))
        return np.asarray(self.base.pdf(y)) / self.derivative(y)


class TailConditioned(DistributionModel):
    """``X`` conditioned on exceeding its ``p``-quantile: quantile
    ``t -> F^{-1}((1-p) t + p)``."""

    family = "tail_conditioned"

    def __init__(self, base, p):
        if not 0.0 < p < 1.0:
            raise DomainError("tail conditioning level must lie in (0, 1)")
        keep = 1.0 - float(p)
        super().__init__(knots=[k / keep for k in base.knots if k < keep], strict=base.strict)
        self.base, self.p, self._keep = base, float(p), keep
        self.has_density = getattr(base, "has_density", False)

    def _value_array(self, s):
        return self.base._value_array(s * self._keep)

    def _integral_array(self, s):
        return self.base._integral_array(s * self._keep) / self._keep

    @property
    def has_closed_form(self):
        return self.base.has_closed_form

    def quantile(self, t):
        arr = np.asarray(t, dtype=float)
        return self.base.quantile(self._keep * arr + self.p)

    def sf(self, x):
        return np.minimum(np.asarray(self.base.sf(x)) / self._keep, 1.0)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        cut = self.base.quantile(self.p)
        return np.where(x >= cut, np.asarray(self.base.pdf(x)) / self._keep, 0.0)

    @property
    def ess_sup(self):
        return self.base.ess_sup

    @property
    def ess_inf(self):
        return float(self.base.quantile(self.p))


# ---------------------------------------------------------------- risk measures

def var(model, p):
    """Left ``p``-quantile; ``p`` in {0, 1} gives the essential inf / sup."""
    p = float(p)
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"probability level must lie in [0, 1], got {p!r}")
    if p == 1.0:
        return float(model.ess_sup)
    if p == 0.0:
        return float(model.ess_inf)
    if isinstance(model, DistributionModel):
        return float(model.quantile(p))
    return float(model.value(1.0 - p))


def es(model, p):
    """Expected shortfall ``(1/(1-p)) int_p^1 VaR_q dq``; ``es(., 0)`` is the mean."""
    p = float(p)
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"probability level must lie in [0, 1], got {p!r}")
    if p == 1.0:
        return float(model.ess_sup)
    s = 1.0 - p
    total = float(model.integral(s))
    if not math.isfinite(total):
        raise IntegrabilityError("tail integral is not finite")
    return total / s


def _quad_piece(fun, lo, hi, tol):
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", integrate.IntegrationWarning)
        val, err = integrate.quad(fun, lo, hi, epsabs=tol, epsrel=1e-12, limit=200)
    return val, err, [str(w.message) for w in caught if issubclass(w.category, integrate.IntegrationWarning)]


def _weighted(f, base, width, t):
    # integrand after s = base + width * e^{-t}; zero once the weight underflows
    w = math.exp(-t)
    s = base + width * w
    if w == 0.0 or s <= 0.0 or s >= 1.0:
        return 0.0
    return f(s) * abs(width) * w


def integrate_quantile(curve, a, b, tol=DEFAULT_TOL):
    """``int_a^b f(s) ds`` by adaptive quadrature.

    The interval is split at the curve's knots. Pieces touching ``s = 0`` or
    ``s = 1`` are mapped to a half line by ``s = hi*e^{-t}`` (resp.
    ``s = 1 - (1-lo) e^{-t}``) so unbounded ends are handled.
    """
    a, b = float(a), float(b)
    if not 0.0 <= a < b <= 1.0:
        raise DomainError("need 0 <= a < b <= 1")
    cuts = sorted({a, b, *[k for k in curve.knots if a < k < b]})
    if cuts == [0.0, 1.0]:
        cuts = [0.0, 0.5, 1.0]

    def f(s):
        return float(curve.value(s))

    total, residual = 0.0, 0.0
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        if lo == 0.0:
            val, err, notes = _quad_piece(lambda t, h=hi: _weighted(f, 0.0, h, t), 0.0, math.inf, tol)
        elif hi == 1.0:
            val, err, notes = _quad_piece(lambda t, w=1.0 - lo: _weighted(f, 1.0, -w, t), 0.0, math.inf, tol)
        else:
            val, err, notes = _quad_piece(f, lo, hi, tol)
        if not math.isfinite(val) or any("diverg" in n for n in notes):
            raise IntegrabilityError("quantile curve is not integrable on the requested range")
        if notes and err > max(tol, 1e-12 * abs(val)):
            raise ConvergenceError(f"quadrature did not reach tolerance: {notes[0]}", residual=err)
        total += val
        residual += err
    return total


# ---------------------------------------------------------------- JSON

def model_from_json(spec):
    """Build a model from a JSON document (dict or string)."""
    if isinstance(spec, str):
        spec = json.loads(spec)
    if not isinstance(spec, dict) or "family" not in spec:
        raise ParameterError("model specification needs a 'family' field")
    fam = str(spec["family"]).lower()
    g = spec.get
    try:
        if fam == "uniform":
            return Uniform(g("lo", 0.0), g("hi", 1.0))
        if fam == "exponential":
            return Exponential(g("rate", g("lambda", 1.0)))
        if fam == "gpd":
            return GPD(g("xi", 0.0), g("mu", 0.0), g("sigma", 1.0))
        if fam == "normal":
            return Normal(g("mu", 0.0), g("sigma", 1.0))
        if fam in ("t", "student_t", "studentt"):
            return StudentT(spec["nu"], g("mu", 0.0), g("sigma", 1.0))
        if fam == "lognormal":
            return LogNormal(g("sigma", 1.0), g("mu", 0.0))
        if fam == "constant":
            return Constant(g("value", 0.0))
        if fam == "piecewise":
            return PiecewiseQuantile(spec["knots"], spec.get("head"))
        if fam == "triangle":
            return TriangleDensity()
        if fam == "cantor":
            return CantorExample()
    except KeyError as exc:
        raise ParameterError(f"missing field {exc.args[0]!r} for family {fam!r}") from None
    raise ParameterError(f"unknown family {fam!r}")
