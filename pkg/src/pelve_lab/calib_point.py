"""One- and two-point PELVE calibration.

The two-point construction builds the tail quantile ``G`` piece by piece
on ``(0, c2*eps2]`` according to where ``(c1, c2)`` falls in the admissible
region, then extends it linearly to ``s = 1``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from scipy.optimize import brentq

from .dist_core import GPD, Constant, PiecewiseQuantile, gpd_quantile_shape, gpd_shape_integral
from .errors import ConstructionError, DomainError, InfeasibleConstraintError
from .pelve_engine import pelve

BOUNDARY_TOL = 1e-12
ROUNDTRIP_TOL = 1e-6
ONE_POINT_TOL = 1e-8
POWER_HEAD_BELOW = -1.0  # heads with xi below this use the rescaled power form


def _log_c_of_xi(xi):
    # log of (1 - xi)^(-1/xi), continuous at xi = 0
    if abs(xi) < 1e-6:
        return 1.0 + xi / 2.0 + xi * xi / 3.0 + xi ** 3 / 4.0
    return -math.log1p(-xi) / xi


def solve_xi_from_c(c):
    """The ``xi < 1`` with ``(1 - xi)^(-1/xi) = c`` for ``c > 1``."""
    c = float(c)
    if not c > 1.0:
        raise DomainError(f"need c > 1, got {c!r}")
    target = math.log(c)
    if target == 1.0:
        return 0.0

    def gap(xi):
        return _log_c_of_xi(xi) - target

    if target > 1.0:
        lo, hi = 0.0, 0.5
        while gap(hi) < 0.0:
            hi = 1.0 - 0.5 * (1.0 - hi)
            if hi >= 1.0:
                return math.nextafter(1.0, 0.0)
    else:
        lo, hi = -1.0, 0.0
        while gap(lo) > 0.0:
            lo *= 2.0
    return brentq(gap, lo, hi, xtol=1e-14, rtol=1e-15, maxiter=500)


def calibrate_one_point(eps1, c1):
    """A model with ``Pi(eps1) = c1``: GPD for ``c1 > 1``, a point mass for ``c1 = 1``."""
    eps1, c1 = float(eps1), float(c1)
    if not 0.0 < eps1 < 1.0:
        raise DomainError("eps1 must lie in (0, 1)")
    if c1 < 1.0 - BOUNDARY_TOL:
        raise InfeasibleConstraintError("c1 must be at least 1")
    if c1 * eps1 > 1.0 + BOUNDARY_TOL:
        raise InfeasibleConstraintError(f"c1*eps1 = {c1 * eps1:.6g} exceeds 1")
    if abs(c1 - 1.0) <= BOUNDARY_TOL:
        model = Constant(0.0)
        c1 = 1.0
    else:
        model = GPD(solve_xi_from_c(c1))
    got = pelve(model, eps1)
    if not abs(got - c1) <= ONE_POINT_TOL * max(1.0, c1):
        raise ConstructionError(f"one-point model gives Pi({eps1}) = {got!r}, wanted {c1!r}")
    return model


# ---------------------------------------------------------------- two points

@dataclass(frozen=True)
class TwoPointConstraint:
    eps1: float
    c1: float
    eps2: float
    c2: float
    case: int | None = None
    reason: str | None = None

    @property
    def admissible(self):
        return self.case is not None

    @classmethod
    def from_json(cls, doc):
        if isinstance(doc, str):
            doc = json.loads(doc)
        return classify_two_point(doc["eps1"], doc["c1"], doc["eps2"], doc["c2"])

    def to_json(self):
        return {"eps1": self.eps1, "c1": self.c1, "eps2": self.eps2, "c2": self.c2,
                "case": self.case, "reason": self.reason}


def _close(x, y):
    return abs(x - y) <= BOUNDARY_TOL * max(1.0, abs(x), abs(y))


def classify_two_point(eps1, c1, eps2, c2):
    """Label ``(eps1, c1, eps2, c2)`` with its case 1-5, or reject it."""
    e1, a, e2, b = (float(v) for v in (eps1, c1, eps2, c2))

    def reject(why):
        return TwoPointConstraint(e1, a, e2, b, None, why)

    if not all(math.isfinite(v) for v in (e1, a, e2, b)):
        return reject("non-finite input")
    if not (0.0 < e1 < e2 < 1.0):
        return reject("need 0 < eps1 < eps2 < 1")
    if a < 1.0 and not _close(a, 1.0) or b < 1.0 and not _close(b, 1.0):
        return reject("PELVE values must be at least 1")
    if a * e1 > 1.0 and not _close(a * e1, 1.0):
        return reject("c1*eps1 > 1")
    if b * e2 > 1.0 and not _close(b * e2, 1.0):
        return reject("c2*eps2 > 1")
    if a * e1 > b * e2 and not _close(a * e1, b * e2):
        return reject("c1*eps1 > c2*eps2")
    c1_one, c2_one = _close(a, 1.0), _close(b, 1.0)
    if c2_one:
        if c1_one:
            return TwoPointConstraint(e1, a, e2, b, 1)
        return reject("c2=1 requires c1=1")
    if c1_one:
        return TwoPointConstraint(e1, a, e2, b, 2)
    if _close(b, a * e1 / e2):
        return TwoPointConstraint(e1, a, e2, b, 3)
    if a * e1 <= e2 or _close(a, e2 / e1):
        return TwoPointConstraint(e1, a, e2, b, 4)
    return TwoPointConstraint(e1, a, e2, b, 5)


@dataclass
class CalibrationResult:
    curve: PiecewiseQuantile
    constants: dict
    continuation: str
    case: int
    interior: bool
    constraint: TwoPointConstraint
    roundtrip: dict = field(default_factory=dict)

    def to_json(self):
        return {
            "case": self.case,
            "interior": self.interior,
            "constraint": self.constraint.to_json(),
            "constants": dict(self.constants),
            "continuation": self.continuation,
            "model": self.curve.to_json(),
            "roundtrip": dict(self.roundtrip),
        }


class _Head:
    """``k`` and its integral. For ``xi < -1`` the affine image
    ``(k + 1/xi) * eps1^xi = (s/eps1)^-xi / xi`` is used instead, which keeps
    the head representable when ``k`` is nearly flat near 0."""

    def __init__(self, xi, ref):
        self.xi = xi
        self.power = xi < POWER_HEAD_BELOW
        self.ref = ref if self.power else 1.0
        self.shift = 1.0 / xi if self.power else 0.0
        self.log_scale = xi * math.log(ref) if self.power else 0.0

    def k(self, s):
        if self.power:
            return math.exp(-self.xi * math.log(s / self.ref)) / self.xi
        return float(gpd_quantile_shape(self.xi, s))

    def integral(self, s):
        if self.power:
            return s * math.exp(-self.xi * math.log(s / self.ref)) / (self.xi * (1.0 - self.xi))
        return float(gpd_shape_integral(self.xi, s))

    def spec(self):
        if self.power:
            return {"xi": self.xi, "loc": 0.0, "scale": 1.0, "form": "power", "ref": self.ref}
        return {"xi": self.xi, "loc": 0.0, "scale": 1.0, "form": "gpd"}


def _dedupe(knots):
    out = []
    for s, v in knots:
        if out and s == out[-1][0]:
            continue
        out.append((s, v))
    return out


def build_two_point_quantile(constraint, khat=1.0, ktilde=0.0, *, verify=True):
    """Construct ``G`` with ``Pi(eps1) = c1`` and ``Pi(eps2) = c2``.

    Parameters
    ----------
    constraint : TwoPointConstraint
        Output of :func:`classify_two_point`.
    khat, ktilde : float
        Levels used by Cases 1-2 (``ktilde < khat``).
    verify : bool
        Recompute both PELVE values on the result and raise
        :class:`ConstructionError` if either misses by more than 1e-6.
    """
    if not constraint.admissible:
        raise InfeasibleConstraintError(f"constraint rejected: {constraint.reason}")
    khat, ktilde = float(khat), float(ktilde)
    if not ktilde < khat:
        raise DomainError("need ktilde < khat")
    e1, c1, e2, c2 = constraint.eps1, constraint.c1, constraint.eps2, constraint.c2
    case = constraint.case
    head = None
    const = {}

    if case == 1:
        c1 = c2 = 1.0
        const.update(khat=khat)
        knots = [(0.0, khat), (e2, khat)]
        end = e2
    elif case == 2:
        c1 = 1.0
        a1 = (ktilde - khat) / (e2 - e1)
        b1 = khat - a1 * e1
        a2 = (ktilde - khat) * (e1 + e2) / (c2 * e2 - e2) ** 2
        b2 = ktilde - a2 * e2
        end = c2 * e2
        const.update(khat=khat, ktilde=ktilde, a1=a1, b1=b1, a2=a2, b2=b2)
        knots = [(0.0, khat), (e1, khat), (e2, a1 * e2 + b1), (end, a2 * end + b2)]
    else:
        xi = solve_xi_from_c(c1)
        hd = _Head(xi, e1)
        head = hd.spec()
        k1 = hd.k(e1)
        kint = hd.integral(e1)
        const.update(xi=xi, k_eps1=k1, k=kint, k_shift=hd.shift, k_log_scale=hd.log_scale)
        if case == 3:
            end = c1 * e1
            c2 = end / e2
            a = 2.0 * (k1 * e1 - kint) / (end - e2) ** 2
            b = k1 - a * e2
            const.update(a=a, b=b)
            knots = [(e1, k1), (e2, k1), (end, a * end + b)]
        elif case == 4:
            m = c1 * e1
            km = hd.k(m)
            end = c2 * e2
            a = 2.0 * m * (km - k1) / (end - e2) ** 2
            b = km - a * e2
            const.update(k_c1eps1=km, a=a, b=b)
            knots = [(m, km), (e2, km), (end, a * end + b)]
        else:
            m = c1 * e1
            end = c2 * e2
            a1 = (k1 * e1 - kint) / ((e2 - e1) * (m - 0.5 * (e1 + e2)))
            b1 = k1 - a1 * e1
            plateau = a1 * e2 + b1
            a2 = 2.0 * m * (plateau - k1) / (m - end) ** 2
            b2 = plateau - a2 * m
            const.update(a1=a1, b1=b1, a2=a2, b2=b2)
            knots = [(e1, k1), (e2, plateau), (m, plateau), (end, a2 * end + b2)]

    knots = _dedupe(knots)
    last_s, last_v = knots[-1]
    if last_s < 1.0:
        prev_s, prev_v = knots[-2] if len(knots) > 1 else (0.0, last_v)
        slope = (last_v - prev_v) / (last_s - prev_s)
        if slope == 0.0:
            slope = -1.0
        knots.append((1.0, last_v + slope * (1.0 - last_s)))
        continuation = f"linear from s={last_s!r} to 1 with slope {slope!r}"
    else:
        continuation = "none (c2*eps2 = 1)"
    curve = PiecewiseQuantile(knots, head)

    interior = case in (4, 5) and c1 * e1 < 1.0 and c2 * e2 < 1.0 \
        and not _close(c1 * e1, 1.0) and not _close(c2 * e2, 1.0)
    result = CalibrationResult(curve, const, continuation, case, interior, constraint)
    if verify:
        p1, p2 = pelve(curve, e1), pelve(curve, e2)
        result.roundtrip = {"pelve_eps1": p1, "pelve_eps2": p2,
                            "error_eps1": abs(p1 - c1), "error_eps2": abs(p2 - c2)}
        if not (abs(p1 - c1) <= ROUNDTRIP_TOL and abs(p2 - c2) <= ROUNDTRIP_TOL):
            raise ConstructionError(
                f"case {case} round trip failed: Pi(eps1)={p1!r} vs {c1!r}, Pi(eps2)={p2!r} vs {c2!r}")
    return result


# ---------------------------------------------------------------- bounds

@dataclass(frozen=True)
class C2Bound:
    lower: float
    upper: float
    c1: float
    degenerate: bool = False


def bound_c2(curve, eps1, eps2):
    """Bounds on ``Pi(eps2)`` implied by ``Pi(eps1)`` and three VaR values.

    Returns the infimum ``lower`` of the ``t`` satisfying the monotone
    lower-bound inequality and the two-branch ``upper`` bound. When
    ``VaR_{1-eps1} = VaR_{1-eps2}`` the value is pinned to
    ``max(1, c1*eps1/eps2)`` and ``degenerate`` is set.
    """
    e1, e2 = float(eps1), float(eps2)
    if not 0.0 < e1 < e2 < 1.0:
        raise DomainError("need 0 < eps1 < eps2 < 1")
    v1, v2 = float(curve.value(e1)), float(curve.value(e2))
    if curve.mean > v2 + 1e-12 * (abs(v2) + 1.0):
        raise DomainError("bounds need mean <= VaR_{1-eps2}")
    c1 = pelve(curve, e1)
    m = c1 * e1
    floor = max(1.0, m / e2)
    if v1 - v2 <= 1e-14 * (abs(v1) + abs(v2)):
        return C2Bound(floor, floor, c1, degenerate=True)

    def ratio(t):
        return (t * e2 - m) * (v2 - float(curve.value(min(t * e2, 1.0)))) / (m * (v1 - v2))

    lo, hi = floor, 1.0 / e2
    if ratio(hi) < 1.0:
        lower = hi
    else:
        for _ in range(200):
            if hi - lo <= 1e-13 * hi:
                break
            mid = 0.5 * (lo + hi)
            if ratio(mid) >= 1.0:
                hi = mid
            else:
                lo = mid
        lower = hi
    vc = float(curve.value(m))
    if vc < v2:
        upper = min(1.0 / e2, (m / e2) * (v1 - vc) / (v2 - vc))
    else:
        upper = 1.0 / e2
    return C2Bound(lower, upper, c1)
