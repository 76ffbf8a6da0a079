"""Hot loops: piecewise-linear quantiles with a GPD-shaped head, and the
Cantor function used by the non-convergent example.

Every kernel exists twice: a scalar loop compiled by numba, and a
vectorized numpy version. ``JIT_ENABLED`` (see ``_jit``) picks which one the
public names point to; tests and the benchmark call both explicitly.
"""
import math

import numpy as np

from ._jit import JIT_ENABLED, maybe_njit

SERIES_XI = 1e-6
FLAT_RTOL = 1e-12
TINY_FACTOR = 2.0 ** -64

HEAD_NONE = 0
HEAD_GPD = 1
HEAD_POWER = 2


# ---------------------------------------------------------------- scalar math

def _shape_scalar(xi, s):
    # k(s) = (s^-xi - 1)/xi, -log s at xi = 0
    L = math.log(s)
    if abs(xi) < SERIES_XI:
        return -L + xi * L * L / 2.0 - xi * xi * L * L * L / 6.0
    return math.expm1(-xi * L) / xi


def _shape_integral_scalar(xi, s):
    # int_0^s k = s * expm1(-xi log s - log1p(-xi)) / xi
    if s <= 0.0:
        return 0.0
    L = math.log(s)
    if abs(xi) < SERIES_XI:
        q = 1.0 - L
        return s * (q + xi * (0.5 + 0.5 * q * q) + xi * xi * (1.0 / 3.0 + 0.5 * q + q * q * q / 6.0))
    return s * math.expm1(-xi * L - math.log1p(-xi)) / xi


_shape_jit = maybe_njit(_shape_scalar)
_shape_integral_jit = maybe_njit(_shape_integral_scalar)


@maybe_njit
def _head_value_jit(form, xi, loc, scale, lref, s):
    if form == HEAD_POWER:
        return loc + scale * math.exp(-xi * (math.log(s) - lref)) / xi
    return loc + scale * _shape_jit(xi, s)


@maybe_njit
def _head_integral_jit(form, xi, loc, scale, lref, s):
    if s <= 0.0:
        return 0.0
    if form == HEAD_POWER:
        return loc * s + scale * s * math.exp(-xi * (math.log(s) - lref)) / (xi * (1.0 - xi))
    return loc * s + scale * _shape_integral_jit(xi, s)


# ------------------------------------------------------------ numba kernels

@maybe_njit
def _pw_value_one(S, F, form, xi, loc, scale, lref, s):
    n = S.shape[0]
    if s < S[0]:
        return _head_value_jit(form, xi, loc, scale, lref, s)
    if s >= S[n - 1]:
        return F[n - 1]
    lo = 0
    hi = n - 1
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if S[mid] <= s:
            lo = mid
        else:
            hi = mid
    t = (s - S[lo]) / (S[lo + 1] - S[lo])
    return F[lo] + t * (F[lo + 1] - F[lo])


@maybe_njit
def _pw_integral_one(S, F, form, xi, loc, scale, lref, s):
    n = S.shape[0]
    if s <= S[0]:
        if S[0] > 0.0 and s > 0.0:
            return _head_integral_jit(form, xi, loc, scale, lref, s)
        return 0.0
    total = 0.0
    if S[0] > 0.0:
        total = _head_integral_jit(form, xi, loc, scale, lref, S[0])
    for j in range(n - 1):
        if s >= S[j + 1]:
            total += 0.5 * (S[j + 1] - S[j]) * (F[j] + F[j + 1])
        else:
            t = (s - S[j]) / (S[j + 1] - S[j])
            fs = F[j] + t * (F[j + 1] - F[j])
            total += 0.5 * (s - S[j]) * (F[j] + fs)
            return total
    return total


@maybe_njit
def pw_value_jit(S, F, form, xi, loc, scale, lref, s):
    out = np.empty(s.shape[0])
    for i in range(s.shape[0]):
        out[i] = _pw_value_one(S, F, form, xi, loc, scale, lref, s[i])
    return out


@maybe_njit
def pw_integral_jit(S, F, form, xi, loc, scale, lref, s):
    out = np.empty(s.shape[0])
    for i in range(s.shape[0]):
        out[i] = _pw_integral_one(S, F, form, xi, loc, scale, lref, s[i])
    return out


def final_point(lo, hi, glo, ghi):
    """Secant point of the last bracket; affine gaps come out exact."""
    if glo > 0.0 and ghi < 0.0:
        return lo + glo * (hi - lo) / (glo - ghi)
    if ghi == 0.0:
        return hi
    return 0.5 * (lo + hi)


_final_point = maybe_njit(final_point)


@maybe_njit
def pw_pelve_jit(S, F, form, xi, loc, scale, lref, eps, rtol, max_iter):
    """Return (c, iterations); iterations == -1 flags non-convergence."""
    v = _pw_value_one(S, F, form, xi, loc, scale, lref, eps)
    top = _pw_value_one(S, F, form, xi, loc, scale, lref, eps * TINY_FACTOR)
    if top - v <= FLAT_RTOL * (abs(top) + abs(v)):
        return 1.0, 0
    mean = _pw_integral_one(S, F, form, xi, loc, scale, lref, 1.0)
    if mean - v > FLAT_RTOL * (abs(mean) + abs(v)):
        return math.inf, 0
    lo = 1.0
    hi = 1.0 / eps
    glo = _pw_integral_one(S, F, form, xi, loc, scale, lref, eps) / eps - v
    ghi = mean - v
    for it in range(max_iter):
        if hi - lo <= rtol * hi:
            return _final_point(lo, hi, glo, ghi), it
        if hi > 4.0 * lo:
            mid = math.sqrt(lo * hi)
        else:
            mid = 0.5 * (lo + hi)
        s = min(mid * eps, 1.0)
        g = _pw_integral_one(S, F, form, xi, loc, scale, lref, s) / s - v
        if g <= 0.0:
            hi, ghi = mid, g
        else:
            lo, glo = mid, g
    return 0.5 * (lo + hi), -1


@maybe_njit
def cantor_jit(x):
    out = np.empty(x.shape[0])
    for i in range(x.shape[0]):
        y = x[i]
        if y <= 0.0:
            out[i] = 0.0
            continue
        if y >= 1.0:
            out[i] = 1.0
            continue
        c = 0.0
        w = 0.5
        for _ in range(40):
            y3 = 3.0 * y
            d = math.floor(y3)
            y = y3 - d
            if d >= 2.0:
                c += w
            elif d >= 1.0:
                c += w
                break
            w *= 0.5
        out[i] = c
    return out


@maybe_njit
def cantor_integral_jit(x):
    out = np.empty(x.shape[0])
    for i in range(x.shape[0]):
        y = min(max(x[i], 0.0), 1.0)
        total = 0.0
        mult = 1.0
        for _ in range(40):
            if y <= 1.0 / 3.0:
                mult /= 6.0
                y = 3.0 * y
            elif y <= 2.0 / 3.0:
                total += mult * (1.0 / 12.0 + 0.5 * (y - 1.0 / 3.0))
                break
            else:
                total += mult * (0.25 + 0.5 * (y - 2.0 / 3.0))
                mult /= 6.0
                y = 3.0 * y - 2.0
        out[i] = total
    return out


# ------------------------------------------------------------ numpy kernels

def _shape_np(xi, s):
    L = np.log(s)
    if abs(xi) < SERIES_XI:
        return -L + xi * L * L / 2.0 - xi * xi * L ** 3 / 6.0
    return np.expm1(-xi * L) / xi


def _shape_integral_np(xi, s):
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    pos = s > 0
    L = np.log(s[pos])
    if abs(xi) < SERIES_XI:
        q = 1.0 - L
        out[pos] = s[pos] * (q + xi * (0.5 + 0.5 * q * q) + xi * xi * (1.0 / 3.0 + 0.5 * q + q ** 3 / 6.0))
    else:
        out[pos] = s[pos] * np.expm1(-xi * L - math.log1p(-xi)) / xi
    return out


def _head_value_np(form, xi, loc, scale, lref, s):
    if form == HEAD_POWER:
        return loc + scale * np.exp(-xi * (np.log(s) - lref)) / xi
    return loc + scale * _shape_np(xi, s)


def _head_integral_np(form, xi, loc, scale, lref, s):
    s = np.asarray(s, dtype=float)
    if form == HEAD_POWER:
        out = np.zeros_like(s)
        pos = s > 0
        out[pos] = loc * s[pos] + scale * s[pos] * np.exp(-xi * (np.log(s[pos]) - lref)) / (xi * (1.0 - xi))
        return out
    return loc * s + scale * _shape_integral_np(xi, s)


def pw_value_np(S, F, form, xi, loc, scale, lref, s):
    s = np.asarray(s, dtype=float)
    out = np.interp(s, S, F)
    below = s < S[0]
    if np.any(below):
        out[below] = _head_value_np(form, xi, loc, scale, lref, s[below])
    return out


def _cumulative_np(S, F, form, xi, loc, scale, lref):
    areas = 0.5 * np.diff(S) * (F[1:] + F[:-1])
    head = float(_head_integral_np(form, xi, loc, scale, lref, np.array([S[0]]))[0]) if S[0] > 0 else 0.0
    return head + np.concatenate(([0.0], np.cumsum(areas)))


def pw_integral_np(S, F, form, xi, loc, scale, lref, s, _cum=None):
    s = np.asarray(s, dtype=float)
    cum = _cumulative_np(S, F, form, xi, loc, scale, lref) if _cum is None else _cum
    j = np.clip(np.searchsorted(S, s, side="right") - 1, 0, S.size - 1)
    fs = np.interp(s, S, F)
    out = cum[j] + 0.5 * (s - S[j]) * (F[j] + fs)
    below = s < S[0]
    if np.any(below):
        out[below] = _head_integral_np(form, xi, loc, scale, lref, s[below])
    return out


def pw_pelve_np(S, F, form, xi, loc, scale, lref, eps, rtol, max_iter):
    cum = _cumulative_np(S, F, form, xi, loc, scale, lref)
    pair = pw_value_np(S, F, form, xi, loc, scale, lref, np.array([eps, eps * TINY_FACTOR]))
    v, top = float(pair[0]), float(pair[1])
    if top - v <= FLAT_RTOL * (abs(top) + abs(v)):
        return 1.0, 0
    mean = float(cum[-1])
    if mean - v > FLAT_RTOL * (abs(mean) + abs(v)):
        return math.inf, 0
    lo, hi = 1.0, 1.0 / eps
    buf = np.array([eps])
    glo = pw_integral_np(S, F, form, xi, loc, scale, lref, buf, _cum=cum)[0] / eps - v
    ghi = mean - v
    for it in range(max_iter):
        if hi - lo <= rtol * hi:
            return final_point(lo, hi, glo, ghi), it
        mid = math.sqrt(lo * hi) if hi > 4.0 * lo else 0.5 * (lo + hi)
        buf[0] = min(mid * eps, 1.0)
        g = pw_integral_np(S, F, form, xi, loc, scale, lref, buf, _cum=cum)[0] / buf[0] - v
        if g <= 0.0:
            hi, ghi = mid, g
        else:
            lo, glo = mid, g
    return 0.5 * (lo + hi), -1


def cantor_np(x):
    x = np.asarray(x, dtype=float)
    y = np.clip(x, 0.0, 1.0).copy()
    c = np.zeros_like(y)
    active = (y > 0.0) & (y < 1.0)
    c[y >= 1.0] = 1.0
    w = 0.5
    for _ in range(40):
        if not active.any():
            break
        y3 = 3.0 * y
        d = np.floor(y3)
        y = np.where(active, y3 - d, y)
        hit = active & (d >= 1.0)
        c = np.where(hit, c + w, c)
        active = active & (d != 1.0)
        w *= 0.5
    return c


def cantor_integral_np(x):
    y = np.clip(np.asarray(x, dtype=float), 0.0, 1.0).copy()
    total = np.zeros_like(y)
    mult = np.ones_like(y)
    active = np.ones(y.shape, dtype=bool)
    for _ in range(40):
        if not active.any():
            break
        left = active & (y <= 1.0 / 3.0)
        middle = active & (y > 1.0 / 3.0) & (y <= 2.0 / 3.0)
        right = active & (y > 2.0 / 3.0)
        total = total + np.where(middle, mult * (1.0 / 12.0 + 0.5 * (y - 1.0 / 3.0)), 0.0)
        total = total + np.where(right, mult * (0.25 + 0.5 * (y - 2.0 / 3.0)), 0.0)
        mult = np.where(left | right, mult / 6.0, mult)
        y = np.where(left, 3.0 * y, np.where(right, 3.0 * y - 2.0, y))
        active = left | right
    return total


# ------------------------------------------------------------ dispatch

if JIT_ENABLED:
    pw_value, pw_integral, pw_pelve = pw_value_jit, pw_integral_jit, pw_pelve_jit
    cantor, cantor_integral = cantor_jit, cantor_integral_jit
else:
    pw_value, pw_integral, pw_pelve = pw_value_np, pw_integral_np, pw_pelve_np
    cantor, cantor_integral = cantor_np, cantor_integral_np

shape = _shape_np
shape_integral = _shape_integral_np
