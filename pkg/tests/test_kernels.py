"""The compiled kernels and their numpy twins must agree."""
import math
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pelve_lab import _kernels
from pelve_lab.calib_point import build_two_point_quantile, classify_two_point


def _curves():
    out = []
    for con in [(0.05, 1.0, 0.1, 2.0), (0.01, 3.0, 0.05, 1.5), (0.01, 1.01, 0.2, 3.0), (0.1, 2.0, 0.2, 1.0001)]:
        cp = classify_two_point(*con)
        if cp.admissible:
            out.append(build_two_point_quantile(cp).curve)
    return out


CURVES = _curves()


@pytest.mark.parametrize("curve", CURVES)
def test_value_and_integral_twins(curve):
    s = np.concatenate([np.geomspace(1e-12, 1.0, 300), curve.S])
    args = (curve.S, curve.F, *curve._args)
    assert np.allclose(_kernels.pw_value_jit(*args, s), _kernels.pw_value_np(*args, s), rtol=1e-13, atol=1e-13)
    assert np.allclose(_kernels.pw_integral_jit(*args, s), _kernels.pw_integral_np(*args, s), rtol=1e-12, atol=1e-14)


@pytest.mark.parametrize("curve", CURVES)
def test_pelve_twins(curve):
    args = (curve.S, curve.F, *curve._args)
    for eps in np.geomspace(1e-4, 0.5, 25):
        cj, ij = _kernels.pw_pelve_jit(*args, eps, 1e-10, 200)
        cn, inn = _kernels.pw_pelve_np(*args, eps, 1e-10, 200)
        assert ij >= 0 and inn >= 0
        if math.isinf(cj):
            assert math.isinf(cn)
        else:
            assert cj == pytest.approx(cn, rel=1e-9)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0.0, 1.0), min_size=1, max_size=40))
def test_cantor_twins(xs):
    x = np.array(xs)
    assert np.allclose(_kernels.cantor_jit(x), _kernels.cantor_np(x), atol=1e-12)
    assert np.allclose(_kernels.cantor_integral_jit(x), _kernels.cantor_integral_np(x), atol=1e-12)


def test_cantor_integral_self_similarity():
    # int_0^{x/3} c = (1/6) int_0^x c
    x = np.linspace(0.0, 1.0, 31)
    left = _kernels.cantor_integral_np(x / 3.0)
    assert np.allclose(left, _kernels.cantor_integral_np(x) / 6.0, atol=1e-13)


def test_final_point_is_exact_for_affine_gap():
    # gap(c) = 2 - c on the bracket [1.9, 2.05]
    assert _kernels.final_point(1.9, 2.05, 0.1, -0.05) == pytest.approx(2.0, abs=1e-15)
    assert _kernels.final_point(1.0, 3.0, 0.5, 0.0) == 3.0


def test_disable_flag_selects_numpy_paths():
    code = "from pelve_lab import _kernels, _jit; print(_jit.JIT_ENABLED, _kernels.pw_pelve is _kernels.pw_pelve_np)"
    env = dict(os.environ, PELVE_LAB_DISABLE_JIT="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.split() == ["False", "True"]
