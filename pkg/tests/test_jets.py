"""Taylor-mode jet engine against closed-form derivatives."""

import math

import numpy as np
import pytest

from hml import jets
from hml.conventions import MAX_JET_ORDER
from hml.jets import jet_space, seed_point


def test_polynomial_partials_exact():
    x, y = seed_point([2.0, -1.0], 3)
    f = x ** 2 * y + 3 * x - y ** 3
    assert f.value == pytest.approx(2 ** 2 * (-1) + 6 + 1)
    d = f.derivative_array(1)
    assert d[0] == pytest.approx(2 * 2 * (-1) + 3)   # 2xy + 3
    assert d[1] == pytest.approx(4 - 3)              # x^2 - 3y^2
    d2 = f.derivative_array(2)
    assert d2[0, 1] == pytest.approx(4.0)            # 2x
    assert d2[1, 1] == pytest.approx(6.0)            # -6y

def test_transcendental_mixed_partials():
    x0, y0 = 0.7, -0.3
    x, y = seed_point([x0, y0], 4)
    f = jets.sin(x * y) + x ** 3 / (1 + y * y)
    d2 = f.derivative_array(2)
    expected = (np.cos(x0 * y0) - x0 * y0 * np.sin(x0 * y0)
                - 6 * y0 * x0 ** 2 / (1 + y0 ** 2) ** 2)
    assert d2[0, 1] == pytest.approx(expected, rel=1e-12)
    assert d2[0, 1] == pytest.approx(d2[1, 0], rel=1e-14)


def test_high_order_univariate_matches_taylor():
    # exp at x0: all derivatives equal exp(x0)
    (x,) = seed_point([0.4], 12)
    f = jets.exp(x)
    for d in range(0, 13, 3):
        arr = f.derivative_array(d)
        assert float(arr.reshape(-1)[0]) == pytest.approx(math.exp(0.4), rel=1e-11)


def test_order_cap_enforced():
    with pytest.raises(ValueError):
        jet_space(2, MAX_JET_ORDER + 1)
    # the cap itself is generous enough for grad^7 R style needs
    assert MAX_JET_ORDER >= 12


def test_batch_matches_pointwise():
    pts = np.array([[0.3, 0.8], [1.2, -0.4], [0.05, 0.02]])
    xb = seed_point(pts, 3)
    fb = jets.sqrt(1 + jets.norm_sq(xb)) * jets.cos(xb[0])
    for i, p in enumerate(pts):
        xs = seed_point(p, 3)
        fs = jets.sqrt(1 + jets.norm_sq(xs)) * jets.cos(xs[0])
        assert fb.derivative_array(2)[..., i] == pytest.approx(
            fs.derivative_array(2), rel=1e-13)


def test_reciprocal_roundtrip():
    x, y = seed_point([1.5, 0.2], 5)
    f = 1 + x * y + y ** 2
    g = f * f.reciprocal()
    assert g.value == pytest.approx(1.0, rel=1e-14)
    assert np.max(np.abs(g.coef[1:])) < 1e-13


def test_partial_is_derivative():
    x, y = seed_point([0.9, 1.1], 4)
    f = jets.exp(x) * jets.sin(y)
    fx = f.partial(0)
    assert fx.value == pytest.approx(f.derivative_array(1)[0], rel=1e-13)
    # mixed: d/dy of (df/dx)
    assert fx.derivative_array(1)[1] == pytest.approx(
        f.derivative_array(2)[0, 1], rel=1e-12)


def test_division_and_integer_powers():
    (x,) = seed_point([0.6], 6)
    f = (1 + x) ** 3 / (1 - x)
    x0 = 0.6
    val = (1 + x0) ** 3 / (1 - x0)
    d1 = (3 * (1 + x0) ** 2 * (1 - x0) + (1 + x0) ** 3) / (1 - x0) ** 2
    assert f.value == pytest.approx(val, rel=1e-13)
    assert f.derivative_array(1)[0] == pytest.approx(d1, rel=1e-12)


@pytest.mark.parametrize("t0", [0.0, 0.3, 2.0, 7.5])
def test_entire_helpers_match_references(t0):
    (t,) = seed_point([t0], 4)
    cs = jets.cos_sqrt(t)
    ss = jets.sinc_sqrt(t)
    s2 = jets.sin_sq_sqrt_over_t(t)
    if t0 > 0:
        r = math.sqrt(t0)
        assert cs.value == pytest.approx(math.cos(r), abs=1e-13)
        assert ss.value == pytest.approx(math.sin(r) / r, abs=1e-13)
        assert s2.value == pytest.approx(math.sin(r) ** 2 / t0, abs=1e-13)
    else:
        assert cs.value == pytest.approx(1.0, abs=1e-15)
        assert ss.value == pytest.approx(1.0, abs=1e-15)
        assert s2.value == pytest.approx(1.0, abs=1e-15)
    # first derivative vs finite differences of the scalar helpers
    h = 1e-6 if t0 else 1e-8
    tp, tm = t0 + h, max(t0 - h, 0.0)
    for jet_val, scalar in ((cs, jets.cos_sqrt), (s2, jets.sin_sq_sqrt_over_t)):
        fd = (scalar(tp) - scalar(tm)) / (tp - tm)
        assert jet_val.derivative_array(1)[0] == pytest.approx(fd, abs=2e-6)


@pytest.mark.parametrize("t0", [0.0, 0.2, 0.9, 16.0])
def test_atan_sqrt_sq(t0):
    (t,) = seed_point([t0], 3)
    f = jets.atan_sqrt_sq(t)
    ref = math.atan(math.sqrt(t0)) ** 2 if t0 else 0.0
    assert f.value == pytest.approx(ref, abs=1e-13)
    if t0:
        h = t0 * 1e-6
        fd = (jets.atan_sqrt_sq(t0 + h) - jets.atan_sqrt_sq(t0 - h)) / (2 * h)
        assert f.derivative_array(1)[0] == pytest.approx(fd, rel=1e-7)
    else:
        # atan(sqrt t)^2 = t - 2t^2/3 + ...
        assert f.derivative_array(1)[0] == pytest.approx(1.0, abs=1e-13)
        assert f.derivative_array(2)[0, 0] == pytest.approx(-4.0 / 3.0, abs=1e-12)


def test_scalar_fallbacks():
    assert jets.sqrt(4.0) == 2.0
    assert jets.sin(np.array([0.0, math.pi / 2])) == pytest.approx([0.0, 1.0])
    assert jets.powf(2.0, 0.5) == pytest.approx(math.sqrt(2))


def test_mul_requires_same_space():
    (a,) = seed_point([1.0], 2)
    (b,) = seed_point([1.0], 3)
    with pytest.raises(ValueError):
        a * b
