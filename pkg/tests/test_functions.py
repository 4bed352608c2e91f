import numpy as np
import pytest

from thinlab.errors import ConfigError
from thinlab.functions import (
    coeff_from_spec,
    const1d,
    cusp1d,
    func_from_spec,
    inv_r2d,
    poly1d,
    poly2d,
    power1d,
    trig1d,
)


def fd(f, x, h=1e-5):
    return (f(x + h) - f(x - h)) / (2 * h)


def test_poly_derivatives():
    p = poly1d([1.0, -2.0, 3.0])  # 1 - 2x + 3x^2
    x = np.linspace(0, 1, 7)
    assert np.allclose(p.d1(x), -2 + 6 * x)
    assert np.allclose(p.d2(x), 6.0)


def test_trig_values_and_derivatives():
    t = trig1d(cos_amps=[1.0], sin_amps=[0.0, 0.5])
    x = np.linspace(0.1, 0.9, 5)
    want = np.cos(np.pi * x) + 0.5 * np.sin(2 * np.pi * x)
    assert np.allclose(t(x), want)
    assert np.allclose(t.d1(x), fd(t, x), atol=1e-8)
    assert np.allclose(t.d2(x), fd(t.d1, x), atol=1e-7)


def test_cusp_second_derivative_blows_up_at_anchor():
    c = cusp1d([0.5], [1.0], 2.5)
    # d2 = 2.5*1.5*|x-0.5|^{0.5}: zero at anchor, matches closed form nearby
    assert c.d2(0.5) == 0.0
    assert np.isclose(c.d2(0.6), 2.5 * 1.5 * 0.1**0.5)
    assert np.allclose(c.d1(np.array([0.3, 0.8])),
                       fd(c, np.array([0.3, 0.8])), atol=1e-8)


def test_cusp_rejects_non_c2_exponent():
    with pytest.raises(ConfigError):
        cusp1d([0.5], [1.0], 1.5)


def test_power_negative_exponent():
    p = power1d(-1.0)
    assert np.isclose(p(2.0), 0.5)
    assert np.isclose(p.d1(2.0), -0.25)
    assert np.isclose(p.d2(2.0), 0.25)


def test_func_from_spec_dispatch():
    assert np.isclose(func_from_spec(3.0)(0.2), 3.0)
    f = func_from_spec({"kind": "trig", "cos": [1.0]})
    assert np.isclose(f(0.0), 1.0)
    g = func_from_spec({"kind": "cusp", "points": [0.5], "weights": [1.0],
                        "exponent": 2.5, "background": {"kind": "const", "value": 2.0}})
    assert np.isclose(g(0.5), 2.0)
    with pytest.raises(ConfigError):
        func_from_spec({"kind": "nope"})
    with pytest.raises(ConfigError):
        func_from_spec("bad")


def test_plus_and_scaled_combinators():
    f = poly1d([0.0, 1.0]).scaled(2.0).plus(const1d(1.0))
    assert np.isclose(f(0.5), 2.0)
    assert np.isclose(f.d1(0.5), 2.0)


def test_poly2d_cross_derivatives():
    u = poly2d([(1.0, 2, 1), (0.5, 0, 3)])  # x^2 y + 0.5 y^3
    x, y = 0.3, 0.7
    assert np.isclose(u(x, y), x**2 * y + 0.5 * y**3)
    assert np.isclose(u.dx(x, y), 2 * x * y)
    assert np.isclose(u.dy(x, y), x**2 + 1.5 * y**2)
    assert np.isclose(u.dxx(x, y), 2 * y)
    assert np.isclose(u.dxy(x, y), 2 * x)
    assert np.isclose(u.dyy(x, y), 3 * y)


def test_inv_r_field_matches_finite_differences():
    d = inv_r2d(2.0)
    x, y = 0.4, 0.3  # r = 0.5
    assert np.isclose(d(x, y), 4.0)
    h = 1e-6
    assert np.isclose(d.dx(x, y), (d(x + h, y) - d(x - h, y)) / (2 * h),
                      atol=1e-6)
    assert np.isclose(d.dy(x, y), (d(x, y + h) - d(x, y - h)) / (2 * h),
                      atol=1e-6)


def test_coeff_from_spec():
    c = coeff_from_spec(1.5)
    assert np.isclose(c(0.1, 0.2), 1.5)
    p = coeff_from_spec({"poly": [[1.0, 1, 0], [2.0, 0, 0]]})
    assert np.isclose(p(0.25, 0.0), 2.25)
    r = coeff_from_spec({"kind": "inv_r", "scale": 1.0})
    assert np.isclose(r(3.0, 4.0), 0.2)
    with pytest.raises(ConfigError):
        coeff_from_spec("x+y")
