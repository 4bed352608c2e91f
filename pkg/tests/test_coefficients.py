import numpy as np
import pytest

from thinlab.coefficients import (
    apply_operator,
    coefficient_set_from_config,
    extend_constant,
    preset,
    validate_bounds,
    validate_ellipticity,
)
from thinlab.errors import ConfigError, EllipticityViolation, OutOfDomain
from thinlab.functions import poly1d, poly2d


def const_set(A, B, C, lam, **kw):
    return coefficient_set_from_config(
        dict({"A": A, "B": B, "C": C, "D": 0.0, "E": 0.0, "G": 0.0,
              "lambda": lam, "Lambda": 10.0}, **kw))


def test_identity_form_passes_exactly():
    rep = validate_ellipticity(const_set(1.0, 0.0, 1.0, lam=1.0))
    assert rep.passed
    assert np.isclose(rep.min_quotient, 1.0, atol=1e-12)


def test_skew_form_minimum_matches_eigenvalue():
    # eigenvalues of [[2, 1], [1, 1]] are (3 +- sqrt 5)/2
    rep = validate_ellipticity(const_set(2.0, 2.0, 1.0, lam=0.3))
    assert rep.passed
    assert np.isclose(rep.min_quotient, (3 - np.sqrt(5)) / 2, atol=2e-3)


def test_indefinite_form_raises_with_witness():
    with pytest.raises(EllipticityViolation) as ei:
        validate_ellipticity(const_set(1.0, 3.0, 1.0, lam=0.1))
    err = ei.value
    assert err.quotient == pytest.approx(-0.5, abs=2e-3)
    assert err.direction is not None
    # non-strict mode reports instead of raising
    rep = validate_ellipticity(const_set(1.0, 3.0, 1.0, lam=0.1), strict=False)
    assert not rep.passed


def test_scan_density_floor():
    c = const_set(1.0, 0.0, 1.0, lam=1.0)
    with pytest.raises(ConfigError):
        validate_ellipticity(c, grid=8)
    with pytest.raises(ConfigError):
        validate_ellipticity(c, ndirs=32)


def test_vertical_direction_is_sampled_exactly():
    # C < lam is caught even when A is huge, via the (0,1) direction
    with pytest.raises(EllipticityViolation) as ei:
        validate_ellipticity(const_set(5.0, 0.0, 0.05, lam=0.5))
    assert ei.value.direction == pytest.approx((0.0, 1.0), abs=1e-12)


def test_apply_operator_on_harmonic_field():
    lap = preset("laplace")
    u = poly2d([(1.0, 2, 0), (-1.0, 0, 2)])  # x^2 - y^2
    assert apply_operator(lap, u, (0.3, 0.4)) == pytest.approx(0.0)
    v = poly2d([(1.0, 2, 0)])
    assert apply_operator(lap, v, (0.7, 0.1)) == pytest.approx(2.0)


def test_apply_operator_hand_value():
    c = coefficient_set_from_config({"A": 1.0, "B": 0.0, "C": 2.0, "D": 3.0,
                                     "E": 0.0, "G": 0.0, "lambda": 0.5,
                                     "Lambda": 5.0})
    u = poly2d([(1.0, 1, 1)])  # xy
    assert apply_operator(c, u, (0.5, 0.5)) == pytest.approx(1.5)


def test_apply_operator_rejects_outside_box():
    with pytest.raises(OutOfDomain):
        apply_operator(preset("laplace"), poly2d([(1.0, 1, 0)]), (1.2, 0.0))


def test_operator_is_linear():
    c = preset("tilted")
    u = poly2d([(1.0, 2, 1), (0.3, 1, 0)])
    v = poly2d([(0.5, 0, 2), (1.0, 1, 1)])
    at = (0.4, 0.6)
    lhs = apply_operator(
        c, poly2d([(2.0, 2, 1), (0.6, 1, 0), (1.5, 0, 2), (3.0, 1, 1)]), at)
    rhs = 2.0 * apply_operator(c, u, at) + 3.0 * apply_operator(c, v, at)
    assert lhs == pytest.approx(rhs, abs=1e-12)


def test_presets_satisfy_their_own_bounds():
    for name in ("laplace", "tilted", "corner_drift"):
        c = preset(name)
        assert validate_ellipticity(c).passed
        rep = validate_bounds(c)
        assert rep.passed, (name, rep.details)


def test_weak_drift_checks_r_weighted_sup():
    c = preset("corner_drift")
    rep = validate_bounds(c)
    assert "r_weighted_D" in rep.details
    assert rep.details["r_weighted_D"] <= c.Lam


def test_constant_extension_of_oblique_slope():
    g = extend_constant(poly1d([0.0, 1.0]))
    assert g(0.5) == pytest.approx(0.5)
    assert g(1.7) == pytest.approx(1.0)
    assert g(-0.3) == pytest.approx(0.0)
    assert g.d1(1.7) == 0.0
    assert g.d1(0.5) == pytest.approx(1.0)


def test_config_errors():
    with pytest.raises(ConfigError):
        coefficient_set_from_config({"A": 1.0})
    with pytest.raises(ConfigError):
        coefficient_set_from_config({"A": 1, "B": 0, "C": 1, "D": 0, "E": 0,
                                     "lambda": 2.0, "Lambda": 1.0})
    with pytest.raises(ConfigError):
        preset("nope")


def test_preset_override():
    c = coefficient_set_from_config({"preset": "laplace", "G": 0.25})
    assert c.G(0.5) == pytest.approx(0.25)
    assert c.A(0.1, 0.1) == pytest.approx(1.0)
