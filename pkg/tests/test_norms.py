import numpy as np
import pytest

from thinlab.functions import Func1D, poly1d, poly2d, power1d
from thinlab.geometry import make_profile
from thinlab.norms import (
    fd1,
    fd2,
    holder_norm_1d,
    holder_norm_2d,
    pair_quotient_1d,
    profile_weighted_norm,
    sample_field2d,
    weighted_norm_1d,
)


def unit_grid_sample(field, nx=32, ny=16):
    xs, ys = np.meshgrid(np.linspace(0, 1, nx + 1),
                         np.linspace(0, 1, ny + 1), indexing="ij")
    return sample_field2d(field, xs, ys, h=1.0 / nx, shape=xs.shape)


def test_linear_function_norm_is_two():
    rep = holder_norm_1d(poly1d([0.0, 1.0]), 1, 0.5)
    assert rep.convention == "sum"
    assert np.isclose(rep.value, 2.0, atol=1e-12)
    assert rep.sup_terms == (1.0, 1.0)
    assert rep.seminorm == 0.0


def test_sqrt_seminorm_attained_against_zero():
    f = Func1D(np.sqrt, lambda x: 0.5 / np.sqrt(np.maximum(x, 1e-9)),
               lambda x: -0.25 * np.maximum(x, 1e-9) ** -1.5)
    rep = holder_norm_1d(f, 0, 0.5, n=1024)
    assert abs(rep.seminorm - 1.0) <= 0.05
    # the witness pair has one end at the origin
    assert min(rep.witnesses["quotient_pair"]) == 0.0


def test_zero_function_norm_is_zero():
    rep = holder_norm_1d(lambda x: np.zeros_like(x), 2, 0.5)
    assert rep.value == 0.0


def test_array_input_close_to_analytic():
    x = np.linspace(0, 1, 513)
    vals = np.sin(np.pi * x)
    f = Func1D(lambda t: np.sin(np.pi * t), lambda t: np.pi * np.cos(np.pi * t),
               lambda t: -np.pi**2 * np.sin(np.pi * t))
    a = holder_norm_1d(vals, 2, 0.5, x=x)
    b = holder_norm_1d(f, 2, 0.5, x=x)
    assert np.isclose(a.value, b.value, rtol=1e-2)
    with pytest.raises(ValueError):
        holder_norm_1d(vals, 2, 0.5)


def test_weighted_sups_of_inverse_power():
    rep = weighted_norm_1d(power1d(-1.0), 2, 0.5, m=1.0, n=4096)
    assert rep.convention == "max"
    assert np.allclose(rep.sup_terms, (1.0, 1.0, 2.0), atol=1e-6)


def test_weighted_constant_has_no_pair_term():
    rep = weighted_norm_1d(lambda x: np.ones_like(x), 0, 0.5, m=1.0)
    assert np.isclose(rep.value, 1.0, atol=1e-12)
    assert rep.seminorm == 0.0


def test_weighted_norm_of_mild_singularity_is_finite():
    rep = weighted_norm_1d(power1d(-0.5), 0, 0.5, m=1.0, n=2048)
    assert np.isfinite(rep.value)
    assert rep.value > 0


def test_homogeneity_is_exact():
    f = poly1d([0.3, -1.0, 2.0])
    a = holder_norm_1d(f, 2, 0.5)
    b = holder_norm_1d(f.scaled(2.0), 2, 0.5)
    assert b.value == 2.0 * a.value


def test_density_doubling_is_stable_on_smooth_input():
    f = Func1D(lambda t: np.sin(np.pi * t), lambda t: np.pi * np.cos(np.pi * t),
               lambda t: -np.pi**2 * np.sin(np.pi * t))
    a = holder_norm_1d(f, 2, 0.5, n=512)
    b = holder_norm_1d(f, 2, 0.5, n=1024)
    assert abs(a.value - b.value) / b.value <= 0.05


def test_finite_difference_helpers_are_second_order():
    x = np.linspace(0, 1, 201)
    v = np.exp(x)
    assert np.allclose(fd1(v, x[1] - x[0]), v, atol=2e-4)
    assert np.allclose(fd2(v, x[1] - x[0]), v, atol=2e-2)


def test_profile_weighted_norm_scales_linearly():
    a = profile_weighted_norm(make_profile({"kind": "sine", "amplitude": 0.1}), 0.5)
    b = profile_weighted_norm(make_profile({"kind": "sine", "amplitude": 0.2}), 0.5)
    assert np.isclose(b.value, 2 * a.value, rtol=1e-6)
    assert a.extras["embed_ratio"] > 0


def test_product_quotient_controlled_by_norm_squared():
    p = make_profile({"kind": "sine", "amplitude": 0.3})
    rep = profile_weighted_norm(p, 0.5)
    x = np.linspace(0, 1, 2049)[1:]
    prod = p.eval_d2(x) * p(x)
    lhs, _ = pair_quotient_1d(x, prod, 0.5, weight_power=1.0)
    assert lhs <= 10.0 * rep.value**2


def test_constant_field_norm():
    u = poly2d([(3.0, 0, 0)])
    rep = holder_norm_2d(unit_grid_sample(u), 2, 0.5)
    assert np.isclose(rep.value, 3.0, atol=1e-12)


def test_linear_field_norm_is_two():
    u = poly2d([(1.0, 1, 0)])
    rep = holder_norm_2d(unit_grid_sample(u), 2, 0.5)
    assert np.isclose(rep.value, 2.0, atol=1e-12)
    assert rep.sup_terms == (1.0, 1.0, 0.0)


def test_region_monotone():
    u = poly2d([(1.0, 2, 1), (0.5, 1, 2)])
    s = unit_grid_sample(u)
    full = holder_norm_2d(s, 2, 0.5)
    half = holder_norm_2d(s, 2, 0.5, region=(0.0, 0.5))
    assert half.value <= full.value + 1e-12


def test_weighted_2d_excludes_origin_and_uses_max():
    u = poly2d([(1.0, 0, 0)])
    s = unit_grid_sample(u)
    rep = holder_norm_2d(s, 0, 0.5, m=1.0)
    assert rep.convention == "max"
    assert np.isclose(rep.value, np.sqrt(2.0), atol=1e-12)


def test_pair_thinning_keeps_norm_close():
    u = poly2d([(1.0, 2, 1), (0.5, 1, 2), (0.2, 0, 3)])
    s = unit_grid_sample(u, nx=64, ny=32)
    full = holder_norm_2d(s, 2, 0.5, max_pair_nodes=10**6)
    thin = holder_norm_2d(s, 2, 0.5, max_pair_nodes=800)
    assert abs(full.value - thin.value) / full.value <= 0.05


def test_report_serializes():
    rep = holder_norm_1d(poly1d([0.0, 1.0]), 1, 0.5)
    d = rep.as_dict()
    assert d["value"] == rep.value
    assert isinstance(d["witnesses"], dict)
