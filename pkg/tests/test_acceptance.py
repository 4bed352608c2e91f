"""End-to-end acceptance checks for the laboratory.

Each test exercises one advertised guarantee on realistic inputs:
solver convergence against a manufactured harmonic, the discrete
maximum principle, uniformity of Schauder ratios over shrinking
crescents (plus a deliberately incompatible negative control), corner
barrier margins, bounded corrector windows, exactness and stability of
the coordinate changes, the collapse-state oracle with its convergence
rates, closed-form weighted norms with the thickness embedding, and
byte-level determinism of the command line runner.
"""

import json
import subprocess
import sys
import time

import numpy as np
import pytest

from thinlab.asymptotic import deviation, solve_asymptotic, solve_asymptotic_dense
from thinlab.barrier import (
    barrier_params,
    comparison_check,
    verify_H_bounds,
    verify_Y_supersolution,
)
from thinlab.coefficients import coefficient_set_from_config, preset
from thinlab.functions import Func1D, const1d, cusp1d, poly1d, poly2d, power1d, trig1d
from thinlab.geometry import make_profile
from thinlab.norms import weighted_norm_1d, profile_weighted_norm
from thinlab.solver import BVPSpec, make_grid, solve_bvp, local_schauder_check
from thinlab.transforms import (
    apply_pipeline,
    chain_rule_residual,
    check_rweighted_bounds,
)

LAPLACE = preset("laplace")

# one shrinking family reused by several tests below
SHRINK = (0.08, 0.04, 0.02, 0.01, 0.005)


def sine_profile(amp):
    return make_profile({"kind": "sine", "amplitude": amp})


def harmonic_trace(profile):
    """Dirichlet trace of cosh(pi y) cos(pi x); its bottom flux vanishes."""
    pi = np.pi
    f, f1 = profile.eval, profile.eval_d1

    def val(x):
        return np.cosh(pi * f(x)) * np.cos(pi * x)

    def d1(x):
        return (pi * np.sinh(pi * f(x)) * f1(x) * np.cos(pi * x)
                - pi * np.cosh(pi * f(x)) * np.sin(pi * x))

    def d2(x, h=1e-5):
        return (d1(x + h) - d1(x - h)) / (2 * h)

    return Func1D(val, d1, d2, name="harmonic trace")


def spread(values):
    return max(values) / min(values)


# ---------------------------------------------------------------------------
# manufactured solution: second-order convergence in under 30 seconds


def test_manufactured_harmonic_converges_at_second_order():
    profile = sine_profile(0.05)
    spec = BVPSpec(coefficients=LAPLACE, profile=profile,
                   dirichlet=harmonic_trace(profile))
    exact = lambda X, Y: np.cosh(np.pi * Y) * np.cos(np.pi * X)
    started = time.monotonic()
    errs = {}
    for n in (64, 128):
        u = solve_bvp(spec, make_grid(profile, n, n))
        X, Y = u.grid.physical()
        errs[n] = float(np.max(np.abs(u.values - exact(X, Y))))
    elapsed = time.monotonic() - started
    assert elapsed < 30.0
    ratio = errs[64] / errs[128]
    assert 3.4 <= ratio <= 4.6, (errs, ratio)


# ---------------------------------------------------------------------------
# discrete maximum principle for homogeneous interior and bottom data


def test_discrete_maximum_principle_on_random_traces():
    profile = sine_profile(0.05)
    grid = make_grid(profile, 64, 32)
    rng = np.random.default_rng(2026)
    xs = np.linspace(0.0, 1.0, 4097)
    for _ in range(20):
        phi = trig1d(cos_amps=rng.normal(0.0, 1.0, rng.integers(1, 5)),
                     sin_amps=rng.normal(0.0, 1.0, rng.integers(0, 4)))
        vals = phi(xs)
        lo, hi, scale = vals.min(), vals.max(), np.abs(vals).max()
        u = solve_bvp(BVPSpec(coefficients=LAPLACE, profile=profile,
                              dirichlet=phi), grid)
        assert u.values.min() >= lo - 1e-6 * scale
        assert u.values.max() <= hi + 1e-6 * scale


# ---------------------------------------------------------------------------
# Schauder ratios stay uniform as the crescent shrinks; breaking corner
# compatibility on purpose makes them blow up instead


def test_schauder_ratio_is_uniform_over_shrinking_family():
    phi = trig1d(cos_amps=[1.0])
    ratios = []
    for amp in SHRINK:
        profile = sine_profile(amp)
        spec = BVPSpec(coefficients=LAPLACE, profile=profile, dirichlet=phi)
        u = solve_bvp(spec, make_grid(profile, 64, 32))
        ratios.append(local_schauder_check(u, spec).ratio_global)
    assert all(np.isfinite(r) and r > 0 for r in ratios)
    assert spread(ratios) <= 2.0, ratios


def test_incompatible_corner_data_is_detected():
    # same family, but a Dirichlet bottom whose trace disagrees with the
    # arc data at the corners; the norm ratio must grow by >= 4x
    phi = trig1d(cos_amps=[1.0])
    bottom = poly1d([0.0, 1.0, -1.0])
    ratios = []
    for amp in SHRINK:
        profile = sine_profile(amp)
        spec = BVPSpec(coefficients=LAPLACE, profile=profile, dirichlet=phi,
                       bottom="dirichlet", bottom_data=bottom)
        u = solve_bvp(spec, make_grid(profile, 64, 32))
        ratios.append(local_schauder_check(u, spec).ratio_global)
    assert ratios[-1] / ratios[0] >= 4.0, ratios


# ---------------------------------------------------------------------------
# corner barriers: positive margins, uniform across shallow slopes


def test_barrier_margins_positive_and_uniform():
    margins = {"y": [], "near": [], "right": [], "left": []}
    for slope in (0.05, 0.04, 0.03, 0.024, 0.02):
        profile = sine_profile(slope / np.pi)   # corner slope f'(0) = slope
        params = barrier_params(profile, LAPLACE, 0.3)
        yrep = verify_Y_supersolution(LAPLACE, params)
        hrep = verify_H_bounds(LAPLACE, params, profile)
        assert yrep.passed and hrep.passed
        margins["y"].append(yrep.min_margin)
        for case in ("near", "right", "left"):
            margins[case].append(hrep.details["cases"][case])
    for case, vals in margins.items():
        assert all(v > 0 for v in vals), (case, vals)
        assert spread(vals) <= 2.0, (case, vals)


# ---------------------------------------------------------------------------
# corrector windows: the normalized defect stays bounded as the crescent
# shrinks, at several centers, for data with exactly matching smoothness


def test_corrector_window_growth_is_bounded():
    centers = (0.1, 0.3, 0.5, 0.65)
    phi = trig1d(cos_amps=[0.25]).plus(cusp1d(centers, [1.0] * 4, 2.5))
    sups = {x0: [] for x0 in centers}
    for amp in SHRINK:
        profile = sine_profile(amp)
        spec = BVPSpec(coefficients=LAPLACE, profile=profile, dirichlet=phi)
        # the window |x - x0| < f(x0) needs a few dozen columns
        nx = min(max(64, round(16 / amp)), 3200)
        u = solve_bvp(spec, make_grid(profile, nx, 48))
        for x0 in centers:
            sups[x0].append(comparison_check(u, spec, x0).window_sup)
    for x0, vals in sups.items():
        assert all(np.isfinite(v) and v > 0 for v in vals), (x0, vals)
        assert spread(vals) <= 2.0, (x0, vals)


# ---------------------------------------------------------------------------
# coordinate changes: exact characteristics, exact round trips, operator
# chain rule, and r-weighted drift bounds stable under thickness halving


def test_characteristic_flattening_matches_closed_form():
    c = coefficient_set_from_config({
        "A": 1.0, "B": 0.0, "C": 1.0, "D": 0.0, "E": 0.0,
        "G": {"kind": "poly", "coeffs": [0.0, 1.0]},
        "lambda": 1.0, "Lambda": 2.0})
    profile = sine_profile(0.05)
    t = apply_pipeline(c, profile, ["p1"])
    xs = np.linspace(0.05, 0.95, 41)
    ys = 0.6 * profile.eval(xs)
    s, _ = t.map.forward(xs, ys)
    # dy/ds = G(s) characteristics of G(x) = x are x = s e^y
    assert np.max(np.abs(s - xs * np.exp(-ys))) <= 1e-8


def test_transform_audit_is_stable_under_halving():
    c = preset("tilted")
    probe = poly2d([[1.0, 2, 0], [-0.6, 1, 1], [0.4, 0, 2],
                    [0.2, 3, 0], [1.0, 0, 0]])
    sup_d, sup_e = [], []
    for amp in (0.08, 0.04, 0.02):
        profile = sine_profile(amp)
        t = apply_pipeline(c, profile, ["p1", "p2"])
        rw = check_rweighted_bounds(t)
        assert rw.passed
        assert np.isfinite(rw.sup_rD) and np.isfinite(rw.sup_rE)
        sup_d.append(rw.sup_rD)
        sup_e.append(rw.sup_rE)

        xs = np.linspace(0.12, 0.62, 5)
        ys = 0.35 * profile.eval(xs)
        for step in ("p1", "p2", "p3"):
            single = apply_pipeline(c, profile, [step])
            res = chain_rule_residual(c, single.map, probe, xs, ys)
            assert np.max(np.abs(res)) <= 1e-8
        sx, zy = t.map.forward(xs, ys)
        xb, yb = t.map.inverse(sx, zy)
        assert max(np.max(np.abs(xb - xs)), np.max(np.abs(yb - ys))) <= 1e-9
    for vals in (sup_d, sup_e):
        assert all(b / a <= 1.5 for a, b in zip(vals, vals[1:]) if a > 0)


# ---------------------------------------------------------------------------
# collapse state: closed form equals a brute-force dense solve, and three
# hand-checkable traces come out exactly


def test_collapse_state_matches_dense_oracle():
    xs = np.linspace(0.0, 1.0, 41)
    rng = np.random.default_rng(11)
    phi = trig1d(cos_amps=[0.7], sin_amps=[0.0, 0.3])
    for _ in range(10):
        c = coefficient_set_from_config({
            "A": 1.0 + 0.5 * rng.uniform(), "B": rng.uniform(-0.3, 0.3),
            "C": 1.0 + 0.5 * rng.uniform(), "D": rng.uniform(-1, 1),
            "E": rng.uniform(-1, 1),
            "G": {"kind": "poly", "coeffs": rng.uniform(-0.5, 0.5, 3).tolist()},
            "lambda": 0.5, "Lambda": 4.0})
        closed = solve_asymptotic(c, c.G, phi, xs)
        dense = solve_asymptotic_dense(c, c.G, phi, xs)
        for key, a in closed.arrays().items():
            assert np.max(np.abs(a - dense.arrays()[key])) <= 1e-12, key


def test_collapse_state_trivial_traces_exact():
    xs = np.linspace(0.0, 1.0, 17)
    flat = solve_asymptotic(LAPLACE, 0.0, const1d(3.0), xs)
    assert np.all(flat.ustar == 3.0)
    for arr in (flat.ux, flat.uy, flat.uxx, flat.uxy, flat.uyy):
        assert np.all(arr == 0.0)
    linear = solve_asymptotic(LAPLACE, 0.0, poly1d([0.0, 1.0]), xs)
    assert np.array_equal(linear.ustar, xs)
    assert np.all(linear.ux == 1.0)
    assert np.all(linear.uyy == 0.0)
    quad = solve_asymptotic(LAPLACE, 0.0, poly1d([0.0, 0.0, 1.0]), xs)
    assert np.array_equal(quad.ustar, xs**2)
    assert np.all(quad.uyy == -2.0)


# ---------------------------------------------------------------------------
# the computed solutions approach the collapse state at the expected rate


def test_collapse_deviation_rates():
    phi = trig1d(cos_amps=[1.0])
    sups = {0: [], 1: [], 2: []}
    for amp in SHRINK:
        profile = sine_profile(amp)
        spec = BVPSpec(coefficients=LAPLACE, profile=profile, dirichlet=phi)
        u = solve_bvp(spec, make_grid(profile, 128, 64))
        rep = deviation(u, solve_asymptotic(LAPLACE, LAPLACE.G, phi,
                                            u.grid.xs))
        for i in range(3):
            sups[i].append(rep.sup[i])
    gamma = LAPLACE.gamma
    for i, vals in sups.items():
        assert all(b < a for a, b in zip(vals, vals[1:])), (i, vals)
        slope = np.polyfit(np.log(SHRINK), np.log(vals), 1)[0]
        assert slope >= gamma - 0.1, (i, slope)


# ---------------------------------------------------------------------------
# weighted norms: closed-form anchor and the thickness embedding constant


def test_weighted_norm_closed_form_anchor():
    rep = weighted_norm_1d(power1d(-1.0), 2, 0.5, m=1.0, n=4096)
    assert abs(rep.sup_terms[0] - 1.0) <= 1e-6
    assert abs(rep.sup_terms[1] - 1.0) <= 1e-6
    assert abs(rep.sup_terms[2] - 2.0) <= 1e-6


def test_thickness_embedding_single_constant():
    presets = [
        {"kind": "sine", "amplitude": 0.1},
        {"kind": "sine", "amplitude": 0.05},
        {"kind": "sine", "amplitude": 0.02},
        {"kind": "sine", "amplitude": 0.01},
        {"kind": "poly", "amplitude": 0.3},
        {"kind": "poly", "amplitude": 0.1},
        {"kind": "poly", "amplitude": 0.05,
         "params": {"coeffs": [0.0, 1.0, 0.0, -1.0]}},
        {"kind": "corner", "amplitude": 0.05},
        {"kind": "corner", "amplitude": 0.02},
        {"kind": "table", "amplitude": 1.0,
         "params": {"x": [0.0, 0.25, 0.5, 0.75, 1.0],
                    "y": [0.0, 0.03, 0.05, 0.035, 0.0]}},
    ]
    ratios = []
    for frag in presets:
        rep = profile_weighted_norm(make_profile(frag), 0.5)
        assert rep.extras["embed_lhs"] <= (rep.extras["embed_ratio"]
                                           * rep.value) * (1 + 1e-12)
        ratios.append(rep.extras["embed_ratio"])
    assert max(ratios) <= 10.0, ratios


# ---------------------------------------------------------------------------
# two CLI runs of the same config must agree to the byte


def test_cli_runs_are_byte_identical(tmp_path):
    cfg = {
        "kind": "shrink_study",
        "problem": {"coefficients": {"preset": "laplace"},
                    "phi": {"kind": "trig", "cos": [1.0]},
                    "profile": {"kind": "sine"},
                    "sigmas": [0.08, 0.04]},
        "grid": {"nx": 24, "ny": 12},
    }
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    blobs = []
    for tag in ("one", "two"):
        out = tmp_path / tag
        proc = subprocess.run(
            [sys.executable, "-m", "thinlab.cli", "run", str(path),
             "--out", str(out)],
            capture_output=True, text=True)
        assert proc.returncode == 0, proc.stderr
        blobs.append(((out / "aggregate.csv").read_bytes(),
                      (out / "summary.json").read_bytes()))
    assert blobs[0][0] == blobs[1][0]
    assert blobs[0][1] == blobs[1][1]
