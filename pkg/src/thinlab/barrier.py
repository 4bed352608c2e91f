"""Corner barriers and the corrector polynomial.

Near a pinch point the solution is compared against explicit
supersolutions built from the homogeneous harmonics r^a cos(k theta) of
the corner wedge.  This module evaluates those barriers in closed form,
verifies their differential inequalities by dense sampling (the margins
are report-valued, never asserted silently), and measures the empirical
comparison constants against computed solutions.

All checks here are pointwise arithmetic on sample clouds; nothing
depends on mutable state, so everything parallelizes trivially.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, OutOfWedge, RangeViolation
from .functions import Field2D
from .geometry import BoundaryProfile
from .coefficients import CoefficientSet
from .solver import BVPSpec, DiscreteSolution

__all__ = [
    "BarrierParams",
    "CorrectorPolynomial",
    "MarginReport",
    "ComparisonReport",
    "barrier_params",
    "build_corrector",
    "eval_Y",
    "eval_LY_closed_form",
    "verify_Y_supersolution",
    "eval_H",
    "verify_H_bounds",
    "comparison_check",
]


@dataclass(frozen=True)
class BarrierParams:
    """Wedge geometry and exponents for the corner barriers.

    k is the angular frequency pinning cos(k theta) positive on the
    wedge |theta| <= f'(0) (k * f'(0) = pi/8); M the supersolution
    margin knob; alpha the signed radial exponent +-k/M; r0 the radial
    scale of the top point over x0.  m > 0 selects the x-weighted
    variant, admissible only when k/(4M) >= m + 2 + gamma.
    """

    k: float
    M: float
    alpha: float
    r0: float
    x0: float
    m: int
    fp0: float
    f_x0: float
    gamma: float

    def as_dict(self) -> dict:
        return {"k": self.k, "M": self.M, "alpha": self.alpha,
                "r0": self.r0, "x0": self.x0, "m": self.m,
                "fp0": self.fp0, "f_x0": self.f_x0, "gamma": self.gamma}


def barrier_params(profile: BoundaryProfile, c: CoefficientSet, x0: float,
                   m: int = 0, sign: int = 1) -> BarrierParams:
    if not 0.0 < x0 < 1.0:
        raise ConfigError("barrier center x0 must lie in (0, 1)")
    if m < 0 or int(m) != m:
        raise ConfigError("weight order m must be a nonnegative integer")
    fp0 = float(profile.eval_d1(0.0))
    if fp0 <= 0:
        raise ConfigError("barrier construction needs f'(0) > 0")
    k = np.pi / (8.0 * fp0)
    M = 100.0 * c.Lam / c.lam
    gamma = profile.gamma
    if m > 0 and k / (4.0 * M) < m + 2.0 + gamma:
        raise ConfigError(
            f"weighted barrier needs k/(4M) >= m+2+gamma; got "
            f"{k / (4 * M):.4g} < {m + 2 + gamma:.4g} (slope too large)")
    f_x0 = float(profile.eval(x0))
    r0 = np.sqrt(1.0 + fp0**2) * f_x0 / fp0
    return BarrierParams(k=float(k), M=float(M),
                         alpha=float(sign) * float(k / M), r0=float(r0),
                         x0=float(x0), m=int(m), fp0=fp0, f_x0=f_x0,
                         gamma=float(gamma))


# ---------------------------------------------------------------------------
# corrector polynomial


@dataclass(frozen=True)
class CorrectorPolynomial:
    """P = N * p with p the second-order top-contact polynomial

        p(x, y) = (f(x0)^2 - y^2) + (f^2)'(x0)(x - x0)
                   + (f^2)''(x0)(x - x0)^2 / 2,

    which matches f(x)^2 - y^2 on the arc to second order at x0.
    l_phi records the interior operator applied to the Dirichlet data
    at the contact point; N = -l_phi / Lp there.
    """

    x0: float
    N: float
    f_sq: float
    d1: float
    d2: float
    l_phi: float

    def p_value(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        dx = x - self.x0
        return self.f_sq - y**2 + self.d1 * dx + 0.5 * self.d2 * dx**2

    def value(self, x, y):
        return self.N * self.p_value(x, y)

    def as_field(self) -> Field2D:
        n, d1, d2, x0 = self.N, self.d1, self.d2, self.x0

        def flat(x, y, fill):
            return np.full(np.broadcast(np.asarray(x), np.asarray(y)).shape,
                           fill, dtype=float)

        return Field2D(
            val=self.value,
            dx=lambda x, y: n * (d1 + d2 * (np.asarray(x, float) - x0))
            + 0.0 * np.asarray(y, float),
            dy=lambda x, y: -2.0 * n * np.asarray(y, float)
            + 0.0 * np.asarray(x, float),
            dxx=lambda x, y: flat(x, y, n * d2),
            dxy=lambda x, y: flat(x, y, 0.0),
            dyy=lambda x, y: flat(x, y, -2.0 * n),
            name="corrector")


def _l_on_p(c: CoefficientSet, d1, d2, x0, x, y):
    # L applied to the unscaled p; p_xy = 0 so B drops out.
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return (c.A(x, y) * d2 - 2.0 * c.C(x, y)
            + c.D(x, y) * (d1 + d2 * (x - x0))
            - 2.0 * c.E(x, y) * y)


def build_corrector(spec: BVPSpec, x0: float, n_x: int = 129,
                    n_eta: int = 17) -> CorrectorPolynomial:
    """Scale the top-contact polynomial so L(phi + P) vanishes at
    (x0, f(x0)).  Raises RangeViolation when Lp leaves the negative
    window [-10 Lam, -lam] somewhere on the sampled domain, which is
    the signal that the arc is too steep for this corrector."""
    if not 0.0 < x0 < 1.0:
        raise ConfigError("corrector center x0 must lie in (0, 1)")
    c = spec.coefficients
    p = spec.profile
    f0 = float(p.eval(x0))
    fp = float(p.eval_d1(x0))
    fpp = float(p.eval_d2(x0))
    d1 = 2.0 * f0 * fp
    d2 = 2.0 * (fp**2 + f0 * fpp)

    xs = np.linspace(0.0, 1.0, n_x)[1:-1]
    eta = np.linspace(0.0, 1.0, n_eta)[:, None]
    xg = np.broadcast_to(xs, (n_eta, xs.size))
    yg = eta * p.eval(xs)
    lp = _l_on_p(c, d1, d2, x0, xg, yg)
    lo, hi = float(lp.min()), float(lp.max())
    if hi > -c.lam + 1e-12 or lo < -10.0 * c.Lam - 1e-12:
        raise RangeViolation(
            f"L(p_x0) spans [{lo:.4g}, {hi:.4g}], outside "
            f"[-10*Lam, -lam] = [{-10 * c.Lam:.4g}, {-c.lam:.4g}]")

    phi = spec.dirichlet
    l_phi = float(c.A(x0, f0) * phi.d2(x0) + c.D(x0, f0) * phi.d1(x0))
    lp0 = float(_l_on_p(c, d1, d2, x0, x0, f0))
    return CorrectorPolynomial(x0=float(x0), N=-l_phi / lp0, f_sq=f0 * f0,
                               d1=d1, d2=d2, l_phi=l_phi)


# ---------------------------------------------------------------------------
# the radial barrier Y = r^(-alpha) cos(k theta)


def _polar(params: BarrierParams, at, check: bool = True):
    x = np.asarray(at[0], dtype=float)
    y = np.asarray(at[1], dtype=float)
    r = np.hypot(x, y)
    theta = np.arctan2(y, x)
    if check:
        if np.any(r <= 0):
            raise OutOfWedge("barrier evaluated at the corner itself")
        if np.any(np.abs(theta) > params.fp0 + 1e-9):
            worst = float(np.max(np.abs(theta)))
            raise OutOfWedge(
                f"|theta| = {worst:.4g} exceeds the wedge opening "
                f"{params.fp0:.4g}")
    return x, y, r, theta


def eval_Y(params: BarrierParams, at):
    """Y(r, theta) = r^(-alpha) cos(k theta), even in theta."""
    _, _, r, theta = _polar(params, at)
    return r ** (-params.alpha) * np.cos(params.k * theta)


def _ly_brackets(c: CoefficientSet, k: float, alpha: float, x, y, r, theta):
    """L[r^(-alpha) cos(k theta)] / r^(-alpha-2): the polar chain rule
    collects into angular quadratic forms of (A, B, C) plus first-order
    remainders carrying r*D and r*E."""
    si, co = np.sin(theta), np.cos(theta)
    s2, c2 = np.sin(2.0 * theta), np.cos(2.0 * theta)
    ck, sk = np.cos(k * theta), np.sin(k * theta)
    av = c.A(x, y)
    bv = c.B(x, y)
    cv = c.C(x, y)
    dv = c.D(x, y)
    ev = c.E(x, y)
    q_rad = av * co**2 + bv * si * co + cv * si**2
    q_mix = (cv - av) * s2 + bv * c2
    q_ang = av * si**2 - bv * si * co + cv * co**2
    q_rot = (av - cv) * s2 - bv * c2
    return (alpha * (alpha + 1.0) * q_rad * ck
            + alpha * k * q_mix * sk
            - k**2 * q_ang * ck
            - alpha * (q_ang + dv * r * co + ev * r * si) * ck
            - k * (q_rot - dv * r * si + ev * r * co) * sk)


def eval_LY_closed_form(c: CoefficientSet, params: BarrierParams, at):
    x, y, r, theta = _polar(params, at)
    return (r ** (-params.alpha - 2.0)
            * _ly_brackets(c, params.k, params.alpha, x, y, r, theta))


@dataclass(frozen=True)
class MarginReport:
    """Sampled minimum of a normalized differential inequality."""

    case: str
    min_margin: float
    argmin_point: tuple
    params: dict
    passed: bool
    details: dict

    def as_dict(self) -> dict:
        return {"case": self.case, "min_margin": self.min_margin,
                "argmin_point": list(self.argmin_point),
                "params": self.params, "passed": self.passed,
                "details": self.details}


def _wedge_cloud(params: BarrierParams, r, n_theta: int):
    r = np.asarray(r, dtype=float)
    theta = np.linspace(params.fp0 / n_theta, params.fp0, n_theta)[:, None]
    rg, tg = np.broadcast_arrays(r, theta)
    return rg, tg, rg * np.cos(tg), rg * np.sin(tg)


def verify_Y_supersolution(c: CoefficientSet, params: BarrierParams,
                           n_r: int = 256, n_theta: int = 64) -> MarginReport:
    """Check -LY >= (lam k^2 / 8) r^(-alpha-2) on a geometric wedge
    cloud, for both signs of the radial exponent.  The reported margin
    is the worst normalized ratio; >= 1 passes."""
    rg, tg, xg, yg = _wedge_cloud(
        params, np.geomspace(params.r0 / 8.0, 8.0 * params.r0, n_r), n_theta)
    floor = c.lam * params.k**2 / 8.0
    margins = {}
    worst = (np.inf, (0.0, 0.0))
    for label, sgn in (("plus", 1.0), ("minus", -1.0)):
        alpha = sgn * abs(params.alpha)
        bracket = _ly_brackets(c, params.k, alpha, xg, yg, rg, tg)
        mar = -bracket / floor          # (-LY) r^(alpha+2) / floor
        i = int(np.argmin(mar))
        margins[label] = float(mar.ravel()[i])
        if margins[label] < worst[0]:
            worst = (margins[label],
                     (float(xg.ravel()[i]), float(yg.ravel()[i])))
    return MarginReport(case="Y-supersolution", min_margin=worst[0],
                        argmin_point=worst[1], params=params.as_dict(),
                        passed=bool(worst[0] >= 1.0),
                        details={"margin_plus": margins["plus"],
                                 "margin_minus": margins["minus"],
                                 "floor": floor})


# ---------------------------------------------------------------------------
# the localized barrier H


def _h_prefactor(params: BarrierParams, weighted) -> float:
    if weighted is None:
        weighted = params.m > 0
    if weighted:
        return params.x0 ** (-(params.m + 2.0 + params.gamma))
    return 1.0


def eval_H(params: BarrierParams, profile: BoundaryProfile, at,
           weighted=None):
    """H = pref * f(x0)^(2+gamma) * ((r/r0)^|a| + (r/r0)^-|a|) cos(k theta).

    The prefactor is x0^-(m+2+gamma) in the weighted variant (default
    whenever m > 0; pass weighted=False to compare conventions).
    Raises ConfigError when the profile disagrees with the one the
    params were built from."""
    if abs(float(profile.eval(params.x0)) - params.f_x0) > 1e-12:
        raise ConfigError("profile does not match barrier params "
                          "(f(x0) differs)")
    _, _, r, theta = _polar(params, at)
    a = abs(params.alpha)
    rr = r / params.r0
    pref = _h_prefactor(params, weighted)
    return (pref * params.f_x0 ** (2.0 + params.gamma)
            * (rr**a + rr**(-a)) * np.cos(params.k * theta))


def _lh_values(c: CoefficientSet, params: BarrierParams, x, y, r, theta,
               weighted=None):
    """LH by linearity: H is a combination of Y at both exponents.

    (r/r0)^(+a) = r0^(+a) * r^(-alpha) with alpha = -a, and
    (r/r0)^(-a) = r0^(-a) * r^(-alpha) with alpha = +a.
    """
    a = abs(params.alpha)
    pref = _h_prefactor(params, weighted) * params.f_x0 ** (2.0 + params.gamma)
    grow = (params.r0 ** (-a) * r ** (a - 2.0)
            * _ly_brackets(c, params.k, -a, x, y, r, theta))
    decay = (params.r0 ** a * r ** (-a - 2.0)
             * _ly_brackets(c, params.k, a, x, y, r, theta))
    return pref * (grow + decay)


def verify_H_bounds(c: CoefficientSet, params: BarrierParams,
                    profile: BoundaryProfile, n_r: int = 256,
                    n_theta: int = 64) -> MarginReport:
    """Sampled verification that H dominates the corrector error near
    x0.  Four normalized quantities are collected over the wedge cloud
    intersected with the domain:

      * "near":     (-LH) / dist^gamma   on |x - x0| <= f(x0),
      * "right":    same ratio            on x - x0 >= f(x0),
      * "left":     same ratio            on x0 - x >= f(x0),
      * weighted m: (-LH) x^(m+2+gamma) / dist^gamma on x <= x0/2,

    with dist the distance to the top point (x0, f(x0)); plus a
    boundary floor min over the arc of H / |x - x0|^(2+gamma) and the
    window sup over |x - x0| < f(x0) of the unweighted H divided by
    f(x0)^(2+gamma).  All case minima must be positive to pass."""
    weighted = params.m > 0
    r_min = params.r0 / 8.0
    if weighted:
        # keep the cloud to the right of the x^-(...) blowup
        r_min = (params.x0 / 64.0) * np.sqrt(1.0 + params.fp0**2)
    radii = np.geomspace(r_min, 8.0 * params.r0, n_r)
    # densify around r0 so the near window |x - x0| <= f(x0) is always hit
    band_lo = max(params.x0 - params.f_x0, r_min)
    band_hi = (params.x0 + params.f_x0) * np.sqrt(1.0 + params.fp0**2)
    radii = np.concatenate([radii, np.linspace(band_lo, band_hi, 49)])
    rg, tg, xg, yg = _wedge_cloud(params, radii, n_theta)
    inside = (xg < 1.0) & (yg < profile.eval(np.clip(xg, 0.0, 1.0)))
    if not inside.any():
        raise ConfigError("wedge sample cloud misses the domain entirely")
    x = xg[inside]
    y = yg[inside]
    r = rg[inside]
    t = tg[inside]
    lh = _lh_values(c, params, x, y, r, t, weighted=False)
    dist = np.hypot(x - params.x0, y - params.f_x0)
    ratio = -lh / dist**params.gamma

    cases = {}
    pts = {}

    def take(label, mask, vals):
        if not mask.any():
            # empty region: min over nothing is vacuously +inf; a thick
            # profile can swallow the left case, f(x0) >= x0
            cases[label] = float("inf")
            pts[label] = None
            return
        i = int(np.argmin(vals[mask]))
        cases[label] = float(vals[mask][i])
        pts[label] = (float(x[mask][i]), float(y[mask][i]))

    take("near", np.abs(x - params.x0) <= params.f_x0, ratio)
    take("right", x - params.x0 >= params.f_x0, ratio)
    take("left", params.x0 - x >= params.f_x0, ratio)
    if weighted:
        wlh = _lh_values(c, params, x, y, r, t, weighted=True)
        wratio = -wlh * x ** (params.m + 2.0 + params.gamma) / dist**params.gamma
        take("far-left", x <= params.x0 / 2.0, wratio)

    # floor of H along the arc, against the Holder modulus of the data
    xa = np.linspace(1e-4, 1.0 - 1e-4, 2049)
    ya = profile.eval(xa)
    keep = np.abs(xa - params.x0) > 1e-9
    ha = eval_H(params, profile, (xa[keep], ya[keep]), weighted=False)
    bfloor = ha / np.abs(xa[keep] - params.x0) ** (2.0 + params.gamma)
    j = int(np.argmin(bfloor))
    cases["boundary"] = float(bfloor[j])
    pts["boundary"] = (float(xa[keep][j]), float(ya[keep][j]))

    # sup of H over the comparison window, scaled by f(x0)^(2+gamma)
    win = np.abs(x - params.x0) < params.f_x0
    if win.any():
        hwin = eval_H(params, profile, (x[win], y[win]), weighted=False)
        window_sup = float(np.max(hwin) / params.f_x0 ** (2.0 + params.gamma))
    else:
        window_sup = float("nan")

    label = min(cases, key=cases.get)
    passed = all(v > 0.0 for v in cases.values())
    return MarginReport(case=label, min_margin=cases[label],
                        argmin_point=pts[label], params=params.as_dict(),
                        passed=bool(passed),
                        details={"cases": cases,
                                 "argmins": {k: None if v is None else list(v)
                                             for k, v in pts.items()},
                                 "window_sup": window_sup,
                                 "n_samples": int(inside.sum())})


# ---------------------------------------------------------------------------
# empirical comparison against a computed solution


@dataclass(frozen=True)
class ComparisonReport:
    """Measured growth constants of u - phi against the corrector."""

    x0: float
    m: int
    window_sup: float
    h_ratio_sup: float
    f_x0: float
    n_window: int

    def as_dict(self) -> dict:
        return {"x0": self.x0, "m": self.m, "window_sup": self.window_sup,
                "h_ratio_sup": self.h_ratio_sup, "f_x0": self.f_x0,
                "n_window": self.n_window}


def comparison_check(u: DiscreteSolution, spec: BVPSpec, x0: float,
                     m: int = 0) -> ComparisonReport:
    """Measure sup |v - P| / f(x0)^(2+gamma) over the comparison window
    |x - x0| < f(x0) (times x0^(m+2+gamma) in the weighted variant),
    where v = u - phi and P the corrector at x0; and the global sup of
    |v - P| / H.  Finite, family-stable values are the numerical
    content of the corner growth estimate."""
    corr = build_corrector(spec, x0)
    params = barrier_params(spec.profile, spec.coefficients, x0, m=m)
    X, Y = u.grid.physical()
    v = u.values - spec.dirichlet(X)
    diff = np.abs(v - corr.value(X, Y))

    f0 = params.f_x0
    win = np.abs(X - x0) < f0
    scale = f0 ** (2.0 + params.gamma)
    if m >= 1:
        scale = scale * x0 ** (-(m + 2.0 + params.gamma))
    window_sup = float(diff[win].max() / scale) if win.any() else float("nan")

    r = np.hypot(X, Y)
    ok = r > 1e-9
    # concave profiles keep every node inside the wedge: f(x) <= f'(0) x
    h = eval_H(params, spec.profile, (X[ok], Y[ok]), weighted=m >= 1)
    h_ratio_sup = float(np.max(diff[ok] / h))
    return ComparisonReport(x0=float(x0), m=int(m), window_sup=window_sup,
                            h_ratio_sup=h_ratio_sup, f_x0=f0,
                            n_window=int(win.sum()))
