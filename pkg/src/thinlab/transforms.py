"""Coordinate changes that reduce the crescent problem to model form.

Three maps act on the domain:

* ``p1_flatten`` slides points along the trajectories of dx/dy = G(x),
  turning the oblique boundary condition on y = 0 into a pure Neumann
  condition in the new frame.
* ``p2_straighten`` rescales the vertical coordinate so that the upper
  arc leaves the left corner as an exact straight cone z = pi_bar * s,
  while staying untouched near the right corner.
* ``p3_reflect`` swaps the two corners so the right one can be handled
  by the same machinery as the left.

Maps are immutable value objects carrying forward/inverse evaluation,
both first-derivative (Jacobian) matrices and the six second derivatives
of the forward components.  ``push_operator`` transports a coefficient
set through a map; ``compose`` chains maps.  All evaluations are pure
and vectorized, so concurrent use is safe.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import ConfigError, DegenerateRatio, NonInvertible
from .functions import Func1D, Field2D, const1d, field_from_callable
from .geometry import BoundaryProfile, profile_from_functions
from .coefficients import CoefficientSet, EllipticityReport

__all__ = [
    "PlaneMap",
    "TransformedProblem",
    "RWeightedReport",
    "identity_map",
    "p1_flatten",
    "p2_straighten",
    "p3_reflect",
    "compose",
    "image_profile",
    "push_operator",
    "pushed_coefficient_values",
    "apply_pipeline",
    "check_rweighted_bounds",
    "chain_rule_residual",
    "transformed_ellipticity",
]

_SECOND_KEYS = ("s_xx", "s_xy", "s_yy", "z_xx", "z_xy", "z_yy")


def _arr(v):
    return np.asarray(v, dtype=float)


def _zeros_like_pair(x, y):
    return np.zeros(np.broadcast(_arr(x), _arr(y)).shape)


@dataclass(frozen=True)
class PlaneMap:
    """A smooth change of plane coordinates (x, y) -> (s, z).

    ``forward_jacobian`` returns ((s_x, s_y), (z_x, z_y)) at source
    points; ``inverse_jacobian`` returns ((x_s, x_z), (y_s, y_z)) at
    image points.  ``second_derivs`` returns a dict with keys s_xx,
    s_xy, s_yy, z_xx, z_xy, z_yy, all with respect to the source
    coordinates.  ``image_profile_builder`` (optional) produces the
    image of an upper-arc profile in closed form; when absent a spline
    fallback is used.
    """

    forward: Callable
    inverse: Callable
    forward_jacobian: Callable
    inverse_jacobian: Callable
    second_derivs: Callable
    tag: str
    image_profile_builder: Optional[Callable] = None
    meta: dict = field(default_factory=dict)


def identity_map() -> PlaneMap:
    def fwd(x, y):
        return _arr(x) + 0.0, _arr(y) + 0.0

    def jac(x, y):
        z = _zeros_like_pair(x, y)
        return (1.0 + z, z), (z, 1.0 + z)

    def sec(x, y):
        z = _zeros_like_pair(x, y)
        return {k: z for k in _SECOND_KEYS}

    return PlaneMap(fwd, fwd, jac, jac, sec, tag="id",
                    image_profile_builder=lambda p: p)


# ---------------------------------------------------------------------------
# p1: flatten the oblique direction


def _advect(g: Func1D, x0, lam0, lam1, step: float):
    """Integrate chi' = g(chi) from lam0 to lam1 together with its
    variational companions, with classical RK4 at sub-``step`` grain.

    Returns (chi, a, j, jx) at lam1 where a = d chi/d x0, j is the
    accumulated integral of g'(chi) and jx the integral of g''(chi) a,
    both taken along the direction of travel.
    """
    x0, lam0, lam1 = np.broadcast_arrays(_arr(x0), _arr(lam0), _arr(lam1))
    span = lam1 - lam0
    widest = float(np.max(np.abs(span))) if span.size else 0.0
    n = max(1, int(np.ceil(widest / step))) if widest > 0 else 1
    h = span / n
    chi = x0.astype(float).copy()
    a = np.ones_like(chi)
    j = np.zeros_like(chi)
    jx = np.zeros_like(chi)

    def rhs(c, av):
        d1 = g.d1(c)
        return g(c), d1 * av, d1, g.d2(c) * av

    for _ in range(n):
        k1c, k1a, k1j, k1x = rhs(chi, a)
        k2c, k2a, k2j, k2x = rhs(chi + 0.5 * h * k1c, a + 0.5 * h * k1a)
        k3c, k3a, k3j, k3x = rhs(chi + 0.5 * h * k2c, a + 0.5 * h * k2a)
        k4c, k4a, k4j, k4x = rhs(chi + h * k3c, a + h * k3a)
        chi = chi + h / 6 * (k1c + 2 * k2c + 2 * k3c + k4c)
        a = a + h / 6 * (k1a + 2 * k2a + 2 * k3a + k4a)
        j = j + h / 6 * (k1j + 2 * k2j + 2 * k3j + k4j)
        jx = jx + h / 6 * (k1x + 2 * k2x + 2 * k3x + k4x)
    return chi, a, j, jx


def p1_flatten(g: Func1D, profile: Optional[BoundaryProfile] = None,
               step: Optional[float] = None) -> PlaneMap:
    """Map (x, y) -> (s, z) where s labels the trajectory of dx/dy = g(x)
    through (x, y) by its foot on y = 0, and z = y.

    The trajectory and the derivatives of s are integrated together
    (variational equations, not finite differences).  The segment y = 0
    is fixed pointwise and exactly.  When ``profile`` is given, the
    induced reparametrization of the upper arc is checked to be strictly
    increasing; NonInvertible otherwise.
    """
    if step is None:
        step = (profile.max_height if profile is not None else 1.0) / 64.0
    if step <= 0:
        raise ConfigError("p1 integrator step must be positive")

    def fwd(x, y):
        chi, _, _, _ = _advect(g, x, y, 0.0, step)
        return chi, _arr(y) + np.zeros_like(chi)

    def inv(s, z):
        chi, _, _, _ = _advect(g, s, 0.0, z, step)
        return chi, _arr(z) + np.zeros_like(chi)

    def fjac(x, y):
        x, y = np.broadcast_arrays(_arr(x), _arr(y))
        _, a, _, _ = _advect(g, x, y, 0.0, step)
        zeros = np.zeros_like(a)
        return (a, -g(x) * a), (zeros, 1.0 + zeros)

    def ijac(s, z):
        s, z = np.broadcast_arrays(_arr(s), _arr(z))
        chi, a, _, _ = _advect(g, s, 0.0, z, step)
        zeros = np.zeros_like(a)
        return (a, g(chi)), (zeros, 1.0 + zeros)

    def sec(x, y):
        x, y = np.broadcast_arrays(_arr(x), _arr(y))
        _, a, _, jx = _advect(g, x, y, 0.0, step)
        # s_x = exp(-K) with K = int_0^y g'(chi); jx accumulates -K_x
        s_xx = jx * a
        s_xy = -(g.d1(x) + g(x) * jx) * a
        s_yy = -g(x) * s_xy
        zeros = np.zeros_like(a)
        return {"s_xx": s_xx, "s_xy": s_xy, "s_yy": s_yy,
                "z_xx": zeros, "z_xy": zeros, "z_yy": zeros}

    meta = {"step": step}
    if profile is not None:
        xs = np.linspace(0.0, 1.0, 513)
        sb, _, _, _ = _advect(g, xs, profile.eval(xs), 0.0, step)
        gaps = np.diff(sb)
        if np.any(gaps <= 0):
            worst = int(np.argmin(gaps))
            raise NonInvertible(
                "upper-arc reparametrization is not increasing near "
                f"x={xs[worst]:.4f}; reduce the profile height or the "
                "oblique slope")
        meta["source_profile"] = profile

    return PlaneMap(fwd, inv, fjac, ijac, sec, tag="p1", meta=meta)


# ---------------------------------------------------------------------------
# p2: straighten the upper arc near the left corner


def _default_cutoff(lo: float = 0.75, hi: float = 13.0 / 16.0) -> Func1D:
    """Quintic smoothstep going 1 -> 0 across [lo, hi]; C^2 at the seams
    with closed-form derivatives."""
    w = hi - lo

    def t_of(x):
        return np.clip((_arr(x) - lo) / w, 0.0, 1.0)

    def val(x):
        t = t_of(x)
        return 1.0 - t**3 * (10.0 - 15.0 * t + 6.0 * t * t)

    def d1(x):
        t = t_of(x)
        return -(30.0 * t * t - 60.0 * t**3 + 30.0 * t**4) / w

    def d2(x):
        t = t_of(x)
        return -(60.0 * t - 180.0 * t * t + 120.0 * t**3) / w**2

    return Func1D(val, d1, d2, name="cutoff")


def p2_straighten(profile: BoundaryProfile,
                  chi: Optional[Func1D] = None) -> PlaneMap:
    """Map (x, y) -> (x, g(x) y) with g = f1/f, where f1 blends the
    straight cone pi_bar * x (active left of 3/4) into f itself (active
    right of 13/16) through the cutoff chi.

    The ratio g must stay inside [1, 1 + c_f]; DegenerateRatio
    otherwise.  The image profile f1 is produced in closed form.
    """
    if chi is None:
        chi = _default_cutoff()
    f, f1d, f2d = profile.eval, profile.eval_d1, profile.eval_d2
    pi_bar = profile.pi_bar
    slope0 = float(profile.eval_d1(0.0))
    if slope0 <= 0:
        raise DegenerateRatio("profile must leave the left corner with "
                              "positive slope")

    # q = pi_bar * x / f and its derivatives; the x=0 limit is filled in
    # and x is floored at 1e-9 in q', q'' (the formulas are 0/0 there).
    def _q(x):
        x = _arr(x)
        at0 = x <= 0
        xs = np.where(at0, 0.5, x)
        return np.where(at0, pi_bar / slope0, pi_bar * xs / f(xs))

    def _q1(x):
        x = np.maximum(_arr(x), 1e-9)
        fv = f(x)
        return pi_bar * (fv - x * f1d(x)) / fv**2

    def _q2(x):
        x = np.maximum(_arr(x), 1e-9)
        fv, d1v = f(x), f1d(x)
        return pi_bar * (-x * f2d(x) * fv - 2.0 * d1v * (fv - x * d1v)) / fv**3

    # g and derivatives, guarded so the f -> 0 end (where chi vanishes)
    # never evaluates q.
    def _masked(base, combine):
        def h(x):
            x = _arr(x)
            c = chi(x)
            live = c > 0
            xq = np.where(live, x, 0.5)
            return np.where(live, combine(xq, c), base)
        return h

    g_val = _masked(1.0, lambda x, c: 1.0 + c * (_q(x) - 1.0))
    g_d1 = _masked(0.0, lambda x, c: chi.d1(x) * (_q(x) - 1.0) + c * _q1(x))
    g_d2 = _masked(0.0, lambda x, c: (chi.d2(x) * (_q(x) - 1.0)
                                      + 2.0 * chi.d1(x) * _q1(x) + c * _q2(x)))

    with np.errstate(divide="ignore", invalid="ignore"):
        band = g_val(np.linspace(1e-6, 1.0, 4097))
    if not np.all(np.isfinite(band)):
        raise DegenerateRatio("rescaling ratio is unbounded; the cutoff "
                              "must vanish where the profile collapses")
    lo, hi = float(np.min(band)), float(np.max(band))
    if lo < 1.0 - 1e-9 or hi > 1.0 + profile.c_f + 1e-9:
        raise DegenerateRatio(
            f"vertical rescaling ratio spans [{lo:.6g}, {hi:.6g}], outside "
            f"[1, 1 + c_f] with c_f={profile.c_f:.6g}")

    def fwd(x, y):
        x, y = np.broadcast_arrays(_arr(x), _arr(y))
        return x + 0.0, g_val(x) * y

    def inv(s, z):
        s, z = np.broadcast_arrays(_arr(s), _arr(z))
        return s + 0.0, z / g_val(s)

    def fjac(x, y):
        x, y = np.broadcast_arrays(_arr(x), _arr(y))
        zeros = np.zeros_like(x)
        return (1.0 + zeros, zeros), (g_d1(x) * y, g_val(x))

    def ijac(s, z):
        s, z = np.broadcast_arrays(_arr(s), _arr(z))
        zeros = np.zeros_like(s)
        gv = g_val(s)
        return (1.0 + zeros, zeros), (-z * g_d1(s) / gv**2, 1.0 / gv)

    def sec(x, y):
        x, y = np.broadcast_arrays(_arr(x), _arr(y))
        zeros = np.zeros_like(x)
        return {"s_xx": zeros, "s_xy": zeros, "s_yy": zeros,
                "z_xx": g_d2(x) * y, "z_xy": g_d1(x), "z_yy": zeros}

    cv = chi  # captured for the closed-form image below

    def builder(_p):
        # the blend is tied to the profile this map was built from; the
        # argument is accepted for interface symmetry only
        def fb(x):
            c = cv(_arr(x))
            return c * pi_bar * _arr(x) + (1.0 - c) * f(_arr(x))

        def fb1(x):
            x = _arr(x)
            c = cv(x)
            return (cv.d1(x) * (pi_bar * x - f(x)) + c * pi_bar
                    + (1.0 - c) * f1d(x))

        def fb2(x):
            x = _arr(x)
            return (cv.d2(x) * (pi_bar * x - f(x))
                    + 2.0 * cv.d1(x) * (pi_bar - f1d(x))
                    + (1.0 - cv(x)) * f2d(x))

        return profile_from_functions(fb, fb1, fb2, gamma=profile.gamma,
                                      kind="straightened")

    return PlaneMap(fwd, inv, fjac, ijac, sec, tag="p2",
                    image_profile_builder=builder,
                    meta={"source_profile": profile,
                          "ratio_range": (lo, hi)})


# ---------------------------------------------------------------------------
# p3: reflect across x = 1/2


def p3_reflect() -> PlaneMap:
    def fwd(x, y):
        x, y = np.broadcast_arrays(_arr(x), _arr(y))
        return 1.0 - x, y + 0.0

    def jac(x, y):
        z = _zeros_like_pair(x, y)
        return (-1.0 + z, z), (z, 1.0 + z)

    def sec(x, y):
        z = _zeros_like_pair(x, y)
        return {k: z for k in _SECOND_KEYS}

    def builder(p: BoundaryProfile) -> BoundaryProfile:
        return profile_from_functions(
            lambda x: p.eval(1.0 - _arr(x)),
            lambda x: -p.eval_d1(1.0 - _arr(x)),
            lambda x: p.eval_d2(1.0 - _arr(x)),
            gamma=p.gamma, kind="reflected")

    return PlaneMap(fwd, fwd, jac, jac, sec, tag="p3",
                    image_profile_builder=builder)


# ---------------------------------------------------------------------------
# composition and images


def compose(outer: PlaneMap, inner: PlaneMap) -> PlaneMap:
    """The map outer(inner(.)), with Jacobians chained and the forward
    second derivatives combined by the second-order chain rule."""

    def fwd(x, y):
        return outer.forward(*inner.forward(x, y))

    def inv(s, z):
        return inner.inverse(*outer.inverse(s, z))

    def fjac(x, y):
        s1, z1 = inner.forward(x, y)
        (b11, b12), (b21, b22) = inner.forward_jacobian(x, y)
        (a11, a12), (a21, a22) = outer.forward_jacobian(s1, z1)
        return ((a11 * b11 + a12 * b21, a11 * b12 + a12 * b22),
                (a21 * b11 + a22 * b21, a21 * b12 + a22 * b22))

    def ijac(s, z):
        s1, z1 = outer.inverse(s, z)
        (o11, o12), (o21, o22) = outer.inverse_jacobian(s, z)
        (i11, i12), (i21, i22) = inner.inverse_jacobian(s1, z1)
        return ((i11 * o11 + i12 * o21, i11 * o12 + i12 * o22),
                (i21 * o11 + i22 * o21, i21 * o12 + i22 * o22))

    def sec(x, y):
        s1, z1 = inner.forward(x, y)
        (b11, b12), (b21, b22) = inner.forward_jacobian(x, y)
        (a11, a12), (a21, a22) = outer.forward_jacobian(s1, z1)
        si = inner.second_derivs(x, y)
        so = outer.second_derivs(s1, z1)
        out = {}
        for name, lead1, lead2 in (("s", a11, a12), ("z", a21, a22)):
            q11 = so[f"{name}_xx"]
            q12 = so[f"{name}_xy"]
            q22 = so[f"{name}_yy"]
            out[f"{name}_xx"] = (q11 * b11**2 + 2 * q12 * b11 * b21
                                 + q22 * b21**2
                                 + lead1 * si["s_xx"] + lead2 * si["z_xx"])
            out[f"{name}_xy"] = (q11 * b11 * b12 + q12 * (b11 * b22 + b12 * b21)
                                 + q22 * b21 * b22
                                 + lead1 * si["s_xy"] + lead2 * si["z_xy"])
            out[f"{name}_yy"] = (q11 * b12**2 + 2 * q12 * b12 * b22
                                 + q22 * b22**2
                                 + lead1 * si["s_yy"] + lead2 * si["z_yy"])
        return out

    builder = None
    if (inner.image_profile_builder is not None
            and outer.image_profile_builder is not None):
        def builder(p):
            return outer.image_profile_builder(inner.image_profile_builder(p))

    pipeline = (inner.meta.get("pipeline", [inner.tag])
                + outer.meta.get("pipeline", [outer.tag]))
    meta = {"pipeline": pipeline}
    if "source_profile" in inner.meta:
        meta["source_profile"] = inner.meta["source_profile"]
    return PlaneMap(fwd, inv, fjac, ijac, sec,
                    tag=f"{outer.tag}*{inner.tag}",
                    image_profile_builder=builder, meta=meta)


def image_profile(m: PlaneMap, p: BoundaryProfile,
                  knots: int = 257) -> BoundaryProfile:
    """The upper arc of the image domain as a BoundaryProfile.

    Uses the map's closed-form builder when it has one, otherwise fits a
    cubic spline through the forward images of arc samples.
    """
    if m.image_profile_builder is not None:
        return m.image_profile_builder(p)
    xs = np.linspace(0.0, 1.0, knots)
    sk, zk = m.forward(xs, p.eval(xs))
    if np.any(np.diff(sk) <= 0):
        raise NonInvertible("image of the upper arc is not a graph over "
                            "the new horizontal axis")
    sp = CubicSpline(sk, zk)
    return profile_from_functions(sp, sp.derivative(1), sp.derivative(2),
                                  gamma=p.gamma, kind="mapped")


# ---------------------------------------------------------------------------
# pushing the operator forward


def pushed_coefficient_values(c: CoefficientSet, m: PlaneMap, x, y) -> dict:
    """Values of the transformed coefficients at the image of (x, y),
    computed directly from the forward derivatives (no inversion)."""
    (sx, sy), (zx, zy) = m.forward_jacobian(x, y)
    sec = m.second_derivs(x, y)
    av = c.A(x, y)
    bv = c.B(x, y)
    cv = c.C(x, y)
    dv = c.D(x, y)
    ev = c.E(x, y)
    return {
        "A": av * sx**2 + bv * sx * sy + cv * sy**2,
        "B": 2 * av * sx * zx + bv * (sx * zy + sy * zx) + 2 * cv * sy * zy,
        "C": av * zx**2 + bv * zx * zy + cv * zy**2,
        "D": (av * sec["s_xx"] + bv * sec["s_xy"] + cv * sec["s_yy"]
              + dv * sx + ev * sy),
        "E": (av * sec["z_xx"] + bv * sec["z_xy"] + cv * sec["z_yy"]
              + dv * zx + ev * zy),
    }


def _pushed_field(c: CoefficientSet, m: PlaneMap, key: str) -> Field2D:
    def val(s, z):
        x, y = m.inverse(s, z)
        return pushed_coefficient_values(c, m, x, y)[key]
    return field_from_callable(val, name=f"{key}1")


def _transform_oblique_slope(c: CoefficientSet, m: PlaneMap) -> Func1D:
    """The oblique slope in image coordinates, from the direction
    (G, 1) pushed through the Jacobian on the segment y = 0."""
    xs = np.linspace(0.0, 1.0, 513)
    ys = np.zeros_like(xs)
    (sx, sy), (zx, zy) = m.forward_jacobian(xs, ys)
    gv = c.G(xs)
    den = zy + gv * zx
    if float(np.min(np.abs(den))) < 1e-8:
        raise NonInvertible("oblique direction becomes tangential under "
                            "the map")
    vals = (sy + gv * sx) / den
    s_at, _ = m.forward(xs, ys)
    order = np.argsort(s_at)
    s_at, vals = s_at[order], vals[order]
    if np.allclose(vals, vals[0], rtol=0.0, atol=1e-14):
        return const1d(float(vals[0]))
    sp = CubicSpline(s_at, vals)
    return Func1D(sp, sp.derivative(1), sp.derivative(2), name="G1")


@dataclass(frozen=True)
class TransformedProblem:
    """A coefficient set and upper-arc profile carried through a map."""
    coefficients: CoefficientSet
    profile: BoundaryProfile
    map: PlaneMap
    tag: str
    source_c_f: float


def push_operator(c: CoefficientSet, m: PlaneMap,
                  profile: Optional[BoundaryProfile] = None
                  ) -> TransformedProblem:
    """Transport the operator and oblique condition through m.

    The new principal coefficients keep ellipticity with constant at
    least lam/2 for the admissible maps, so the pushed set is tagged
    with that lower bound; the upper bound is re-sampled.  Drift terms
    pick up second derivatives of the map and may grow like 1/r at the
    corners, hence weak_drift on the result.
    """
    if profile is None:
        profile = m.meta.get("source_profile")
    if profile is None:
        raise ConfigError("push_operator needs the source profile (pass it "
                          "explicitly or build the map with one)")
    image = image_profile(m, profile)
    fields = {k: _pushed_field(c, m, k) for k in ("A", "B", "C", "D", "E")}
    g1 = _transform_oblique_slope(c, m)

    xs = np.linspace(1e-3, 1.0 - 1e-3, 65)
    eta = np.linspace(0.0, 1.0, 9)[:, None]
    xg = np.broadcast_to(xs, (9, 65))
    yg = eta * profile.eval(xs)
    vals = pushed_coefficient_values(c, m, xg, yg)
    top = max(float(np.max(np.abs(vals[k]))) for k in ("A", "B", "C"))
    lam1 = c.lam / 2.0

    newset = CoefficientSet(
        A=fields["A"], B=fields["B"], C=fields["C"],
        D=fields["D"], E=fields["E"], G=g1,
        lam=lam1, Lam=max(c.Lam, 1.02 * top), gamma=c.gamma,
        weak_drift=True, name=f"{c.name or 'set'}|{m.tag}")
    tag = "composite" if "*" in m.tag else m.tag
    return TransformedProblem(coefficients=newset, profile=image, map=m,
                              tag=tag, source_c_f=profile.c_f)


def apply_pipeline(c: CoefficientSet, profile: BoundaryProfile,
                   steps) -> TransformedProblem:
    """Apply a sequence of named maps ("p1" | "p2" | "p3"), each built
    from the problem produced by the previous one, and return the final
    TransformedProblem (its .map is the full composite)."""
    cur_c, cur_p = c, profile
    total = None
    source_cf = profile.c_f
    for name in steps:
        if name == "p1":
            m = p1_flatten(cur_c.G, cur_p)
        elif name == "p2":
            m = p2_straighten(cur_p)
        elif name == "p3":
            m = p3_reflect()
        else:
            raise ConfigError(f"unknown transform step {name!r}; expected "
                              "p1, p2 or p3")
        t = push_operator(cur_c, m, cur_p)
        cur_c, cur_p = t.coefficients, t.profile
        total = m if total is None else compose(m, total)
    if total is None:
        total = identity_map()
        t = push_operator(c, total, profile)
        cur_c, cur_p = t.coefficients, t.profile
    tag = "composite" if "*" in total.tag else total.tag
    return TransformedProblem(coefficients=cur_c, profile=cur_p, map=total,
                              tag=tag, source_c_f=source_cf)


# ---------------------------------------------------------------------------
# audits


@dataclass(frozen=True)
class RWeightedReport:
    """Corner-weighted size of the transformed drift terms."""
    sup_rD: float
    sup_rE: float
    bound: float
    c_bar: float
    source_c_f: float
    passed: bool

    @property
    def margin(self) -> float:
        return self.bound - max(self.sup_rD, self.sup_rE)

    def as_dict(self) -> dict:
        return {"sup_rD": self.sup_rD, "sup_rE": self.sup_rE,
                "bound": self.bound, "c_bar": self.c_bar,
                "source_c_f": self.source_c_f, "passed": self.passed,
                "margin": self.margin}


def _image_samples(t: TransformedProblem, n_s: int, n_eta: int):
    ss = np.geomspace(1e-3, 1.0 - 1e-3, n_s)
    eta = np.linspace(0.0, 1.0, n_eta)[:, None]
    sg = np.broadcast_to(ss, (n_eta, n_s))
    zg = eta * t.profile.eval(ss)
    return sg, zg


def check_rweighted_bounds(t: TransformedProblem, c_bar: float = 10.0,
                           n_s: int = 192, n_eta: int = 24
                           ) -> RWeightedReport:
    """Sample sup of sqrt(s^2+z^2)|D1| and sqrt(s^2+z^2)|E1| over the
    image domain and compare against c_bar * (1 + c_f)^2 with the c_f of
    the source profile.  Report-valued; never raises on failure."""
    sg, zg = _image_samples(t, n_s, n_eta)
    r = np.hypot(sg, zg)
    sup_rd = float(np.max(r * np.abs(t.coefficients.D(sg, zg))))
    sup_re = float(np.max(r * np.abs(t.coefficients.E(sg, zg))))
    bound = c_bar * (1.0 + t.source_c_f) ** 2
    return RWeightedReport(sup_rD=sup_rd, sup_rE=sup_re, bound=bound,
                           c_bar=c_bar, source_c_f=t.source_c_f,
                           passed=max(sup_rd, sup_re) <= bound)


def transformed_ellipticity(t: TransformedProblem, n_s: int = 48,
                            n_eta: int = 12, ndirs: int = 64
                            ) -> EllipticityReport:
    """Scan the Rayleigh quotient of the pushed principal part over the
    image domain against the halved ellipticity constant."""
    sg, zg = _image_samples(t, n_s, n_eta)
    av = t.coefficients.A(sg, zg).ravel()
    bv = t.coefficients.B(sg, zg).ravel()
    cv = t.coefficients.C(sg, zg).ravel()
    theta = np.pi * np.arange(ndirs) / ndirs
    co, si = np.cos(theta), np.sin(theta)
    quot = (av[:, None] * co**2 + bv[:, None] * co * si
            + cv[:, None] * si**2)
    flat = int(np.argmin(quot))
    ip, idir = divmod(flat, ndirs)
    minq = float(quot.ravel()[flat])
    return EllipticityReport(
        passed=minq >= t.coefficients.lam,
        min_quotient=minq,
        witness_point=(float(sg.ravel()[ip]), float(zg.ravel()[ip])),
        witness_direction=(float(co[idir]), float(si[idir])))


def chain_rule_residual(c: CoefficientSet, m: PlaneMap, u: Field2D,
                        x, y, h: float = 8e-3) -> float:
    """Max over the given points of |L1(u o inverse) - L u|, with the
    image-side derivatives taken by Richardson-extrapolated fourth-order
    central differences of the composed field (sixth order overall).

    The default step is deliberately coarse: the pushed coefficients
    reach ~1e2 on stretched maps, so rounding noise eps/h^2 dominates
    truncation long before h gets small.  A small value certifies that
    the pushed coefficients really are the chain-rule transport of the
    originals.
    """
    x, y = np.broadcast_arrays(_arr(x), _arr(y))
    s, z = m.forward(x, y)

    def v(ss, zz):
        xs, ys = m.inverse(ss, zz)
        return u(xs, ys)

    off = (-2, -1, 1, 2)
    wgt = (1.0, -8.0, 8.0, -1.0)

    def stencil(hh):
        vc = v(s, z)
        line_s = [v(s + k * hh, z) for k in off]
        line_z = [v(s, z + k * hh) for k in off]
        vs = sum(w * q for w, q in zip(wgt, line_s)) / (12 * hh)
        vz = sum(w * q for w, q in zip(wgt, line_z)) / (12 * hh)
        vss = (-line_s[0] + 16 * line_s[1] - 30 * vc + 16 * line_s[2]
               - line_s[3]) / (12 * hh**2)
        vzz = (-line_z[0] + 16 * line_z[1] - 30 * vc + 16 * line_z[2]
               - line_z[3]) / (12 * hh**2)
        vsz = sum(wi * wj * v(s + ki * hh, z + kj * hh)
                  for ki, wi in zip(off, wgt)
                  for kj, wj in zip(off, wgt)) / (144 * hh**2)
        return [vs, vz, vss, vsz, vzz]

    coarse, fine = stencil(h), stencil(h / 2)
    vs, vz, vss, vsz, vzz = [(16 * b - a) / 15 for a, b in zip(coarse, fine)]
    cv = pushed_coefficient_values(c, m, x, y)
    lhs = (cv["A"] * vss + cv["B"] * vsz + cv["C"] * vzz
           + cv["D"] * vs + cv["E"] * vz)
    rhs = (c.A(x, y) * u.dxx(x, y) + c.B(x, y) * u.dxy(x, y)
           + c.C(x, y) * u.dyy(x, y) + c.D(x, y) * u.dx(x, y)
           + c.E(x, y) * u.dy(x, y))
    return float(np.max(np.abs(lhs - rhs)))
