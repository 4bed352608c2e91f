"""Crescent domains pinched to zero width at x = 0 and x = 1.

A domain is the region between the x-axis and a positive boundary profile f
with f(0) = f(1) = 0.  Two constants control everything downstream: the
flatness floor pi_const = inf f(x)/sin(pi x) and the size pi_bar = the C^2
norm of f (max convention); their ratio c_f is the shape constant that all
collapse estimates are allowed to depend on.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Callable

import numpy as np

from .errors import ConfigError, EndpointViolation, NonPositiveProfile
from .functions import Func1D

__all__ = [
    "BoundaryProfile",
    "CrescentDomain",
    "SmallnessReport",
    "make_profile",
    "profile_from_functions",
    "validate_smallness",
]

_ENDPOINT_TOL = 1e-12


@dataclass(frozen=True)
class BoundaryProfile:
    """A C^2 boundary profile with its non-degeneracy constants.

    eval/eval_d1/eval_d2 are vectorized closed forms.  pi_const is the
    infimum of f(x)/sin(pi x), pi_bar the C^2 norm (max of the three sup
    norms), c_f their ratio, sigma the discrete C^{2,gamma} norm, gamma the
    Holder exponent the norms are measured in.  Immutable; safe to share.
    """

    eval: Callable[[np.ndarray], np.ndarray]
    eval_d1: Callable[[np.ndarray], np.ndarray]
    eval_d2: Callable[[np.ndarray], np.ndarray]
    sigma: float
    pi_const: float
    pi_bar: float
    c_f: float
    gamma: float
    kind: str = "custom"
    params: dict = dc_field(default_factory=dict)

    def __call__(self, x):
        return self.eval(np.asarray(x, dtype=float))

    def as_func(self) -> Func1D:
        return Func1D(self.eval, self.eval_d1, self.eval_d2, name=self.kind)

    @property
    def max_height(self) -> float:
        xs = np.linspace(0.0, 1.0, 2049)
        return float(self.eval(xs).max())


@dataclass(frozen=True)
class CrescentDomain:
    """The open region 0 < x < 1, 0 < y < f(x) with its two boundary arcs."""

    profile: BoundaryProfile

    def contains(self, x, y) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return (x > 0) & (x < 1) & (y > 0) & (y < self.profile.eval(x))

    def on_upper_arc(self, x, y, tol: float = 1e-12) -> np.ndarray:
        """Points on the graph y = f(x), the Dirichlet part."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return (x >= 0) & (x <= 1) & (np.abs(y - self.profile.eval(x)) <= tol)

    def on_bottom(self, x, y, tol: float = 1e-12) -> np.ndarray:
        """Points on the open segment y = 0, 0 < x < 1, the oblique part."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return (x > 0) & (x < 1) & (np.abs(y) <= tol)


# ---------------------------------------------------------------------------
# profile shapes

def _corner_h(x):
    """Identity on [0, 3/4], quintic downturn to h(1) = 0, C^2 throughout.

    The downturn x + t^3(-384 + 2048 t - 3072 t^2), t = x - 3/4, matches
    value/slope/curvature at the junction, lands at zero with slope -3,
    and stays strictly below the line y = x on (3/4, 1].
    """
    x = np.asarray(x, dtype=float)
    t = np.maximum(x - 0.75, 0.0)
    return x + t**3 * (-384.0 + t * (2048.0 - 3072.0 * t))


def _corner_h1(x):
    x = np.asarray(x, dtype=float)
    t = np.maximum(x - 0.75, 0.0)
    return 1.0 + t**2 * (-1152.0 + t * (8192.0 - 15360.0 * t))


def _corner_h2(x):
    x = np.asarray(x, dtype=float)
    t = np.maximum(x - 0.75, 0.0)
    return t * (-2304.0 + t * (24576.0 - 61440.0 * t))


def _shape_functions(kind: str, params: dict):
    if kind == "sine":
        w = np.pi * float(params.get("harmonic", 1))
        return (lambda x: np.sin(w * x),
                lambda x: w * np.cos(w * x),
                lambda x: -w * w * np.sin(w * x))
    if kind == "poly":
        coeffs = params.get("coeffs", [0.0, 1.0, -1.0])
        p = np.polynomial.Polynomial(np.asarray(coeffs, dtype=float))
        dp = p.deriv()
        ddp = dp.deriv()
        return p, dp, ddp
    if kind == "corner":
        return _corner_h, _corner_h1, _corner_h2
    if kind == "table":
        from scipy.interpolate import CubicSpline
        xk = np.asarray(params["x"], dtype=float)
        yk = np.asarray(params["y"], dtype=float)
        if xk[0] != 0.0 or xk[-1] != 1.0:
            raise ConfigError("table profile knots must span [0, 1]")
        s = CubicSpline(xk, yk)
        return s, s.derivative(1), s.derivative(2)
    raise ConfigError(f"unknown profile kind: {kind!r}")


def _infimum_over_sine(f, d1) -> float:
    """inf of f(x)/sin(pi x): dense minima on two grids, one extrapolation
    step, and the explicit endpoint limits (the quotient is 0/0 there)."""
    mins = []
    for n in (4096, 8192):
        x = np.arange(1, n) / n
        mins.append(float(np.min(f(x) / np.sin(np.pi * x))))
    extrap = mins[1] + (mins[1] - mins[0]) / 3.0
    lim0 = float(d1(0.0)) / np.pi
    lim1 = -float(d1(1.0)) / np.pi
    return min(extrap, mins[1], lim0, lim1)


def make_profile(spec: dict, gamma: float = 0.5) -> BoundaryProfile:
    """Build a boundary profile from a descriptor.

    spec is {"kind": "sine"|"poly"|"corner"|"table", "amplitude": a,
    "params": {...}}; amplitude scales the unit shape (for "corner" it is
    the slope at the left end).  Raises NonPositiveProfile if the shape dips
    to zero or below strictly inside (0, 1), EndpointViolation if it fails
    to vanish at the ends.
    """
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigError(f"bad profile descriptor: {spec!r}")
    unknown = set(spec) - {"kind", "amplitude", "params", "gamma"}
    if unknown:
        raise ConfigError(f"unknown profile keys {sorted(unknown)}; "
                          "expected kind/amplitude/params/gamma")
    kind = spec["kind"]
    amp = float(spec.get("amplitude", 1.0))
    params = dict(spec.get("params", {}))
    gamma = float(spec.get("gamma", gamma))
    if not np.isfinite(amp) or amp <= 0:
        raise ConfigError("profile amplitude must be finite and positive")
    h, h1, h2 = _shape_functions(kind, params)

    f = lambda x: amp * np.asarray(h(x), dtype=float)
    f1 = lambda x: amp * np.asarray(h1(x), dtype=float)
    f2 = lambda x: amp * np.asarray(h2(x), dtype=float)
    return profile_from_functions(f, f1, f2, gamma=gamma, kind=kind,
                                  params={"amplitude": amp, **params})


def profile_from_functions(f, f1, f2, gamma: float = 0.5,
                           kind: str = "custom",
                           params: dict = None) -> BoundaryProfile:
    """Validate a (value, slope, curvature) triple and compute the profile
    constants.  Used both by make_profile and for images of the crescent
    under coordinate changes."""
    for xe in (0.0, 1.0):
        ve = float(f(xe))
        if abs(ve) > _ENDPOINT_TOL:
            raise EndpointViolation(
                f"profile must vanish at x={xe:g}, got {ve:.3e}")
    xs = np.arange(1, 4096) / 4096.0
    vals = f(xs)
    if np.any(vals <= 0):
        bad = float(xs[int(np.argmin(vals))])
        raise NonPositiveProfile(
            f"profile is not strictly positive inside (0,1): f({bad:g}) = "
            f"{float(vals.min()):.3e}")

    pi_const = _infimum_over_sine(f, f1)
    if not pi_const > 0:
        raise NonPositiveProfile(
            "profile is not bounded below by a multiple of sin(pi x); "
            "a corner slope degenerates")
    grid = np.linspace(0.0, 1.0, 4097)
    pi_bar = float(max(np.abs(f(grid)).max(), np.abs(f1(grid)).max(),
                       np.abs(f2(grid)).max()))
    c_f = pi_bar / pi_const

    from .norms import holder_norm_1d
    sigma = holder_norm_1d(Func1D(f, f1, f2), 2, gamma, n=1024).value

    return BoundaryProfile(eval=f, eval_d1=f1, eval_d2=f2, sigma=sigma,
                           pi_const=pi_const, pi_bar=pi_bar, c_f=c_f,
                           gamma=gamma, kind=kind, params=dict(params or {}))


@dataclass(frozen=True)
class SmallnessReport:
    passed: bool
    norm: float
    bound: float
    constants_finite: bool

    def as_dict(self) -> dict:
        return {"passed": self.passed, "norm": self.norm, "bound": self.bound,
                "constants_finite": self.constants_finite}


def validate_smallness(p: BoundaryProfile, sigma0: float) -> SmallnessReport:
    """Check the standing smallness assumption ||f||_{C^{2,gamma}} <= sigma0
    and that the shape constants the theory depends on are finite."""
    if sigma0 <= 0:
        raise ConfigError("sigma0 must be positive")
    from .norms import holder_norm_1d
    norm = holder_norm_1d(p.as_func(), 2, p.gamma, n=1024).value
    finite = np.isfinite(p.c_f) and p.pi_const > 0
    return SmallnessReport(passed=bool(norm <= sigma0 and finite),
                           norm=float(norm), bound=float(sigma0),
                           constants_finite=bool(finite))
