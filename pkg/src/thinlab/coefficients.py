"""Operator coefficients and their validation.

The interior operator is A u_xx + B u_xy + C u_yy + D u_x + E u_y; the
bottom boundary carries the oblique direction (G, 1).  A CoefficientSet
bundles the five interior fields with G and the two constants lam (uniform
ellipticity floor) and Lam (regularity ceiling) that every estimate is
phrased in.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError, EllipticityViolation, OutOfDomain
from .functions import (
    Field2D,
    Func1D,
    coeff_from_spec,
    const1d,
    const2d,
    func_from_spec,
    inv_r2d,
    poly2d,
)
from .norms import FieldSample2D, holder_norm_1d, holder_norm_2d

__all__ = [
    "CoefficientSet",
    "EllipticityReport",
    "BoundsReport",
    "validate_ellipticity",
    "validate_bounds",
    "apply_operator",
    "preset",
    "coefficient_set_from_config",
    "extend_constant",
]


@dataclass(frozen=True)
class CoefficientSet:
    """Coefficients of the interior operator plus the oblique slope G.

    weak_drift marks sets whose first-order coefficients are allowed to
    blow up like 1/r at the corners; such sets skip the plain sup bound on
    D, E and are checked against the r-weighted bound instead.
    """

    A: Field2D
    B: Field2D
    C: Field2D
    D: Field2D
    E: Field2D
    G: Func1D
    lam: float
    Lam: float
    gamma: float = 0.5
    weak_drift: bool = False
    name: str = "custom"

    def with_updates(self, **kw) -> "CoefficientSet":
        return replace(self, **kw)


@dataclass(frozen=True)
class EllipticityReport:
    passed: bool
    min_quotient: float
    witness_point: tuple
    witness_direction: tuple

    def as_dict(self) -> dict:
        return {"passed": self.passed, "min_quotient": self.min_quotient,
                "witness_point": list(self.witness_point),
                "witness_direction": list(self.witness_direction)}


def validate_ellipticity(c: CoefficientSet, grid: int = 32, ndirs: int = 64,
                         strict: bool = True) -> EllipticityReport:
    """Scan the Rayleigh quotient of the principal part over the unit square.

    Samples grid x grid points and ndirs unit directions (the quotient is
    even, so half a turn suffices) and compares the minimum against lam.
    Raises EllipticityViolation with the witnessing point and direction
    unless strict is disabled.
    """
    if grid < 16:
        raise ConfigError("ellipticity scan needs at least 16 samples per axis")
    if ndirs < 64:
        raise ConfigError("ellipticity scan needs at least 64 directions")
    xs = np.linspace(0.0, 1.0, grid)
    X, Y = np.meshgrid(xs, xs, indexing="ij")
    theta = np.arange(ndirs) * np.pi / ndirs
    ct, st = np.cos(theta), np.sin(theta)
    a = c.A(X, Y)[..., None]
    b = c.B(X, Y)[..., None]
    cc = c.C(X, Y)[..., None]
    q = a * ct**2 + b * ct * st + cc * st**2
    i, j, k = np.unravel_index(int(np.argmin(q)), q.shape)
    qmin = float(q[i, j, k])
    point = (float(xs[i]), float(xs[j]))
    direction = (float(ct[k]), float(st[k]))
    passed = qmin >= c.lam * (1.0 - 1e-9)
    if not passed and strict:
        raise EllipticityViolation(
            f"principal part dips to {qmin:.6g} < lam={c.lam:g}",
            x=point[0], y=point[1], direction=direction, quotient=qmin)
    return EllipticityReport(passed=passed, min_quotient=qmin,
                             witness_point=point, witness_direction=direction)


@dataclass(frozen=True)
class BoundsReport:
    passed: bool
    details: dict

    def as_dict(self) -> dict:
        return {"passed": self.passed, "details": self.details}


def _field_c_gamma(field: Field2D, gamma: float, n: int = 24) -> float:
    xs, ys = np.meshgrid(np.linspace(0, 1, n + 1), np.linspace(0, 1, n + 1),
                         indexing="ij")
    sample = FieldSample2D(x=xs.ravel(), y=ys.ravel(),
                           derivs={"u": field(xs, ys).ravel()}, h=1.0 / n,
                           shape=xs.shape)
    return holder_norm_2d(sample, 0, gamma).value


def validate_bounds(c: CoefficientSet, n: int = 24) -> BoundsReport:
    """Check the sampled regularity bounds: C^gamma norms of the interior
    coefficients and the C^{2,gamma} norm of G against Lam, plus C >= lam.

    For weak-drift sets D and E are instead required to satisfy the
    r-weighted sup bound r|D|, r|E| <= Lam away from the corner.
    """
    details = {}
    for name in ("A", "B", "C"):
        details[name] = _field_c_gamma(getattr(c, name), c.gamma, n)
    if c.weak_drift:
        xs, ys = np.meshgrid(np.linspace(0, 1, n + 1)[1:],
                             np.linspace(0, 1, n + 1)[1:], indexing="ij")
        r = np.hypot(xs, ys)
        details["r_weighted_D"] = float(np.max(r * np.abs(c.D(xs, ys))))
        details["r_weighted_E"] = float(np.max(r * np.abs(c.E(xs, ys))))
    else:
        details["D"] = _field_c_gamma(c.D, c.gamma, n)
        details["E"] = _field_c_gamma(c.E, c.gamma, n)
    details["G"] = holder_norm_1d(c.G, 2, c.gamma, n=256).value
    xs = np.linspace(0, 1, n + 1)
    X, Y = np.meshgrid(xs, xs, indexing="ij")
    details["min_C"] = float(np.min(c.C(X, Y)))
    passed = (all(v <= c.Lam * (1 + 1e-9) for k, v in details.items()
                  if k != "min_C")
              and details["min_C"] >= c.lam * (1 - 1e-9))
    return BoundsReport(passed=bool(passed), details=details)


def apply_operator(c: CoefficientSet, u: Field2D, at) -> float:
    """Evaluate A u_xx + B u_xy + C u_yy + D u_x + E u_y at one point."""
    x, y = float(at[0]), float(at[1])
    if not (0.0 <= x <= 1.0 and 0.0 <= y <= 1.0):
        raise OutOfDomain(f"point ({x:g}, {y:g}) outside the unit box")
    return float(c.A(x, y) * u.dxx(x, y) + c.B(x, y) * u.dxy(x, y)
                 + c.C(x, y) * u.dyy(x, y) + c.D(x, y) * u.dx(x, y)
                 + c.E(x, y) * u.dy(x, y))


def extend_constant(g: Func1D, lo: float = 0.0, hi: float = 1.0) -> Func1D:
    """Freeze g at its endpoint values outside [lo, hi].

    The oblique slope is only ever used on the unit interval; trajectories
    that overshoot numerically see the frozen value instead of an
    extrapolation.
    """
    def val(x):
        return g.val(np.clip(x, lo, hi))

    def mask(x, d):
        x = np.asarray(x, dtype=float)
        inside = (x >= lo) & (x <= hi)
        return np.where(inside, d(np.clip(x, lo, hi)), 0.0)

    return Func1D(val, lambda x: mask(x, g.d1), lambda x: mask(x, g.d2),
                  name=f"clamp({g.name})")


_PRESETS = {
    "laplace": dict(A=1.0, B=0.0, C=1.0, D=0.0, E=0.0, G=0.0,
                    lam=1.0, Lam=2.0),
    # variable principal part with lower-order drift and a tilted bottom
    "tilted": dict(A={"poly": [[1.0, 0, 0], [0.2, 1, 0]]}, B=0.1, C=1.2,
                   D=0.3, E=0.2, G=0.3, lam=0.9, Lam=3.0),
    # first-order terms singular like 1/r at the left corner
    "corner_drift": dict(A=1.0, B=0.0, C=1.0,
                         D={"kind": "inv_r", "scale": 0.1},
                         E={"kind": "inv_r", "scale": 0.1},
                         G=0.0, lam=1.0, Lam=2.0, weak_drift=True),
}


def preset(name: str) -> CoefficientSet:
    if name not in _PRESETS:
        raise ConfigError(f"unknown coefficient preset {name!r}; "
                          f"have {sorted(_PRESETS)}")
    return coefficient_set_from_config(dict(_PRESETS[name], name=name))


def coefficient_set_from_config(frag: dict) -> CoefficientSet:
    """Build a CoefficientSet from a JSON fragment.

    Either {"preset": name, ...overrides} or a full fragment with keys
    A, B, C, D, E (numbers, {"poly": [[c,i,j],...]}, or {"kind": "inv_r"}),
    G (a 1d function fragment), "lambda", "Lambda", and optional "gamma",
    "weak_drift".
    """
    frag = dict(frag)
    if "preset" in frag:
        pname = frag.pop("preset")
        base = dict(_PRESETS.get(pname) or ())
        if not base:
            raise ConfigError("unknown coefficient preset")
        base.setdefault("name", pname)
        base.update(frag)
        frag = base
    try:
        fields = {k: coeff_from_spec(frag[k], name=k) for k in "ABCDE"}
    except KeyError as e:
        raise ConfigError(f"coefficient fragment missing {e.args[0]!r}")
    g = func_from_spec(frag.get("G", 0.0))
    g = extend_constant(g)
    lam = float(frag.get("lambda", frag.get("lam", 1.0)))
    Lam = float(frag.get("Lambda", frag.get("Lam", 2.0)))
    if lam <= 0 or Lam < lam:
        raise ConfigError("need 0 < lambda <= Lambda")
    return CoefficientSet(**fields, G=g, lam=lam, Lam=Lam,
                          gamma=float(frag.get("gamma", 0.5)),
                          weak_drift=bool(frag.get("weak_drift", False)),
                          name=str(frag.get("name", "custom")))
