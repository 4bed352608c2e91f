"""Closed-form scalar functions with exact derivatives.

Boundary data, oblique coefficients and manufactured fields are all built
from a small family of closed forms (polynomials, harmonics, power cusps),
so that first and second derivatives are available analytically wherever a
norm or a collapse state needs them.  Everything evaluates vectorized on
numpy arrays.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConfigError

__all__ = [
    "Func1D",
    "Field2D",
    "const1d",
    "poly1d",
    "trig1d",
    "cusp1d",
    "power1d",
    "func_from_spec",
    "const2d",
    "poly2d",
    "inv_r2d",
    "field_from_callable",
    "coeff_from_spec",
]


@dataclass(frozen=True)
class Func1D:
    """A scalar function of one variable with its first two derivatives."""

    val: Callable[[np.ndarray], np.ndarray]
    d1: Callable[[np.ndarray], np.ndarray]
    d2: Callable[[np.ndarray], np.ndarray]
    name: str = "f"
    spec: dict = field(default_factory=dict)

    def __call__(self, x):
        return self.val(np.asarray(x, dtype=float))

    def scaled(self, c: float) -> "Func1D":
        return Func1D(
            lambda x: c * self.val(x),
            lambda x: c * self.d1(x),
            lambda x: c * self.d2(x),
            name=f"{c}*{self.name}",
        )

    def plus(self, other: "Func1D") -> "Func1D":
        return Func1D(
            lambda x: self.val(x) + other.val(x),
            lambda x: self.d1(x) + other.d1(x),
            lambda x: self.d2(x) + other.d2(x),
            name=f"{self.name}+{other.name}",
        )


@dataclass(frozen=True)
class Field2D:
    """A scalar field on the plane with derivatives through second order."""

    val: Callable[[np.ndarray, np.ndarray], np.ndarray]
    dx: Callable[[np.ndarray, np.ndarray], np.ndarray]
    dy: Callable[[np.ndarray, np.ndarray], np.ndarray]
    dxx: Callable[[np.ndarray, np.ndarray], np.ndarray]
    dxy: Callable[[np.ndarray, np.ndarray], np.ndarray]
    dyy: Callable[[np.ndarray, np.ndarray], np.ndarray]
    name: str = "u"

    def __call__(self, x, y):
        return self.val(np.asarray(x, dtype=float), np.asarray(y, dtype=float))


def _asarr(x):
    return np.asarray(x, dtype=float)


def const1d(c: float, name=None) -> Func1D:
    c = float(c)
    return Func1D(
        lambda x: np.full_like(_asarr(x), c),
        lambda x: np.zeros_like(_asarr(x)),
        lambda x: np.zeros_like(_asarr(x)),
        name=name or f"const({c})",
        spec={"kind": "const", "value": c},
    )


def poly1d(coeffs, name=None) -> Func1D:
    """Polynomial sum(c_k x^k); coefficients given lowest order first."""
    c = np.asarray(coeffs, dtype=float)
    p = np.polynomial.Polynomial(c)
    dp = p.deriv()
    ddp = dp.deriv()
    return Func1D(
        lambda x: p(_asarr(x)),
        lambda x: dp(_asarr(x)),
        lambda x: ddp(_asarr(x)),
        name=name or "poly",
        spec={"kind": "poly", "coeffs": list(map(float, c))},
    )


def trig1d(cos_amps=(), sin_amps=(), name=None) -> Func1D:
    """sum_k a_k cos(k pi x) + b_k sin(k pi x), k starting at 1."""
    ca = np.asarray(cos_amps, dtype=float)
    sa = np.asarray(sin_amps, dtype=float)
    kc = np.arange(1, len(ca) + 1) * np.pi
    ks = np.arange(1, len(sa) + 1) * np.pi

    def val(x):
        x = _asarr(x)[..., None]
        out = np.zeros(x.shape[:-1])
        if len(ca):
            out = out + (ca * np.cos(kc * x)).sum(-1)
        if len(sa):
            out = out + (sa * np.sin(ks * x)).sum(-1)
        return out

    def d1(x):
        x = _asarr(x)[..., None]
        out = np.zeros(x.shape[:-1])
        if len(ca):
            out = out - (ca * kc * np.sin(kc * x)).sum(-1)
        if len(sa):
            out = out + (sa * ks * np.cos(ks * x)).sum(-1)
        return out

    def d2(x):
        x = _asarr(x)[..., None]
        out = np.zeros(x.shape[:-1])
        if len(ca):
            out = out - (ca * kc**2 * np.cos(kc * x)).sum(-1)
        if len(sa):
            out = out - (sa * ks**2 * np.sin(ks * x)).sum(-1)
        return out

    return Func1D(val, d1, d2, name=name or "trig",
                  spec={"kind": "trig", "cos": list(map(float, ca)),
                        "sin": list(map(float, sa))})


def cusp1d(points, weights, exponent, name=None) -> Func1D:
    """sum_j w_j |x - p_j|^e.  For e in (2,3) the second derivative has an
    exact Holder cusp of order e - 2 at each anchor point."""
    pts = np.asarray(points, dtype=float)
    wts = np.asarray(weights, dtype=float)
    e = float(exponent)
    if e <= 2.0:
        raise ConfigError("cusp exponent must exceed 2 so the function stays C^2")

    def val(x):
        x = _asarr(x)[..., None]
        return (wts * np.abs(x - pts) ** e).sum(-1)

    def d1(x):
        x = _asarr(x)[..., None]
        return (wts * e * np.abs(x - pts) ** (e - 1) * np.sign(x - pts)).sum(-1)

    def d2(x):
        x = _asarr(x)[..., None]
        return (wts * e * (e - 1) * np.abs(x - pts) ** (e - 2)).sum(-1)

    return Func1D(val, d1, d2, name=name or "cusp",
                  spec={"kind": "cusp", "points": list(map(float, pts)),
                        "weights": list(map(float, wts)), "exponent": e})


def power1d(p: float, scale: float = 1.0, name=None) -> Func1D:
    """scale * x^p with exact derivatives (p may be negative)."""
    p = float(p)
    s = float(scale)
    return Func1D(
        lambda x: s * _asarr(x) ** p,
        lambda x: s * p * _asarr(x) ** (p - 1),
        lambda x: s * p * (p - 1) * _asarr(x) ** (p - 2),
        name=name or f"x^{p}",
        spec={"kind": "power", "p": p, "scale": s},
    )


def func_from_spec(spec) -> Func1D:
    """Build a Func1D from a JSON-style fragment (number means constant)."""
    if isinstance(spec, (int, float)):
        return const1d(spec)
    if isinstance(spec, Func1D):
        return spec
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigError(f"bad 1d function spec: {spec!r}")
    kind = spec["kind"]
    if kind == "const":
        return const1d(spec["value"])
    if kind == "poly":
        return poly1d(spec["coeffs"])
    if kind == "trig":
        return trig1d(spec.get("cos", ()), spec.get("sin", ()))
    if kind == "cusp":
        base = cusp1d(spec["points"], spec["weights"], spec["exponent"])
        if "background" in spec:
            return base.plus(func_from_spec(spec["background"]))
        return base
    if kind == "power":
        return power1d(spec["p"], spec.get("scale", 1.0))
    raise ConfigError(f"unknown 1d function kind: {kind!r}")


# ---------------------------------------------------------------------------
# plane fields


def const2d(c: float, name=None) -> Field2D:
    c = float(c)
    z = lambda x, y: np.zeros(np.broadcast(x, y).shape)
    return Field2D(lambda x, y: np.full(np.broadcast(x, y).shape, c),
                   z, z, z, z, z, name=name or f"const({c})")


def poly2d(terms, name=None) -> Field2D:
    """sum of c * x^i * y^j terms; each term is (c, i, j)."""
    terms = [(float(c), int(i), int(j)) for c, i, j in terms]

    def mk(di, dj):
        def g(x, y):
            x = _asarr(x)
            y = _asarr(y)
            out = np.zeros(np.broadcast(x, y).shape)
            for c, i, j in terms:
                if i < di or j < dj:
                    continue
                cc = c
                for q in range(di):
                    cc *= i - q
                for q in range(dj):
                    cc *= j - q
                out = out + cc * x ** (i - di) * y ** (j - dj)
            return out
        return g

    return Field2D(mk(0, 0), mk(1, 0), mk(0, 1), mk(2, 0), mk(1, 1), mk(0, 2),
                   name=name or "poly2d")


def inv_r2d(scale: float = 1.0, name=None) -> Field2D:
    """scale / sqrt(x^2 + y^2): drift coefficient with a corner singularity.

    Only the value slot is meaningful; derivative slots evaluate the exact
    forms but are unused by the operator assembly.
    """
    s = float(scale)
    r = lambda x, y: np.hypot(_asarr(x), _asarr(y))
    return Field2D(
        lambda x, y: s / r(x, y),
        lambda x, y: -s * _asarr(x) / r(x, y) ** 3,
        lambda x, y: -s * _asarr(y) / r(x, y) ** 3,
        lambda x, y: s * (2 * _asarr(x) ** 2 - _asarr(y) ** 2) / r(x, y) ** 5,
        lambda x, y: 3 * s * _asarr(x) * _asarr(y) / r(x, y) ** 5,
        lambda x, y: s * (2 * _asarr(y) ** 2 - _asarr(x) ** 2) / r(x, y) ** 5,
        name=name or "inv_r",
    )


def field_from_callable(fn, name: str = "field", h: float = 1e-6) -> Field2D:
    """Wrap a plain (x, y) callable as a Field2D with finite-difference
    derivative slots.  Meant for derived coefficient fields whose values
    are exact but whose closed-form derivatives are not worth carrying."""
    def dx(x, y):
        return (fn(_asarr(x) + h, y) - fn(_asarr(x) - h, y)) / (2 * h)

    def dy(x, y):
        return (fn(x, _asarr(y) + h) - fn(x, _asarr(y) - h)) / (2 * h)

    def dxx(x, y):
        return (fn(_asarr(x) + h, y) - 2 * fn(x, y) + fn(_asarr(x) - h, y)) / h**2

    def dyy(x, y):
        return (fn(x, _asarr(y) + h) - 2 * fn(x, y) + fn(x, _asarr(y) - h)) / h**2

    def dxy(x, y):
        return (fn(_asarr(x) + h, _asarr(y) + h) - fn(_asarr(x) + h, _asarr(y) - h)
                - fn(_asarr(x) - h, _asarr(y) + h)
                + fn(_asarr(x) - h, _asarr(y) - h)) / (4 * h**2)

    return Field2D(lambda x, y: fn(_asarr(x), _asarr(y)), dx, dy, dxx, dxy, dyy,
                   name=name)


def coeff_from_spec(spec, name="c"):
    """Build an operator coefficient (value callable + tag) from a fragment.

    Returns a Field2D; numbers mean constants, {"poly": [[c,i,j],...]} a
    polynomial in (x, y), {"kind": "inv_r", "scale": s} the corner-singular
    drift preset.
    """
    if isinstance(spec, (int, float)):
        return const2d(spec, name=name)
    if isinstance(spec, Field2D):
        return spec
    if isinstance(spec, dict):
        if "poly" in spec:
            return poly2d(spec["poly"], name=name)
        if spec.get("kind") == "inv_r":
            return inv_r2d(spec.get("scale", 1.0), name=name)
        if spec.get("kind") == "const":
            return const2d(spec["value"], name=name)
    raise ConfigError(f"bad coefficient spec for {name}: {spec!r}")
