"""Discrete plain and weighted Holder norms.

Plain norms aggregate with a SUM of sup terms plus the top-order difference
quotient; weighted norms take the MAX of the weighted sup terms plus the
weighted quotient.  Reports name the convention so the two are never mixed
silently.  Difference quotients skip pairs closer than twice the grid scale:
below that separation a quotient measures scheme error, not the function.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Optional

import numpy as np

from .functions import Func1D, Field2D

__all__ = [
    "HolderReport",
    "FieldSample2D",
    "holder_norm_1d",
    "weighted_norm_1d",
    "profile_weighted_norm",
    "holder_norm_2d",
    "sample_field2d",
    "pair_quotient_1d",
    "fd1",
    "fd2",
]

_BLOCK = 512  # pair enumeration row block; results independent of the value


@dataclass(frozen=True)
class HolderReport:
    """Result of a discrete Holder-norm evaluation.

    value combines the sup terms and the top-order difference quotient under
    the named convention.  Witnesses record where each sup term and the pair
    term were attained.
    """

    k: int
    gamma: float
    m: float
    value: float
    sup_terms: tuple
    seminorm: float
    convention: str
    witnesses: dict = dc_field(default_factory=dict)
    extras: dict = dc_field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "k": self.k,
            "gamma": self.gamma,
            "m": self.m,
            "value": self.value,
            "sup_terms": list(self.sup_terms),
            "seminorm": self.seminorm,
            "convention": self.convention,
            "witnesses": {k: _jsonable(v) for k, v in self.witnesses.items()},
            "extras": {k: _jsonable(v) for k, v in self.extras.items()},
        }


def _jsonable(v):
    if isinstance(v, (np.floating, np.integer)):
        return float(v)
    if isinstance(v, np.ndarray):
        return [float(t) for t in v.ravel()]
    if isinstance(v, (tuple, list)):
        return [_jsonable(t) for t in v]
    return v


# ---------------------------------------------------------------------------
# finite differences on uniform 1D samples

def fd1(vals: np.ndarray, h: float) -> np.ndarray:
    """Second-order first derivative: centered inside, one-sided at ends."""
    v = np.asarray(vals, dtype=float)
    d = np.empty_like(v)
    d[1:-1] = (v[2:] - v[:-2]) / (2 * h)
    d[0] = (-3 * v[0] + 4 * v[1] - v[2]) / (2 * h)
    d[-1] = (3 * v[-1] - 4 * v[-2] + v[-3]) / (2 * h)
    return d


def fd2(vals: np.ndarray, h: float) -> np.ndarray:
    """Second-order second derivative: centered inside, one-sided at ends."""
    v = np.asarray(vals, dtype=float)
    d = np.empty_like(v)
    d[1:-1] = (v[2:] - 2 * v[1:-1] + v[:-2]) / h**2
    d[0] = (2 * v[0] - 5 * v[1] + 4 * v[2] - v[3]) / h**2
    d[-1] = (2 * v[-1] - 5 * v[-2] + 4 * v[-3] - v[-4]) / h**2
    return d


def _sample_1d(phi, x, n, lo, hi):
    """Return (x, [phi, phi', ..., up to order 2]) as arrays."""
    if isinstance(phi, np.ndarray):
        if x is None:
            raise ValueError("array input needs its sample grid")
        x = np.asarray(x, dtype=float)
        h = x[1] - x[0]
        v = np.asarray(phi, dtype=float)
        return x, [v, fd1(v, h), fd2(v, h)]
    if x is None:
        x = np.linspace(lo, hi, n + 1)
    else:
        x = np.asarray(x, dtype=float)
    if isinstance(phi, Func1D):
        return x, [phi.val(x), phi.d1(x), phi.d2(x)]
    v = np.asarray(phi(x), dtype=float)
    h = x[1] - x[0]
    return x, [v, fd1(v, h), fd2(v, h)]


def _argmax_with_witness(vals: np.ndarray, x: np.ndarray):
    i = int(np.argmax(vals))
    return float(vals[i]), float(x[i])


def pair_quotient_1d(x: np.ndarray, vals: np.ndarray, gamma: float,
                     weight_power: float = 0.0, min_sep: Optional[float] = None):
    """sup over pairs of min(x1,x2)^weight_power * |dv| / |dx|^gamma.

    Pairs with |dx| < min_sep are skipped (default: twice the grid step).
    Returns (sup, (x1, x2) witness).
    """
    x = np.asarray(x, dtype=float)
    vals = np.asarray(vals, dtype=float)
    if min_sep is None:
        min_sep = 2 * (x[1] - x[0])
    best = 0.0
    arg = (float(x[0]), float(x[0]))
    n = len(x)
    for i0 in range(0, n, _BLOCK):
        xi = x[i0:i0 + _BLOCK, None]
        vi = vals[i0:i0 + _BLOCK, None]
        dx = np.abs(xi - x[None, :])
        ok = dx >= min_sep
        if not ok.any():
            continue
        q = np.zeros_like(dx)
        np.divide(np.abs(vi - vals[None, :]), dx, out=q, where=ok)
        # |dv|/|dx| -> |dv|/|dx|^gamma
        np.multiply(q, np.where(ok, dx ** (1.0 - gamma), 0.0), out=q)
        if weight_power:
            q *= np.minimum(xi, x[None, :]) ** weight_power
        i, j = np.unravel_index(int(np.argmax(q)), q.shape)
        if q[i, j] > best:
            best = float(q[i, j])
            arg = (float(x[i0 + i]), float(x[j]))
    return best, arg


def holder_norm_1d(phi, k: int, gamma: float, *, x=None, n: int = 1024,
                   lo: float = 0.0, hi: float = 1.0) -> HolderReport:
    """Plain C^{k,gamma} norm of a function of one variable.

    Sum of the sup norms of phi, phi', ..., phi^{(k)} plus the gamma
    difference quotient of the top derivative.  phi may be a Func1D (exact
    derivatives), a plain callable, or a sampled array with its grid.
    """
    if k not in (0, 1, 2):
        raise ValueError("only orders 0..2 are supported")
    xs, ders = _sample_1d(phi, x, n, lo, hi)
    sups = []
    wit = {}
    for i in range(k + 1):
        s, where = _argmax_with_witness(np.abs(ders[i]), xs)
        sups.append(s)
        wit[f"sup_d{i}"] = where
    semi, pair = pair_quotient_1d(xs, ders[k], gamma)
    wit["quotient_pair"] = pair
    value = float(sum(sups) + semi)
    return HolderReport(k=k, gamma=gamma, m=0.0, value=value,
                        sup_terms=tuple(sups), seminorm=semi,
                        convention="sum", witnesses=wit)


def weighted_norm_1d(phi, k: int, gamma: float, m: float, *, x=None,
                     n: int = 1024) -> HolderReport:
    """Weighted norm with x^{m+i} factors on each derivative order.

    Max over i of sup |x^{m+i} phi^{(i)}| plus the pair term
    sup min(x1,x2)^{m+k+gamma} |d phi^{(k)}| / |dx|^gamma.  The x = 0 sample
    is excluded from the sups (the weight handles the limit); the default
    grid therefore starts one step in.
    """
    if k not in (0, 1, 2):
        raise ValueError("only orders 0..2 are supported")
    if x is None:
        x = np.linspace(0.0, 1.0, n + 1)[1:]
    xs, ders = _sample_1d(phi, x, n, 0.0, 1.0)
    pos = xs > 0
    sups = []
    wit = {}
    for i in range(k + 1):
        weighted = np.abs(xs[pos] ** (m + i) * ders[i][pos])
        s, where = _argmax_with_witness(weighted, xs[pos])
        sups.append(s)
        wit[f"sup_d{i}"] = where
    semi, pair = pair_quotient_1d(xs, ders[k], gamma, weight_power=m + k + gamma)
    wit["quotient_pair"] = pair
    value = float(max(sups) + semi)
    return HolderReport(k=k, gamma=gamma, m=m, value=value,
                        sup_terms=tuple(sups), seminorm=semi,
                        convention="max", witnesses=wit)


def profile_weighted_norm(f, gamma: float, *, n: int = 2048) -> HolderReport:
    """Weighted norm tailored to boundary profiles.

    max over i=0,1,2 of sup |x f^{(i)}(x)| plus the pair term
    sup min(x1,x2) |f''(x1)-f''(x2)| / |x1-x2|^gamma.  The report extras
    carry sup |x^{1-gamma} f''| and the plain C^{1,gamma} norm so the
    embedding of the second derivative into the weighted quantity can be
    checked with an empirical constant.
    """
    xs = np.linspace(0.0, 1.0, n + 1)[1:]
    ders = [f.eval(xs), f.eval_d1(xs), f.eval_d2(xs)]
    sups = []
    wit = {}
    for i in range(3):
        s, where = _argmax_with_witness(np.abs(xs * ders[i]), xs)
        sups.append(s)
        wit[f"sup_d{i}"] = where
    semi, pair = pair_quotient_1d(xs, ders[2], gamma, weight_power=1.0)
    wit["quotient_pair"] = pair
    value = float(max(sups) + semi)

    decay_sup = float(np.max(xs ** (1.0 - gamma) * np.abs(ders[2])))
    plain = holder_norm_1d(Func1D(f.eval, f.eval_d1, f.eval_d2), 1, gamma,
                           x=np.linspace(0.0, 1.0, n + 1))
    lhs = decay_sup + plain.value
    extras = {
        "second_derivative_decay_sup": decay_sup,
        "plain_c1gamma": plain.value,
        "embed_lhs": lhs,
        "embed_ratio": lhs / value if value > 0 else float("inf"),
    }
    return HolderReport(k=2, gamma=gamma, m=-1.0, value=value,
                        sup_terms=tuple(sups), seminorm=semi,
                        convention="max", witnesses=wit, extras=extras)


# ---------------------------------------------------------------------------
# 2D fields

_ORDER_KEYS = {0: ("u",), 1: ("ux", "uy"), 2: ("uxx", "uxy", "uyy")}


@dataclass(frozen=True)
class FieldSample2D:
    """A field with derivatives sampled on nodes of a (possibly mapped) grid.

    x, y are flattened node coordinates; derivs maps "u", "ux", ... to
    flattened arrays of the same length; h is the coarse grid scale used by
    the pair-separation rule; shape, when set, is the logical (rows, cols)
    layout used to thin the pair enumeration deterministically.
    """

    x: np.ndarray
    y: np.ndarray
    derivs: dict
    h: float
    shape: Optional[tuple] = None


def sample_field2d(u: Field2D, x: np.ndarray, y: np.ndarray, h: float,
                   shape=None) -> FieldSample2D:
    """Sample an analytic field (and derivatives) on given nodes."""
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    return FieldSample2D(
        x=x, y=y,
        derivs={"u": u.val(x, y), "ux": u.dx(x, y), "uy": u.dy(x, y),
                "uxx": u.dxx(x, y), "uxy": u.dxy(x, y), "uyy": u.dyy(x, y)},
        h=h, shape=shape)


def _thin_indices(n_nodes: int, shape, max_nodes: int) -> np.ndarray:
    if n_nodes <= max_nodes:
        return np.arange(n_nodes)
    if shape is not None:
        rows, cols = shape
        factor = np.sqrt(n_nodes / max_nodes)
        sr = max(1, int(np.ceil(factor)))
        sc = max(1, int(np.ceil(factor)))
        keep = np.zeros((rows, cols), dtype=bool)
        keep[::sr, ::sc] = True
        # always keep the boundary rows where the data lives
        keep[0, ::sc] = True
        keep[-1, ::sc] = True
        return np.flatnonzero(keep.ravel())
    step = int(np.ceil(n_nodes / max_nodes))
    return np.arange(0, n_nodes, step)


def _pair_sup_2d(x, y, vals, gamma, weight_power, min_sep):
    best = 0.0
    arg = ((float(x[0]), float(y[0])), (float(x[0]), float(y[0])))
    n = len(x)
    r = np.hypot(x, y) if weight_power else None
    for i0 in range(0, n, _BLOCK):
        dx = x[i0:i0 + _BLOCK, None] - x[None, :]
        dy = y[i0:i0 + _BLOCK, None] - y[None, :]
        d = np.hypot(dx, dy)
        ok = d >= min_sep
        if not ok.any():
            continue
        q = np.zeros_like(d)
        np.divide(np.abs(vals[i0:i0 + _BLOCK, None] - vals[None, :]), d,
                  out=q, where=ok)
        np.multiply(q, np.where(ok, d ** (1.0 - gamma), 0.0), out=q)
        if weight_power:
            q *= np.minimum(r[i0:i0 + _BLOCK, None], r[None, :]) ** weight_power
        i, j = np.unravel_index(int(np.argmax(q)), q.shape)
        if q[i, j] > best:
            best = float(q[i, j])
            arg = ((float(x[i0 + i]), float(y[i0 + i])),
                   (float(x[j]), float(y[j])))
    return best, arg


def holder_norm_2d(sample: FieldSample2D, k: int, gamma: float, m: float = 0.0,
                   region=None, *, max_pair_nodes: int = 6000) -> HolderReport:
    """Discrete Holder norm of a sampled plane field.

    m = 0 gives the plain C^{k,gamma} norm (sum of per-order sups plus the
    top-order quotient).  m > 0 weights order i by r^{m+i} with r the
    distance to the left corner (0,0), takes the MAX of the weighted sups,
    and weights each pair by min(r1,r2)^{m+k+gamma}; nodes at r = 0 are
    excluded from the weighted sups.  region restricts to a <= x <= b.
    Pair enumeration is exhaustive up to max_pair_nodes nodes and thinned by
    a deterministic stride beyond that.
    """
    if k not in (0, 1, 2):
        raise ValueError("only orders 0..2 are supported")
    x, y = sample.x, sample.y
    sel = np.ones(len(x), dtype=bool)
    if region is not None:
        a, b = region
        sel &= (x >= a) & (x <= b)
    idx = np.flatnonzero(sel)
    x, y = x[idx], y[idx]
    r = np.hypot(x, y)
    weighted = m != 0.0

    sups = []
    wit = {}
    for order in range(k + 1):
        best = 0.0
        where = (float(x[0]), float(y[0])) if len(x) else (0.0, 0.0)
        for key in _ORDER_KEYS[order]:
            v = np.abs(sample.derivs[key][idx])
            if weighted:
                mask = r > 0
                vv = r[mask] ** (m + order) * v[mask]
                xs, ys = x[mask], y[mask]
            else:
                vv, xs, ys = v, x, y
            if len(vv) == 0:
                continue
            i = int(np.argmax(vv))
            if vv[i] > best:
                best = float(vv[i])
                where = (float(xs[i]), float(ys[i]))
        sups.append(best)
        wit[f"sup_order{order}"] = where

    # top-order pair term, max over the derivative components of that order
    shape = sample.shape if len(idx) == len(sample.x) else None
    thin = _thin_indices(len(x), shape, max_pair_nodes)
    xp, yp = x[thin], y[thin]
    semi = 0.0
    pair = None
    for key in _ORDER_KEYS[k]:
        s, p = _pair_sup_2d(xp, yp, sample.derivs[key][idx][thin], gamma,
                            m + k + gamma if weighted else 0.0, 2 * sample.h)
        if s > semi or pair is None:
            semi, pair = s, p
    wit["quotient_pair"] = pair

    if weighted:
        value = float(max(sups) + semi)
        convention = "max"
    else:
        value = float(sum(sups) + semi)
        convention = "sum"
    return HolderReport(k=k, gamma=gamma, m=m, value=value,
                        sup_terms=tuple(sups), seminorm=semi,
                        convention=convention, witnesses=wit,
                        extras={"nodes": int(len(x)),
                                "pair_nodes": int(len(xp))})
