"""The collapsed-segment state and its deviation functionals.

As the crescent thins, the solution and its derivatives converge on the
bottom segment to a six-tuple (u*, ux*, uy*, uxx*, uxy*, uyy*) that is
determined by the boundary data alone: the Dirichlet trace and the
oblique condition, differentiated tangentially, close into a triangular
linear system once the interior equation supplies the last unknown.
This module computes that state in closed form, cross-checks it against
a per-node dense solve of the same six relations, and measures how far
a computed solution sits from it.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import DegenerateC, GridMismatch
from .functions import Func1D
from .coefficients import CoefficientSet
from .norms import holder_norm_1d
from .solver import BVPSpec, DiscreteSolution

__all__ = [
    "AsymptoticState",
    "DeviationReport",
    "ResidualReport",
    "solve_asymptotic",
    "solve_asymptotic_dense",
    "deviation",
    "derivative_list_residuals",
]

ARRAY_KEYS = ("ustar", "ux", "uy", "uxx", "uxy", "uyy")


@dataclass(frozen=True)
class AsymptoticState:
    """Limit values of the solution and its derivatives on y = 0."""

    x: np.ndarray
    ustar: np.ndarray
    ux: np.ndarray
    uy: np.ndarray
    uxx: np.ndarray
    uxy: np.ndarray
    uyy: np.ndarray
    coefficients: CoefficientSet
    phi: Func1D
    g: Func1D

    def arrays(self) -> dict:
        return {k: getattr(self, k) for k in ARRAY_KEYS}

    def residuals(self) -> dict:
        """Sup residuals of the four defining identities (the first two,
        u* = phi and ux* = phi', hold by construction)."""
        c = self.coefficients
        x = self.x
        z = np.zeros_like(x)
        gv = self.g(x)
        return {
            "trace": float(np.max(np.abs(self.ustar - self.phi(x)))),
            "tangent": float(np.max(np.abs(self.ux - self.phi.d1(x)))),
            "oblique": float(np.max(np.abs(self.uy + gv * self.ux))),
            "oblique_x": float(np.max(np.abs(
                self.uxy + gv * self.uxx + self.g.d1(x) * self.ux))),
            "interior": float(np.max(np.abs(
                c.A(x, z) * self.uxx + c.B(x, z) * self.uxy
                + c.C(x, z) * self.uyy + c.D(x, z) * self.ux
                + c.E(x, z) * self.uy))),
        }

    def scaled(self, a: float) -> "AsymptoticState":
        return AsymptoticState(
            x=self.x, coefficients=self.coefficients,
            phi=self.phi.scaled(a), g=self.g,
            **{k: a * getattr(self, k) for k in ARRAY_KEYS})

    def save_csv(self, path):
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(("x",) + ARRAY_KEYS)
            for row in zip(self.x, *(getattr(self, k) for k in ARRAY_KEYS)):
                wr.writerow([f"{v:.17g}" for v in row])


def _coeff_rows(c: CoefficientSet, g: Func1D, x: np.ndarray):
    z = np.zeros_like(x)
    return (c.A(x, z) + z, c.B(x, z) + z, c.C(x, z) + z,
            c.D(x, z) + z, c.E(x, z) + z, g(x) + z, g.d1(x) + z)


def solve_asymptotic(c: CoefficientSet, g, phi: Func1D,
                     grid) -> AsymptoticState:
    """Closed-form triangular solve of the six segment relations.

    The trace gives u* and, tangentially, ux* and uxx*; the oblique
    condition gives uy* and, tangentially, uxy*; the interior equation
    is then solved for the one remaining unknown uyy*.
    """
    x = np.asarray(grid, dtype=float)
    if isinstance(g, (int, float)):
        from .functions import const1d
        g = const1d(float(g))
    av, bv, cv, dv, ev, gv, g1v = _coeff_rows(c, g, x)
    if np.any(np.abs(cv) < 1e-12):
        i = int(np.argmin(np.abs(cv)))
        raise DegenerateC(
            f"C({x[i]:g}, 0) = {cv[i]:.3e} is too small to eliminate uyy")
    ustar = phi(x) + 0.0 * x
    ux = phi.d1(x) + 0.0 * x
    uxx = phi.d2(x) + 0.0 * x
    uy = -gv * ux
    uxy = -gv * uxx - g1v * ux
    uyy = -(av * uxx + bv * uxy + dv * ux + ev * uy) / cv
    return AsymptoticState(x=x, ustar=ustar, ux=ux, uy=uy, uxx=uxx,
                           uxy=uxy, uyy=uyy, coefficients=c, phi=phi, g=g)


def solve_asymptotic_dense(c: CoefficientSet, g, phi: Func1D,
                           grid) -> AsymptoticState:
    """Per-node dense solve of the same six relations, kept as an
    independent cross-check of the triangular closed form.

    Unknowns w = (u, ux, uy, uxx, uxy, uyy); rows: trace, tangential
    trace, oblique, second tangential trace, tangential oblique,
    interior equation.
    """
    x = np.asarray(grid, dtype=float)
    if isinstance(g, (int, float)):
        from .functions import const1d
        g = const1d(float(g))
    av, bv, cv, dv, ev, gv, g1v = _coeff_rows(c, g, x)
    if np.any(np.abs(cv) < 1e-12):
        i = int(np.argmin(np.abs(cv)))
        raise DegenerateC(
            f"C({x[i]:g}, 0) = {cv[i]:.3e} is too small to eliminate uyy")
    n = x.size
    A = np.zeros((n, 6, 6))
    rhs = np.zeros((n, 6))
    A[:, 0, 0] = 1.0
    rhs[:, 0] = phi(x)
    A[:, 1, 1] = 1.0
    rhs[:, 1] = phi.d1(x)
    A[:, 2, 1] = gv
    A[:, 2, 2] = 1.0
    A[:, 3, 3] = 1.0
    rhs[:, 3] = phi.d2(x)
    A[:, 4, 1] = g1v
    A[:, 4, 3] = gv
    A[:, 4, 4] = 1.0
    A[:, 5, 1] = dv
    A[:, 5, 2] = ev
    A[:, 5, 3] = av
    A[:, 5, 4] = bv
    A[:, 5, 5] = cv
    w = np.linalg.solve(A, rhs[:, :, None])[:, :, 0]
    return AsymptoticState(x=x, ustar=w[:, 0], ux=w[:, 1], uy=w[:, 2],
                           uxx=w[:, 3], uxy=w[:, 4], uyy=w[:, 5],
                           coefficients=c, phi=phi, g=g)


# ---------------------------------------------------------------------------
# deviation of a computed solution from the segment state


@dataclass(frozen=True)
class DeviationReport:
    """Sup distances |grad^i u(x, y) - grad^i u*(x, 0)| for i = 0, 1, 2.

    The state lives on the segment, so the comparison broadcasts its
    per-x arrays across all heights; normalized divides by
    sigma^gamma * ||phi||_{C^{2,gamma}}.
    """

    sup: tuple
    normalized: tuple
    sigma: float
    gamma: float
    phi_norm: float
    resampled: bool

    def as_dict(self) -> dict:
        return {"sup": list(self.sup), "normalized": list(self.normalized),
                "sigma": self.sigma, "gamma": self.gamma,
                "phi_norm": self.phi_norm, "resampled": self.resampled}


def _match_state_to_grid(a: AsymptoticState, xs: np.ndarray):
    if a.x.shape == xs.shape and np.array_equal(a.x, xs):
        return a.arrays(), False
    if a.x.size < 4 or np.any(np.diff(a.x) <= 0):
        raise GridMismatch("asymptotic grid is too coarse or unsorted "
                           "for resampling")
    if xs.min() < a.x.min() - 1e-12 or xs.max() > a.x.max() + 1e-12:
        raise GridMismatch("asymptotic grid does not cover the solution "
                           "grid; refusing to extrapolate")
    out = {k: CubicSpline(a.x, v)(xs) for k, v in a.arrays().items()}
    return out, True


def deviation(u: DiscreteSolution, a: AsymptoticState) -> DeviationReport:
    """Compare a computed solution against the segment state."""
    xs = u.grid.xs
    arrs, resampled = _match_state_to_grid(a, xs)
    col = {k: v[:, None] for k, v in arrs.items()}
    dev0 = float(np.max(np.abs(u.values - col["ustar"])))
    dev1 = max(float(np.max(np.abs(u.u_x() - col["ux"]))),
               float(np.max(np.abs(u.u_y() - col["uy"]))))
    dev2 = max(float(np.max(np.abs(u.u_xx() - col["uxx"]))),
               float(np.max(np.abs(u.u_xy() - col["uxy"]))),
               float(np.max(np.abs(u.u_yy() - col["uyy"]))))
    prof = u.grid.profile
    gamma = prof.gamma
    phi_norm = holder_norm_1d(a.phi, 2, gamma).value
    scale = prof.sigma ** gamma * phi_norm
    sup = (dev0, dev1, dev2)
    return DeviationReport(sup=sup,
                           normalized=tuple(s / scale for s in sup),
                           sigma=prof.sigma, gamma=gamma,
                           phi_norm=phi_norm, resampled=resampled)


# ---------------------------------------------------------------------------
# boundary derivative identities on the discrete solution


@dataclass(frozen=True)
class ResidualReport:
    """Sup residuals of the six boundary/interior identities."""

    sups: dict
    trimmed_columns: int

    def as_dict(self) -> dict:
        return {"sups": dict(self.sups),
                "trimmed_columns": self.trimmed_columns}

    def worst(self) -> float:
        return max(self.sups.values())


def derivative_list_residuals(u: DiscreteSolution,
                              spec: BVPSpec) -> ResidualReport:
    """Evaluate the trace identities and their tangential derivatives.

    On the arc: u = phi, u_x + f' u_y = phi', and the full second
    tangential derivative equals phi''.  On the bottom: the oblique
    condition and its x-derivative.  In the interior: the equation
    itself.  Two columns are trimmed at each pinch, where the
    chain-rule division by f amplifies discretization noise.
    """
    trim = 2
    sl = slice(trim, -trim)
    xs = u.grid.xs[sl]
    prof = spec.profile
    c = spec.coefficients
    phi = spec.dirichlet
    f1 = prof.eval_d1(xs)
    f2 = prof.eval_d2(xs)

    ux = u.u_x()[sl]
    uy = u.u_y()[sl]
    uxx = u.u_xx()[sl]
    uxy = u.u_xy()[sl]
    uyy = u.u_yy()[sl]
    uv = u.values[sl]

    top = -1
    sups = {
        "trace": float(np.max(np.abs(uv[:, top] - phi(xs)))),
        "tangent": float(np.max(np.abs(
            ux[:, top] + f1 * uy[:, top] - phi.d1(xs)))),
        "tangent2": float(np.max(np.abs(
            uxx[:, top] + 2.0 * f1 * uxy[:, top] + f1**2 * uyy[:, top]
            + f2 * uy[:, top] - phi.d2(xs)))),
    }
    psi = spec.oblique_data
    gv = c.G(xs)
    sups["oblique"] = float(np.max(np.abs(
        uy[:, 0] + gv * ux[:, 0] - psi(xs))))
    sups["oblique_x"] = float(np.max(np.abs(
        uxy[:, 0] + gv * uxx[:, 0] + c.G.d1(xs) * ux[:, 0] - psi.d1(xs))))

    X, Y = u.grid.physical()
    Xi, Yi = X[sl], Y[sl]
    rhs = spec.source(Xi, Yi)
    sups["interior"] = float(np.max(np.abs(
        c.A(Xi, Yi) * uxx + c.B(Xi, Yi) * uxy + c.C(Xi, Yi) * uyy
        + c.D(Xi, Yi) * ux + c.E(Xi, Yi) * uy - rhs)))
    return ResidualReport(sups=sups, trimmed_columns=trim)
