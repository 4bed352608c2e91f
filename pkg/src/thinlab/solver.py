"""Boundary-fitted finite differences for the mixed problem.

The crescent maps to the unit square by x = xi, y = eta * f(xi); the scheme
discretizes the transformed operator with a 9-point second-order stencil
(mixed term by the 4-corner average), Dirichlet rows on the upper edge, a
one-sided second-order oblique row on the bottom edge, and the two pinched
corner columns pinned to the Dirichlet trace.  Interior nodes never touch
f = 0, so the 1/f factors in the mapped coefficients stay finite.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Optional

import json
import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .coefficients import CoefficientSet
from .errors import ConfigError, NoConvergence, SingularCoefficient
from .functions import Field2D, Func1D, const1d, const2d
from .geometry import BoundaryProfile
from .norms import FieldSample2D, fd1, fd2, holder_norm_1d, holder_norm_2d

__all__ = [
    "FittedGrid",
    "BVPSpec",
    "LinearSystem",
    "DiscreteSolution",
    "LocalSchauderReport",
    "make_grid",
    "discretize",
    "solve",
    "solve_bvp",
    "local_schauder_check",
]

_INV_F_CAP = 1e14
_DIRECT_BUDGET = 2e8  # bandwidth * unknowns above this goes iterative


@dataclass(frozen=True)
class FittedGrid:
    """Tensor grid in mapped coordinates, fitted to one boundary profile."""

    nx: int
    ny: int
    profile: BoundaryProfile
    xs: np.ndarray
    eta: np.ndarray

    @property
    def shape(self):
        return (self.nx + 1, self.ny + 1)

    def physical(self):
        """Node images (x, eta*f(x)) as two (nx+1, ny+1) arrays."""
        X = np.repeat(self.xs, self.ny + 1).reshape(self.shape)
        Y = self.eta[None, :] * self.profile.eval(self.xs)[:, None]
        return X, Y


def make_grid(profile: BoundaryProfile, nx: int, ny: int) -> FittedGrid:
    if nx < 8 or ny < 8:
        raise ConfigError("grid needs nx, ny >= 8")
    return FittedGrid(nx=int(nx), ny=int(ny), profile=profile,
                      xs=np.linspace(0.0, 1.0, nx + 1),
                      eta=np.linspace(0.0, 1.0, ny + 1))


@dataclass(frozen=True)
class BVPSpec:
    """One mixed boundary value problem instance.

    dirichlet is the trace on the upper arc; oblique_data the right side of
    u_y + G u_x = psi on the bottom (zero in the homogeneous problem);
    source the interior right side.  bottom may be switched to "dirichlet"
    with bottom_data for negative-control experiments that deliberately
    break corner compatibility.
    """

    coefficients: CoefficientSet
    profile: BoundaryProfile
    dirichlet: Func1D
    oblique_data: Func1D = dc_field(default_factory=lambda: const1d(0.0))
    source: Field2D = dc_field(default_factory=lambda: const2d(0.0))
    bottom: str = "oblique"
    bottom_data: Optional[Func1D] = None

    def __post_init__(self):
        if self.bottom not in ("oblique", "dirichlet"):
            raise ConfigError("bottom must be 'oblique' or 'dirichlet'")
        if self.bottom == "dirichlet" and self.bottom_data is None:
            raise ConfigError("dirichlet bottom needs bottom_data")
        probe = holder_norm_1d(self.dirichlet, 2, self.coefficients.gamma,
                               n=128).value
        if not np.isfinite(probe):
            raise ConfigError("dirichlet data must have finite C^{2,gamma} norm")


@dataclass(frozen=True)
class LinearSystem:
    matrix: sp.csr_matrix
    rhs: np.ndarray
    grid: FittedGrid
    spec: BVPSpec


def discretize(spec: BVPSpec, grid: FittedGrid) -> LinearSystem:
    """Assemble the mapped 9-point scheme with its boundary rows."""
    nx, ny = grid.nx, grid.ny
    hx, he = 1.0 / nx, 1.0 / ny
    xs, eta = grid.xs, grid.eta
    ny1 = ny + 1
    n_nodes = (nx + 1) * ny1
    prof = grid.profile
    co = spec.coefficients

    fx = prof.eval(xs)
    if np.any(1.0 / fx[1:-1] > _INV_F_CAP):
        worst = float(fx[1:-1].min())
        raise SingularCoefficient(
            f"profile height {worst:.3e} at an interior column makes the "
            f"mapped coefficients exceed 1/f = {_INV_F_CAP:.0e}")

    rows, cols, vals = [], [], []
    rhs = np.zeros(n_nodes)

    def put(r, c, v):
        rows.append(np.asarray(r).ravel())
        cols.append(np.asarray(c).ravel())
        vals.append(np.asarray(v, dtype=float).ravel())

    # interior stencil, vectorized over all interior nodes at once
    I, J = np.meshgrid(np.arange(1, nx), np.arange(1, ny), indexing="ij")
    X = xs[I]
    ETA = eta[J]
    F = prof.eval(X)
    F1 = prof.eval_d1(X)
    F2 = prof.eval_d2(X)
    Y = ETA * F
    a = F1 / F
    A, B, Cc = co.A(X, Y), co.B(X, Y), co.C(X, Y)
    D, E = co.D(X, Y), co.E(X, Y)

    cxx = A
    cxe = -2.0 * ETA * a * A + B / F
    cee = ETA**2 * a**2 * A - ETA * a * B / F + Cc / F**2
    cx = D
    ce = A * ETA * (2.0 * a**2 - F2 / F) - a * B / F - D * ETA * a + E / F

    node = (I * ny1 + J)
    put(node, node, -2.0 * cxx / hx**2 - 2.0 * cee / he**2)
    put(node, node + ny1, cxx / hx**2 + cx / (2 * hx))
    put(node, node - ny1, cxx / hx**2 - cx / (2 * hx))
    put(node, node + 1, cee / he**2 + ce / (2 * he))
    put(node, node - 1, cee / he**2 - ce / (2 * he))
    q = cxe / (4.0 * hx * he)
    put(node, node + ny1 + 1, q)
    put(node, node - ny1 - 1, q)
    put(node, node + ny1 - 1, -q)
    put(node, node - ny1 + 1, -q)
    rhs[node.ravel()] = spec.source(X, Y).ravel()

    # upper arc: Dirichlet trace
    i_top = np.arange(1, nx)
    n_top = i_top * ny1 + ny
    put(n_top, n_top, np.ones(nx - 1))
    rhs[n_top] = spec.dirichlet(xs[i_top])

    # bottom edge
    i_bot = np.arange(1, nx)
    n_bot = i_bot * ny1
    if spec.bottom == "oblique":
        fg = prof.eval(xs[i_bot]) * co.G(xs[i_bot])
        put(n_bot, n_bot, np.full(nx - 1, -3.0 / (2 * he)))
        put(n_bot, n_bot + 1, np.full(nx - 1, 4.0 / (2 * he)))
        put(n_bot, n_bot + 2, np.full(nx - 1, -1.0 / (2 * he)))
        put(n_bot, n_bot + ny1, fg / (2 * hx))
        put(n_bot, n_bot - ny1, -fg / (2 * hx))
        rhs[n_bot] = prof.eval(xs[i_bot]) * spec.oblique_data(xs[i_bot])
    else:
        put(n_bot, n_bot, np.ones(nx - 1))
        rhs[n_bot] = spec.bottom_data(xs[i_bot])

    # pinched corner columns collapse to single physical points
    for i_col, xv in ((0, 0.0), (nx, 1.0)):
        n_col = i_col * ny1 + np.arange(ny1)
        put(n_col, n_col, np.ones(ny1))
        rhs[n_col] = float(spec.dirichlet(xv))

    mat = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n_nodes, n_nodes))
    return LinearSystem(matrix=mat, rhs=rhs, grid=grid, spec=spec)


def solve(sys: LinearSystem, method: str = "auto") -> "DiscreteSolution":
    """Solve the assembled system.

    Rows are rescaled by their max magnitude first (the mapped coefficients
    span many orders between thick and thin columns).  Small systems go to
    a sparse direct factorization, large ones to ILU-preconditioned
    iteration; either way the scaled residual must reach 1e-10.
    """
    mat, rhs = sys.matrix, sys.rhs
    d = np.abs(mat).max(axis=1).toarray().ravel()
    if np.any(d == 0):
        raise NoConvergence("assembled matrix has an empty row", residual=np.inf)
    dinv = sp.diags(1.0 / d)
    m = (dinv @ mat).tocsc()
    b = rhs / d

    bandwidth = sys.grid.ny + 2
    if method == "auto":
        method = "direct" if bandwidth * mat.shape[0] <= _DIRECT_BUDGET else "iterative"
    if method == "direct":
        lu = spla.splu(m)
        w = lu.solve(b)
        resid = _relative_residual(m, w, b)
        if resid > 1e-10:
            w = w + lu.solve(b - m @ w)  # one refinement pass
            resid = _relative_residual(m, w, b)
    elif method == "iterative":
        ilu = spla.spilu(m, drop_tol=1e-6, fill_factor=20)
        pre = spla.LinearOperator(m.shape, ilu.solve)
        w, info = spla.lgmres(m, b, M=pre, rtol=1e-12, atol=0.0, maxiter=2000)
        resid = _relative_residual(m, w, b)
        if info != 0:
            raise NoConvergence(
                f"iterative solve stopped with code {info}", residual=resid)
    else:
        raise ConfigError(f"unknown solve method {method!r}")
    if resid > 1e-10:
        raise NoConvergence(
            f"scaled residual {resid:.3e} above tolerance", residual=resid)
    return DiscreteSolution(grid=sys.grid,
                            values=w.reshape(sys.grid.shape),
                            residual=float(resid))


def _relative_residual(m, w, b):
    nb = np.linalg.norm(b)
    r = np.linalg.norm(m @ w - b)
    return float(r / nb) if nb > 0 else float(r)


def solve_bvp(spec: BVPSpec, grid: FittedGrid, method: str = "auto"):
    return solve(discretize(spec, grid), method=method)


def _fd1_4(w: np.ndarray, h: float) -> np.ndarray:
    """Fourth-order first derivative along axis 0 (biased near the ends)."""
    d = np.empty_like(w)
    d[2:-2] = (-w[4:] + 8 * w[3:-1] - 8 * w[1:-3] + w[:-4]) / (12 * h)
    d[0] = (-25 * w[0] + 48 * w[1] - 36 * w[2] + 16 * w[3] - 3 * w[4]) / (12 * h)
    d[1] = (-3 * w[0] - 10 * w[1] + 18 * w[2] - 6 * w[3] + w[4]) / (12 * h)
    d[-1] = (25 * w[-1] - 48 * w[-2] + 36 * w[-3] - 16 * w[-4]
             + 3 * w[-5]) / (12 * h)
    d[-2] = (3 * w[-1] + 10 * w[-2] - 18 * w[-3] + 6 * w[-4] - w[-5]) / (12 * h)
    return d


def _fd2_4(w: np.ndarray, h: float) -> np.ndarray:
    """Fourth-order second derivative along axis 0 (biased near the ends)."""
    hh = 12 * h * h
    d = np.empty_like(w)
    d[2:-2] = (-w[4:] + 16 * w[3:-1] - 30 * w[2:-2] + 16 * w[1:-3]
               - w[:-4]) / hh
    d[0] = (45 * w[0] - 154 * w[1] + 214 * w[2] - 156 * w[3] + 61 * w[4]
            - 10 * w[5]) / hh
    d[1] = (10 * w[0] - 15 * w[1] - 4 * w[2] + 14 * w[3] - 6 * w[4]
            + w[5]) / hh
    d[-1] = (45 * w[-1] - 154 * w[-2] + 214 * w[-3] - 156 * w[-4]
             + 61 * w[-5] - 10 * w[-6]) / hh
    d[-2] = (10 * w[-1] - 15 * w[-2] - 4 * w[-3] + 14 * w[-4] - 6 * w[-5]
             + w[-6]) / hh
    return d


@dataclass
class DiscreteSolution:
    """Node values on a fitted grid with physical-coordinate derivatives.

    Derivatives are formed by differences in the mapped coordinates and
    pushed through the chain rule.  The chain rule divides by powers of f,
    which amplifies truncation error by 1/h at the columns next to the
    pinches, so the x-direction differences are fourth order to keep the
    physical derivatives second order up to the corners; the corner columns
    themselves (where 1/f overflows) are filled by quadratic extrapolation
    from the neighboring columns.
    """

    grid: FittedGrid
    values: np.ndarray
    residual: float = 0.0
    _cache: dict = dc_field(default_factory=dict, repr=False)

    @classmethod
    def inject(cls, grid: FittedGrid, field: Field2D) -> "DiscreteSolution":
        X, Y = grid.physical()
        return cls(grid=grid, values=field(X, Y), residual=0.0)

    def _derivatives(self):
        if "ux" in self._cache:
            return self._cache
        g = self.grid
        hx, he = 1.0 / g.nx, 1.0 / g.ny
        w = self.values
        wx = _fd1_4(w, hx)
        wxx = _fd2_4(w, hx)
        we = fd1(w.T, he).T
        wee = fd2(w.T, he).T
        wxe = _fd1_4(we, hx)
        F = g.profile.eval(g.xs)[:, None]
        F1 = g.profile.eval_d1(g.xs)[:, None]
        F2 = g.profile.eval_d2(g.xs)[:, None]
        ETA = g.eta[None, :]
        with np.errstate(divide="ignore", invalid="ignore"):
            a = F1 / F
            ux = wx - ETA * a * we
            uy = we / F
            uyy = wee / F**2
            uxy = (wxe - a * (we + ETA * wee)) / F
            uxx = (wxx - 2 * ETA * a * wxe + ETA**2 * a**2 * wee
                   + ETA * (2 * a**2 - F2 / F) * we)
        for arr in (ux, uy, uxx, uxy, uyy):
            arr[0] = 3 * arr[1] - 3 * arr[2] + arr[3]
            arr[-1] = 3 * arr[-2] - 3 * arr[-3] + arr[-4]
        self._cache.update(ux=ux, uy=uy, uxx=uxx, uxy=uxy, uyy=uyy)
        return self._cache

    def u_x(self):
        return self._derivatives()["ux"]

    def u_y(self):
        return self._derivatives()["uy"]

    def u_xx(self):
        return self._derivatives()["uxx"]

    def u_xy(self):
        return self._derivatives()["uxy"]

    def u_yy(self):
        return self._derivatives()["uyy"]

    def field_sample(self) -> FieldSample2D:
        X, Y = self.grid.physical()
        d = self._derivatives()
        return FieldSample2D(
            x=X.ravel(), y=Y.ravel(),
            derivs={"u": self.values.ravel(), "ux": d["ux"].ravel(),
                    "uy": d["uy"].ravel(), "uxx": d["uxx"].ravel(),
                    "uxy": d["uxy"].ravel(), "uyy": d["uyy"].ravel()},
            h=1.0 / self.grid.nx, shape=self.grid.shape)

    def save_csv(self, path, meta: Optional[dict] = None):
        """Write nodes as CSV (i, j, x, y, u) plus a JSON sidecar header."""
        import csv

        X, Y = self.grid.physical()
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["i", "j", "x", "y", "u"])
            for i in range(self.grid.nx + 1):
                for j in range(self.grid.ny + 1):
                    wr.writerow([i, j, repr(float(X[i, j])),
                                 repr(float(Y[i, j])),
                                 repr(float(self.values[i, j]))])
        header = {
            "nx": self.grid.nx, "ny": self.grid.ny,
            "profile": {"kind": self.grid.profile.kind,
                        **{k: _plain(v) for k, v in
                           self.grid.profile.params.items()}},
            "sigma": self.grid.profile.sigma,
            "residual": self.residual,
        }
        if meta:
            header.update(meta)
        side = str(path) + ".json" if not str(path).endswith(".csv") \
            else str(path)[:-4] + ".json"
        with open(side, "w") as fh:
            json.dump(header, fh, indent=2, sort_keys=True)
            fh.write("\n")


def _plain(v):
    if isinstance(v, (np.floating, np.integer)):
        return float(v)
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_plain(t) for t in v]
    return v


@dataclass(frozen=True)
class LocalSchauderReport:
    data_norm: float
    global_norm: float
    local_norm: float
    ratio_global: float
    ratio_local: float
    local_cut: float

    def as_dict(self):
        return {"data_norm": self.data_norm, "global_norm": self.global_norm,
                "local_norm": self.local_norm,
                "ratio_global": self.ratio_global,
                "ratio_local": self.ratio_local, "local_cut": self.local_cut}


def local_schauder_check(u: DiscreteSolution, spec: BVPSpec,
                         local_cut: float = 2.0 / 3.0,
                         max_pair_nodes: int = 6000) -> LocalSchauderReport:
    """Empirical Schauder constants: solution norm over the whole closure
    and over the part left of local_cut, each divided by the norm of the
    Dirichlet data."""
    gamma = spec.coefficients.gamma
    sample = u.field_sample()
    full = holder_norm_2d(sample, 2, gamma, max_pair_nodes=max_pair_nodes)
    left = holder_norm_2d(sample, 2, gamma, region=(0.0, local_cut),
                          max_pair_nodes=max_pair_nodes)
    data = holder_norm_1d(spec.dirichlet, 2, gamma, n=2048)
    return LocalSchauderReport(
        data_norm=data.value, global_norm=full.value, local_norm=left.value,
        ratio_global=full.value / data.value,
        ratio_local=left.value / data.value, local_cut=local_cut)
