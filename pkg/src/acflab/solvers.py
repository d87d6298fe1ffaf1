"""Dirichlet problems for the Laplacian on masked lattice domains.

Unknowns are the mask nodes off the outer lattice layer that are not
flagged as fixed.  Every other node acts as Dirichlet data.  By default a
neighbour outside the mask contributes its ``boundary_values`` entry
(staircase boundary).  When a level function ``phi`` is supplied, edges
whose far end has ``phi <= 0`` are cut at the linearly interpolated zero
of ``phi`` and use the Shortley-Weller stencil with data from
``boundary_fn`` at the cut point.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy import ndimage

from .grid import BasePoint, ContractError, DomainMask, GridSpec, ScalarField

__all__ = [
    "DirichletProblem",
    "SolveReport",
    "solve_dirichlet",
    "build_G",
    "build_barrier",
    "box_layer",
]

# Above this many unknowns the direct factorisation is replaced by a Krylov solve.
DIRECT_LIMIT = 400_000
THETA_SNAP = 1e-3


@dataclass(frozen=True)
class DirichletProblem:
    """``Lap v = rhs`` on ``mask`` with Dirichlet data ``boundary_values``.

    Parameters
    ----------
    mask : DomainMask
        Solve region.
    boundary_values : ScalarField
        Data read on every node that is not an unknown.
    rhs : float
        Constant right-hand side.
    fixed : DomainMask, optional
        Nodes inside ``mask`` that are nevertheless held at their boundary value.
    phi : ScalarField, optional
        Level function; the physical domain is ``phi > 0``.  Enables cut cells.
    boundary_fn : callable, optional
        Boundary data at cut points, called with an array of shape ``(m, dim)``.
    """

    mask: DomainMask
    boundary_values: ScalarField
    rhs: float = 0.0
    fixed: DomainMask | None = None
    phi: ScalarField | None = None
    boundary_fn: Callable[[np.ndarray], np.ndarray] | None = None

    def __post_init__(self):
        g = self.mask.grid
        if self.boundary_values.grid != g:
            raise ContractError("boundary_values grid differs from mask grid")
        if (self.phi is None) != (self.boundary_fn is None):
            raise ContractError("phi and boundary_fn must be given together")
        if self.phi is not None and self.phi.grid != g:
            raise ContractError("phi grid differs from mask grid")
        if not np.isfinite(self.rhs):
            raise ContractError("rhs must be finite")

    @property
    def grid(self) -> GridSpec:
        return self.mask.grid

    def unknowns(self) -> np.ndarray:
        u = self.mask.inside & ~box_layer(self.grid)
        if self.fixed is not None:
            u &= ~self.fixed.inside
        return u


@dataclass(frozen=True)
class SolveReport:
    iterations: int
    final_residual: float
    converged: bool
    unknowns: int = 0
    method: str = "direct"

    def to_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "final_residual": self.final_residual,
            "converged": self.converged,
            "unknowns": self.unknowns,
            "method": self.method,
        }


def box_layer(g: GridSpec) -> np.ndarray:
    """Boolean array marking the outermost lattice layer."""
    edge = np.zeros(g.shape, bool)
    for ax in range(g.dim):
        sl = [slice(None)] * g.dim
        sl[ax] = 0
        edge[tuple(sl)] = True
        sl[ax] = -1
        edge[tuple(sl)] = True
    return edge


def _snap_near_boundary(p: DirichletProblem, unk: np.ndarray):
    """Hold unknowns whose cut arm is shorter than ``THETA_SNAP`` at the boundary value.

    Such a node is within ``THETA_SNAP * h`` of the boundary; keeping it as
    an unknown would put coefficients of order ``1 / (THETA_SNAP h^2)`` in
    the matrix and ruin the residual.  Returns ``(unknowns, boundary array)``.
    """
    bval = np.array(p.boundary_values.values, copy=True)
    if p.phi is None:
        return unk, bval
    g = p.grid
    phi = p.phi.values
    unk = unk.copy()
    nodes = np.argwhere(unk)
    phi_i = phi[tuple(nodes.T)]
    for ax in range(g.dim):
        for step in (-1, 1):
            nb = nodes.copy()
            nb[:, ax] += step
            phi_n = phi[tuple(nb.T)]
            with np.errstate(divide="ignore", invalid="ignore"):
                th = np.where((phi_i > 0) & (phi_n <= 0), phi_i / (phi_i - phi_n), 1.0)
            close = th < THETA_SNAP
            if np.any(close):
                pts = g.lower + g.spacing * nodes[close].astype(float)
                pts[:, ax] += step * th[close] * g.spacing
                idx = tuple(nodes[close].T)
                bval[idx] = np.asarray(p.boundary_fn(pts), float)
                unk[idx] = False
    return unk, bval


def _assemble(p: DirichletProblem, unk: np.ndarray, bval: np.ndarray):
    g = p.grid
    h = g.spacing
    n_unk = int(unk.sum())
    number = -np.ones(g.shape, dtype=np.int64)
    number[unk] = np.arange(n_unk)
    nodes = np.argwhere(unk)
    phi = None if p.phi is None else p.phi.values

    # Per-node, per-axis arm lengths (in units of h) and the value at each arm end.
    rows, cols, data = [], [], []
    diag = np.zeros(n_unk)
    b = np.full(n_unk, float(p.rhs))
    ids = np.arange(n_unk)
    for ax in range(g.dim):
        arm = {}
        for step in (-1, 1):
            nb = nodes.copy()
            nb[:, ax] += step
            nb_t = tuple(nb.T)
            nb_num = number[nb_t]
            theta = np.ones(n_unk)
            known = np.where(nb_num < 0, bval[nb_t], 0.0)
            if phi is not None:
                phi_i = phi[tuple(nodes.T)]
                phi_n = phi[nb_t]
                cut = (nb_num < 0) & (phi_i > 0) & (phi_n <= 0)
                if np.any(cut):
                    th = phi_i[cut] / (phi_i[cut] - phi_n[cut])
                    th = np.clip(th, THETA_SNAP, 1.0)
                    theta[cut] = th
                    pts = g.lower + h * nodes[cut].astype(float)
                    pts[:, ax] += step * th * h
                    known[cut] = np.asarray(p.boundary_fn(pts), float)
            arm[step] = (nb_num, theta, known)
        tm, tp = arm[-1][1], arm[1][1]
        cm = 2.0 / (h * h * tm * (tm + tp))
        cp = 2.0 / (h * h * tp * (tm + tp))
        diag -= cm + cp
        for (nb_num, _, known), c in ((arm[-1], cm), (arm[1], cp)):
            inner = nb_num >= 0
            rows.append(ids[inner])
            cols.append(nb_num[inner])
            data.append(c[inner])
            b[~inner] -= c[~inner] * known[~inner]
    rows.append(ids)
    cols.append(ids)
    data.append(diag)
    A = sp.csr_matrix(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))), shape=(n_unk, n_unk)
    )
    return A, b, nodes


def _check_connected(p: DirichletProblem, unk: np.ndarray) -> None:
    if not unk.any():
        raise ContractError("mask has no interior node")
    n_mask = ndimage.label(p.mask.inside)[1]
    if n_mask > 1:
        raise ContractError(f"mask is disconnected ({n_mask} components)")


def solve_dirichlet(p: DirichletProblem, residual_tol: float = 1e-8, max_iters: int = 10_000):
    """Solve ``p``; return the full-lattice solution and a :class:`SolveReport`.

    Nodes that are not unknowns carry ``boundary_values``.  The residual is
    the max norm of ``A v - rhs`` over the unknowns, with ``A`` the stencil
    that was assembled (the plain 5/7-point Laplacian away from cut cells).
    """
    if not residual_tol > 0:
        raise ContractError("residual_tol must be positive")
    unk = p.unknowns()
    _check_connected(p, unk)
    unk, bval = _snap_near_boundary(p, unk)
    A, b, nodes = _assemble(p, unk, bval)
    n = A.shape[0]
    if n <= DIRECT_LIMIT:
        x = spla.spsolve(A.tocsc(), b)
        iters, method = 1, "direct"
        res = float(np.max(np.abs(A @ x - b)))
        # a few steps of iterative refinement if roundoff left us short
        while res > residual_tol and iters < min(max_iters, 5):
            x = x + spla.spsolve(A.tocsc(), b - A @ x)
            iters += 1
            res = float(np.max(np.abs(A @ x - b)))
    else:
        count = [0]

        def _cb(_):
            count[0] += 1

        scale = float(np.max(np.abs(b))) or 1.0
        solver = spla.cg if p.phi is None else spla.bicgstab
        x, _ = solver(-A if p.phi is None else A, -b if p.phi is None else b,
                      rtol=1e-3 * residual_tol / scale, atol=0.0, maxiter=max_iters, callback=_cb)
        iters, method = count[0], solver.__name__
        res = float(np.max(np.abs(A @ x - b)))
    out = bval
    out[tuple(nodes.T)] = x
    report = SolveReport(iters, res, res <= residual_tol, n, method)
    return ScalarField(p.grid, out), report


def _default_axis(k: DomainMask, y: np.ndarray, radius: float) -> np.ndarray:
    pts = np.moveaxis(k.grid.coords(), 0, -1)[k.inside] - y
    near = pts[np.linalg.norm(pts, axis=1) < radius]
    if len(near) == 0:
        raise ContractError("K has no nodes near y; cannot infer its axis")
    v = near.mean(axis=0)
    return v / np.linalg.norm(v)


def build_G(k: DomainMask, y: BasePoint, residual_tol: float = 1e-9, axis=None,
            max_iters: int = 10_000) -> ScalarField:
    """Harmonic partner on ``K``: 0 on the cone wall, rising to 1 at the far face.

    On the box faces the data is ``clip(<x - y, axis> / L, 0, 1)`` with ``L``
    the largest value of ``<x - y, axis>`` over ``K``.  This is smooth and
    nonnegative, vanishes near ``y`` and equals 1 on the far face, so it is
    a valid instance of the "arbitrary" boundary data the construction allows.
    For a half-space it makes ``G`` exactly linear.
    """
    g = k.grid
    yc = np.asarray(y.coords, float)
    if k.inside[y.index]:
        raise ContractError("the node nearest y must lie outside K (y on the boundary of K)")
    axis = _default_axis(k, yc, 0.25) if axis is None else np.asarray(axis, float) / np.linalg.norm(axis)
    x = np.moveaxis(g.coords(), 0, -1)
    along = (x - yc) @ axis
    L = float(along[k.inside].max())
    if L <= 0:
        raise ContractError("K has no far boundary in the grid")
    data = np.where(k.inside & box_layer(g), np.clip(along / L, 0.0, 1.0), 0.0)
    G, rep = solve_dirichlet(DirichletProblem(k, ScalarField(g, data), 0.0), residual_tol, max_iters)
    if not rep.converged:
        raise RuntimeError(f"G solve did not converge: residual {rep.final_residual:.3e}")
    return G


def build_barrier(k_complement: DomainMask, y: BasePoint, outer_values: ScalarField, C: float,
                  residual_tol: float = 1e-9, radius: float | None = None, max_iters: int = 10_000):
    """Solve ``Lap h = -C`` on ``K^c`` intersected with a ball around ``y``.

    Neighbours outside the mask that lie within ``radius`` of ``y`` belong
    to ``K`` and carry ``u(y)``; those beyond it are on the sphere and carry
    ``outer_values``.  ``radius`` defaults to the largest mask-node distance
    from ``y``.

    Returns
    -------
    (ScalarField, SolveReport)
    """
    if C < 0:
        raise ContractError("C must be nonnegative")
    g = k_complement.grid
    yc = np.asarray(y.coords, float)
    dist = np.linalg.norm(g.coords() - yc.reshape((-1,) + (1,) * g.dim), axis=0)
    if radius is None:
        radius = float(dist[k_complement.inside].max())
    on_sphere = dist > radius - 1e-12
    data = np.where(on_sphere, outer_values.values, y.level)
    p = DirichletProblem(k_complement, ScalarField(g, data), -float(C))
    return solve_dirichlet(p, residual_tol, max_iters)
