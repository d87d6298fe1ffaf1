"""Weighted Dirichlet integrals, the ACF product and the gradient they define.

For a base point ``y`` and radius ``r``

    I(r, y, v) = r**-2 * integral over B_r(y) of |grad v|**2 * |x - y|**(2 - n)

and the product ``P(r) = I(r, y, h+) * I(r, y, h-)`` for a disjointly
supported pair.  The gradient of ``u`` at ``y`` is read off from the
small-radius limit of ``I(r, y, (u - u(y))+) / c0``.

Quadrature
----------
Integrands here are positive parts, so they carry a kink along the zero
set.  Plain nodal differences smear that kink over one cell, which biases
``I`` by ``O(h / r)`` and ruins the extrapolation to ``r -> 0``.  The rule
used instead:

* gradients are taken with one-sided differences that stay inside the
  positive set;
* nodes just outside the positive set get a value linearly extrapolated
  from their inside neighbours, so the zero crossing is located inside
  each cut cell;
* every lattice cell is split into ``s**n`` sub-cells, and the multilinear
  interpolants of value and gradient are evaluated at their midpoints;
* in 3D the ball ``|x - y| < h`` is removed and integrated in spherical
  coordinates, where the Jacobian cancels the kernel singularity.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field

import numpy as np

from .grid import (
    BasePoint,
    ContractError,
    GridSpec,
    ScalarField,
    _masked_gradient,
    _same_grid,
    base_point,
)

log = logging.getLogger(__name__)

__all__ = [
    "AdmissibilityError",
    "AcfConstants",
    "LimitFit",
    "RadiusSweep",
    "c0_closed_form",
    "c0_grid_quadrature",
    "kernel_ball_integral",
    "default_radii",
    "weighted_dirichlet",
    "weighted_dirichlet_sweep",
    "positive_part_energy",
    "acf_product",
    "acf_product_sweep",
    "monotonicity_sweep",
    "almost_monotonicity_fit",
    "fit_limit",
    "extrapolate_limit",
    "radius_sweep",
    "gradient_estimate",
    "quotient_identity_check",
    "shell_samples",
    "stability_check",
]

_CHUNK = 120_000


class AdmissibilityError(ValueError):
    """A pair ``(h+, h-)`` overlaps beyond one interface layer."""

    def __init__(self, message, worst_index=None, worst_point=None):
        super().__init__(message)
        self.worst_index = worst_index
        self.worst_point = worst_point


# --- constants -----------------------------------------------------------


def c0_closed_form(n: int) -> float:
    """Half the integral of ``|x|**(2-n)`` over the unit ball.

    Radially this is ``0.5 * |S^{n-1}| * int_0^1 t dt``, i.e. ``pi/2`` for
    ``n = 2`` and ``pi`` for ``n = 3``.
    """
    if n == 2:
        sphere = 2 * np.pi
    elif n == 3:
        sphere = 4 * np.pi
    else:
        raise ContractError(f"c0 is only provided for n in (2, 3), got {n}")
    return 0.5 * sphere * 0.5


@dataclass(frozen=True)
class AcfConstants:
    c0: float
    cjk_C: float = 0.0
    cjk_delta: float = 1.0

    def __post_init__(self):
        if not self.c0 > 0:
            raise ContractError("c0 must be positive")
        if not 0 < self.cjk_delta <= 1:
            raise ContractError("cjk_delta must lie in (0, 1]")


# --- quadrature engine ---------------------------------------------------


def _shift_nd(a: np.ndarray, offset, fill) -> np.ndarray:
    """``out[i] = a[i + offset]`` with ``fill`` outside the array."""
    out = np.full_like(a, fill)
    src, dst = [], []
    for o, n in zip(offset, a.shape[-len(offset):]):
        if o >= 0:
            src.append(slice(o, n))
            dst.append(slice(0, n - o))
        else:
            src.append(slice(0, n + o))
            dst.append(slice(-o, n))
    lead = (slice(None),) * (a.ndim - len(offset))
    out[lead + tuple(dst)] = a[lead + tuple(src)]
    return out


def _extend_across_zero(w: np.ndarray, h: float):
    """Gradient inside ``{w > 0}`` plus a one-layer linear extension outside.

    Returns ``(w_ext, g_ext)``; on nodes adjacent to the positive set ``w_ext``
    is ``min(w, extrapolated value)`` and ``g_ext`` the mean neighbour gradient.
    """
    dim = w.ndim
    inside = w > 0
    g, _ = _masked_gradient(w, inside, h)
    s_w = np.zeros_like(w)
    s_g = np.zeros_like(g)
    count = np.zeros(w.shape)
    for off in itertools.product((-1, 0, 1), repeat=dim):
        if not any(off):
            continue
        inq = _shift_nd(inside, off, False)
        wq = _shift_nd(w, off, 0.0)
        gq = _shift_nd(g, off, 0.0)
        step = -h * np.asarray(off, float).reshape((dim,) + (1,) * dim)
        extrap = wq + np.sum(gq * step, axis=0)
        s_w += np.where(inq, extrap, 0.0)
        s_g += np.where(inq, gq, 0.0)
        count += inq
    rim = ~inside & (count > 0)
    w_ext = w.copy()
    g_ext = g.copy()
    w_ext[rim] = np.minimum(w[rim], s_w[rim] / count[rim])
    g_ext[:, rim] = s_g[:, rim] / count[rim]
    g_ext[:, ~inside & ~rim] = 0.0
    return w_ext, g_ext, inside | rim


def _fibonacci_sphere(n_pts: int) -> np.ndarray:
    i = np.arange(n_pts) + 0.5
    z = 1 - 2 * i / n_pts
    phi = np.pi * (1 + 5**0.5) * i
    rho = np.sqrt(1 - z**2)
    return np.stack([rho * np.cos(phi), rho * np.sin(phi), z], axis=1)


def _interp_local(arrs, lower, h, pts):
    """Multilinear interpolation of several same-shape arrays at ``pts``."""
    dim = pts.shape[1]
    shape = np.asarray(arrs[0].shape)
    s = (pts - lower) / h
    i0 = np.clip(np.floor(s).astype(int), 0, shape - 2)
    t = s - i0
    outs = [np.zeros(len(pts)) for _ in arrs]
    for corner in itertools.product((0, 1), repeat=dim):
        c = np.asarray(corner)
        wt = np.prod(np.where(c == 1, t, 1.0 - t), axis=1)
        idx = tuple((i0 + c).T)
        for o, a in zip(outs, arrs):
            o += wt * a[idx]
    return outs


def _energy_integrals(
    w: np.ndarray,
    g: np.ndarray,
    active: np.ndarray,
    lower: np.ndarray,
    h: float,
    y: np.ndarray,
    radii: np.ndarray,
    subdiv: int,
    core: float,
) -> np.ndarray:
    """``int_{B_r(y)} 1{w>0} |g|^2 |x-y|^(2-n) dx`` for every r in ``radii``."""
    dim = w.ndim
    corners = list(itertools.product((0, 1), repeat=dim))
    cell_shape = tuple(n - 1 for n in w.shape)
    cell_active = np.zeros(cell_shape, bool)
    for c in corners:
        cell_active |= active[tuple(slice(ci, ci + n) for ci, n in zip(c, cell_shape))]
    cells = np.argwhere(cell_active)
    # sub-cell midpoints and the multilinear weights of the 2^n corners
    t1 = (np.arange(subdiv) + 0.5) / subdiv
    offs = np.array(list(itertools.product(t1, repeat=dim)))
    cw = np.array([np.prod(np.where(np.asarray(c) == 1, offs, 1.0 - offs), axis=1) for c in corners])
    dv = (h / subdiv) ** dim
    acc = np.zeros(len(radii))
    rmax = radii.max()
    for start in range(0, len(cells), _CHUNK):
        blk = cells[start:start + _CHUNK]
        base = lower + h * blk
        # quick reject of cells entirely outside the largest ball
        near = np.linalg.norm(base + 0.5 * h - y, axis=1) < rmax + h * np.sqrt(dim)
        blk, base = blk[near], base[near]
        if not len(blk):
            continue
        wc = np.stack([w[tuple((blk + c).T)] for c in corners], axis=1)
        wi = wc @ cw
        gsq = np.zeros_like(wi)
        for k in range(dim):
            gc = np.stack([g[k][tuple((blk + c).T)] for c in corners], axis=1)
            gsq += (gc @ cw) ** 2
        pts = base[:, None, :] + h * offs[None, :, :]
        d = np.linalg.norm(pts - y, axis=2)
        val = np.where(wi > 0, gsq, 0.0) * dv
        if dim == 3:
            val = np.where(d >= core, val / np.maximum(d, 1e-300), 0.0)
        for j, r in enumerate(radii):
            acc[j] += val[d < r].sum()
    if dim == 3 and core > 0:
        acc += _core_integral(w, g, lower, h, y, core)
    return acc


def _core_integral(w, g, lower, h, y, core, n_radial=6, n_dirs=400):
    """Spherical-coordinate quadrature of the 3D integrand on ``B_core(y)``."""
    xs, ws = np.polynomial.legendre.leggauss(n_radial)
    ts = 0.5 * core * (xs + 1)
    wts = 0.5 * core * ws
    dirs = _fibonacci_sphere(n_dirs)
    total = 0.0
    for t, wt in zip(ts, wts):
        pts = y + t * dirs
        vals = _interp_local([w, g[0], g[1], g[2]], lower, h, pts)
        f = np.where(vals[0] > 0, vals[1] ** 2 + vals[2] ** 2 + vals[3] ** 2, 0.0)
        # |x-y|^(2-n) * t^(n-1) = t
        total += wt * t * f.mean() * 4 * np.pi
    return total


def _default_subdiv(dim: int) -> int:
    return 4 if dim == 2 else 3


def _check_radii(grid: GridSpec, y: np.ndarray, radii, min_cells: float = 3.0) -> np.ndarray:
    radii = np.atleast_1d(np.asarray(radii, float))
    if np.any(radii <= 0):
        raise ContractError("radii must be positive")
    if np.any(radii < min_cells * grid.spacing - 1e-12):
        raise ContractError(f"radii below {min_cells}h are under-resolved (h={grid.spacing})")
    if not grid.ball_inside(y, radii.max()):
        raise ContractError(f"ball of radius {radii.max()} around {tuple(y)} exits the grid")
    return radii


def _positive_energy(values: np.ndarray, grid: GridSpec, y: np.ndarray, level: float, radii,
                     subdiv: int | None = None) -> np.ndarray:
    """``I(r, y, (f - level)+)`` for each radius; ``values`` is the full nodal array."""
    radii = _check_radii(grid, y, radii)
    subdiv = subdiv or _default_subdiv(grid.dim)
    sl = grid.window(y, radii.max(), pad=2)
    sub = grid.sub(sl)
    w = values[sl] - level
    w_ext, g_ext, active = _extend_across_zero(w, grid.spacing)
    core = grid.spacing if grid.dim == 3 else 0.0
    acc = _energy_integrals(w_ext, g_ext, active, sub.lower, grid.spacing, y, radii, subdiv, core)
    return acc / radii**2


def kernel_ball_integral(grid: GridSpec, y, r: float, subdiv: int | None = None) -> float:
    """Grid quadrature of ``int_{B_r(y)} |x-y|^(2-n) dx`` with the same rule as ``I``."""
    y = np.asarray(y, float)
    radii = _check_radii(grid, y, [r], min_cells=0)
    subdiv = subdiv or _default_subdiv(grid.dim)
    sl = grid.window(y, r, pad=1)
    sub = grid.sub(sl)
    w = np.ones(sub.shape)
    g = np.zeros((grid.dim,) + sub.shape)
    g[0] = 1.0
    core = grid.spacing if grid.dim == 3 else 0.0
    acc = _energy_integrals(w, g, np.ones(sub.shape, bool), sub.lower, grid.spacing, y, radii, subdiv, core)
    return float(acc[0])


def c0_grid_quadrature(grid: GridSpec, subdiv: int | None = None) -> float:
    """``c0`` from grid quadrature over the unit ball centred at the origin."""
    return 0.5 * kernel_ball_integral(grid, np.zeros(grid.dim), 1.0, subdiv)


def default_radii(grid: GridSpec) -> np.ndarray:
    """Decreasing radii from ``16h`` down to ``4h``."""
    return grid.spacing * np.array([16.0, 13.0, 10.0, 8.0, 6.0, 5.0, 4.0])


def _as_point(f: ScalarField, y) -> BasePoint:
    return y if isinstance(y, BasePoint) else base_point(f, y)


def weighted_dirichlet(v: ScalarField, y, r: float) -> float:
    """``I(r, y, v)`` for a non-negative field ``v``."""
    return float(weighted_dirichlet_sweep(v, y, [r])[0])


def weighted_dirichlet_sweep(v: ScalarField, y, radii) -> np.ndarray:
    y = _as_point(v, y)
    return _positive_energy(v.values, v.grid, y.coords, 0.0, radii)


def positive_part_energy(u: ScalarField, y, radii) -> np.ndarray:
    """``I(r, y, (u - u(y))+)`` for each radius."""
    y = _as_point(u, y)
    return _positive_energy(u.values, u.grid, y.coords, y.level, radii)


# --- the ACF product -----------------------------------------------------


def _check_admissible(hp: ScalarField, hm: ScalarField, y: BasePoint, rmax: float, rel_tol: float = 1e-12):
    _same_grid(hp.grid, hm.grid)
    grid = hp.grid
    sl = grid.window(y.coords, rmax, pad=1)
    a, b = hp.values[sl], hm.values[sl]
    if a.min() < -rel_tol * max(abs(a).max(), 1.0) or b.min() < -rel_tol * max(abs(b).max(), 1.0):
        raise AdmissibilityError("admissible pairs must be non-negative")
    scale = max(a.max(), 0.0) * max(b.max(), 0.0)
    if scale == 0:
        return
    prod = a * b
    overlap = prod > rel_tol * scale
    if not overlap.any():
        return
    # tolerated: nodes touching the zero set of both functions (one interface layer)
    near_zero_a = np.zeros_like(overlap)
    near_zero_b = np.zeros_like(overlap)
    for off in itertools.product((-1, 0, 1), repeat=grid.dim):
        near_zero_a |= _shift_nd(a <= 0, off, False)
        near_zero_b |= _shift_nd(b <= 0, off, False)
    bad = overlap & ~(near_zero_a & near_zero_b)
    if bad.any():
        masked = np.where(bad, prod, -np.inf)
        loc = np.unravel_index(int(np.argmax(masked)), masked.shape)
        idx = tuple(int(s.start + i) for s, i in zip(sl, loc))
        pt = tuple(float(c) for c in grid.lower + grid.spacing * np.asarray(idx))
        raise AdmissibilityError(
            f"supports overlap at node {idx} (x={pt}), h+*h- = {prod[loc]:.3g}", idx, pt
        )


def acf_product(hp: ScalarField, hm: ScalarField, y, r: float) -> float:
    return float(acf_product_sweep(hp, hm, y, [r])[0])


def acf_product_sweep(hp: ScalarField, hm: ScalarField, y, radii) -> np.ndarray:
    """``I(r, y, h+) * I(r, y, h-)`` for every radius, after an admissibility check."""
    y = _as_point(hp, y)
    radii = np.atleast_1d(np.asarray(radii, float))
    _check_admissible(hp, hm, y, radii.max())
    return weighted_dirichlet_sweep(hp, y, radii) * weighted_dirichlet_sweep(hm, y, radii)


# --- sweeps and limits ---------------------------------------------------


@dataclass(frozen=True)
class LimitFit:
    """Least-squares fit ``value(r) = limit + slope * r**delta``."""

    limit: float
    raw_limit: float
    slope: float
    delta: float
    residual: float
    low_confidence: bool
    decreasing: bool


def fit_limit(radii, values, delta: float = 1.0, residual_threshold: float = 0.05) -> LimitFit:
    radii = np.asarray(radii, float)
    values = np.asarray(values, float)
    if len(radii) < 2:
        raise ContractError("need at least two radii to extrapolate")
    A = np.stack([np.ones_like(radii), radii**delta], axis=1)
    coef, *_ = np.linalg.lstsq(A, values, rcond=None)
    resid = values - A @ coef
    scale = max(np.abs(values).max(), 1e-300)
    rel = float(np.sqrt(np.mean(resid**2)) / scale) if np.any(values) else 0.0
    raw = float(coef[0])
    if raw < 0:
        log.info("negative extrapolated limit %.3g clamped to 0", raw)
    return LimitFit(
        limit=max(raw, 0.0),
        raw_limit=raw,
        slope=float(coef[1]),
        delta=delta,
        residual=rel,
        low_confidence=rel > residual_threshold,
        decreasing=bool(coef[1] < 0),
    )


@dataclass(frozen=True, eq=False)
class RadiusSweep:
    """Samples ``r -> I`` (and optionally the ACF product) with a fitted limit."""

    radii: np.ndarray
    values: np.ndarray
    fit: LimitFit
    products: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        radii = np.asarray(self.radii, float)
        order = np.argsort(-radii)
        object.__setattr__(self, "radii", radii[order])
        object.__setattr__(self, "values", np.asarray(self.values, float)[order])
        if self.products is not None:
            object.__setattr__(self, "products", np.asarray(self.products, float)[order])
        if np.any(np.diff(self.radii) >= 0):
            raise ContractError("sweep radii must be distinct")

    @classmethod
    def from_values(cls, radii, values, products=None, delta: float = 1.0, **meta) -> "RadiusSweep":
        return cls(radii, values, fit_limit(radii, values, delta), products, meta)

    def to_csv(self) -> str:
        lines = ["r,I,I_product,fit_residual"]
        prods = self.products if self.products is not None else [None] * len(self.radii)
        for r, v, p in zip(self.radii, self.values, prods):
            ptxt = "" if p is None else repr(float(p))
            lines.append(f"{float(r)!r},{float(v)!r},{ptxt},{self.fit.residual!r}")
        return "\n".join(lines) + "\n"


def extrapolate_limit(s: RadiusSweep) -> float:
    """Limit ``r -> 0+`` of the sweep, clamped at zero."""
    if len(s.radii) < 4 or s.radii.max() / s.radii.min() < 4 - 1e-9:
        log.warning("sweep has %d radii spanning factor %.2f; limit is weakly determined",
                    len(s.radii), s.radii.max() / s.radii.min())
    return s.fit.limit


def radius_sweep(u: ScalarField, y, radii=None, delta: float = 1.0) -> RadiusSweep:
    """Sweep of ``I(r, y, u_y)`` with ``u_y = (u - u(y))+``."""
    y = _as_point(u, y)
    radii = default_radii(u.grid) if radii is None else np.asarray(radii, float)
    vals = positive_part_energy(u, y, radii)
    return RadiusSweep.from_values(radii, vals, delta=delta, y=tuple(map(float, y.coords)), level=y.level)


def gradient_estimate(u: ScalarField, y, radii=None, delta: float = 1.0) -> float:
    """``|grad u(y)| = sqrt(lim_{r->0} I(r, y, u_y) / c0)``."""
    s = radius_sweep(u, y, radii, delta)
    return float(np.sqrt(extrapolate_limit(s) / c0_closed_form(u.grid.dim)))


# --- monotonicity --------------------------------------------------------


def monotonicity_sweep(hp, hm, y, radii, tol_rel: float = 1e-3, tol_abs: float = 0.0):
    """Evaluate the ACF product on ``radii`` and check it is non-decreasing in r.

    Returns ``(RadiusSweep, passed)``; the sweep's ``values`` hold the product.
    """
    y = _as_point(hp, y)
    radii = np.asarray(radii, float)
    prods = acf_product_sweep(hp, hm, y, radii)
    sweep = RadiusSweep.from_values(radii, prods, products=prods)
    up = sweep.values[::-1]  # increasing radii
    ok = bool(np.all(up[:-1] <= up[1:] * (1 + tol_rel) + tol_abs))
    return sweep, ok


def almost_monotonicity_fit(hp, hm, y, radii, delta: float = 1.0):
    """Smallest ``C >= 0`` with ``P(rho) <= (1 + r) P(r) + C r**delta`` on all sampled ``rho <= r``.

    Returns ``(C, passed, sweep)``; a finite C always exists on finite data,
    so ``passed`` is a consistency flag and the magnitude of C is the result.
    """
    if not 0 < delta <= 1:
        raise ContractError("delta must lie in (0, 1]")
    y = _as_point(hp, y)
    radii = np.asarray(radii, float)
    prods = acf_product_sweep(hp, hm, y, radii)
    C = 0.0
    for r, pr in zip(radii, prods):
        for rho, prho in zip(radii, prods):
            if rho <= r:
                C = max(C, (prho - (1 + r) * pr) / r**delta)
    ok = bool(np.isfinite(C))
    for r, pr in zip(radii, prods):
        for rho, prho in zip(radii, prods):
            if rho <= r and prho > (1 + r) * pr + C * r**delta + 1e-12 * max(abs(prho), 1.0):
                ok = False
    sweep = RadiusSweep.from_values(radii, prods, products=prods)
    return C, ok, sweep


@dataclass(frozen=True)
class QuotientCheck:
    passed: bool
    limit_a: float
    limit_b: float
    rel_diff: float
    hopf_a: float
    hopf_b: float
    ratio_of_limits_a: float = float("nan")
    ratio_of_limits_b: float = float("nan")


def quotient_identity_check(u: ScalarField, y, G_a: ScalarField, G_b: ScalarField, radii=None,
                            rel_tol: float = 0.05) -> QuotientCheck:
    """Compare the quotient ``P(r, y, u_y, G) / I(r, y, G)`` for two partners ``G``.

    Since ``P`` is the product ``I(u_y) I(G)``, the quotient at a fixed radius
    is identical for every partner.  The verdict therefore compares the
    ratio of the *separately* extrapolated limits, ``lim P / lim I(G)``.
    That is where the two partners differ, through their boundary behaviour
    at ``y``.  ``limit_a`` and ``limit_b`` hold these ratios.  The
    ``ratio_of_limits_*`` fields keep the extrapolated limit of the pointwise
    quotient for reference.  ``hopf_*`` is ``sqrt(lim I(r, y, G) / c0)``, the
    measured boundary gradient of each partner.
    """
    y = _as_point(u, y)
    radii = default_radii(u.grid) if radii is None else np.asarray(radii, float)
    uy = ScalarField(u.grid, np.maximum(u.values - y.level, 0.0))
    c0 = c0_closed_form(u.grid.dim)
    lims, pointwise, hopf = [], [], []
    for G in (G_a, G_b):
        prod = acf_product_sweep(uy, G, y, radii)
        iG = weighted_dirichlet_sweep(G, y, radii)
        if np.any(iG <= 0):
            raise ContractError("partner G has zero energy at some radius")
        lim_p = fit_limit(radii, prod).limit
        lim_g = fit_limit(radii, iG).limit
        lims.append(lim_p / lim_g)
        pointwise.append(fit_limit(radii, prod / iG).limit)
        hopf.append(float(np.sqrt(max(lim_g, 0.0) / c0)))
    a, b = lims
    denom = max(abs(a), abs(b))
    rel = 0.0 if denom == 0 else abs(a - b) / denom
    return QuotientCheck(rel <= rel_tol, a, b, rel, hopf[0], hopf[1], pointwise[0], pointwise[1])


# --- stability of I under moving the centre -------------------------------


def shell_samples(y0, radius: float, count: int, seed: int = 0) -> np.ndarray:
    """Axis-aligned points at ``0.99 * radius`` plus uniform points in the open ball."""
    y0 = np.asarray(y0, float)
    dim = len(y0)
    pts = []
    for k in range(dim):
        for sgn in (1, -1):
            e = np.zeros(dim)
            e[k] = sgn * 0.99 * radius
            pts.append(y0 + e)
    rng = np.random.default_rng(seed)
    n_rand = max(count - len(pts), 0)
    if n_rand:
        d = rng.normal(size=(n_rand, dim))
        d /= np.linalg.norm(d, axis=1, keepdims=True)
        rad = radius * rng.uniform(size=n_rand) ** (1.0 / dim)
        pts.extend(y0 + d * rad[:, None])
    return np.array(pts[:max(count, 1)])


def stability_check(u: ScalarField, y0, eps: float, samples: int = 16, seed: int = 0, points=None):
    """Sup over ``|y - y0| < eps**2`` of ``|I(r_eps, y, u_y) - I(r_eps, y0, u_y)|``.

    ``r_eps = eps + |y - y0|`` per sample.  ``points`` replaces the random
    shell when given.  Returns ``(sup_deviation, sup_deviation / eps)``.
    """
    if samples < 8:
        raise ContractError("need at least 8 samples")
    y0 = _as_point(u, y0)
    if not u.grid.ball_inside(y0.coords, eps + 2 * eps**2):
        raise ContractError("eps too large for the grid")
    dev = 0.0
    pts = shell_samples(y0.coords, eps**2, samples, seed) if points is None else np.atleast_2d(points)
    for yc in pts:
        y = base_point(u, yc)
        r_eps = eps + float(np.linalg.norm(y.coords - y0.coords))
        at_y = _positive_energy(u.values, u.grid, y.coords, y.level, [r_eps])[0]
        at_y0 = _positive_energy(u.values, u.grid, y0.coords, y.level, [r_eps])[0]
        dev = max(dev, abs(at_y - at_y0))
    return dev, dev / eps
