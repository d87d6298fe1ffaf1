"""Uniform Cartesian lattices, node-centred scalar fields and masks.

Every other module computes on these types.  Fields are node centred and
each node owns a cell of volume ``h**n`` for quadrature purposes.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "ContractError",
    "GridSpec",
    "ScalarField",
    "DomainMask",
    "BasePoint",
    "SubsolutionVerdict",
    "base_point",
    "interpolate",
    "discrete_gradient",
    "discrete_laplacian",
    "superlevel_mask",
    "positive_part_shift",
    "check_subsolution",
    "save_sfld",
    "load_sfld",
]


class ContractError(ValueError):
    """Raised when an operation is called outside its precondition."""


@dataclass(frozen=True)
class GridSpec:
    """Uniform lattice ``origin + h * index`` with ``shape`` nodes per axis."""

    dim: int
    shape: tuple[int, ...]
    spacing: float
    origin: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "shape", tuple(int(s) for s in self.shape))
        object.__setattr__(self, "origin", tuple(float(o) for o in self.origin))
        object.__setattr__(self, "spacing", float(self.spacing))
        if self.dim not in (2, 3):
            raise ContractError(f"dim must be 2 or 3, got {self.dim}")
        if len(self.shape) != self.dim or len(self.origin) != self.dim:
            raise ContractError("shape and origin must have dim entries")
        if not self.spacing > 0:
            raise ContractError("spacing must be positive")
        if min(self.shape) < 3:
            raise ContractError("every axis needs at least 3 nodes")

    @classmethod
    def cube(cls, dim: int, h: float, extent: float = 1.0) -> "GridSpec":
        """Lattice on ``[-extent, extent]**dim`` with mesh width ``h``."""
        n = int(round(2 * extent / h))
        if not np.isclose(n * h, 2 * extent, rtol=0, atol=1e-9 * extent):
            raise ContractError("2*extent must be an integer multiple of h")
        return cls(dim, (n + 1,) * dim, h, (-extent,) * dim)

    @property
    def h(self) -> float:
        return self.spacing

    @property
    def lower(self) -> np.ndarray:
        return np.asarray(self.origin)

    @property
    def upper(self) -> np.ndarray:
        return self.lower + self.spacing * (np.asarray(self.shape) - 1)

    def axes(self) -> list[np.ndarray]:
        return [o + self.spacing * np.arange(s) for o, s in zip(self.origin, self.shape)]

    def coords(self) -> np.ndarray:
        """Node coordinates, shape ``(dim, *shape)``."""
        return np.stack(np.meshgrid(*self.axes(), indexing="ij"))

    def nearest_index(self, y) -> tuple[int, ...]:
        idx = np.rint((np.asarray(y, float) - self.lower) / self.spacing).astype(int)
        idx = np.clip(idx, 0, np.asarray(self.shape) - 1)
        return tuple(int(i) for i in idx)

    def contains(self, y, margin: float = 0.0) -> bool:
        y = np.asarray(y, float)
        return bool(np.all(y - margin >= self.lower - 1e-12) and np.all(y + margin <= self.upper + 1e-12))

    def ball_inside(self, y, r: float) -> bool:
        return self.contains(y, margin=r)

    def window(self, y, radius: float, pad: int = 0) -> tuple[slice, ...]:
        """Index slices covering the closed box of half width ``radius`` around ``y``."""
        y = np.asarray(y, float)
        lo = np.floor((y - radius - self.lower) / self.spacing).astype(int) - pad
        hi = np.ceil((y + radius - self.lower) / self.spacing).astype(int) + pad
        lo = np.clip(lo, 0, np.asarray(self.shape) - 1)
        hi = np.clip(hi, 0, np.asarray(self.shape) - 1)
        return tuple(slice(int(a), int(b) + 1) for a, b in zip(lo, hi))

    def sub(self, sl: tuple[slice, ...]) -> "GridSpec":
        start = [s.start for s in sl]
        shape = [s.stop - s.start for s in sl]
        origin = self.lower + self.spacing * np.asarray(start)
        return GridSpec(self.dim, tuple(shape), self.spacing, tuple(origin))


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class ScalarField:
    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != self.grid.shape:
            raise ContractError(f"values shape {values.shape} != grid shape {self.grid.shape}")
        if not np.all(np.isfinite(values)):
            raise ContractError("field values must be finite")
        object.__setattr__(self, "values", _readonly(values))

    @classmethod
    def from_function(cls, grid: GridSpec, fn) -> "ScalarField":
        """Sample ``fn`` on the nodes; ``fn`` receives coordinates of shape ``(dim, ...)``."""
        return cls(grid, np.broadcast_to(fn(grid.coords()), grid.shape))

    def __add__(self, other):
        if isinstance(other, ScalarField):
            _same_grid(self.grid, other.grid)
            return ScalarField(self.grid, self.values + other.values)
        return ScalarField(self.grid, self.values + other)

    def __sub__(self, other):
        if isinstance(other, ScalarField):
            _same_grid(self.grid, other.grid)
            return ScalarField(self.grid, self.values - other.values)
        return ScalarField(self.grid, self.values - other)

    def __mul__(self, c):
        return ScalarField(self.grid, self.values * c)

    __rmul__ = __mul__

    def __neg__(self):
        return ScalarField(self.grid, -self.values)


@dataclass(frozen=True, eq=False)
class DomainMask:
    grid: GridSpec
    inside: np.ndarray

    def __post_init__(self):
        inside = np.asarray(self.inside, dtype=bool)
        if inside.shape != self.grid.shape:
            raise ContractError("mask shape does not match grid")
        object.__setattr__(self, "inside", _readonly(inside))

    def __and__(self, other: "DomainMask") -> "DomainMask":
        _same_grid(self.grid, other.grid)
        return DomainMask(self.grid, self.inside & other.inside)

    def __or__(self, other: "DomainMask") -> "DomainMask":
        _same_grid(self.grid, other.grid)
        return DomainMask(self.grid, self.inside | other.inside)

    def __invert__(self) -> "DomainMask":
        return DomainMask(self.grid, ~self.inside)

    def count(self) -> int:
        return int(self.inside.sum())

    @classmethod
    def full(cls, grid: GridSpec) -> "DomainMask":
        return cls(grid, np.ones(grid.shape, bool))

    @classmethod
    def ball(cls, grid: GridSpec, center, radius: float) -> "DomainMask":
        c = np.asarray(center, float).reshape((-1,) + (1,) * grid.dim)
        return cls(grid, np.sum((grid.coords() - c) ** 2, axis=0) < radius**2)


@dataclass(frozen=True, eq=False)
class BasePoint:
    """A base point ``y`` together with its level value ``u(y)``."""

    coords: np.ndarray
    level: float
    index: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "coords", _readonly(np.asarray(self.coords, float)))
        object.__setattr__(self, "level", float(self.level))


def _same_grid(a: GridSpec, b: GridSpec) -> None:
    if a != b:
        raise ContractError("grid mismatch")


def interpolate(f: ScalarField | np.ndarray, points, grid: GridSpec | None = None) -> np.ndarray:
    """Multilinear interpolation of nodal values at ``points`` (shape ``(m, dim)``)."""
    if isinstance(f, ScalarField):
        grid, values = f.grid, f.values
    else:
        values = np.asarray(f)
    pts = np.atleast_2d(np.asarray(points, float))
    s = (pts - grid.lower) / grid.spacing
    shape = np.asarray(grid.shape)
    i0 = np.clip(np.floor(s).astype(int), 0, shape - 2)
    t = s - i0
    out = np.zeros(len(pts))
    for corner in itertools.product((0, 1), repeat=grid.dim):
        c = np.asarray(corner)
        w = np.prod(np.where(c == 1, t, 1.0 - t), axis=1)
        out += w * values[tuple((i0 + c).T)]
    return out


def base_point(f: ScalarField, y, level: float | None = None) -> BasePoint:
    """Build a :class:`BasePoint`; the level defaults to the interpolated value of ``f``."""
    y = np.asarray(y, float)
    if y.shape != (f.grid.dim,):
        raise ContractError("base point has wrong dimension")
    if not f.grid.contains(y):
        raise ContractError(f"base point {y} lies outside the grid")
    if level is None:
        level = float(interpolate(f, y[None])[0])
    return BasePoint(y, level, f.grid.nearest_index(y))


def _shift(a: np.ndarray, axis: int, step: int, fill) -> np.ndarray:
    """``out[i] = a[i + step]`` along ``axis``; out-of-range entries get ``fill``."""
    out = np.full_like(a, fill)
    src = [slice(None)] * a.ndim
    dst = [slice(None)] * a.ndim
    if step > 0:
        src[axis], dst[axis] = slice(step, None), slice(None, -step)
    else:
        src[axis], dst[axis] = slice(None, step), slice(-step, None)
    out[tuple(dst)] = a[tuple(src)]
    return out


def _masked_gradient(values: np.ndarray, inside: np.ndarray, h: float) -> tuple[np.ndarray, np.ndarray]:
    """Centred where both neighbours are inside, one-sided where one is.

    Returns ``(grad, ok)``; ``grad`` has shape ``(dim, *shape)`` and ``ok`` flags
    the components that could be formed.
    """
    dim = values.ndim
    grad = np.zeros((dim,) + values.shape)
    ok = np.zeros((dim,) + values.shape, bool)
    for k in range(dim):
        fwd = _shift(values, k, 1, np.nan)
        bwd = _shift(values, k, -1, np.nan)
        fin = _shift(inside, k, 1, False)
        bin_ = _shift(inside, k, -1, False)
        both = inside & fin & bin_
        only_f = inside & fin & ~bin_
        only_b = inside & bin_ & ~fin
        g = np.zeros(values.shape)
        g[both] = (fwd[both] - bwd[both]) / (2 * h)
        g[only_f] = (fwd[only_f] - values[only_f]) / h
        g[only_b] = (values[only_b] - bwd[only_b]) / h
        grad[k] = g
        ok[k] = both | only_f | only_b
    return grad, ok


def discrete_gradient(f: ScalarField, mask: DomainMask | None = None) -> np.ndarray:
    """Nodal gradient, shape ``(dim, *shape)``; NaN marks components with no stencil.

    Centred differences where the full stencil lies inside ``mask``,
    first-order one-sided differences where only one neighbour does.
    """
    if mask is None:
        mask = DomainMask.full(f.grid)
    _same_grid(f.grid, mask.grid)
    grad, ok = _masked_gradient(f.values, mask.inside, f.grid.spacing)
    grad[~ok] = np.nan
    return grad


def discrete_laplacian(f: ScalarField) -> ScalarField:
    """``(sum of neighbours - 2n * centre) / h**2`` on the interior sub-lattice."""
    v = f.values
    inner = tuple(slice(1, -1) for _ in range(f.grid.dim))
    lap = -2 * f.grid.dim * v[inner]
    for k in range(f.grid.dim):
        for step in (-1, 1):
            sl = list(inner)
            sl[k] = slice(1 + step, v.shape[k] - 1 + step)
            lap = lap + v[tuple(sl)]
    return ScalarField(f.grid.sub(inner_slices(f.grid)), lap / f.grid.spacing**2)


def inner_slices(grid: GridSpec) -> tuple[slice, ...]:
    return tuple(slice(1, s - 1) for s in grid.shape)


def superlevel_mask(f: ScalarField, y: BasePoint) -> DomainMask:
    """Nodes where ``f > f(y)`` (strict)."""
    return DomainMask(f.grid, f.values > y.level)


def positive_part_shift(f: ScalarField, y: BasePoint) -> ScalarField:
    return ScalarField(f.grid, np.maximum(f.values - y.level, 0.0))


@dataclass(frozen=True)
class SubsolutionVerdict:
    passed: bool
    worst_value: float
    worst_index: tuple[int, ...]
    worst_point: tuple[float, ...]


def check_subsolution(
    f: ScalarField,
    lower_bound: float,
    tol: float = 0.0,
    exclude: DomainMask | None = None,
) -> SubsolutionVerdict:
    """Check ``discrete_laplacian(f) >= lower_bound - tol`` at interior nodes.

    Nodes flagged in ``exclude`` are skipped (e.g. a tube around a known
    singularity).
    """
    if tol < 0:
        raise ContractError("tol must be non-negative")
    lap = discrete_laplacian(f)
    vals = lap.values.copy()
    if exclude is not None:
        _same_grid(f.grid, exclude.grid)
        vals[exclude.inside[inner_slices(f.grid)]] = np.inf
    if not np.isfinite(vals).any():
        return SubsolutionVerdict(True, float("inf"), (), ())
    flat = int(np.argmin(vals))
    sub_idx = np.unravel_index(flat, vals.shape)
    idx = tuple(int(i) + 1 for i in sub_idx)
    worst = float(vals[sub_idx])
    point = tuple(float(c) for c in f.grid.lower + f.grid.spacing * np.asarray(idx))
    return SubsolutionVerdict(worst >= lower_bound - tol, worst, idx, point)


# --- SFLD v1 text format -------------------------------------------------

_MAGIC = "SFLD v1"


def save_sfld(obj: ScalarField | DomainMask, path) -> None:
    """Write a field or mask; values use ``repr`` so the round trip is exact."""
    g = obj.grid
    lines = [
        _MAGIC,
        f"dim {g.dim}",
        "shape " + " ".join(str(s) for s in g.shape),
        f"spacing {g.spacing!r}",
        "origin " + " ".join(repr(o) for o in g.origin),
    ]
    if isinstance(obj, DomainMask):
        body = np.where(obj.inside.ravel(), "1", "0")
    else:
        body = [repr(float(v)) for v in obj.values.ravel()]
    Path(path).write_text("\n".join(lines) + "\n" + "\n".join(body) + "\n")


def load_sfld(path, as_mask: bool = False) -> ScalarField | DomainMask:
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0].strip() != _MAGIC:
        raise ContractError(f"{path}: not an SFLD v1 file")
    header = {}
    for line in lines[1:5]:
        key, *rest = line.split()
        header[key] = rest
    try:
        grid = GridSpec(
            int(header["dim"][0]),
            tuple(int(s) for s in header["shape"]),
            float(header["spacing"][0]),
            tuple(float(o) for o in header["origin"]),
        )
    except KeyError as exc:
        raise ContractError(f"{path}: missing header {exc}") from None
    body = [ln for ln in lines[5:] if ln.strip()]
    if len(body) != int(np.prod(grid.shape)):
        raise ContractError(f"{path}: expected {np.prod(grid.shape)} values, found {len(body)}")
    values = np.array([float(b) for b in body]).reshape(grid.shape)
    if as_mask:
        if not np.all((values == 0) | (values == 1)):
            raise ContractError(f"{path}: mask values must be 0 or 1")
        return DomainMask(grid, values == 1)
    return ScalarField(grid, values)
