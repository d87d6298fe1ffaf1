"""Dini moduli, rotated touching cones, and lattice level boundaries."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, ndimage
from scipy.spatial import cKDTree

from .grid import BasePoint, ContractError, DomainMask, GridSpec, ScalarField

__all__ = [
    "DiniModulus",
    "TouchingCone",
    "LevelBoundary",
    "TouchVerdict",
    "cone_mask",
    "extract_level_boundary",
    "hausdorff_distance",
    "verify_exterior_touch",
]


@dataclass(frozen=True)
class DiniModulus:
    """Modulus of continuity ``omega`` with a certified Dini integral.

    Build instances through :meth:`zero`, :meth:`hoelder`, :meth:`log_squared`
    or :meth:`tabulated`.  ``log_squared`` and ``tabulated`` are continued
    by a constant beyond ``t = 1`` (resp. the last table entry).
    """

    family: str
    params: tuple = ()
    dini_integral: float = 0.0
    quad_error: float = 0.0

    def __call__(self, t):
        t = np.abs(np.asarray(t, float))
        if self.family == "zero":
            return np.zeros_like(t)
        if self.family == "hoelder":
            alpha, scale = self.params
            return scale * t**alpha
        if self.family == "log_squared":
            tc = np.clip(t, 0.0, 1.0)
            with np.errstate(divide="ignore"):
                return np.where(tc > 0, 1.0 / np.log(np.e / np.where(tc > 0, tc, 1.0)) ** 2, 0.0)
        if self.family == "tabulated":
            ts, ws = self.params
            return np.interp(t, ts, ws)
        raise ContractError(f"unknown modulus family {self.family!r}")

    # -- constructors -----------------------------------------------------

    @staticmethod
    def _certify(family: str, params: tuple, closed_form: float | None) -> "DiniModulus":
        val, err = DiniModulus(family, params)._log_quad(-np.inf)
        if not np.isfinite(val) or err > 1e-6 * max(1.0, abs(val)):
            raise ContractError(f"Dini integral of {family} not certified (value {val}, error {err})")
        return DiniModulus(family, params, closed_form if closed_form is not None else val, err)

    @classmethod
    def zero(cls) -> "DiniModulus":
        return cls("zero", (), 0.0, 0.0)

    @classmethod
    def hoelder(cls, alpha: float, scale: float = 1.0) -> "DiniModulus":
        """``omega(t) = scale * t**alpha``; the Dini integral is ``scale / alpha``."""
        if not 0 < alpha <= 1:
            raise ContractError("Hoelder exponent must lie in (0, 1]")
        if not scale > 0:
            raise ContractError("Hoelder scale must be positive")
        return cls._certify("hoelder", (float(alpha), float(scale)), scale / alpha)

    @classmethod
    def log_squared(cls) -> "DiniModulus":
        # substituting s = log(e / t) turns the integral into int_1^inf ds / s^2 = 1
        return cls._certify("log_squared", (), 1.0)

    @classmethod
    def tabulated(cls, t, w) -> "DiniModulus":
        t = np.asarray(t, float)
        w = np.asarray(w, float)
        if t.ndim != 1 or t.shape != w.shape or len(t) < 2:
            raise ContractError("tabulated modulus needs matching 1D arrays")
        if t[0] != 0 or w[0] != 0:
            raise ContractError("tabulated modulus must start at omega(0) = 0")
        if np.any(np.diff(t) <= 0) or np.any(np.diff(w) < 0):
            raise ContractError("tabulated modulus must be nondecreasing on increasing nodes")
        return cls._certify("tabulated", (tuple(t), tuple(w)), None)

    def _log_quad(self, s_lower: float):
        # t = exp(s) turns int omega(t)/t dt into int omega(exp(s)) ds, smooth at t -> 0
        return integrate.quad(lambda s: float(self(np.exp(s))), s_lower, 0.0, limit=200)

    def quadrature_integral(self, lower: float = 0.0) -> float:
        """``int_lower^1 omega(t)/t dt`` by adaptive quadrature."""
        return float(self._log_quad(np.log(lower) if lower > 0 else -np.inf)[0])

    def to_dict(self) -> dict:
        params = [list(p) for p in self.params] if self.family == "tabulated" else list(self.params)
        return {"family": self.family, "params": params, "dini_integral": self.dini_integral}

    @classmethod
    def from_dict(cls, d: dict) -> "DiniModulus":
        fam = d["family"]
        p = d.get("params", [])
        if fam == "zero":
            return cls.zero()
        if fam == "hoelder":
            return cls.hoelder(*p)
        if fam == "log_squared":
            return cls.log_squared()
        if fam == "tabulated":
            return cls.tabulated(p[0], p[1])
        raise ContractError(f"unknown modulus family {fam!r}")


@dataclass(frozen=True)
class TouchingCone:
    """``apex + {x : <x, axis> > |x_perp| * omega(|x_perp|)}``, trusted within ``reach``."""

    apex: tuple[float, ...]
    axis: tuple[float, ...]
    modulus: DiniModulus = field(default_factory=DiniModulus.zero)
    reach: float = 0.25

    def __post_init__(self):
        object.__setattr__(self, "apex", tuple(float(a) for a in self.apex))
        ax = np.asarray(self.axis, float)
        if ax.shape != (len(self.apex),):
            raise ContractError("axis and apex dimensions differ")
        if not np.isclose(np.linalg.norm(ax), 1.0, rtol=0, atol=1e-12):
            raise ContractError("axis must have unit length")
        object.__setattr__(self, "axis", tuple(float(a) for a in ax))
        if not self.reach > 0:
            raise ContractError("reach must be positive")

    def contains(self, x) -> np.ndarray:
        """Membership for points of shape ``(..., n)``."""
        d = np.asarray(x, float) - np.asarray(self.apex)
        ax = np.asarray(self.axis)
        s = d @ ax
        perp = np.linalg.norm(d - s[..., None] * ax, axis=-1)
        return s > perp * self.modulus(perp)

    def to_dict(self) -> dict:
        return {"apex": list(self.apex), "axis": list(self.axis), "modulus": self.modulus.to_dict(),
                "reach": self.reach}

    @classmethod
    def from_dict(cls, d: dict) -> "TouchingCone":
        mod = DiniModulus.from_dict(d.get("modulus", {"family": "zero"}))
        ax = np.asarray(d["axis"], float)
        return cls(tuple(d["apex"]), tuple(ax / np.linalg.norm(ax)), mod, float(d.get("reach", 0.25)))


def cone_mask(c: TouchingCone, g: GridSpec) -> DomainMask:
    if len(c.apex) != g.dim:
        raise ContractError("cone and grid dimensions differ")
    if not g.contains(c.apex):
        raise ContractError("cone apex lies outside the grid")
    return DomainMask(g, c.contains(np.moveaxis(g.coords(), 0, -1)))


@dataclass(frozen=True)
class LevelBoundary:
    level: float
    points: np.ndarray
    spacing: float = 0.0

    def __len__(self) -> int:
        return len(self.points)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        dim = self.points.shape[1] if self.points.ndim == 2 else 0
        w.writerow([f"x{k + 1}" for k in range(dim)])
        for p in self.points:
            w.writerow([repr(float(v)) for v in p])
        return buf.getvalue()


def extract_level_boundary(f: ScalarField, level: float, window: tuple[slice, ...] | None = None) -> LevelBoundary:
    """Crossings of ``{f = level}`` on lattice edges, by linear interpolation.

    An edge contributes when its endpoint values bracket ``level`` and
    differ; nodes lying exactly on the level therefore appear once.
    """
    g = f.grid
    v = f.values
    origin = g.lower
    if window is not None:
        v = v[window]
        origin = g.lower + g.spacing * np.array([s.start for s in window])
    d = v - level
    pts = []
    for ax in range(g.dim):
        a = np.moveaxis(d, ax, 0)
        lo, hi = a[:-1], a[1:]
        hit = (np.minimum(lo, hi) <= 0) & (np.maximum(lo, hi) >= 0) & (lo != hi)
        idx = np.argwhere(hit)
        if len(idx) == 0:
            continue
        t = lo[hit] / (lo[hit] - hi[hit])
        node = idx.astype(float)
        node[:, 0] += t
        # undo the moveaxis on the index columns
        order = list(range(1, g.dim))
        order.insert(ax, 0)
        node = node[:, order]
        pts.append(origin + g.spacing * node)
    if not pts:
        return LevelBoundary(float(level), np.zeros((0, g.dim)), g.spacing)
    p = np.concatenate(pts)
    key = np.round((p - g.lower) / g.spacing, 9)
    _, keep = np.unique(key, axis=0, return_index=True)
    return LevelBoundary(float(level), p[np.sort(keep)], g.spacing)


def hausdorff_distance(a: LevelBoundary, b: LevelBoundary) -> tuple[float, float]:
    """Return ``(sup_a dist(., b), symmetric Hausdorff distance)``."""
    if len(a) == 0 or len(b) == 0:
        raise ContractError("Hausdorff distance needs non-empty boundaries")
    ab = float(cKDTree(b.points).query(a.points)[0].max())
    ba = float(cKDTree(a.points).query(b.points)[0].max())
    return ab, max(ab, ba)


@dataclass(frozen=True)
class TouchVerdict:
    passed: bool
    reason: str
    overlap_nodes: int
    worst_point: tuple[float, ...] | None
    boundary_gap: float

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "reason": self.reason,
            "overlap_nodes": self.overlap_nodes,
            "worst_point": None if self.worst_point is None else list(self.worst_point),
            "boundary_gap": self.boundary_gap,
        }


def verify_exterior_touch(f: ScalarField, y: BasePoint, c: TouchingCone, tol: float | None = None) -> TouchVerdict:
    """Check that the cone touches the super-level set ``{f > f(y)}`` from outside at ``y``.

    Overlap nodes within ``reach`` of ``y`` are forgiven when they lie within
    ``tol`` (default one cell) of the cone's complement.  That is the lattice
    interface layer.  ``y`` must also lie within one cell diagonal of a level
    crossing; when the field is exactly constant on one side the crossings
    sit on a node staircase.
    """
    g = f.grid
    h = g.spacing
    tol = h if tol is None else float(tol)
    yc = np.asarray(y.coords, float)
    if np.linalg.norm(np.asarray(c.apex) - yc) > 1e-9:
        raise ContractError("cone apex must coincide with y")
    sl = g.window(yc, c.reach, pad=2)
    sub = g.sub(sl)
    x = np.moveaxis(sub.coords(), 0, -1)
    near = np.linalg.norm(x - yc, axis=-1) <= c.reach
    cone = c.contains(x)
    above = f.values[sl] > y.level
    depth = ndimage.distance_transform_edt(cone) * h
    bad = above & cone & near & (depth > tol + 1e-12)
    lb = extract_level_boundary(f, y.level, window=sl)
    gap = float(np.min(np.linalg.norm(lb.points - yc, axis=1))) if len(lb) else float("inf")
    if bad.any():
        d = np.where(bad, depth, -1.0)
        worst = np.unravel_index(int(np.argmax(d)), d.shape)
        return TouchVerdict(False, "cone enters the super-level set", int(bad.sum()),
                            tuple(float(v) for v in x[worst]), gap)
    if gap > h * np.sqrt(g.dim) * (1 + 1e-9):
        return TouchVerdict(False, "y is not on the level boundary", 0, None, gap)
    return TouchVerdict(True, "ok", 0, None, gap)

