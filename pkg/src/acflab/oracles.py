"""Closed-form reference fields.

The Alt-Caffarelli example lives in 3D:

    u(x) = r * max(f(theta) / f'(theta0), 0),
    f(theta) = 2 + cos(theta) * log((1 - cos(theta)) / (1 + cos(theta))),

with ``theta`` the polar angle from the positive ``x3`` axis and ``theta0``
the zero of ``f`` in ``(0, pi/2)``.  Differentiating by hand,

    f'(theta) = -sin(theta) * log((1 - cos) / (1 + cos)) + 2 cos(theta) / sin(theta),

which vanishes at ``theta = pi/2`` as required by the boundary condition.
For a 1-homogeneous ``u = r g(theta)`` one has ``|grad u|^2 = g^2 + g'^2``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import dblquad
from scipy.interpolate import RegularGridInterpolator
from scipy.optimize import brentq

from .grid import BasePoint, ContractError, GridSpec, ScalarField

__all__ = [
    "OracleError",
    "AltCaffarelliProfile",
    "ac_profile_build",
    "ac_ode_residual",
    "Oracle",
    "LinearField",
    "HalfPlaneLinear",
    "AltCaffarelli",
    "AnnulusCapacitor",
    "HomogeneousCone2D",
    "oracle_sample",
    "polar_dirichlet_quadrature",
    "blowup_rescale",
]


class OracleError(RuntimeError):
    pass


def _log_ratio(theta):
    c = np.cos(theta)
    return np.log((1 - c) / (1 + c))


@dataclass(frozen=True)
class AltCaffarelliProfile:
    theta0: float
    fprime_theta0: float

    @staticmethod
    def f(theta):
        return 2 + np.cos(theta) * _log_ratio(theta)

    @staticmethod
    def fprime(theta):
        return -np.sin(theta) * _log_ratio(theta) + 2 * np.cos(theta) / np.sin(theta)

    def g(self, theta):
        """Normalised angular profile ``f / f'(theta0)``."""
        return self.f(theta) / self.fprime_theta0

    def gprime(self, theta):
        return self.fprime(theta) / self.fprime_theta0

    @property
    def theta0_degrees(self) -> float:
        return float(np.degrees(self.theta0))


def ac_profile_build(root_tol: float = 1e-13) -> AltCaffarelliProfile:
    if not root_tol > 0:
        raise ContractError("root_tol must be positive")
    lo, hi = 0.01, np.pi / 2 - 0.01
    f = AltCaffarelliProfile.f
    if np.sign(f(lo)) == np.sign(f(hi)):
        raise OracleError("no sign change of f in the bracket")
    theta0 = brentq(f, lo, hi, xtol=root_tol, rtol=4 * np.finfo(float).eps)
    return AltCaffarelliProfile(float(theta0), float(AltCaffarelliProfile.fprime(theta0)))


def ac_ode_residual(p: AltCaffarelliProfile, theta_samples, step: float = 1e-5) -> float:
    """Max of ``|(sin f')' + 2 sin f|``; the outer derivative is a central difference."""
    th = np.asarray(theta_samples, float).ravel()
    if th.size == 0:
        warnings.warn("empty theta sample list; residual reported as 0", stacklevel=2)
        return 0.0
    flux = lambda t: np.sin(t) * p.fprime(t)  # noqa: E731
    d_flux = (flux(th + step) - flux(th - step)) / (2 * step)
    return float(np.max(np.abs(d_flux + 2 * np.sin(th) * p.f(th))))


# --- oracle fields -------------------------------------------------------


class Oracle:
    """Closed-form field; ``value`` and ``gradient`` take points of shape ``(..., n)``."""

    tag = "oracle"
    dim: int | None = None

    def value(self, x):
        raise NotImplementedError

    def gradient(self, x):
        raise NotImplementedError

    def metadata(self) -> dict:
        return {"tag": self.tag}


@dataclass(frozen=True)
class LinearField(Oracle):
    """``a * <x, axis> + offset`` (no positive part)."""

    a: float = 1.0
    axis: tuple[float, ...] = (1.0, 0.0)
    offset: float = 0.0
    tag = "linear"

    def value(self, x):
        return self.a * np.asarray(x) @ np.asarray(self.axis) + self.offset

    def gradient(self, x):
        x = np.asarray(x)
        return np.broadcast_to(self.a * np.asarray(self.axis), x.shape).copy()

    def metadata(self):
        return {"tag": self.tag, "a": self.a, "axis": list(self.axis), "offset": self.offset}


@dataclass(frozen=True)
class HalfPlaneLinear(Oracle):
    """``a * max(<x, axis> - offset, 0)``."""

    a: float = 1.0
    axis: tuple[float, ...] = (1.0, 0.0)
    offset: float = 0.0
    tag = "half_plane_linear"

    def value(self, x):
        return self.a * np.maximum(np.asarray(x) @ np.asarray(self.axis) - self.offset, 0.0)

    def gradient(self, x):
        x = np.asarray(x)
        on = (x @ np.asarray(self.axis) - self.offset) > 0
        return np.where(on[..., None], self.a * np.asarray(self.axis), 0.0)

    def metadata(self):
        return {"tag": self.tag, "a": self.a, "axis": list(self.axis), "offset": self.offset}


class AltCaffarelli(Oracle):
    tag = "alt_caffarelli"
    dim = 3

    def __init__(self, profile: AltCaffarelliProfile | None = None):
        self.profile = profile or ac_profile_build()

    @staticmethod
    def _polar(x):
        x = np.asarray(x, float)
        r = np.linalg.norm(x, axis=-1)
        rho = np.hypot(x[..., 0], x[..., 1])
        theta = np.arctan2(rho, x[..., 2])
        return r, rho, theta

    def value(self, x):
        r, _, theta = self._polar(x)
        with np.errstate(divide="ignore", invalid="ignore"):
            g = self.profile.g(np.clip(theta, 1e-12, np.pi - 1e-12))
        return r * np.maximum(np.nan_to_num(g, nan=0.0, neginf=0.0), 0.0)

    def gradient(self, x):
        x = np.asarray(x, float)
        r, rho, theta = self._polar(x)
        th = np.clip(theta, 1e-12, np.pi - 1e-12)
        with np.errstate(divide="ignore", invalid="ignore"):
            g = np.nan_to_num(self.profile.g(th), nan=0.0, neginf=0.0)
            gp = np.nan_to_num(self.profile.gprime(th), nan=0.0, posinf=0.0, neginf=0.0)
            safe_r = np.where(r > 0, r, 1.0)
            e_r = x / safe_r[..., None]
            safe_rho = np.where(rho > 0, rho, 1.0)
            cphi = np.where(rho > 0, x[..., 0] / safe_rho, 1.0)
            sphi = np.where(rho > 0, x[..., 1] / safe_rho, 0.0)
        e_t = np.stack([np.cos(th) * cphi, np.cos(th) * sphi, -np.sin(th)], axis=-1)
        grad = g[..., None] * e_r + gp[..., None] * e_t
        on = (g > 0) & (r > 0)
        return np.where(on[..., None], grad, 0.0)

    def gradient_norm_at_angle(self, theta):
        """``|grad u|`` on the ray with polar angle ``theta`` (zero off the support)."""
        g = self.profile.g(theta)
        return np.where(g > 0, np.hypot(g, self.profile.gprime(theta)), 0.0)

    def free_boundary_normal(self, phi: float) -> np.ndarray:
        """Unit normal to the cone ``theta = theta0`` pointing into the support."""
        t0 = self.profile.theta0
        return np.array([np.cos(t0) * np.cos(phi), np.cos(t0) * np.sin(phi), -np.sin(t0)])

    def free_boundary_points(self, radius: float, count: int, lower: bool = True) -> np.ndarray:
        """Points at distance ``radius`` on the cones ``theta = theta0`` (and ``pi - theta0``)."""
        t0 = self.profile.theta0
        phi = 2 * np.pi * (np.arange(count) + 0.5) / count
        thetas = [t0, np.pi - t0] if lower else [t0]
        pts = [radius * np.stack([np.sin(t) * np.cos(phi), np.sin(t) * np.sin(phi), np.full_like(phi, np.cos(t))], axis=1)
               for t in thetas]
        return np.concatenate(pts)

    def metadata(self):
        return {
            "tag": self.tag,
            "theta0_rad": self.profile.theta0,
            "theta0_deg": self.profile.theta0_degrees,
            "fprime_theta0": self.profile.fprime_theta0,
        }


@dataclass(frozen=True)
class AnnulusCapacitor(Oracle):
    """Capacitor potential of the ring ``r_in < |x| < r_out``: 0 inside, 1 outside.

    The field is continued harmonically past ``r_out`` and by 0 inside
    ``r_in``, which keeps it subharmonic on the whole lattice.
    """

    r_in: float = 0.25
    r_out: float = 1.0
    dim: int = 2
    tag = "annulus_capacitor"

    def _radial(self, r):
        if self.dim == 2:
            return np.log(r / self.r_in) / np.log(self.r_out / self.r_in)
        return (1 / self.r_in - 1 / r) / (1 / self.r_in - 1 / self.r_out)

    def _dradial(self, r):
        if self.dim == 2:
            return 1.0 / (r * np.log(self.r_out / self.r_in))
        return 1.0 / (r**2 * (1 / self.r_in - 1 / self.r_out))

    def value(self, x):
        r = np.linalg.norm(np.asarray(x, float), axis=-1)
        with np.errstate(divide="ignore"):
            return np.where(r > self.r_in, self._radial(np.maximum(r, self.r_in)), 0.0)

    def gradient(self, x):
        x = np.asarray(x, float)
        r = np.linalg.norm(x, axis=-1)
        rs = np.maximum(r, self.r_in)
        g = self._dradial(rs)[..., None] * x / rs[..., None]
        return np.where((r > self.r_in)[..., None], g, 0.0)

    def gradient_norm(self, r):
        return self._dradial(np.asarray(r, float))

    def metadata(self):
        return {"tag": self.tag, "r_in": self.r_in, "r_out": self.r_out, "dim": self.dim}


@dataclass(frozen=True)
class HomogeneousCone2D(Oracle):
    """``r**(pi/opening) * sin(pi * (theta - start) / opening)`` on the sector, 0 elsewhere."""

    opening: float = 1.5 * np.pi
    start: float = 0.0
    scale: float = 1.0
    tag = "homogeneous_cone_2d"
    dim = 2

    @property
    def exponent(self) -> float:
        return np.pi / self.opening

    def _local(self, x):
        x = np.asarray(x, float)
        r = np.hypot(x[..., 0], x[..., 1])
        th = np.mod(np.arctan2(x[..., 1], x[..., 0]) - self.start, 2 * np.pi)
        return r, th

    def value(self, x):
        r, th = self._local(x)
        on = th < self.opening
        return np.where(on, self.scale * r**self.exponent * np.sin(self.exponent * np.minimum(th, self.opening)), 0.0)

    def gradient(self, x):
        x = np.asarray(x, float)
        r, th = self._local(x)
        a = self.exponent
        on = (th < self.opening) & (r > 0)
        rs = np.where(r > 0, r, 1.0)
        dr = self.scale * a * rs ** (a - 1) * np.sin(a * th)
        dt = self.scale * a * rs ** (a - 1) * np.cos(a * th)
        ang = th + self.start
        gx = dr * np.cos(ang) - dt * np.sin(ang)
        gy = dr * np.sin(ang) + dt * np.cos(ang)
        return np.where(on[..., None], np.stack([gx, gy], axis=-1), 0.0)

    def metadata(self):
        return {"tag": self.tag, "opening": self.opening, "start": self.start, "scale": self.scale}


def polar_dirichlet_quadrature(o: Oracle, r: float, center=(0.0, 0.0), epsabs: float = 1e-10) -> float:
    """``r**-2 * int_{B_r} |grad o|^2`` in 2D by adaptive quadrature in polar coordinates.

    Independent of the lattice: the integrand is the analytic gradient.
    The angular integral is split at the multiples of ``pi/4`` so that
    sector edges of the usual fixtures fall on panel boundaries.
    """
    if not r > 0:
        raise ContractError("radius must be positive")
    c = np.asarray(center, float)

    def integrand(rho, phi):
        x = c + rho * np.array([np.cos(phi), np.sin(phi)])
        g = np.asarray(o.gradient(x[None]), float)[0]
        return float(g @ g) * rho

    edges = np.linspace(-np.pi, np.pi, 9)
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        val, _ = dblquad(integrand, a, b, 0.0, r, epsabs=epsabs)
        total += val
    return total / r**2


def oracle_sample(o: Oracle, g: GridSpec) -> tuple[ScalarField, np.ndarray]:
    """Nodal values and analytic gradients (shape ``(dim, *shape)``) of an oracle."""
    if o.dim is not None and o.dim != g.dim:
        raise ContractError(f"oracle {o.tag} is {o.dim}-dimensional, grid is {g.dim}-dimensional")
    pts = np.moveaxis(g.coords(), 0, -1)
    vals = o.value(pts)
    grad = np.moveaxis(o.gradient(pts), -1, 0)
    return ScalarField(g, vals), grad


def _reference_grid(dim: int, half_width: float, n_per_unit: int) -> GridSpec:
    return GridSpec.cube(dim, 1.0 / n_per_unit, half_width)


def blowup_rescale(u: ScalarField, y0: BasePoint | np.ndarray, r: float, half_width: float = 2.0,
                   n_per_unit: int = 16) -> ScalarField:
    """``x -> u(r x + y0) / r`` sampled on ``[-half_width, half_width]**n``.

    The caller subtracts ``u(y0)`` first; a warning is issued when the
    rescaled field is visibly not normalised.
    """
    y0c = y0.coords if isinstance(y0, BasePoint) else np.asarray(y0, float)
    if not u.grid.contains(y0c, margin=half_width * r):
        raise ContractError(f"blow-up window of radius {half_width * r} around {tuple(y0c)} exits the grid")
    ref = _reference_grid(u.grid.dim, half_width, n_per_unit)
    pts = np.moveaxis(ref.coords(), 0, -1).reshape(-1, u.grid.dim)
    interp = RegularGridInterpolator(u.grid.axes(), u.values, method="linear")
    phys = np.clip(y0c + r * pts, u.grid.lower, u.grid.upper)
    vals = interp(phys).reshape(ref.shape) / r
    centre = interp(y0c[None])[0]
    scale = np.abs(vals).max()
    if scale > 0 and abs(centre / r) > 1e-6 * scale:
        warnings.warn("blow-up of a field with u(y0) != 0 is not normalised", stacklevel=2)
    return ScalarField(ref, vals)
