"""Ready-made fields and domains used by the experiments, the CLI and the tests."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import DiniModulus, TouchingCone
from .grid import ContractError, DomainMask, GridSpec, ScalarField
from .oracles import HomogeneousCone2D, oracle_sample
from .solvers import DirichletProblem, SolveReport, solve_dirichlet

__all__ = [
    "linear_field",
    "half_plane_pair",
    "homogeneous_cone_pair",
    "cjk_pair",
    "CapacitorFixture",
    "capacitor_fixture",
    "ZigZagFixture",
    "zigzag_fixture",
    "HalfSpaceFixture",
    "halfspace_fixture",
    "AltCaffarelliFixture",
    "superharmonic_field",
]


def linear_field(g: GridSpec, a: float = 1.0, axis: int = 0) -> ScalarField:
    return ScalarField(g, a * g.coords()[axis])


def half_plane_pair(g: GridSpec, a: float = 1.0, b: float = 1.0):
    """``(a * x1^+, b * x1^-)``: the equality case of the two-phase product."""
    x1 = g.coords()[0]
    return ScalarField(g, a * np.maximum(x1, 0.0)), ScalarField(g, b * np.maximum(-x1, 0.0))


def homogeneous_cone_pair(g: GridSpec, opening: float = 1.5 * np.pi):
    """Harmonic pair on complementary sectors meeting at the origin."""
    hp = HomogeneousCone2D(opening=opening, start=0.0)
    hm = HomogeneousCone2D(opening=2 * np.pi - opening, start=opening)
    return oracle_sample(hp, g)[0], oracle_sample(hm, g)[0], hp, hm


def cjk_pair(g: GridSpec, a: float = 1.0):
    """Positive and negative parts of ``a x1 - |x|^2 / (2n)``, which has ``Lap = -1``."""
    x = g.coords()
    u = a * x[0] - np.sum(x**2, axis=0) / (2 * g.dim)
    return ScalarField(g, np.maximum(u, 0.0)), ScalarField(g, np.maximum(-u, 0.0)), ScalarField(g, u)


@dataclass(frozen=True)
class CapacitorFixture:
    """Capacitor potential outside the disc ``|x| < r_in``; closed form ``log(|x|/r_in)/log(r_out/r_in)``.

    The Dirichlet problem is posed on the box minus the disc, with the
    closed form on the box faces and 0 on the circle (cut cells there).
    """

    u: ScalarField
    report: SolveReport
    r_in: float
    r_out: float
    problem: DirichletProblem

    @property
    def grid(self) -> GridSpec:
        return self.u.grid

    def exact(self, x) -> np.ndarray:
        r = np.linalg.norm(np.asarray(x, float), axis=-1)
        return np.where(r > self.r_in, np.log(np.maximum(r, self.r_in) / self.r_in) / np.log(self.r_out / self.r_in), 0.0)

    def gradient_norm(self, x) -> np.ndarray:
        r = np.linalg.norm(np.asarray(x, float), axis=-1)
        return 1.0 / (r * np.log(self.r_out / self.r_in))

    def cone_at(self, y, reach: float = 0.2) -> TouchingCone:
        """Touching cone inside the disc ``|x| < |y|`` (the sub-level side of the level circle)."""
        y = np.asarray(y, float)
        R = float(np.linalg.norm(y))
        return TouchingCone(tuple(y), tuple(-y / R), DiniModulus.hoelder(1.0, 2.0 / R), min(reach, R))

    def boundary_points(self, y0, radius: float, count: int) -> np.ndarray:
        """Points of the inner circle within ``radius`` of ``y0`` (both sides, evenly spread)."""
        y0 = np.asarray(y0, float)
        phi0 = np.arctan2(y0[1], y0[0])
        dphi = 2 * np.arcsin(min(radius / (2 * self.r_in), 1.0)) * 0.99
        off = np.linspace(-dphi, dphi, 2 * (count // 2) + 1)
        off = off[off != 0]
        return self.r_in * np.stack([np.cos(phi0 + off), np.sin(phi0 + off)], axis=1)

    def inward_normal(self, y0) -> np.ndarray:
        y0 = np.asarray(y0, float)
        return y0 / np.linalg.norm(y0)


def capacitor_fixture(h: float = 1 / 128, r_in: float = 0.25, r_out: float = 1.0,
                      residual_tol: float = 1e-8) -> CapacitorFixture:
    g = GridSpec.cube(2, h)
    x = np.moveaxis(g.coords(), 0, -1)
    r = np.linalg.norm(x, axis=-1)
    exact = np.where(r > r_in, np.log(np.maximum(r, r_in) / r_in) / np.log(r_out / r_in), 0.0)
    mask = DomainMask(g, r > r_in)
    p = DirichletProblem(mask, ScalarField(g, exact), 0.0, phi=ScalarField(g, r - r_in),
                         boundary_fn=lambda pts: np.zeros(len(pts)))
    u, rep = solve_dirichlet(p, residual_tol)
    if not rep.converged:
        raise RuntimeError(f"capacitor solve did not converge ({rep.final_residual:.2e})")
    return CapacitorFixture(u, rep, r_in, r_out, p)


@dataclass(frozen=True)
class HalfSpaceFixture:
    """``u = a x1^+`` on the box, viewed as the Dirichlet solution in ``{x1 > 0}`` with ``g = 0``."""

    u: ScalarField
    a: float

    @property
    def grid(self) -> GridSpec:
        return self.u.grid

    def cone_at(self, y, reach: float = 0.25) -> TouchingCone:
        return TouchingCone(tuple(np.asarray(y, float)), (-1.0,) + (0.0,) * (self.grid.dim - 1), DiniModulus.zero(), reach)

    def boundary_points(self, y0, radius: float, count: int) -> np.ndarray:
        y0 = np.asarray(y0, float)
        off = np.linspace(-0.99 * radius, 0.99 * radius, 2 * (count // 2) + 1)
        off = off[off != 0]
        pts = np.repeat(y0[None], len(off), axis=0)
        pts[:, 1] += off
        return pts

    def inward_normal(self, y0) -> np.ndarray:
        n = np.zeros(self.grid.dim)
        n[0] = 1.0
        return n


def halfspace_fixture(h: float = 1 / 128, a: float = 1.0) -> HalfSpaceFixture:
    g = GridSpec.cube(2, h)
    return HalfSpaceFixture(ScalarField(g, a * np.maximum(g.coords()[0], 0.0)), a)


@dataclass(frozen=True)
class ZigZagFixture:
    """Harmonic function above a sawtooth ``x2 = s(x1)``: 0 on the teeth, 1 on the top face.

    Valleys of ``s`` are convex corners of the domain and the gradient
    vanishes there.  Peaks are reentrant corners, where it blows up and
    no cone of the form used for exterior touching fits below the boundary.
    """

    u: ScalarField
    report: SolveReport
    period: float
    amplitude: float
    base: float
    problem: DirichletProblem

    @property
    def grid(self) -> GridSpec:
        return self.u.grid

    def profile(self, x1):
        t = np.mod(np.asarray(x1, float) / self.period, 1.0)
        return self.base + self.amplitude * 2 * np.minimum(t, 1 - t)

    def valley(self) -> np.ndarray:
        return np.array([0.0, self.base])

    def peaks_near(self, y0, radius: float) -> np.ndarray:
        k = np.arange(-50, 51)
        px = (k + 0.5) * self.period
        pts = np.stack([px, np.full_like(px, self.base + self.amplitude)], axis=1)
        return pts[np.linalg.norm(pts - np.asarray(y0), axis=1) < radius]

    def slope(self) -> float:
        return 2 * self.amplitude / self.period

    def boundary_points(self, y0, radius: float, count: int) -> np.ndarray:
        """Peaks within ``radius`` plus evenly spaced points along the sawtooth."""
        y0 = np.asarray(y0, float)
        xs = np.linspace(y0[0] - radius, y0[0] + radius, 4 * count + 1)
        pts = np.stack([xs, self.profile(xs)], axis=1)
        pts = pts[(np.linalg.norm(pts - y0, axis=1) < radius) & (np.abs(xs - y0[0]) > 1e-12)]
        if len(pts) > count:
            pts = pts[np.linspace(0, len(pts) - 1, count).round().astype(int)]
        peaks = self.peaks_near(y0, radius)
        return np.concatenate([peaks, pts]) if len(peaks) else pts

    def cone_at(self, y, reach: float = 0.05) -> TouchingCone:
        """Downward half-space cone; admissible only where the boundary is locally flat or convex-from-below."""
        return TouchingCone(tuple(np.asarray(y, float)), (0.0, -1.0), DiniModulus.zero(), reach)

    def inward_normal(self, y0) -> np.ndarray:
        return np.array([0.0, 1.0])


def zigzag_fixture(h: float = 1 / 256, period: float = 1 / 16, amplitude: float = 1 / 64,
                   base: float = -0.5, residual_tol: float = 1e-8) -> ZigZagFixture:
    if amplitude <= 0 or period <= 0:
        raise ContractError("period and amplitude must be positive")
    g = GridSpec.cube(2, h)
    x = g.coords()
    t = np.mod(x[0] / period, 1.0)
    s = base + amplitude * 2 * np.minimum(t, 1 - t)
    phi = x[1] - s
    mask = DomainMask(g, phi > 0)
    top = x[1] >= g.upper[1] - 1e-12
    # linear ramp on the side faces so the data is continuous at the top corners
    data = np.where(phi > 0, np.clip((x[1] - base) / (g.upper[1] - base), 0.0, 1.0), 0.0)
    data = np.where(top, 1.0, data)
    p = DirichletProblem(mask, ScalarField(g, data), 0.0, phi=ScalarField(g, phi),
                         boundary_fn=lambda pts: np.zeros(len(pts)))
    u, rep = solve_dirichlet(p, residual_tol)
    if not rep.converged:
        raise RuntimeError(f"zig-zag solve did not converge ({rep.final_residual:.2e})")
    return ZigZagFixture(u, rep, period, amplitude, base, p)



class AltCaffarelliFixture:
    """The 3D cone example as an oracle fixture.

    ``cone_at`` returns the flat cone ``-e3`` at the vertex, which is the
    best candidate there and still fails.  At a free-boundary point it
    returns a cone opening into ``{theta < theta0}`` with a curvature-sized
    linear modulus.
    """

    def __init__(self, h: float = 1 / 64):
        from .oracles import AltCaffarelli

        self.oracle = AltCaffarelli()
        self.h = h

    def cone_at(self, y, reach: float = 0.2) -> TouchingCone:
        y = np.asarray(y, float)
        R = float(np.linalg.norm(y))
        if R < 1e-12:
            return TouchingCone(tuple(y), (0.0, 0.0, -1.0), DiniModulus.zero(), reach)
        phi = float(np.arctan2(y[1], y[0]))
        n = self.oracle.free_boundary_normal(phi)
        if y[2] < 0:
            n = n * np.array([1.0, 1.0, -1.0])
        rho = R * np.sin(self.oracle.profile.theta0)
        return TouchingCone(tuple(y), tuple(-n), DiniModulus.hoelder(1.0, 4.0 / rho), min(reach, rho / 2))

    def free_boundary_samples(self, eps: float, count: int = 3) -> np.ndarray:
        return self.oracle.free_boundary_points(0.98 * eps**2, count)


def superharmonic_field(g: GridSpec) -> ScalarField:
    """``-|x|^2 / (2n)``: ``Lap = -1``, so it fails a subsolution check with bound 0."""
    return ScalarField(g, -np.sum(g.coords() ** 2, axis=0) / (2 * g.dim))
