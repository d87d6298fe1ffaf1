"""Command line front door: ``acflab <subcommand> ...``.

Exit status: 0 when every verdict is ``pass``, ``hypothesis not met`` or
``hypothesis violated``; 2 when some verdict is ``fail``; 1 on usage or
configuration errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import experiments as ex
from . import fixtures as fx
from .functionals import RadiusSweep, c0_closed_form, default_radii, extrapolate_limit, positive_part_energy
from .geometry import TouchingCone
from .grid import ContractError, GridSpec, ScalarField, base_point, check_subsolution, load_sfld, save_sfld
from .oracles import AltCaffarelli, AnnulusCapacitor, HalfPlaneLinear, HomogeneousCone2D, LinearField, oracle_sample

SCHEMA = "acflab-run/1"
EXIT_OK, EXIT_USAGE, EXIT_FAIL = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage; 2 is reserved for failed verdicts here
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("ACFLAB_THREADS", "1")))
    except ValueError:
        return 1


def parse_h(text) -> float:
    """Accept ``0.0078125``, ``1/128`` and the like."""
    try:
        h = float(Fraction(str(text)))
    except (ValueError, ZeroDivisionError) as exc:
        raise UsageError(f"cannot parse mesh width {text!r}") from exc
    if not h > 0:
        raise UsageError(f"mesh width must be positive, got {text!r}")
    return h


def _point(text: str) -> np.ndarray:
    try:
        return np.array([float(v) for v in text.split(",")])
    except ValueError as exc:
        raise UsageError(f"cannot parse point {text!r}") from exc


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def _save(f, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    save_sfld(f, path)


def _json(obj) -> str:
    return json.dumps(ex._clean(obj), sort_keys=True, indent=2) + "\n"


# --- oracle -------------------------------------------------------------

ORACLES = ("alt-caffarelli", "half-plane", "linear", "annulus", "cone2d")


def _make_oracle(args):
    name = args.name
    if name == "alt-caffarelli":
        return AltCaffarelli(), 3
    dim = args.dim
    axis = tuple(1.0 if k == 0 else 0.0 for k in range(dim))
    if name == "half-plane":
        return HalfPlaneLinear(args.a, axis), dim
    if name == "linear":
        return LinearField(args.a, axis), dim
    if name == "annulus":
        return AnnulusCapacitor(args.rin, args.rout, dim), dim
    if name == "cone2d":
        return HomogeneousCone2D(args.opening * np.pi), 2
    raise UsageError(f"unknown oracle {name!r}; choose from {', '.join(ORACLES)}")


def cmd_oracle(args) -> int:
    o, dim = _make_oracle(args)
    g = GridSpec.cube(dim, parse_h(args.h), args.extent)
    f, grad = oracle_sample(o, g)
    out = Path(args.out)
    stem = args.name.replace("-", "_")
    _save(f, out / f"{stem}.sfld")
    for k in range(dim):
        _save(ScalarField(g, grad[k]), out / f"{stem}_grad_x{k + 1}.sfld")
    meta = {**o.metadata(), "grid": {"dim": dim, "h": g.spacing, "extent": args.extent, "shape": list(g.shape)}}
    _write(out / f"{stem}_meta.json", _json(meta))
    print(_json(meta), end="")
    return EXIT_OK


# --- solve ----------------------------------------------------------------


def cmd_solve(args) -> int:
    h = parse_h(args.h)
    if args.fixture == "capacitor":
        fix = fx.capacitor_fixture(h, args.rin, args.rout, args.residual_tol)
    elif args.fixture == "zigzag":
        fix = fx.zigzag_fixture(h, residual_tol=args.residual_tol)
    else:
        raise UsageError(f"unknown solver fixture {args.fixture!r}")
    out = Path(args.out)
    _save(fix.u, out / f"{args.fixture}.sfld")
    _write(out / f"{args.fixture}_solve.json", _json(fix.report.to_dict()))
    print(_json(fix.report.to_dict()), end="")
    return EXIT_OK if fix.report.converged else EXIT_FAIL


# --- sweep ----------------------------------------------------------------


def _radii(spec: str, g: GridSpec) -> np.ndarray:
    if spec in ("", "default"):
        return default_radii(g)
    try:
        vals = [float(Fraction(v)) for v in spec.split(",")]
    except (ValueError, ZeroDivisionError) as exc:
        raise UsageError(f"cannot parse radii {spec!r}") from exc
    return np.asarray(vals)


def cmd_sweep(args) -> int:
    try:
        f = load_sfld(args.field)
    except OSError as exc:
        raise UsageError(f"cannot read field: {exc}") from exc
    y = _point(args.y)
    if len(y) != f.grid.dim:
        raise UsageError(f"point has {len(y)} coordinates, field is {f.grid.dim}-dimensional")
    radii = _radii(args.radii, f.grid)
    rmax = float(np.min(np.minimum(y - f.grid.lower, f.grid.upper - y)))
    lo = 3 * f.grid.spacing
    if np.any(radii < lo - 1e-12) or np.any(radii > rmax + 1e-12):
        raise UsageError(f"radii must lie in [{lo:.6g}, {rmax:.6g}] for this field and point")
    bp = base_point(f, y)
    vals = positive_part_energy(f, bp, radii)
    s = RadiusSweep.from_values(radii, vals)
    lim = extrapolate_limit(s)
    est = float(np.sqrt(lim / c0_closed_form(f.grid.dim)))
    out = Path(args.out)
    _write(out / "sweep.csv", s.to_csv())
    summary = {"y": y.tolist(), "level": bp.level, "limit": lim, "gradient_estimate": est,
               "fit": {"slope": s.fit.slope, "delta": s.fit.delta, "residual": s.fit.residual,
                       "low_confidence": s.fit.low_confidence}}
    _write(out / "sweep.json", _json(summary))
    print(_json(summary), end="")
    return EXIT_OK


# --- configured experiments -----------------------------------------------

EXPERIMENT_KINDS = ("usc", "directional", "barrier", "blowup", "dirichlet", "subsolution")


def _require(d: dict, key: str, path: str):
    if key not in d:
        raise UsageError(f"config: missing field {path}.{key}")
    return d[key]


def load_config(path) -> dict:
    try:
        cfg = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise UsageError("config: top level must be an object")
    if cfg.get("schema") != SCHEMA:
        raise UsageError(f"config.schema must be {SCHEMA!r}")
    fixture = _require(cfg, "fixture", "config")
    _require(fixture, "kind", "config.fixture")
    exps = _require(cfg, "experiments", "config")
    if not isinstance(exps, list) or not exps:
        raise UsageError("config.experiments must be a non-empty list")
    for i, e in enumerate(exps):
        kind = _require(e, "kind", f"config.experiments[{i}]")
        if kind not in EXPERIMENT_KINDS:
            raise UsageError(f"config.experiments[{i}].kind must be one of {', '.join(EXPERIMENT_KINDS)}")
    if not isinstance(cfg.get("seed", 0), int):
        raise UsageError("config.seed must be an integer")
    return cfg


class _Fixture:
    """Uniform view of the configured field: a source, a lattice field and cones."""

    def __init__(self, spec: dict, grid: dict):
        kind = spec["kind"]
        dim = int(grid.get("dim", 2))
        h = parse_h(grid.get("h", "1/128"))
        self.kind = kind
        self.obj = None
        self.extra = None
        if kind == "linear":
            a = float(spec.get("a", 1.0))
            self.u = fx.linear_field(GridSpec.cube(dim, h), a)
            axis = (-1.0,) + (0.0,) * (dim - 1)
            self._cone = lambda y: TouchingCone(tuple(y), axis, reach=0.2)
        elif kind == "halfspace":
            self.obj = fx.halfspace_fixture(h, float(spec.get("a", 1.0)))
            self.u = self.obj.u
            self._cone = self.obj.cone_at
        elif kind == "capacitor":
            self.obj = fx.capacitor_fixture(h, float(spec.get("r_in", 0.25)), float(spec.get("r_out", 1.0)))
            self.u = self.obj.u
            self._cone = self.obj.cone_at
        elif kind == "zigzag":
            self.obj = fx.zigzag_fixture(h, float(spec.get("period", 1 / 16)), float(spec.get("amplitude", 1 / 64)))
            self.u = self.obj.u
            self._cone = self.obj.cone_at
        elif kind == "alt-caffarelli":
            self.obj = fx.AltCaffarelliFixture(h)
            self.u = None
            self._cone = self.obj.cone_at
            self.extra = self.obj.free_boundary_samples
        elif kind == "superharmonic":
            self.u = fx.superharmonic_field(GridSpec.cube(dim, h))
            self._cone = None
        elif kind == "file":
            self.u = load_sfld(_require(spec, "path", "config.fixture"))
            self._cone = None
        else:
            raise UsageError(f"config.fixture.kind {kind!r} is not known")

    def source(self, y0, radii_cells):
        if self.kind == "alt-caffarelli":
            return ex.OracleSource(self.obj.oracle, self.obj.h, 3, radii_cells, y0=y0)
        return ex.GridSource(self.u, radii_cells, tag=self.kind)

    def cone_for(self, e: dict):
        spec = e.get("cone", "auto")
        if spec == "none":
            return None
        if spec == "auto":
            return self._cone
        base = TouchingCone.from_dict(spec)
        return lambda y: TouchingCone(tuple(y), base.axis, base.modulus, base.reach)


def run_experiment(fix: _Fixture, e: dict, seed: int) -> ex.ExperimentReport:
    kind = e["kind"]
    radii_cells = tuple(e.get("radii_cells", ex.RADII_CELLS))
    eps = tuple(e.get("eps", (0.2, 0.1, 0.05)))
    force = bool(e.get("force", False))
    if kind == "subsolution":
        if fix.u is None:
            raise UsageError("subsolution check needs a lattice fixture")
        bound = float(e.get("lower_bound", -1.0))
        v = check_subsolution(fix.u, bound, float(e.get("tol", 1e-6)))
        rep = ex.ExperimentReport("subsolution", {"lower_bound": bound, "fixture": fix.kind})
        rep.fits = {"worst_laplacian": v.worst_value, "worst_point": list(v.worst_point)}
        rep.verdict = ex.PASS if v.passed else ex.FAIL
        return rep
    y0 = np.asarray(_require(e, "y0", f"experiment {kind}"), float)
    if kind in ("usc", "directional"):
        cfg = ex.UscExperimentConfig(
            fix.source(y0, radii_cells), y0, eps, int(e.get("samples", 32)), seed,
            cone_for=fix.cone_for(e), check_samples_touch=bool(e.get("check_samples_touch", True)),
            subsolution_bound=e.get("subsolution_bound", -1.0 if fix.u is not None else None),
            force=force, extra_samples=fix.extra if e.get("free_boundary_samples", True) else None,
            tag=kind,
        )
        if kind == "usc":
            return ex.usc_interior_experiment(cfg)
        d = np.asarray(_require(e, "direction", "experiment directional"), float)
        return ex.directional_usc_check(cfg.source, y0, d / np.linalg.norm(d), cfg)
    if fix.u is None:
        raise UsageError(f"experiment {kind} needs a lattice fixture")
    if kind == "barrier":
        cone = fix.cone_for(e)
        if cone is None:
            raise UsageError("barrier experiment needs a cone")
        return ex.barrier_lipschitz_experiment(fix.u, y0, cone(y0), e.get("C"),
                                               closed_form=e.get("closed_form"))
    if kind == "blowup":
        return ex.asymptotic_development_experiment(fix.u, y0, e.get("radii", (0.2, 0.1, 0.05)),
                                                    normal=e.get("normal"))
    if kind == "dirichlet":
        if fix.obj is None or not hasattr(fix.obj, "boundary_points"):
            raise UsageError("dirichlet experiment needs a halfspace, capacitor or zigzag fixture")
        return ex.dirichlet_boundary_experiment(fix.obj, y0, eps_schedule=eps, samples=int(e.get("samples", 8)),
                                                radii_cells=radii_cells, force=force, seed=seed)
    raise UsageError(f"unknown experiment kind {kind!r}")


def _samples_csv(rep: ex.ExperimentReport) -> str:
    rows = rep.to_dict()["samples"]
    if not rows:
        return ""
    flat = []
    for r in rows:
        row = {}
        for k, v in r.items():
            if isinstance(v, list):
                for i, c in enumerate(v):
                    row[f"{k}{i + 1}"] = c
            else:
                row[k] = v
        flat.append(row)
    keys = sorted({k for r in flat for k in r})
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=keys, lineterminator="\n")
    w.writeheader()
    for r in flat:
        w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in r.items()})
    return buf.getvalue()


def run_config(cfg: dict, kinds: tuple[str, ...] | None, out: Path) -> int:
    seed = int(cfg.get("seed", 0))
    fix = _Fixture(cfg["fixture"], cfg.get("grid", {}))
    selected = [(i, e) for i, e in enumerate(cfg["experiments"]) if kinds is None or e["kind"] in kinds]
    if not selected:
        raise UsageError("config has no experiment for this subcommand")
    with ThreadPoolExecutor(max_workers=_threads()) as pool:
        reports = list(pool.map(lambda ie: run_experiment(fix, ie[1], seed), selected))
    # single writer: all files are written here, in config order
    summary = []
    for (i, e), rep in zip(selected, reports):
        name = f"{i:02d}_{e['kind']}"
        _write(out / f"{name}.json", rep.to_json())
        csv_text = _samples_csv(rep)
        if csv_text:
            _write(out / f"{name}_samples.csv", csv_text)
        summary.append({"name": name, "experiment": rep.experiment, "verdict": rep.verdict})
        print(f"{name}: {rep.verdict}")
    _write(out / "summary.json", _json({"schema": SCHEMA, "seed": seed, "runs": summary}))
    failed = any(s["verdict"] == ex.FAIL for s in summary)
    return EXIT_FAIL if failed else EXIT_OK


def _cmd_config(kinds):
    def run(args) -> int:
        cfg = load_config(args.config)
        out = Path(args.out or cfg.get("output", "acflab-out"))
        return run_config(cfg, kinds, out)

    return run


# --- parser ---------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="acflab", description="Numerical lab for gradient semicontinuity via the ACF functional.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    o = sub.add_parser("oracle", help="sample a closed-form field")
    o.add_argument("name", help=f"one of: {', '.join(ORACLES)}")
    o.add_argument("--h", default="1/64")
    o.add_argument("--extent", type=float, default=1.0)
    o.add_argument("--dim", type=int, default=2)
    o.add_argument("--a", type=float, default=1.0)
    o.add_argument("--rin", type=float, default=0.25)
    o.add_argument("--rout", type=float, default=1.0)
    o.add_argument("--opening", type=float, default=1.5, help="sector opening in units of pi")
    o.add_argument("--out", default="acflab-out")
    o.set_defaults(func=cmd_oracle)

    s = sub.add_parser("solve", help="solve a Dirichlet fixture")
    s.add_argument("fixture", choices=("capacitor", "zigzag"))
    s.add_argument("--h", default="1/128")
    s.add_argument("--rin", type=float, default=0.25)
    s.add_argument("--rout", type=float, default=1.0)
    s.add_argument("--residual-tol", type=float, default=1e-8)
    s.add_argument("--out", default="acflab-out")
    s.set_defaults(func=cmd_solve)

    w = sub.add_parser("sweep", help="radius sweep and gradient estimate at a point")
    w.add_argument("--field", required=True)
    w.add_argument("--y", required=True, help="comma separated coordinates")
    w.add_argument("--radii", default="default", help="comma separated radii or 'default'")
    w.add_argument("--out", default="acflab-out")
    w.set_defaults(func=cmd_sweep)

    for name, kinds, text in (
        ("usc", ("usc", "directional", "subsolution"), "gradient USC experiments"),
        ("barrier", ("barrier",), "barrier comparison and Lipschitz fit"),
        ("blowup", ("blowup",), "asymptotic development by blow-up"),
        ("dirichlet", ("dirichlet",), "boundary USC for Dirichlet fixtures"),
        ("report", None, "run every experiment in the config"),
    ):
        c = sub.add_parser(name, help=text)
        c.add_argument("--config", required=True)
        c.add_argument("--out", default=None)
        c.set_defaults(func=_cmd_config(kinds))
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ContractError) as exc:
        print(f"acflab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
