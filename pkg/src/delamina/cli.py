"""Command-line front end.

Every subcommand accepts ``--config PATH`` (a JSON object whose keys are the
long option names, with dashes or underscores), ``--out DIR``, ``--grid N`` and
``--seed S``.  Explicit flags override config keys, which override defaults.
Results go to stdout as JSON; with ``--out`` they are also written there,
atomically and only after every computation has succeeded.

Exit codes: 0 success, 2 configuration error, 3 resolution error (or every
sweep point unresolved), 4 numerical failure.
"""

from __future__ import annotations

import argparse
import hashlib
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .constructions import (
    branched_blister,
    branched_tubes,
    flat,
    laminate,
    lift_to_3d,
    mollified_tent,
    tent,
)
from .constructions import ConstructedState
from .energies import (
    FUNCTIONAL_KINDS,
    EnergyBreakdown,
    EnergyParams,
    bonded_energy,
    eikonal_energy,
    energy_3d,
    fvk_energy,
    fvk_general_energy,
    linearized_terms,
)
from .fields import BoundarySpec, Grid, ResolutionError, ScalarField, VectorField2
from .io import atomic_write_bytes, field_to_bytes, load_field, to_jsonable
from .optimize import MinimizeOptions, breakdown, minimize
from .regimes import RegimeError
from .scaling import SweepSpec, fit_power_law, phase_diagram, run_sweep
from .stability import StabilityParams, critical_strain

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RESOLUTION = 3
EXIT_FAILURE = 4

CONSTRUCTION_CHOICES = ("flat", "tent", "mollified_tent", "laminate", "branched_tubes", "branched_blister")
ENERGY_FUNCTIONALS = ("eikonal", "fvk", "fvk-general", "bonded", "bonded-smooth", "linearized")
W_CHOICES = ("zero", "tent", "bump")
# keys that do not change results and are left out of the config hash
_NOT_HASHED = {"config", "out", "command"}


class ConfigError(ValueError):
    """Invalid or inconsistent run configuration."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


# --- argument parsing ---------------------------------------------------------------------


def _positive_int(text):
    v = int(text)
    if v <= 0:
        raise ValueError("must be positive")
    return v


def _float_list(text):
    if isinstance(text, (list, tuple)):
        return [float(t) for t in text]
    return [float(t) for t in str(text).split(",") if t.strip()]


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file with option values")
    p.add_argument("--out", help="output directory")
    p.add_argument("--grid", type=_positive_int, help="grid cells per axis")
    p.add_argument("--seed", type=int, help="random seed")


def _energy_params(p: argparse.ArgumentParser) -> None:
    p.add_argument("--sigma", type=float, help="bending length scale")
    p.add_argument("--gamma", type=float, help="adhesion energy per area")
    p.add_argument("--eta", type=float, help="debonding threshold on w")
    p.add_argument("--nu", type=float, help="Poisson ratio")
    p.add_argument("--young", type=float, help="Young's modulus")
    p.add_argument("--thickness", type=float, help="film thickness")
    p.add_argument("--eigenstrain", type=float, help="compressive eigenstrain")


def _state_source(p: argparse.ArgumentParser) -> None:
    p.add_argument("--construction", choices=CONSTRUCTION_CHOICES, help="named construction")
    p.add_argument("--w", choices=W_CHOICES, help="simple deflection with u = 0")
    p.add_argument("--state", help="directory holding u.field and w.field")


DEFAULTS = {
    "grid": 128,
    "seed": 0,
    "sigma": 0.01,
    "gamma": 1.0,
    "eta": 1e-6,
    "nu": 0.0,
    "young": 1.0,
    "thickness": 0.01,
    "eigenstrain": 0.5,
    "functional": "bonded",
    "max_iter": 500,
    "grad_tol": 1e-8,
    "noise": 0.0,
    "mode": "construct",
    "sweep_construction": "auto",
    "ny": None,
    "sigma_min": 1e-4,
    "sigma_max": 1e-1,
    "gamma_min": 1e-4,
    "gamma_max": 1e2,
    "resolution": 64,
    "young_modulus": 1.0,
    "radius": None,
    "n_points": 256,
    "delta_exp": 0.011,
    "delta": 0.05,
    "nz": 4,
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="delamina", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sd = argparse.SUPPRESS

    p = sub.add_parser("energy", help="evaluate a functional on a state", argument_default=sd)
    _common(p)
    _energy_params(p)
    _state_source(p)
    p.add_argument("--functional", choices=ENERGY_FUNCTIONALS)

    p = sub.add_parser("construct", help="build a named construction", argument_default=sd)
    _common(p)
    _energy_params(p)
    p.add_argument("--construction", choices=CONSTRUCTION_CHOICES)

    p = sub.add_parser("minimize", help="relax a state by projected descent", argument_default=sd)
    _common(p)
    _energy_params(p)
    _state_source(p)
    p.add_argument("--functional", choices=FUNCTIONAL_KINDS)
    p.add_argument("--max-iter", type=_positive_int)
    p.add_argument("--grad-tol", type=float)
    p.add_argument("--noise", type=float, help="amplitude of a seeded perturbation of w")

    p = sub.add_parser("sweep", help="evaluate constructions over (sigma, gamma) points", argument_default=sd)
    _common(p)
    p.add_argument("--points", help="JSON list of [sigma, gamma] pairs")
    p.add_argument("--sigmas", type=_float_list, help="comma separated sigma values")
    p.add_argument("--gammas", type=_float_list, help="comma separated gamma values")
    p.add_argument("--ny", type=_positive_int, help="cells along x2 (default: --grid)")
    p.add_argument("--mode", choices=("construct", "construct+minimize"))
    p.add_argument("--construction", dest="sweep_construction",
                   choices=("auto", "flat", "laminate", "branched_tubes", "branched_blister"))
    p.add_argument("--eta", type=float)
    p.add_argument("--max-iter", type=_positive_int)

    p = sub.add_parser("phase-diagram", help="regime labels on a log-log lattice", argument_default=sd)
    _common(p)
    p.add_argument("--sigma-min", type=float)
    p.add_argument("--sigma-max", type=float)
    p.add_argument("--gamma-min", type=float)
    p.add_argument("--gamma-max", type=float)
    p.add_argument("--resolution", type=_positive_int)

    p = sub.add_parser("stability", help="radial critical strain on a disc", argument_default=sd)
    _common(p)
    p.add_argument("--young", dest="young_modulus", type=float)
    p.add_argument("--thickness", type=float, help="film thickness h")
    p.add_argument("--radius", type=float, help="disc radius R")
    p.add_argument("--nu", type=float)
    p.add_argument("--n-points", type=_positive_int)
    p.add_argument("--delta-exp", type=float, help="experimental strain for the comparison")

    p = sub.add_parser("lift3d", help="compare the 3D energy of a lifted state to the plate energy",
                       argument_default=sd)
    _common(p)
    _state_source(p)
    p.add_argument("--delta", type=float, help="eigenstrain of the 3D model")
    p.add_argument("--h", type=float, help="slab thickness (default: delta)")
    p.add_argument("--nz", type=_positive_int, help="cells across the thickness")
    return parser


def _actions(parser: argparse.ArgumentParser, command: str) -> dict[str, argparse.Action]:
    sub = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    return {a.dest: a for a in sub.choices[command]._actions if a.dest != "help"}


def resolve_config(argv) -> dict:
    """Parse flags, merge them over the config file and defaults; validate keys and types."""
    parser = build_parser()
    ns = vars(parser.parse_args(argv))
    command = ns["command"]
    actions = _actions(parser, command)
    by_option = {}
    for dest, a in actions.items():
        for opt in a.option_strings:
            by_option[opt.lstrip("-").replace("-", "_")] = dest
        by_option.setdefault(dest, dest)

    merged = {}
    if "config" in ns:
        path = Path(ns["config"])
        try:
            doc = json.loads(path.read_text())
        except OSError as exc:
            raise ConfigError(f"config: cannot read {path}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config: {path} is not valid JSON ({exc.msg})") from None
        if not isinstance(doc, dict):
            raise ConfigError("config: top level must be a JSON object")
        for key, value in doc.items():
            dest = by_option.get(str(key).replace("-", "_"))
            if dest is None or dest in ("config", "command"):
                raise ConfigError(f"{key}: unknown config key for '{command}'")
            merged[dest] = _coerce(actions[dest], key, value)
    merged.update({k: v for k, v in ns.items() if k != "command"})
    cfg = {k: DEFAULTS[k] for k in actions if k in DEFAULTS}
    if command == "stability":
        # physical lengths have no sensible default
        cfg["thickness"] = None
    cfg.update(merged)
    cfg["command"] = command
    return cfg


def _coerce(action: argparse.Action, key: str, value):
    if value is None:
        return None
    if action.dest == "points":
        return value
    try:
        if action.type is not None:
            value = action.type(value)
        elif not isinstance(value, str):
            raise TypeError("expected a string")
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{key}: invalid value {value!r} ({exc})") from None
    if action.choices is not None and value not in action.choices:
        raise ConfigError(f"{key}: invalid choice {value!r}; expected one of {list(action.choices)}")
    return value


def config_hash(cfg: dict) -> str:
    blob = json.dumps({k: v for k, v in cfg.items() if k not in _NOT_HASHED}, sort_keys=True, default=str)
    return hashlib.sha256(blob.encode()).hexdigest()


def provenance(cfg: dict, grid) -> dict:
    return {"config_hash": config_hash(cfg), "seed": cfg.get("seed", 0), "grid": grid, "version": __version__}


def _csv_header(prov: dict) -> str:
    grid = "x".join(str(n) for n in prov["grid"]) if prov["grid"] else "none"
    return (
        f"# delamina {prov['version']} config_hash={prov['config_hash']} "
        f"seed={prov['seed']} grid={grid}\n"
    )


def _dumps(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n"


# --- shared helpers ----------------------------------------------------------------------


def _require(cfg: dict, key: str):
    if cfg.get(key) is None:
        raise ConfigError(f"{key}: required parameter is missing")
    return cfg[key]


def _energy_params_from(cfg: dict) -> EnergyParams:
    try:
        return EnergyParams(
            sigma=cfg["sigma"], gamma=cfg["gamma"], nu=cfg["nu"], young=cfg["young"],
            thickness=cfg["thickness"], eigenstrain=cfg["eigenstrain"], eta=cfg["eta"],
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _grid(cfg: dict) -> Grid:
    try:
        return Grid(cfg["grid"], cfg.get("ny") or cfg["grid"])
    except ValueError as exc:
        raise ConfigError(f"grid: {exc}") from None


def _construct(name: str, grid: Grid, sigma: float, gamma: float) -> ConstructedState:
    zero_u = VectorField2.zeros(grid)
    if name == "flat":
        return flat(grid)
    if name == "tent":
        return ConstructedState(zero_u, tent(grid), math.nan, name="tent")
    if name == "mollified_tent":
        try:
            w = mollified_tent(grid, sigma)
        except ValueError as exc:
            raise ConfigError(f"sigma: {exc}") from None
        return ConstructedState(zero_u, w, math.nan, name="mollified_tent")
    if name == "laminate":
        return laminate(grid, sigma, gamma)
    if name == "branched_tubes":
        return branched_tubes(grid, sigma, gamma)
    return branched_blister(grid, sigma)


def _simple_w(name: str, grid: Grid) -> ScalarField:
    x, y = grid.mesh()
    if name == "zero":
        return ScalarField(grid, np.zeros(grid.shape))
    if name == "tent":
        return tent(grid)
    w = 0.3 * np.sin(np.pi * x / grid.lx) * np.sin(np.pi * y / grid.ly)
    w[BoundarySpec.full().mask(grid)] = 0.0  # sin(pi) is not exactly zero
    return ScalarField(grid, np.maximum(w, 0.0))


def _load_state(cfg: dict, sigma: float, gamma: float) -> ConstructedState:
    given = [k for k in ("construction", "w", "state") if cfg.get(k) is not None]
    if len(given) > 1:
        raise ConfigError(f"{given[1]}: choose only one of construction, w, state")
    if not given:
        raise ConfigError("construction: a state source (construction, w or state) is required")
    if cfg.get("state") is not None:
        d = Path(cfg["state"])
        try:
            u, w = load_field(d / "u.field"), load_field(d / "w.field")
        except (OSError, ValueError) as exc:
            raise ConfigError(f"state: cannot load {d}: {exc}") from None
        if not isinstance(u, VectorField2) or not isinstance(w, ScalarField) or u.grid != w.grid:
            raise ConfigError("state: u.field must be a vector field and w.field a scalar field on one grid")
        boundary = BoundarySpec.full()
        meta = d / "state.json"
        if meta.exists():
            b = json.loads(meta.read_text()).get("boundary") or {}
            boundary = BoundarySpec(**b) if b else boundary
        return ConstructedState(u, w, math.nan, boundary=boundary, name=str(d))
    grid = _grid(cfg)
    if cfg.get("w") is not None:
        return ConstructedState(VectorField2.zeros(grid), _simple_w(cfg["w"], grid), math.nan, name=f"w={cfg['w']}")
    return _construct(cfg["construction"], grid, sigma, gamma)


def _evaluate(functional: str, u, w, params: EnergyParams) -> EnergyBreakdown:
    if functional == "eikonal":
        return eikonal_energy(w, params.sigma)
    if functional == "fvk":
        return fvk_energy(u, w, params.sigma)
    if functional == "fvk-general":
        return fvk_general_energy(u, w, params)
    if functional == "linearized":
        membrane, destab, bend = linearized_terms(u, w, params)
        return EnergyBreakdown(membrane + destab, bend)
    e = bonded_energy(u, w, params.sigma, params.gamma, params.eta)
    if functional == "bonded-smooth":
        return EnergyBreakdown(e.stretch, e.bend, e.bond_smooth, bond_smooth=e.bond_smooth)
    return e


def _state_files(prefix: str, u, w, meta: dict) -> dict[str, bytes]:
    return {
        f"{prefix}u.field": field_to_bytes(u),
        f"{prefix}w.field": field_to_bytes(w),
        f"{prefix}state.json": _dumps(meta).encode(),
    }


def _finite(x):
    return None if x is None or not math.isfinite(x) else x


# --- subcommands ----------------------------------------------------------------------


def cmd_energy(cfg: dict):
    params = _energy_params_from(cfg)
    state = _load_state(cfg, params.sigma, params.gamma)
    e = _evaluate(cfg["functional"], state.u, state.w, params)
    g = state.grid
    doc = {
        "functional": cfg["functional"],
        "state": state.name,
        "energy": e.as_dict(),
        "provenance": provenance(cfg, [g.nx, g.ny]),
    }
    return doc, {"energy.json": _dumps(doc).encode()}


def cmd_construct(cfg: dict):
    params = _energy_params_from(cfg)
    name = _require(cfg, "construction")
    state = _construct(name, _grid(cfg), params.sigma, params.gamma)
    e = bonded_energy(state.u, state.w, params.sigma, params.gamma, params.eta)
    g = state.grid
    doc = {
        "construction": name,
        "predicted_energy": _finite(state.predicted_energy),
        "energy": e.as_dict(),
        "params_used": to_jsonable(state.params_used),
        "boundary": to_jsonable(state.boundary),
        "provenance": provenance(cfg, [g.nx, g.ny]),
    }
    return doc, _state_files("", state.u, state.w, doc)


def cmd_minimize(cfg: dict):
    params = _energy_params_from(cfg)
    state = _load_state(cfg, params.sigma, params.gamma)
    u, w = state.u, state.w
    if cfg["noise"]:
        if cfg["noise"] < 0:
            raise ConfigError("noise: must be non-negative")
        rng = np.random.default_rng(cfg["seed"])
        mask = state.boundary.mask(state.grid)
        bump = np.where(mask, 0.0, cfg["noise"] * rng.random(state.grid.shape))
        w = ScalarField(state.grid, w.values + bump)
    try:
        opts = MinimizeOptions(
            kind=cfg["functional"] if cfg.get("functional") in FUNCTIONAL_KINDS else "bonded-smooth",
            params=params,
            boundary=state.boundary,
            max_iter=cfg["max_iter"],
            grad_tol=cfg["grad_tol"],
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    initial = breakdown(opts.kind, u, w, params)
    res = minimize((u, w), opts)
    g = state.grid
    doc = {
        "functional": opts.kind,
        "initial_energy": initial.as_dict(),
        "energy": res.energy.as_dict(),
        "iterations": res.iterations,
        "converged": res.converged,
        "message": res.message,
        "final_projected_gradient_norm": res.final_projected_gradient_norm,
        "energy_history": list(res.energy_history),
        "provenance": provenance(cfg, [g.nx, g.ny]),
    }
    return doc, _state_files("", res.u, res.w, doc)


def _sweep_points(cfg: dict) -> list[tuple[float, float]]:
    pts = cfg.get("points")
    if pts is not None:
        if isinstance(pts, str):
            try:
                pts = json.loads(pts)
            except json.JSONDecodeError:
                raise ConfigError("points: expected a JSON list of [sigma, gamma] pairs") from None
        try:
            return [(float(s), float(g)) for s, g in pts]
        except (TypeError, ValueError):
            raise ConfigError("points: expected a list of [sigma, gamma] pairs") from None
    sigmas, gammas = cfg.get("sigmas"), cfg.get("gammas")
    if sigmas is None or gammas is None:
        raise ConfigError("points: give points, or both sigmas and gammas")
    return [(s, g) for s in sigmas for g in gammas]


def _fits(result) -> list[dict]:
    """Power-law fits over groups of resolved points sharing sigma or gamma."""
    rows = [p for p in result.points if p.ok and p.energy.total > 0]
    out = []
    for var, other in (("sigma", "gamma"), ("gamma", "sigma")):
        groups: dict[float, list] = {}
        for p in rows:
            groups.setdefault(getattr(p, other), []).append(p)
        for fixed in sorted(groups):
            grp = groups[fixed]
            xs = {getattr(p, var) for p in grp}
            if len(xs) < 3:
                continue
            f = fit_power_law([(getattr(p, var), p.energy.total) for p in grp])
            out.append({
                "variable": var, "fixed": other, "fixed_value": fixed, "n": len(grp),
                "slope": f.slope, "intercept": f.intercept, "r_squared": f.r_squared,
                "residual_max": f.residual_max,
            })
    return out


def cmd_sweep(cfg: dict):
    points = _sweep_points(cfg)
    try:
        spec = SweepSpec(
            points=tuple(points),
            nx=cfg["grid"],
            ny=cfg.get("ny") or cfg["grid"],
            mode=cfg["mode"],
            construction=cfg["sweep_construction"],
            eta=cfg["eta"],
            max_iter=cfg["max_iter"],
            seed=cfg["seed"],
        )
    except ValueError as exc:
        raise ConfigError(str(exc) if "points" in str(exc) else f"points: {exc}") from None
    result = run_sweep(spec)
    prov = provenance(cfg, [spec.nx, spec.ny])
    fits = _fits(result)
    header = _csv_header(prov)
    buf = io.StringIO()
    buf.write(header)
    buf.write("variable,fixed,fixed_value,n,slope,intercept,r_squared,residual_max\n")
    for f in fits:
        buf.write(",".join(repr(f[k]) if isinstance(f[k], float) else str(f[k]) for k in
                           ("variable", "fixed", "fixed_value", "n", "slope", "intercept", "r_squared",
                            "residual_max")) + "\n")
    sweep_doc = json.loads(result.to_json())
    sweep_doc["provenance"] = prov
    sweep_doc["fits"] = fits
    files = {
        "sweep.csv": (header + result.to_csv()).encode(),
        "sweep.json": _dumps(sweep_doc).encode(),
        "fits.csv": buf.getvalue().encode(),
    }
    failed = sum(not p.ok for p in result.points)
    doc = {"points": len(result.points), "unresolved": failed, "fits": fits, "provenance": prov}
    if failed == len(result.points):
        raise ResolutionError("every sweep point was unresolved at this grid")
    return doc, files


def cmd_phase_diagram(cfg: dict):
    try:
        pd = phase_diagram(
            (cfg["sigma_min"], cfg["sigma_max"]),
            (cfg["gamma_min"], cfg["gamma_max"]),
            cfg["resolution"],
        )
    except ValueError as exc:
        key = "sigma_min" if "sigma" in str(exc) else "gamma_min"
        raise ConfigError(f"{key}: {exc}") from None
    prov = provenance(cfg, [cfg["resolution"], cfg["resolution"]])
    header = _csv_header(prov)
    lattice = [header, "sigma,gamma,regime,upper_bound_value,lower_bound_value\n"]
    for s, g, lab, up, lo in pd.rows():
        lattice.append(f"{s!r},{g!r},{lab},{up!r},{lo!r}\n")
    curves = [header, "curve,sigma,gamma\n"]
    for name, pts in pd.boundaries.items():
        for s, g in pts:
            curves.append(f"{name},{float(s)!r},{float(g)!r}\n")
    labels = sorted({lab for row in pd.labels for lab in row})
    doc = {"labels_present": labels, "rows": len(pd.sigmas) * len(pd.gammas), "provenance": prov}
    return doc, {
        "phase_diagram.csv": "".join(lattice).encode(),
        "boundaries.csv": "".join(curves).encode(),
        "phase_diagram.json": _dumps(doc).encode(),
    }


def cmd_stability(cfg: dict):
    h = _require(cfg, "thickness")
    radius = _require(cfg, "radius")
    try:
        params = StabilityParams(
            young=cfg["young_modulus"], thickness=h, radius=radius, nu=cfg["nu"], n_points=cfg["n_points"]
        )
        if not cfg["delta_exp"] > 0:
            raise ValueError(f"delta_exp must be positive, got {cfg['delta_exp']}")
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    res = critical_strain(params, cfg["delta_exp"])
    prov = provenance(cfg, [params.n_points])
    doc = {**res.as_dict(), "radial_critical_strain": True, "provenance": prov}
    mode = [_csv_header(prov), "r,phi\n"] + [f"{r!r},{p!r}\n" for r, p in zip(res.radii, res.mode)]
    return doc, {"stability.json": _dumps(doc).encode(), "mode.csv": "".join(mode).encode()}


def cmd_lift3d(cfg: dict):
    delta = cfg["delta"]
    h = cfg.get("h") or delta
    if not 0 < delta < 1:
        raise ConfigError(f"delta: must lie in (0, 1), got {delta}")
    if not 0 < h < math.sqrt(delta):
        raise ConfigError(f"h: must lie in (0, sqrt(delta)), got {h}")
    sigma = h / math.sqrt(delta)
    if all(cfg.get(k) is None for k in ("construction", "w", "state")):
        cfg = {**cfg, "w": "bump"}
    state = _load_state(cfg, sigma, 1.0)
    v = lift_to_3d(state.u, state.w, delta, h, cfg["nz"])
    e3 = energy_3d(v)
    e2 = fvk_energy(state.u, state.w, sigma).total
    g = state.grid
    doc = {
        "delta": delta, "h": h, "sigma": sigma, "nz": cfg["nz"],
        "energy_3d": e3, "fvk_energy": e2, "ratio": e3 / (delta**2 * e2),
        "provenance": provenance(cfg, [g.nx, g.ny, cfg["nz"]]),
    }
    return doc, {"lift3d.json": _dumps(doc).encode()}


COMMANDS = {
    "energy": cmd_energy,
    "construct": cmd_construct,
    "minimize": cmd_minimize,
    "sweep": cmd_sweep,
    "phase-diagram": cmd_phase_diagram,
    "stability": cmd_stability,
    "lift3d": cmd_lift3d,
}


def _write_outputs(out: str, files: dict[str, bytes]) -> None:
    d = Path(out)
    for name, data in files.items():
        atomic_write_bytes(d / name, data)


def main(argv=None) -> int:
    try:
        cfg = resolve_config(argv)
        doc, files = COMMANDS[cfg["command"]](cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ResolutionError, RegimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RESOLUTION
    except (RuntimeError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    if cfg.get("out"):
        _write_outputs(cfg["out"], files)
    sys.stdout.write(_dumps(doc))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
