"""Regime classification, sweeps over (sigma, gamma), power-law fits and the phase diagram."""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import __version__
from .constructions import branched_blister, branched_tubes, flat, laminate
from .energies import EnergyBreakdown, EnergyParams, bonded_energy
from .fields import Grid, ResolutionError
from .optimize import MinimizeOptions, minimize
from .regimes import (
    LOWER_LABELS,
    UPPER_LABELS,
    RegimeError,
    classify_lower_regime,
    classify_regime,
    lower_bound_value,
    thresholds,
    upper_bound_value,
)

__all__ = [
    "UPPER_LABELS",
    "LOWER_LABELS",
    "classify_regime",
    "classify_lower_regime",
    "upper_bound_value",
    "lower_bound_value",
    "SweepSpec",
    "PointResult",
    "SweepResult",
    "FitResult",
    "run_sweep",
    "fit_power_law",
    "phase_diagram",
    "log_points",
    "bound_sandwich",
]

CONSTRUCTIONS = ("flat", "laminate", "branched_tubes", "branched_blister")
AUTO_CONSTRUCTION = {"A": "flat", "B": "laminate", "C": "branched_tubes", "D": "branched_blister"}
CSV_COLUMNS = ("sigma", "gamma", "regime", "stretch", "bend", "bond", "total", "construction", "converged")
SCHEMA_VERSION = 1


def max_workers(requested: int | None = None) -> int:
    """Worker count, capped by ``DELAMINA_THREADS`` when set."""
    cap = os.environ.get("DELAMINA_THREADS")
    n = requested or os.cpu_count() or 1
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError:
            raise ValueError(f"DELAMINA_THREADS must be an integer, got {cap!r}") from None
    return max(1, n)


@dataclass(frozen=True)
class SweepSpec:
    points: tuple[tuple[float, float], ...]
    nx: int = 256
    ny: int = 256
    mode: str = "construct"  # or "construct+minimize"
    construction: str = "auto"
    eta: float = 1e-6
    max_iter: int = 200
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "points", tuple((float(s), float(g)) for s, g in self.points))
        if not self.points:
            raise ValueError("points: at least one (sigma, gamma) point is required")
        for s, g in self.points:
            if not (0.0 < s < 1.0):
                raise ValueError(f"sigma must lie in (0, 1), got {s}")
            if not g > 0.0:
                raise ValueError(f"gamma must be positive, got {g}")
        if self.mode not in ("construct", "construct+minimize"):
            raise ValueError(f"mode must be 'construct' or 'construct+minimize', got {self.mode!r}")
        if self.construction != "auto" and self.construction not in CONSTRUCTIONS:
            raise ValueError(f"construction must be 'auto' or one of {CONSTRUCTIONS}, got {self.construction!r}")
        Grid(self.nx, self.ny)

    @property
    def grid(self) -> Grid:
        return Grid(self.nx, self.ny)


@dataclass(frozen=True)
class PointResult:
    index: int
    sigma: float
    gamma: float
    regime: str
    construction: str
    energy: EnergyBreakdown | None
    minimized: bool = False
    converged: bool | None = None
    constructed_total: float | None = None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass(frozen=True)
class SweepResult:
    spec: SweepSpec
    points: tuple[PointResult, ...]
    provenance: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for p in self.points:
            e = p.energy
            vals = [repr(e.stretch), repr(e.bend), repr(e.bond), repr(e.total)] if e else ["", "", "", ""]
            conv = "" if p.converged is None else str(p.converged).lower()
            if p.error:
                conv = "unresolved"
            writer.writerow([repr(p.sigma), repr(p.gamma), p.regime, *vals, p.construction, conv])
        return buf.getvalue()

    def to_json(self) -> str:
        doc = {
            "schema": "delamina-sweep",
            "schema_version": SCHEMA_VERSION,
            "provenance": self.provenance,
            "points": [
                {
                    "index": p.index,
                    "sigma": p.sigma,
                    "gamma": p.gamma,
                    "regime": p.regime,
                    "construction": p.construction,
                    "energy": p.energy.as_dict() if p.energy else None,
                    "minimized": p.minimized,
                    "converged": p.converged,
                    "constructed_total": p.constructed_total,
                    "error": p.error,
                }
                for p in self.points
            ],
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _build(name: str, grid: Grid, sigma: float, gamma: float):
    if name == "flat":
        return flat(grid)
    if name == "laminate":
        return laminate(grid, sigma, gamma)
    if name == "branched_tubes":
        return branched_tubes(grid, sigma, gamma)
    return branched_blister(grid, sigma)


def _run_point(args) -> PointResult:
    index, sigma, gamma, spec = args
    regime = classify_regime(sigma, gamma)
    name = AUTO_CONSTRUCTION[regime] if spec.construction == "auto" else spec.construction
    try:
        state = _build(name, spec.grid, sigma, gamma)
    except (ResolutionError, RegimeError) as exc:
        return PointResult(index, sigma, gamma, regime, name, None, error=str(exc))
    e = bonded_energy(state.u, state.w, sigma, gamma, spec.eta)
    if spec.mode == "construct":
        return PointResult(index, sigma, gamma, regime, name, e)
    # the optimizer decreases the ramp surrogate, so both totals use it
    start = EnergyBreakdown(e.stretch, e.bend, e.bond_smooth)
    opts = MinimizeOptions(
        kind="bonded-smooth",
        params=EnergyParams(sigma=sigma, gamma=gamma, eta=spec.eta),
        boundary=state.boundary,
        max_iter=spec.max_iter,
    )
    res = minimize(state, opts)
    return PointResult(
        index, sigma, gamma, regime, name, res.energy, True, res.converged, start.total
    )


def _config_hash(spec: SweepSpec) -> str:
    import hashlib

    blob = json.dumps(
        {
            "points": spec.points,
            "nx": spec.nx,
            "ny": spec.ny,
            "mode": spec.mode,
            "construction": spec.construction,
            "eta": spec.eta,
            "max_iter": spec.max_iter,
            "seed": spec.seed,
        },
        sort_keys=True,
    )
    return hashlib.sha256(blob.encode()).hexdigest()


def run_sweep(spec: SweepSpec, workers: int | None = None) -> SweepResult:
    """Evaluate the regime-appropriate construction at every point, in input order."""
    jobs = [(i, s, g, spec) for i, (s, g) in enumerate(spec.points)]
    n = min(max_workers(workers), len(jobs))
    if n <= 1:
        results = [_run_point(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=n) as pool:
            results = list(pool.map(_run_point, jobs))
    provenance = {
        "config_hash": _config_hash(spec),
        "seed": spec.seed,
        "grid": [spec.nx, spec.ny],
        "version": __version__,
    }
    return SweepResult(spec, tuple(results), provenance)


# --- fitting ----------------------------------------------------------------------------


@dataclass(frozen=True)
class FitResult:
    slope: float
    intercept: float
    r_squared: float
    residual_max: float


def fit_power_law(points: Sequence[tuple[float, float]]) -> FitResult:
    """Least squares line through ``(log x, log y)``."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 3 or pts.shape[1] != 2:
        raise ValueError("need at least three (x, y) points")
    if np.any(pts <= 0) or not np.all(np.isfinite(pts)):
        raise ValueError("power-law fit needs positive finite data")
    lx, ly = np.log(pts[:, 0]), np.log(pts[:, 1])
    a = np.column_stack([lx, np.ones_like(lx)])
    (slope, intercept), *_ = np.linalg.lstsq(a, ly, rcond=None)
    resid = ly - (slope * lx + intercept)
    ss_res = float(np.sum(resid**2))
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    if ss_tot <= 1e-28 * max(1.0, float(np.sum(ly**2))):
        r2 = 1.0
    else:
        r2 = min(1.0, max(0.0, 1.0 - ss_res / ss_tot))
    return FitResult(float(slope), float(intercept), r2, float(np.max(np.abs(resid))))


def log_points(lo: float, hi: float, n: int) -> np.ndarray:
    """``n`` log-uniform samples from ``lo`` to ``hi`` inclusive."""
    if n == 1:
        return np.array([lo])
    return np.exp(np.linspace(math.log(lo), math.log(hi), n))


def bound_sandwich(results: Sequence[PointResult]) -> dict[str, dict]:
    """Per regime, the constants ``c`` with ``lower <= E / c <= upper`` at every resolved point.

    The admissible interval is ``[max E/upper, min E/lower]``; it is empty
    when no single constant works.
    """
    out: dict[str, dict] = {}
    for p in results:
        if not p.ok:
            continue
        e = p.energy.total
        d = out.setdefault(p.regime, {"c_min": 0.0, "c_max": math.inf, "count": 0})
        d["c_min"] = max(d["c_min"], e / upper_bound_value(p.sigma, p.gamma))
        d["c_max"] = min(d["c_max"], e / lower_bound_value(p.sigma, p.gamma))
        d["count"] += 1
    for d in out.values():
        d["ok"] = d["c_min"] <= d["c_max"]
    return out


# --- phase diagram -------------------------------------------------------------------------


@dataclass(frozen=True)
class PhaseDiagram:
    sigmas: np.ndarray
    gammas: np.ndarray
    labels: tuple[tuple[str, ...], ...]  # labels[i][j] at (sigmas[i], gammas[j])
    upper: np.ndarray
    lower: np.ndarray
    boundaries: dict[str, np.ndarray]

    def rows(self):
        for i, s in enumerate(self.sigmas):
            for j, g in enumerate(self.gammas):
                yield float(s), float(g), self.labels[i][j], float(self.upper[i, j]), float(self.lower[i, j])


def phase_diagram(
    sigma_range: tuple[float, float] = (1e-4, 1e-1),
    gamma_range: tuple[float, float] = (1e-4, 1e2),
    resolution: int | tuple[int, int] = 64,
) -> PhaseDiagram:
    """Regime labels on a log-uniform lattice plus the three analytic boundary curves."""
    ns, ng = (resolution, resolution) if isinstance(resolution, int) else resolution
    for lo, hi in (sigma_range,):
        if not (0.0 < lo <= hi < 1.0):
            raise ValueError(f"sigma range must lie in (0, 1), got {sigma_range}")
    if not (0.0 < gamma_range[0] <= gamma_range[1]):
        raise ValueError(f"gamma range must be positive, got {gamma_range}")
    sigmas = log_points(*sigma_range, ns)
    gammas = log_points(*gamma_range, ng)
    labels = tuple(tuple(classify_regime(s, g) for g in gammas) for s in sigmas)
    upper = np.array([[upper_bound_value(s, g) for g in gammas] for s in sigmas])
    lower = np.array([[lower_bound_value(s, g) for g in gammas] for s in sigmas])
    t = np.array([thresholds(s) for s in sigmas])
    boundaries = {
        "C|D gamma=sigma^(4/5)": np.column_stack([sigmas, t[:, 0]]),
        "B|C gamma=sigma^(-4/9)": np.column_stack([sigmas, t[:, 1]]),
        "A|B gamma=sigma^(-1)": np.column_stack([sigmas, t[:, 2]]),
    }
    return PhaseDiagram(sigmas, gammas, labels, upper, lower, boundaries)
