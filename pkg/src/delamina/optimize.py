"""Projected gradient descent on the discrete energies.

The iteration works with the L2 (Riesz) gradient, i.e. the nodal gradient
divided by the quadrature weights, takes a Barzilai-Borwein trial step and
backtracks along the projection arc until the Armijo condition holds.
Feasibility means ``w >= 0`` and Dirichlet nodes frozen at their initial
values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Protocol, Union

import numpy as np

from .constructions import ConstructedState
from .energies import EnergyBreakdown, EnergyParams, OBJECTIVE_KINDS, discrete_gradient, objective
from .energies import bonded_energy, eikonal_energy, fvk_energy, fvk_general_energy, linearized_terms
from .fields import BoundarySpec, Grid, ScalarField, VectorField2, same_grid


class Functional(Protocol):
    """Anything with a value and a nodal gradient on (u, w)."""

    def value(self, u: VectorField2, w: ScalarField) -> float: ...

    def gradient(self, u: VectorField2, w: ScalarField) -> tuple[VectorField2, ScalarField]: ...


@dataclass(frozen=True)
class NamedFunctional:
    kind: str
    params: EnergyParams

    def __post_init__(self):
        if self.kind not in OBJECTIVE_KINDS:
            raise ValueError(f"unknown functional kind {self.kind!r}; expected one of {OBJECTIVE_KINDS}")

    def value(self, u, w):
        return objective(self.kind, u, w, self.params)

    def gradient(self, u, w):
        return discrete_gradient(self.kind, u, w, self.params)


@dataclass(frozen=True)
class MinimizeOptions:
    kind: Union[str, Functional] = "fvk"
    params: EnergyParams = field(default_factory=EnergyParams)
    boundary: BoundarySpec = field(default_factory=BoundarySpec.full)
    max_iter: int = 500
    grad_tol: float = 1e-8
    initial_step: float = 1e-3
    backtrack: float = 0.5
    sufficient_decrease: float = 1e-4
    max_halvings: int = 60

    def __post_init__(self):
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if not self.grad_tol > 0:
            raise ValueError("grad_tol must be positive")
        if not self.initial_step > 0:
            raise ValueError("initial_step must be positive")
        if not 0 < self.backtrack < 1:
            raise ValueError("backtrack factor must lie in (0, 1)")
        if not 0 < self.sufficient_decrease < 1:
            raise ValueError("sufficient_decrease must lie in (0, 1)")

    def functional(self) -> Functional:
        if isinstance(self.kind, str):
            return NamedFunctional(self.kind, self.params)
        return self.kind


@dataclass(frozen=True, eq=False)
class MinimizeResult:
    u: VectorField2
    w: ScalarField
    energy: EnergyBreakdown
    iterations: int
    converged: bool
    final_projected_gradient_norm: float
    energy_history: tuple[float, ...]
    message: str = ""

    @property
    def state(self) -> tuple[VectorField2, ScalarField]:
        return self.u, self.w


def breakdown(kind, u: VectorField2, w: ScalarField, params: EnergyParams) -> EnergyBreakdown:
    """Per-term report for a functional kind; custom functionals report their value as stretch."""
    if kind == "eikonal":
        return eikonal_energy(w, params.sigma)
    if kind == "fvk":
        return fvk_energy(u, w, params.sigma)
    if kind == "fvk-general":
        return fvk_general_energy(u, w, params)
    if kind == "bonded-smooth":
        e = bonded_energy(u, w, params.sigma, params.gamma, params.eta)
        return EnergyBreakdown(e.stretch, e.bend, e.bond_smooth, bond_smooth=e.bond_smooth)
    if kind == "linearized":
        membrane, destab, bend = linearized_terms(u, w, params)
        return EnergyBreakdown(membrane + destab, bend)
    value = kind.value(u, w) if not isinstance(kind, str) else objective(kind, u, w, params)
    return EnergyBreakdown(value, 0.0)


class _Packing:
    """Flat vector ``(u1, u2, w)`` with the L2 inner product of the grid."""

    def __init__(self, grid: Grid, boundary: BoundarySpec):
        self.grid = grid
        self.n = grid.shape[0] * grid.shape[1]
        wts = grid.weights().ravel()
        self.weights = np.tile(wts, 3)
        free = ~boundary.mask(grid).ravel()
        self.free = np.tile(free, 3)
        self.is_w = np.zeros(3 * self.n, dtype=bool)
        self.is_w[2 * self.n :] = True

    def pack(self, u: VectorField2, w: ScalarField) -> np.ndarray:
        return np.concatenate([u.x.ravel(), u.y.ravel(), w.values.ravel()])

    def unpack(self, x: np.ndarray) -> tuple[VectorField2, ScalarField]:
        g, n = self.grid, self.n
        return (
            VectorField2(g, x[:n].reshape(g.shape), x[n : 2 * n].reshape(g.shape)),
            ScalarField(g, x[2 * n :].reshape(g.shape)),
        )

    def project(self, x: np.ndarray, anchor: np.ndarray) -> np.ndarray:
        y = np.where(self.is_w, np.maximum(x, 0.0), x)
        return np.where(self.free, y, anchor)

    def norm(self, x: np.ndarray) -> float:
        return math.sqrt(math.fsum((self.weights * x * x).ravel()))

    def dot(self, x: np.ndarray, y: np.ndarray) -> float:
        return math.fsum((self.weights * x * y).ravel())


def _initial_fields(initial) -> tuple[VectorField2, ScalarField]:
    if isinstance(initial, ConstructedState):
        return initial.u, initial.w
    u, w = initial
    same_grid(u, w)
    return u, w


def minimize(initial, options: MinimizeOptions) -> MinimizeResult:
    """Projected descent from a feasible state; returns the best state seen."""
    u0, w0 = _initial_fields(initial)
    if np.any(w0.values < 0):
        raise ValueError("initial w must be non-negative")
    func = options.functional()
    grid = w0.grid
    pk = _Packing(grid, options.boundary)
    anchor = pk.pack(u0, w0)
    x = anchor.copy()

    def value(v):
        return func.value(*pk.unpack(v))

    def riesz(v):
        gu, gw = func.gradient(*pk.unpack(v))
        grad = np.concatenate([gu.x.ravel(), gu.y.ravel(), gw.values.ravel()])
        grad[~pk.free] = 0.0
        return grad, grad / pk.weights

    f = value(x)
    grad, r = riesz(x)
    history = [f]
    step = options.initial_step
    message = "max_iter reached"
    converged = False
    pg_norm = pk.norm(x - pk.project(x - r, anchor))
    iterations = 0
    for it in range(options.max_iter):
        if pg_norm <= options.grad_tol:
            converged, message = True, "projected gradient below tolerance"
            break
        t = step
        accepted = False
        for _ in range(options.max_halvings + 1):
            trial = pk.project(x - t * r, anchor)
            d = trial - x
            decrease = float(np.dot(grad, d))
            f_trial = value(trial)
            if f_trial <= f + options.sufficient_decrease * decrease and f_trial < f:
                accepted = True
                break
            t *= options.backtrack
        if not accepted:
            message = f"line search failed after {options.max_halvings} halvings"
            break
        grad_new, r_new = riesz(trial)
        s, y = trial - x, r_new - r
        sy = pk.dot(s, y)
        # Barzilai-Borwein trial step for the next iteration
        step = pk.dot(s, s) / sy if sy > 0 else 2.0 * t
        step = min(max(step, 1e-12), 1e12)
        x, f, grad, r = trial, f_trial, grad_new, r_new
        history.append(f)
        iterations = it + 1
        pg_norm = pk.norm(x - pk.project(x - r, anchor))
    else:
        if pg_norm <= options.grad_tol:
            converged, message = True, "projected gradient below tolerance"

    u, w = pk.unpack(x)
    return MinimizeResult(
        u,
        w,
        breakdown(options.kind, u, w, options.params),
        iterations,
        converged,
        pg_norm,
        tuple(history),
        message,
    )


def check_gradient(
    state,
    kind: str,
    params: EnergyParams,
    directions: int = 32,
    seed: int = 0,
    step: float = 1e-6,
) -> float:
    """Largest relative error between the analytic and central-difference directional derivative.

    Directions are unit (in the max norm) random fields; the difference step
    is ``step`` times the max norm of the state (or ``step`` for a zero state).
    Both sides vanishing to rounding counts as agreement.
    """
    u, w = _initial_fields(state)
    func = NamedFunctional(kind, params)
    g = w.grid
    pk = _Packing(g, BoundarySpec.full())
    x = pk.pack(u, w)
    gu, gw = func.gradient(u, w)
    grad = np.concatenate([gu.x.ravel(), gu.y.ravel(), gw.values.ravel()])
    scale = max(float(np.max(np.abs(x))), 1.0)
    eps = step * scale
    rng = np.random.default_rng(seed)
    f0 = abs(func.value(u, w))
    worst = 0.0
    for _ in range(directions):
        d = rng.standard_normal(x.size)
        d /= np.max(np.abs(d))
        fp = func.value(*pk.unpack(x + eps * d))
        fm = func.value(*pk.unpack(x - eps * d))
        fd = (fp - fm) / (2.0 * eps)
        an = float(np.dot(grad, d))
        # rounding floor of the central difference
        floor = 1e-13 * (f0 + abs(fp) + abs(fm)) / eps
        denom = max(abs(an), abs(fd))
        if denom <= floor:
            continue
        worst = max(worst, abs(fd - an) / denom)
    return worst
