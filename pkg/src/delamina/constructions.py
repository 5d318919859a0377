"""Explicit low-energy states: tents, blisters, laminates, branched tubes and the 3D lift.

Builders are pure functions of their arguments.  Every returned
:class:`ConstructedState` has ``w >= 0`` and exact zeros on its Dirichlet
edges.  Tube patterns (laminate and branched) clamp only the edge ``x1 = 0``;
the blister clamps all four edges.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Union

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.integrate import quad

from .energies import DeformationField3D, FoldSet
from .fields import (
    BoundarySpec,
    Grid,
    ResolutionError,
    ScalarField,
    VectorField2,
    check_resolved,
    d1,
    d2,
    distance_to_boundary,
    first_difference,
    mollify_odd,
)
from .inplane import relax_inplane
from .regimes import RegimeError, classify_regime

# Cross-profile of a single tube on [0, 1]: sin^4 vanishes with its first three
# derivatives at both ends, so the glued profile is C^2 (in fact C^3).


def _profile(xi: np.ndarray) -> np.ndarray:
    return np.sin(np.pi * xi) ** 4


def _profile_d1(xi):
    s, c = np.sin(np.pi * xi), np.cos(np.pi * xi)
    return 4.0 * np.pi * s**3 * c


def _profile_d2(xi):
    s, c = np.sin(np.pi * xi), np.cos(np.pi * xi)
    return 4.0 * np.pi**2 * (3.0 * s**2 * c**2 - s**4)


PROFILE_SLOPE2 = quad(lambda t: _profile_d1(t) ** 2, 0.0, 1.0, epsabs=1e-14)[0]  # 5 pi^2 / 8
PROFILE_CURV2 = quad(lambda t: _profile_d2(t) ** 2, 0.0, 1.0, epsabs=1e-14)[0]
# bending per unit area of a tube array is BEND_CONSTANT * sigma^2 / width^2
BEND_CONSTANT = PROFILE_CURV2 / PROFILE_SLOPE2

TUBE_ENERGY_CONSTANT = 13.0  # measured E / (sigma^(1/2) gamma^(5/8)) on resolved grids
BLISTER_ENERGY_CONSTANT = 20.0


def tube_amplitude(share: float | np.ndarray, width: float | np.ndarray):
    """Amplitude for which ``int (w')^2`` across one tube equals ``share``."""
    return np.sqrt(np.asarray(share) * np.asarray(width) / PROFILE_SLOPE2)


def smoothstep(t: np.ndarray) -> np.ndarray:
    """Quintic ramp from 0 to 1 with two vanishing derivatives at both ends."""
    t = np.clip(t, 0.0, 1.0)
    return t**3 * (10.0 - 15.0 * t + 6.0 * t * t)


# --- parameter records ----------------------------------------------------------


@dataclass(frozen=True)
class LaminateParams:
    period: float
    tube_width: float
    boundary_layer: float

    def __post_init__(self):
        if not 0.0 < self.tube_width <= self.period <= 1.0:
            raise ValueError(
                f"need 0 < tube_width <= period <= 1, got {self.tube_width}, {self.period}"
            )
        if not 0.0 < self.boundary_layer <= 1.0:
            raise ValueError(f"boundary_layer must lie in (0, 1], got {self.boundary_layer}")


@dataclass(frozen=True)
class BranchingParams:
    """Period-doubling pattern.

    Generation ``k`` has period ``base_period * 2**k`` and is fully
    established at ``x1 = positions[k]``; doubling ``k`` fills the interval
    ``[positions[k], positions[k + 1]]``.  ``widths`` holds the tube (or
    fold) width of each generation and may be empty for blisters.
    """

    generations: int
    base_period: float
    positions: tuple[float, ...]
    widths: tuple[float, ...] = ()
    boundary_layer: float = 0.0

    def __post_init__(self):
        if self.generations < 0:
            raise ValueError("generations must be non-negative")
        if not self.base_period > 0:
            raise ValueError("base_period must be positive")
        if len(self.positions) != self.generations + 1:
            raise ValueError("positions needs one entry per generation")
        p = np.asarray(self.positions)
        if np.any(np.diff(p) <= 0) or p[0] <= 0 or p[-1] > 1:
            raise ValueError("positions must increase strictly inside (0, 1]")
        if self.widths and len(self.widths) != self.generations + 1:
            raise ValueError("widths needs one entry per generation")
        if self.boundary_layer > p[0]:
            raise ValueError("boundary layer overlaps the first doubling")

    @property
    def periods(self) -> tuple[float, ...]:
        return tuple(self.base_period * 2.0**k for k in range(self.generations + 1))

    @property
    def coarsest_period(self) -> float:
        return self.base_period * 2.0**self.generations


@dataclass(frozen=True, eq=False)
class ConstructedState:
    u: VectorField2
    w: ScalarField
    predicted_energy: float
    params_used: Union[LaminateParams, BranchingParams, None] = None
    boundary: BoundarySpec = BoundarySpec.full()
    name: str = ""

    def __post_init__(self):
        if self.u.grid != self.w.grid:
            raise ValueError("u and w live on different grids")
        if np.any(self.w.values < 0):
            raise ValueError("constructed w must be non-negative")
        m = self.boundary.mask(self.w.grid)
        if np.any(self.w.values[m] != 0) or np.any(self.u.x[m] != 0) or np.any(self.u.y[m] != 0):
            raise ValueError("Dirichlet nodes must be exactly zero")

    @property
    def grid(self) -> Grid:
        return self.w.grid


# --- tents and trivial states ------------------------------------------------------


def tent(grid: Grid) -> ScalarField:
    """Distance to the boundary of the rectangle."""
    return distance_to_boundary(grid)


def tent_fold_set(grid: Grid) -> FoldSet:
    """Ridges of the tent: the four segments from the corners to the ridge line.

    Across each ridge the gradient turns by a right angle, a jump of ``sqrt 2``.
    """
    lx, ly = grid.lx, grid.ly
    m = min(lx, ly) / 2.0
    diag = math.sqrt(2.0) * m
    ridge = abs(lx - ly)
    segments = [(diag, math.sqrt(2.0))] * 4
    if ridge > 0:
        segments.append((ridge, math.sqrt(2.0)))
    return FoldSet.of(segments)


def mollified_tent(grid: Grid, sigma: float) -> ScalarField:
    """Odd reflection of the tent across every edge, smoothed on the scale ``sigma``."""
    if not sigma < min(grid.lx, grid.ly) / 4.0:
        raise ValueError(f"sigma={sigma} must be below a quarter of the shorter side")
    return mollify_odd(tent(grid), sigma)


def flat(grid: Grid | None = None) -> ConstructedState:
    """Film completely bonded: ``u = 0``, ``w = 0``."""
    grid = grid or Grid(64, 64)
    return ConstructedState(
        VectorField2.zeros(grid), ScalarField(grid, np.zeros(grid.shape)), 2.0, None, BoundarySpec.full(), "flat"
    )


# --- tube patterns --------------------------------------------------------------------


def fit_period(period: float, length: float, cap: float = 1.0) -> float:
    """Nearest period not above ``cap`` that tiles ``length`` a whole number of times."""
    return length / max(1, round(length / period), math.ceil(length / cap))


def _tube_column(x2, offset, spacing, width_even, share_even, width_odd, share_odd):
    j = np.rint((x2 - offset) / spacing)
    off = x2 - offset - j * spacing
    even = (j.astype(np.int64) % 2) == 0
    width = np.where(even, width_even, width_odd)
    share = np.where(even, share_even, share_odd)
    xi = off / width + 0.5
    inside = (xi > 0.0) & (xi < 1.0) & (share > 0.0)
    return np.where(inside, tube_amplitude(share, width) * _profile(np.where(inside, xi, 0.5)), 0.0)


def _column_states(x1: np.ndarray, periods, widths, positions):
    """Per-column (spacing, width/share of even tubes, width/share of odd tubes)."""
    n = len(periods) - 1
    out = []
    for x in x1:
        if n == 0 or x <= positions[0]:
            h, d = periods[0], widths[0]
            out.append((h, d, h, d, h))
            continue
        if x >= positions[-1]:
            h, d = periods[-1], widths[-1]
            out.append((h, d, h, d, h))
            continue
        k = int(np.searchsorted(positions, x, side="right")) - 1
        tau = float(smoothstep((x - positions[k]) / (positions[k + 1] - positions[k])))
        h = periods[k]
        grow = (1.0 - tau) * widths[k] + tau * widths[k + 1]
        out.append((h, grow, h * (1.0 + tau), widths[k], h * (1.0 - tau)))
    return out


def tube_profile(grid: Grid, periods, widths, positions) -> np.ndarray:
    """Interior tube field ``w`` (no boundary layer), column by column.

    Tubes of the finest period ``h`` sit at ``(j + 1/2) h``; coarser
    generations keep the even ones, so a period that tiles the height leaves
    no partial tube at the free edges.
    """
    x2 = grid.x2
    offset = 0.5 * periods[0]
    w = np.empty(grid.shape)
    for i, st in enumerate(_column_states(grid.x1, periods, widths, positions)):
        w[i] = _tube_column(x2, offset, *st)
    return w


@lru_cache(maxsize=8)
def _antiderivative_solver(n: int, h: float):
    d = first_difference(n, h)
    pin = sp.csr_matrix(([1.0], ([0], [0])), shape=(n + 1, n + 1))
    return d, spla.splu((d.T @ d + pin).tocsc())


def antiderivative(g: np.ndarray, h: float, axis: int) -> np.ndarray:
    """Least-squares inverse of the first-difference stencil along ``axis``, zero at index 0.

    Unlike a quadrature antiderivative, differentiating the result with the
    same stencil reproduces ``g`` up to the one-dimensional cokernel.
    """
    a = np.moveaxis(np.asarray(g, dtype=float), axis, 0)
    n = a.shape[0] - 1
    d, lu = _antiderivative_solver(n, h)
    flat = a.reshape(n + 1, -1)
    out = lu.solve(np.asarray(d.T @ flat))
    out -= out[0]
    return np.moveaxis(out.reshape(a.shape), 0, axis)


def tube_displacement(grid: Grid, w: np.ndarray, eigenstrain: float = 0.5) -> tuple[np.ndarray, np.ndarray]:
    """In-plane displacement cancelling the 22- and 12-strains of ``w``.

    ``u2`` integrates ``(2 eigenstrain - w_2^2)/2`` along ``x2``; ``u1``
    integrates the shear residual, with column means removed so nothing
    drifts, plus an ``x2``-independent correction cancelling the mean
    11-strain of each column.
    """
    g = grid
    w1, w2 = d1(w, g), d2(w, g)
    u2 = antiderivative(0.5 * (2.0 * eigenstrain - w2 * w2), g.hy, 1)
    shear = d1(u2, g) + w1 * w2
    mean = np.trapezoid(shear, dx=g.hy, axis=1) / g.ly
    u2 = u2 - antiderivative(mean, g.hx, 0)[:, None]
    shear = d1(u2, g) + w1 * w2
    u1 = -antiderivative(shear, g.hy, 1)
    e11 = 2.0 * d1(u1, g) + w1 * w1 - 2.0 * eigenstrain
    mean11 = np.trapezoid(e11, dx=g.hy, axis=1) / g.ly
    u1 = u1 - 0.5 * antiderivative(mean11, g.hx, 0)[:, None]
    return u1, u2


def _blend(grid: Grid, depth: float) -> np.ndarray:
    return np.minimum(grid.x1 / depth, 1.0)[:, None]


def tube_state(grid: Grid, periods, widths, positions, boundary_layer: float) -> tuple[VectorField2, ScalarField]:
    """Tube pattern clamped at ``x1 = 0`` through a linear boundary layer.

    ``w`` and ``u1`` are scaled by the linear ramp ``b`` and ``u2`` by ``b^2``,
    so the 22-strain in the layer is ``b^2 - 1`` even inside the tubes.
    """
    w_int = tube_profile(grid, periods, widths, positions)
    u1, u2 = tube_displacement(grid, w_int)
    b = _blend(grid, boundary_layer)
    w = b * w_int
    u1, u2 = b * u1, b * b * u2
    w[0] = u1[0] = u2[0] = 0.0
    return VectorField2(grid, u1, u2), ScalarField(grid, np.maximum(w, 0.0))


def optimal_laminate_params(sigma: float, gamma: float) -> LaminateParams:
    """Period and tube width minimizing ``h + gamma delta / h + sigma^2 / delta^2`` up to constants."""
    label = classify_regime(sigma, gamma)
    if label not in ("B", "C"):
        raise RegimeError(f"laminate parameters need a tube regime, got regime {label}")
    period = min((sigma * gamma) ** 0.4, 1.0)
    width = min(sigma**0.8 * gamma**-0.2, period)
    return LaminateParams(period, width, period)


def laminate_predicted_energy(params: LaminateParams, sigma: float, gamma: float) -> float:
    h, d = params.period, params.tube_width
    return h + gamma * d / h + sigma**2 / d**2


def laminate(grid: Grid, sigma: float, gamma: float, params: LaminateParams | None = None) -> ConstructedState:
    """Straight tubes parallel to ``x1``, one per period, fading linearly to zero at ``x1 = 0``."""
    if params is None:
        opt = optimal_laminate_params(sigma, gamma)
        period = fit_period(opt.period, grid.ly)
        params = LaminateParams(period, min(opt.tube_width, period), period)
    p = params
    check_resolved(grid, p.tube_width, "tube_width", cells=4.0, spacing=grid.hy)
    check_resolved(grid, p.boundary_layer, "boundary_layer", cells=2.0, spacing=grid.hx)
    u, w = tube_state(grid, (p.period,), (p.tube_width,), (1.0,), p.boundary_layer)
    return ConstructedState(
        u, w, laminate_predicted_energy(p, sigma, gamma), p, BoundarySpec.left_only(), "laminate"
    )


# --- branched tubes ---------------------------------------------------------------------


def tube_width_for(period: float, sigma: float, gamma: float) -> float:
    """Width balancing bond ``gamma delta / h`` against bending ``K sigma^2 / delta^2``."""
    return (2.0 * BEND_CONSTANT * sigma**2 * period / gamma) ** (1.0 / 3.0)


def coarsest_tube_period(sigma: float, gamma: float) -> float:
    """Coarsest period where the bulk tube cost balances the tilt cost of a doubling.

    Bulk cost per area ``1.5 gamma delta/h`` against ``h^4 * h / delta`` for
    tubes tilted by an angle of order ``h`` over a unit length.
    """
    a = 1.5 * gamma ** (2.0 / 3.0) * (2.0 * BEND_CONSTANT * sigma**2) ** (1.0 / 3.0)
    b = (2.0 * BEND_CONSTANT * sigma**2 / gamma) ** (-1.0 / 3.0)
    # d/dh [a h^(-2/3) + b h^(14/3)] = 0
    return min((a / (7.0 * b)) ** (3.0 / 16.0), 0.5)


def branching_params(grid: Grid, sigma: float, gamma: float, max_generations: int = 8) -> BranchingParams:
    """Largest admissible number of doublings for the coarsest period.

    Doubling positions form the geometric sequence ``(h_k / h_N)^(4/3)``,
    which equalizes the bulk and tilt costs generation by generation.
    """
    h_top = fit_period(coarsest_tube_period(sigma, gamma), grid.ly)
    best = None
    for n in range(max_generations + 1):
        periods = [h_top * 2.0 ** (k - n) for k in range(n + 1)]
        widths = [tube_width_for(h, sigma, gamma) for h in periods]
        positions = [(h / h_top) ** (4.0 / 3.0) for h in periods]
        h0, d0 = periods[0], widths[0]
        ok = (
            d0 >= 4.0 * grid.hy
            and d0 <= 0.5 * h0
            and h0 >= 4.0 * grid.hx
            and positions[0] >= 2.0 * h0
        )
        if not ok:
            break
        best = BranchingParams(n, h0, tuple(positions), tuple(widths), h0)
    if best is None:
        raise ResolutionError(
            f"tube width {tube_width_for(h_top, sigma, gamma):g} not resolvable with spacing {grid.hy:g}"
        )
    return best


def branched_tubes(
    grid: Grid, sigma: float, gamma: float, params: BranchingParams | None = None
) -> ConstructedState:
    """Tubes whose period doubles away from ``x1 = 0``.

    At each doubling every other tube fades out while its neighbours widen and
    take over its share of the excess length, keeping ``int (w_2)^2 = period``
    over each coarse period at every ``x1``.
    """
    if classify_regime(sigma, gamma) != "C":
        raise RegimeError(f"branched tubes need regime C, got {classify_regime(sigma, gamma)}")
    p = params or branching_params(grid, sigma, gamma)
    if not p.widths:
        raise ValueError("branched tubes need per-generation widths")
    check_resolved(grid, min(p.widths), "tube_width", cells=4.0, spacing=grid.hy)
    u, w = tube_state(grid, p.periods, p.widths, p.positions, p.boundary_layer)
    predicted = TUBE_ENERGY_CONSTANT * sigma**0.5 * gamma**0.625
    return ConstructedState(u, w, predicted, p, BoundarySpec.left_only(), "branched_tubes")


# --- branched blister ---------------------------------------------------------------------

BLISTER_WAVELENGTH_CONSTANT = 3.0
BLISTER_FINEST_DEPTH = 1.0  # finest generation is established at this many sigma from the edge


def blister_wavelength(sigma: float, depth: float) -> float:
    """Local wrinkle wavelength ``c sigma^(1/3) t^(2/3)`` at distance ``t`` from the edge.

    Balances the bending density ``sigma^2 / lambda^2`` against the
    stretching ``(lambda / t)^4`` paid where the wavelength changes.
    """
    return BLISTER_WAVELENGTH_CONSTANT * sigma ** (1.0 / 3.0) * depth ** (2.0 / 3.0)


def blister_params(grid: Grid, sigma: float, generations: int | None = None) -> BranchingParams:
    lam0 = blister_wavelength(sigma, BLISTER_FINEST_DEPTH * sigma)
    if generations is None:
        generations = max(0, int(math.floor(math.log2(blister_wavelength(sigma, 0.5) / lam0))))
    if lam0 < 4.0 * max(grid.hx, grid.hy):
        raise ResolutionError(f"finest wrinkle period {lam0:g} is below 4 grid spacings")
    scale = BLISTER_WAVELENGTH_CONSTANT * sigma ** (1.0 / 3.0)
    positions = tuple((lam0 * 2.0**k / scale) ** 1.5 for k in range(generations + 1))
    if positions[-1] > 0.5:
        raise ValueError(f"{generations} doublings do not fit inside the half width")
    return BranchingParams(generations, lam0, positions)


def _face_coordinates(grid: Grid) -> tuple[np.ndarray, np.ndarray]:
    """Distance ``t`` to the nearest edge and the coordinate ``s`` along it from its midpoint."""
    x, y = grid.mesh()
    d = np.stack([y, x, grid.ly - y, grid.lx - x])
    face = np.argmin(d, axis=0)
    s = np.choose(face, [x - grid.lx / 2, y - grid.ly / 2, x - grid.lx / 2, y - grid.ly / 2])
    return s, np.min(d, axis=0)


def wrinkle_field(s: np.ndarray, t: np.ndarray, params: BranchingParams) -> np.ndarray:
    """Tangential wrinkles with ``<w_s^2> = 1``, doubling their period between successive positions.

    Profiles are even in ``s``, so neighbouring faces agree on the diagonals
    and only a crease remains there.
    """
    lams, taus = params.periods, params.positions
    profiles = [lam / (math.sqrt(2.0) * math.pi) * np.cos(2.0 * math.pi * s / lam) for lam in lams]
    out = profiles[0]
    for k in range(1, len(lams)):
        chi = smoothstep((t - taus[k - 1]) / (taus[k] - taus[k - 1]))
        mix = ((1.0 - chi) * profiles[k - 1] + chi * profiles[k]) / np.hypot(1.0 - chi, chi)
        out = np.where(t >= taus[k - 1], mix, out)
    return out * smoothstep(t / taus[0])


def branched_blister(
    grid: Grid, sigma: float, generations: int | None = None, params: BranchingParams | None = None
) -> ConstructedState:
    """Tent plus tangential wrinkles refining towards the clamped edges, smoothed on the scale ``sigma``.

    The in-plane displacement is the exact minimizer of the stretching term.
    """
    check_resolved(grid, sigma, "sigma")
    p = params or blister_params(grid, sigma, generations)
    s, t = _face_coordinates(grid)
    w = mollify_odd(ScalarField(grid, tent(grid).values + wrinkle_field(s, t, p)), sigma)
    w = ScalarField(grid, np.maximum(w.values, 0.0))
    u = relax_inplane(w, BoundarySpec.full())
    return ConstructedState(
        u, w, BLISTER_ENERGY_CONSTANT * sigma, p, BoundarySpec.full(), "branched_blister"
    )


# --- three-dimensional lift -------------------------------------------------------------


def lift_to_3d(u: VectorField2, w: ScalarField, delta: float, h: float, nz: int) -> DeformationField3D:
    """``v = (1 - delta) [psi + x3 n]`` on ``Omega x (0, h)``.

    ``psi = (x + 2 delta u, sqrt(2 delta) w)`` deforms the midplane and
    ``n = (-sqrt(2 delta) Dw, 1)`` is its normal to leading order.
    """
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    if not 0.0 < h < math.sqrt(delta):
        raise ValueError(f"thickness must lie in (0, sqrt(delta)), got {h}")
    if nz < 2:
        raise ValueError("nz must be at least 2")
    g = w.grid
    if u.grid != g:
        raise ValueError("u and w live on different grids")
    x1, x2 = g.mesh()
    a = math.sqrt(2.0 * delta)
    x3 = np.linspace(0.0, h, nz + 1)[None, None, :]
    psi1 = (x1 + 2.0 * delta * u.x)[..., None]
    psi2 = (x2 + 2.0 * delta * u.y)[..., None]
    psi3 = (a * w.values)[..., None]
    n1 = (-a * d1(w.values, g))[..., None]
    n2 = (-a * d2(w.values, g))[..., None]
    f = 1.0 - delta
    return DeformationField3D(
        g, nz, h, f * (psi1 + x3 * n1), f * (psi2 + x3 * n2), f * (psi3 + x3)
    )
