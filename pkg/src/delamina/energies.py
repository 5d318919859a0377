"""Discrete plate, film and bulk energies with per-term breakdowns.

Every functional is a trapezoidal sum of nodewise integrands built from the
finite-difference operators in :mod:`delamina.fields`.  Gradients are the exact
adjoints of those sums, so they agree with finite differences of the discrete
energy to rounding error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Literal, Sequence

import numpy as np

from .fields import (
    BoundarySpec,
    Grid,
    ScalarField,
    VectorField2,
    d1,
    d1_t,
    d2,
    d2_t,
    d11,
    d11_t,
    d12,
    d12_t,
    d22,
    d22_t,
    first_difference,
    integrate_array,
    same_grid,
)

FunctionalKind = Literal["eikonal", "fvk", "fvk-general", "bonded-smooth", "linearized"]
FUNCTIONAL_KINDS: tuple[str, ...] = ("eikonal", "fvk", "fvk-general", "bonded-smooth", "linearized")
# the ramp bond term on its own, useful for checking the optimizer plumbing
OBJECTIVE_KINDS: tuple[str, ...] = FUNCTIONAL_KINDS + ("bond-surrogate",)


@dataclass(frozen=True)
class EnergyParams:
    sigma: float = 0.01
    gamma: float = 0.0
    nu: float = 0.0
    young: float = 1.0
    thickness: float = 0.01
    eigenstrain: float = 0.5
    eta: float = 1e-6

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if not self.gamma >= 0:
            raise ValueError(f"gamma must be non-negative, got {self.gamma}")
        if not -1.0 <= self.nu <= 0.5:
            raise ValueError(f"nu must lie in [-1, 1/2], got {self.nu}")
        if not self.young > 0:
            raise ValueError(f"young must be positive, got {self.young}")
        if not self.thickness > 0:
            raise ValueError(f"thickness must be positive, got {self.thickness}")
        if not 0 <= self.eigenstrain < 1:
            raise ValueError(f"eigenstrain must lie in [0, 1), got {self.eigenstrain}")
        if not self.eta > 0:
            raise ValueError(f"eta must be positive, got {self.eta}")

    def with_(self, **kw) -> "EnergyParams":
        return replace(self, **kw)


@dataclass(frozen=True)
class EnergyBreakdown:
    stretch: float
    bend: float
    bond: float = 0.0
    total: float = field(default=math.nan)
    bond_smooth: float | None = None

    def __post_init__(self):
        if math.isnan(self.total):
            object.__setattr__(self, "total", math.fsum((self.stretch, self.bend, self.bond)))

    def as_dict(self) -> dict:
        d = {"stretch": self.stretch, "bend": self.bend, "bond": self.bond, "total": self.total}
        if self.bond_smooth is not None:
            d["bond_smooth"] = self.bond_smooth
        return d


@dataclass(frozen=True)
class Fold:
    length: float
    jump_magnitude: float

    def __post_init__(self):
        if not self.length > 0:
            raise ValueError("fold length must be positive")
        if not (self.jump_magnitude >= 0 and math.isfinite(self.jump_magnitude)):
            raise ValueError("fold jump must be finite and non-negative")


@dataclass(frozen=True)
class FoldSet:
    folds: tuple[Fold, ...]

    @classmethod
    def of(cls, segments: Sequence[tuple[float, float]]) -> "FoldSet":
        return cls(tuple(Fold(length, jump) for length, jump in segments))

    @property
    def total_length(self) -> float:
        return math.fsum(f.length for f in self.folds)


@dataclass(frozen=True, eq=False)
class DeformationField3D:
    """Deformation ``v`` of the slab ``Omega x (0, thickness)`` on a node lattice."""

    grid: Grid
    nz: int
    thickness: float
    v1: np.ndarray
    v2: np.ndarray
    v3: np.ndarray

    def __post_init__(self):
        if self.nz < 2:
            raise ValueError("nz must be at least 2")
        if not self.thickness > 0:
            raise ValueError("thickness must be positive")
        shape = self.grid.shape + (self.nz + 1,)
        for name in ("v1", "v2", "v3"):
            a = np.asarray(getattr(self, name), dtype=float)
            if a.shape != shape:
                raise ValueError(f"{name} must have shape {shape}, got {a.shape}")
            if not np.all(np.isfinite(a)):
                raise ValueError(f"{name} must be finite")
            object.__setattr__(self, name, a)

    @property
    def x3(self) -> np.ndarray:
        return np.linspace(0.0, self.thickness, self.nz + 1)


# --- nodewise building blocks ---------------------------------------------------


def _membrane(u: VectorField2, w: ScalarField, eigenstrain: float):
    g = same_grid(u, w)
    w1, w2 = d1(w.values, g), d2(w.values, g)
    exx = 2.0 * d1(u.x, g) + w1 * w1 - 2.0 * eigenstrain
    eyy = 2.0 * d2(u.y, g) + w2 * w2 - 2.0 * eigenstrain
    exy = d2(u.x, g) + d1(u.y, g) + w1 * w2
    return g, w1, w2, exx, exy, eyy


def _hess(w: ScalarField):
    g = w.grid
    v = w.values
    return d11(v, g), d12(v, g), d22(v, g)


def _bending_density(w: ScalarField) -> np.ndarray:
    wxx, wxy, wyy = _hess(w)
    return wxx**2 + wyy**2 + 2.0 * wxy**2


def _integral(values: np.ndarray, grid: Grid) -> float:
    return integrate_array(values, grid)


# --- functionals ------------------------------------------------------------------


def eikonal_energy(w: ScalarField, sigma: float) -> EnergyBreakdown:
    g = w.grid
    q = d1(w.values, g) ** 2 + d2(w.values, g) ** 2
    stretch = _integral((q - 1.0) ** 2, g)
    bend = sigma**2 * _integral(_bending_density(w), g)
    return EnergyBreakdown(stretch, bend)


def fold_energy(folds: FoldSet) -> float:
    """One third of the cubed gradient jump integrated along the fold lines."""
    return math.fsum(f.jump_magnitude**3 * f.length for f in folds.folds) / 3.0


def fvk_energy(u: VectorField2, w: ScalarField, sigma: float) -> EnergyBreakdown:
    g, _, _, exx, exy, eyy = _membrane(u, w, 0.5)
    stretch = _integral(exx**2 + eyy**2 + 2.0 * exy**2, g)
    bend = sigma**2 * _integral(_bending_density(w), g)
    return EnergyBreakdown(stretch, bend)


def fvk_general_energy(u: VectorField2, w: ScalarField, params: EnergyParams) -> EnergyBreakdown:
    nu, h = params.nu, params.thickness
    scale = 0.5 * params.young * h
    g, _, _, exx, exy, eyy = _membrane(u, w, params.eigenstrain)
    tr = exx + eyy
    stretch = scale * _integral((1 - nu) * (exx**2 + eyy**2 + 2 * exy**2) + nu * tr**2, g)
    wxx, wxy, wyy = _hess(w)
    plate = (1 - nu) * (wxx**2 + wyy**2 + 2 * wxy**2) + nu * (wxx + wyy) ** 2
    bend = scale * h**2 / 12.0 * _integral(plate, g)
    return EnergyBreakdown(stretch, bend)


def debonded_area(w: ScalarField, eta: float) -> float:
    """Quadrature measure of the nodes where ``w > eta``."""
    return _integral((w.values > eta).astype(float), w.grid)


def smooth_bond_area(w: ScalarField, eta: float) -> float:
    return _integral(np.minimum(w.values / eta, 1.0), w.grid)


def bonded_energy(
    u: VectorField2, w: ScalarField, sigma: float, gamma: float, eta: float = 1e-6
) -> EnergyBreakdown:
    if gamma < 0:
        raise ValueError("gamma must be non-negative")
    if not eta > 0:
        raise ValueError("eta must be positive")
    base = fvk_energy(u, w, sigma)
    return EnergyBreakdown(
        base.stretch,
        base.bend,
        gamma * debonded_area(w, eta),
        bond_smooth=gamma * smooth_bond_area(w, eta),
    )


def bonded_energy_smooth(
    u: VectorField2, w: ScalarField, sigma: float, gamma: float, eta: float = 1e-6
) -> float:
    """FvK energy plus the ramp surrogate ``gamma * int min(w/eta, 1)``."""
    if not eta > 0:
        raise ValueError("eta must be positive")
    return fvk_energy(u, w, sigma).total + gamma * smooth_bond_area(w, eta)


def linearized_terms(u: VectorField2, w: ScalarField, params: EnergyParams) -> tuple[float, float, float]:
    """(membrane, destabilizing, bending) parts of the linearized energy."""
    g = same_grid(u, w)
    nu, h, delta = params.nu, params.thickness, params.eigenstrain
    scale = 0.5 * params.young * h
    exx = 2.0 * d1(u.x, g) - 2.0 * delta
    eyy = 2.0 * d2(u.y, g) - 2.0 * delta
    exy = d2(u.x, g) + d1(u.y, g)
    membrane = scale * _integral((1 - nu) * (exx**2 + eyy**2 + 2 * exy**2) + nu * (exx + eyy) ** 2, g)
    q = d1(w.values, g) ** 2 + d2(w.values, g) ** 2
    destab = -scale * 4.0 * delta * (1 + 2 * nu) * _integral(q, g)
    wxx, wxy, wyy = _hess(w)
    plate = (1 - nu) * (wxx**2 + wyy**2 + 2 * wxy**2) + nu * (wxx + wyy) ** 2
    bend = scale * h**2 / 12.0 * _integral(plate, g)
    return membrane, destab, bend


def linearized_energy(u: VectorField2, w: ScalarField, params: EnergyParams) -> float:
    return math.fsum(linearized_terms(u, w, params))


# --- three-dimensional energy ---------------------------------------------------------


def dist2_to_so3(F: np.ndarray) -> np.ndarray:
    """Squared Frobenius distance of each ``(..., 3, 3)`` matrix to SO(3)."""
    s = np.linalg.svd(F, compute_uv=False)
    det = np.linalg.det(F)
    # improper part: the nearest rotation flips the smallest singular direction
    s_min = np.where(det < 0, -s[..., 2], s[..., 2])
    return (s[..., 0] - 1.0) ** 2 + (s[..., 1] - 1.0) ** 2 + (s_min - 1.0) ** 2


def deformation_gradient(v: DeformationField3D) -> np.ndarray:
    g = v.grid
    Dx = first_difference(g.nx, g.hx)
    Dy = first_difference(g.ny, g.hy)
    Dz = first_difference(v.nz, v.thickness / v.nz)
    F = np.empty(v.v1.shape + (3, 3))
    for i, comp in enumerate((v.v1, v.v2, v.v3)):
        F[..., i, 0] = _apply(Dx, comp, 0)
        F[..., i, 1] = _apply(Dy, comp, 1)
        F[..., i, 2] = _apply(Dz, comp, 2)
    return F


def _apply(D, a: np.ndarray, axis: int) -> np.ndarray:
    moved = np.moveaxis(a, axis, 0)
    shape = moved.shape
    out = D @ moved.reshape(shape[0], -1)
    return np.moveaxis(np.asarray(out).reshape(shape), 0, axis)


def energy_3d(v: DeformationField3D) -> float:
    """``(1/h) int W(Dv)`` with ``W = dist^2(., SO(3))``, trapezoidal in all axes."""
    F = deformation_gradient(v)
    dens = dist2_to_so3(F)
    wz = np.full(v.nz + 1, v.thickness / v.nz)
    wz[[0, -1]] *= 0.5
    weights = v.grid.weights()[:, :, None] * wz[None, None, :]
    return math.fsum((dens * weights).ravel()) / v.thickness


# --- gradients -----------------------------------------------------------------------


def _membrane_adjoint(g: Grid, w1, w2, pxx, pxy, pyy):
    """Gradient of sum(pxx*dexx + pxy*dexy + pyy*deyy) wrt (u1, u2, w)."""
    gu1 = 2.0 * d1_t(pxx, g) + d2_t(pxy, g)
    gu2 = 2.0 * d2_t(pyy, g) + d1_t(pxy, g)
    gw = d1_t(2.0 * w1 * pxx + w2 * pxy, g) + d2_t(2.0 * w2 * pyy + w1 * pxy, g)
    return gu1, gu2, gw


def _hessian_adjoint(g: Grid, qxx, qxy, qyy):
    return d11_t(qxx, g) + d12_t(qxy, g) + d22_t(qyy, g)


def _plate_adjoint(w: ScalarField, weights: np.ndarray, nu: float) -> np.ndarray:
    """Gradient of sum W[(1-nu)|D2w|^2 + nu (lap w)^2]."""
    wxx, wxy, wyy = _hess(w)
    lap = wxx + wyy
    qxx = weights * (2 * (1 - nu) * wxx + 2 * nu * lap)
    qyy = weights * (2 * (1 - nu) * wyy + 2 * nu * lap)
    qxy = weights * (4 * (1 - nu) * wxy)
    return _hessian_adjoint(w.grid, qxx, qxy, qyy)


def objective(kind: str, u: VectorField2, w: ScalarField, params: EnergyParams) -> float:
    """Scalar value of the functional whose gradient :func:`discrete_gradient` returns."""
    if kind == "eikonal":
        return eikonal_energy(w, params.sigma).total
    if kind == "fvk":
        return fvk_energy(u, w, params.sigma).total
    if kind == "fvk-general":
        return fvk_general_energy(u, w, params).total
    if kind == "bonded-smooth":
        return bonded_energy_smooth(u, w, params.sigma, params.gamma, params.eta)
    if kind == "linearized":
        return linearized_energy(u, w, params)
    if kind == "bond-surrogate":
        return params.gamma * smooth_bond_area(w, params.eta)
    raise ValueError(f"unsupported functional kind {kind!r}; expected one of {OBJECTIVE_KINDS}")


def discrete_gradient(
    kind: str,
    u: VectorField2,
    w: ScalarField,
    params: EnergyParams,
    boundary: BoundarySpec | None = None,
) -> tuple[VectorField2, ScalarField]:
    """Exact gradient of the discrete functional wrt every nodal value.

    Rows of Dirichlet nodes (per ``boundary``) are zeroed.  For ``eikonal`` the
    in-plane part is identically zero.
    """
    if kind not in OBJECTIVE_KINDS:
        raise ValueError(f"unsupported functional kind {kind!r}; expected one of {OBJECTIVE_KINDS}")
    g = same_grid(u, w)
    W = g.weights()
    zeros = np.zeros(g.shape)
    sigma = params.sigma

    if kind == "eikonal":
        w1, w2 = d1(w.values, g), d2(w.values, g)
        c = 4.0 * W * (w1**2 + w2**2 - 1.0)
        gw = d1_t(c * w1, g) + d2_t(c * w2, g) + sigma**2 * _plate_adjoint(w, W, 0.0)
        gu1, gu2 = zeros, zeros.copy()
    elif kind in ("fvk", "bonded-smooth"):
        _, w1, w2, exx, exy, eyy = _membrane(u, w, 0.5)
        gu1, gu2, gw = _membrane_adjoint(g, w1, w2, 2 * W * exx, 4 * W * exy, 2 * W * eyy)
        gw = gw + sigma**2 * _plate_adjoint(w, W, 0.0)
        if kind == "bonded-smooth":
            gw = gw + params.gamma / params.eta * W * (w.values < params.eta)
    elif kind == "fvk-general":
        nu, h = params.nu, params.thickness
        scale = 0.5 * params.young * h
        _, w1, w2, exx, exy, eyy = _membrane(u, w, params.eigenstrain)
        tr = exx + eyy
        pxx = scale * W * (2 * (1 - nu) * exx + 2 * nu * tr)
        pyy = scale * W * (2 * (1 - nu) * eyy + 2 * nu * tr)
        pxy = scale * W * (4 * (1 - nu) * exy)
        gu1, gu2, gw = _membrane_adjoint(g, w1, w2, pxx, pxy, pyy)
        gw = gw + scale * h**2 / 12.0 * _plate_adjoint(w, W, nu)
    elif kind == "bond-surrogate":
        gw = params.gamma / params.eta * W * (w.values < params.eta)
        gu1, gu2 = zeros, zeros.copy()
    else:  # linearized
        nu, h, delta = params.nu, params.thickness, params.eigenstrain
        scale = 0.5 * params.young * h
        exx = 2.0 * d1(u.x, g) - 2.0 * delta
        eyy = 2.0 * d2(u.y, g) - 2.0 * delta
        exy = d2(u.x, g) + d1(u.y, g)
        tr = exx + eyy
        pxx = scale * W * (2 * (1 - nu) * exx + 2 * nu * tr)
        pyy = scale * W * (2 * (1 - nu) * eyy + 2 * nu * tr)
        pxy = scale * W * (4 * (1 - nu) * exy)
        gu1 = 2.0 * d1_t(pxx, g) + d2_t(pxy, g)
        gu2 = 2.0 * d2_t(pyy, g) + d1_t(pxy, g)
        w1, w2 = d1(w.values, g), d2(w.values, g)
        c = -scale * 8.0 * delta * (1 + 2 * nu) * W
        gw = d1_t(c * w1, g) + d2_t(c * w2, g) + scale * h**2 / 12.0 * _plate_adjoint(w, W, nu)

    gu1, gu2, gw = np.array(gu1), np.array(gu2), np.array(gw)
    if boundary is not None:
        m = boundary.mask(g)
        gu1[m] = gu2[m] = gw[m] = 0.0
    return VectorField2(g, gu1, gu2), ScalarField(g, gw)
