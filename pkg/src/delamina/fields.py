"""Node-centred fields on a uniform rectangular grid.

Values are stored as ``(nx + 1, ny + 1)`` arrays with index ``[i, j]`` at the
node ``(i * hx, j * hy)``.  Derivatives are second-order finite differences
(central inside, one-sided on the boundary rows); integrals use the composite
trapezoidal rule with a compensated, fixed-order reduction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
from scipy.signal import fftconvolve


class GridMismatchError(ValueError):
    """Fields that must share a grid do not."""


class ResolutionError(ValueError):
    """A length scale is too small for the grid spacing."""


@dataclass(frozen=True)
class Grid:
    nx: int
    ny: int
    lx: float = 1.0
    ly: float = 1.0

    def __post_init__(self):
        if self.nx < 4 or self.ny < 4:
            raise ValueError(f"grid needs at least 4 cells per axis, got {self.nx}x{self.ny}")
        if not (self.lx > 0 and self.ly > 0):
            raise ValueError("domain lengths must be positive")

    @property
    def hx(self) -> float:
        return self.lx / self.nx

    @property
    def hy(self) -> float:
        return self.ly / self.ny

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx + 1, self.ny + 1)

    @property
    def area(self) -> float:
        return self.lx * self.ly

    @property
    def x1(self) -> np.ndarray:
        return np.linspace(0.0, self.lx, self.nx + 1)

    @property
    def x2(self) -> np.ndarray:
        return np.linspace(0.0, self.ly, self.ny + 1)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x1, self.x2, indexing="ij")

    def weights(self) -> np.ndarray:
        """Trapezoidal quadrature weights at the nodes."""
        return _weights(self)


@lru_cache(maxsize=16)
def _weights(grid: Grid) -> np.ndarray:
    cx = np.full(grid.nx + 1, grid.hx)
    cx[[0, -1]] *= 0.5
    cy = np.full(grid.ny + 1, grid.hy)
    cy[[0, -1]] *= 0.5
    w = np.outer(cx, cy)
    w.flags.writeable = False
    return w


def _check_values(grid: Grid, values: np.ndarray) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if values.shape != grid.shape:
        raise ValueError(f"expected node array of shape {grid.shape}, got {values.shape}")
    if not np.all(np.isfinite(values)):
        raise ValueError("field values must be finite")
    return values


@dataclass(frozen=True, eq=False)
class ScalarField:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _check_values(self.grid, self.values))


@dataclass(frozen=True, eq=False)
class VectorField2:
    grid: Grid
    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", _check_values(self.grid, self.x))
        object.__setattr__(self, "y", _check_values(self.grid, self.y))

    @classmethod
    def zeros(cls, grid: Grid) -> "VectorField2":
        return cls(grid, np.zeros(grid.shape), np.zeros(grid.shape))


@dataclass(frozen=True, eq=False)
class SymTensorField:
    grid: Grid
    xx: np.ndarray
    xy: np.ndarray
    yy: np.ndarray

    def __post_init__(self):
        for name in ("xx", "xy", "yy"):
            object.__setattr__(self, name, _check_values(self.grid, getattr(self, name)))

    def norm2(self) -> np.ndarray:
        """Nodewise squared Frobenius norm ``Tr(M^T M)``."""
        return self.xx**2 + self.yy**2 + 2.0 * self.xy**2

    def trace(self) -> np.ndarray:
        return self.xx + self.yy


@dataclass(frozen=True)
class BoundarySpec:
    """Per-edge Dirichlet flags (applied to both u and w)."""

    left: bool = True  # x1 = 0
    right: bool = True  # x1 = lx
    bottom: bool = True  # x2 = 0
    top: bool = True  # x2 = ly

    def __post_init__(self):
        if not (self.left or self.right or self.bottom or self.top):
            raise ValueError("at least one edge must be Dirichlet")

    @classmethod
    def full(cls) -> "BoundarySpec":
        return cls()

    @classmethod
    def left_only(cls) -> "BoundarySpec":
        return cls(left=True, right=False, bottom=False, top=False)

    def mask(self, grid: Grid) -> np.ndarray:
        """Boolean node mask, True on Dirichlet nodes."""
        m = np.zeros(grid.shape, dtype=bool)
        if self.left:
            m[0, :] = True
        if self.right:
            m[-1, :] = True
        if self.bottom:
            m[:, 0] = True
        if self.top:
            m[:, -1] = True
        return m


def same_grid(*fields) -> Grid:
    grid = fields[0].grid
    for f in fields[1:]:
        if f.grid != grid:
            raise GridMismatchError(f"grid mismatch: {grid} vs {f.grid}")
    return grid


# --- one-dimensional stencils -------------------------------------------------


@lru_cache(maxsize=32)
def first_difference(n: int, h: float) -> sp.csr_matrix:
    """(n+1)x(n+1) first-derivative matrix, exact on quadratics."""
    rows, cols, vals = [], [], []
    for i in range(1, n):
        rows += [i, i]
        cols += [i - 1, i + 1]
        vals += [-0.5, 0.5]
    rows += [0, 0, 0, n, n, n]
    cols += [0, 1, 2, n, n - 1, n - 2]
    vals += [-1.5, 2.0, -0.5, 1.5, -2.0, 0.5]
    m = sp.csr_matrix((np.array(vals) / h, (rows, cols)), shape=(n + 1, n + 1))
    return m


@lru_cache(maxsize=32)
def second_difference(n: int, h: float) -> sp.csr_matrix:
    """(n+1)x(n+1) second-derivative matrix, exact on cubics."""
    rows, cols, vals = [], [], []
    for i in range(1, n):
        rows += [i, i, i]
        cols += [i - 1, i, i + 1]
        vals += [1.0, -2.0, 1.0]
    rows += [0] * 4 + [n] * 4
    cols += [0, 1, 2, 3, n, n - 1, n - 2, n - 3]
    vals += [2.0, -5.0, 4.0, -1.0] * 2
    m = sp.csr_matrix((np.array(vals) / h**2, (rows, cols)), shape=(n + 1, n + 1))
    return m


def d1(a: np.ndarray, grid: Grid) -> np.ndarray:
    return np.asarray(first_difference(grid.nx, grid.hx) @ a)


def d2(a: np.ndarray, grid: Grid) -> np.ndarray:
    return np.asarray((first_difference(grid.ny, grid.hy) @ a.T).T)


def d11(a: np.ndarray, grid: Grid) -> np.ndarray:
    return np.asarray(second_difference(grid.nx, grid.hx) @ a)


def d22(a: np.ndarray, grid: Grid) -> np.ndarray:
    return np.asarray((second_difference(grid.ny, grid.hy) @ a.T).T)


def d12(a: np.ndarray, grid: Grid) -> np.ndarray:
    return d1(d2(a, grid), grid)


# Adjoints (transposes) of the stencils above, used to assemble exact gradients.


def d1_t(a: np.ndarray, grid: Grid) -> np.ndarray:
    return np.asarray(first_difference(grid.nx, grid.hx).T @ a)


def d2_t(a: np.ndarray, grid: Grid) -> np.ndarray:
    return np.asarray((first_difference(grid.ny, grid.hy).T @ a.T).T)


def d11_t(a: np.ndarray, grid: Grid) -> np.ndarray:
    return np.asarray(second_difference(grid.nx, grid.hx).T @ a)


def d22_t(a: np.ndarray, grid: Grid) -> np.ndarray:
    return np.asarray((second_difference(grid.ny, grid.hy).T @ a.T).T)


def d12_t(a: np.ndarray, grid: Grid) -> np.ndarray:
    return d2_t(d1_t(a, grid), grid)


# --- public operators ----------------------------------------------------------


def gradient(f: ScalarField) -> VectorField2:
    g = f.grid
    return VectorField2(g, d1(f.values, g), d2(f.values, g))


def hessian(f: ScalarField) -> SymTensorField:
    g = f.grid
    v = f.values
    return SymTensorField(g, d11(v, g), d12(v, g), d22(v, g))


def strain(u: VectorField2, w: ScalarField, eigenstrain: float) -> SymTensorField:
    """``Du + Du^T + Dw (x) Dw - 2 eigenstrain Id`` at every node."""
    g = same_grid(u, w)
    w1, w2 = d1(w.values, g), d2(w.values, g)
    exx = 2.0 * d1(u.x, g) + w1 * w1 - 2.0 * eigenstrain
    eyy = 2.0 * d2(u.y, g) + w2 * w2 - 2.0 * eigenstrain
    exy = d2(u.x, g) + d1(u.y, g) + w1 * w2
    return SymTensorField(g, exx, exy, eyy)


def integrate_array(values: np.ndarray, grid: Grid) -> float:
    """Trapezoidal integral with a correctly rounded row-major sum."""
    return math.fsum((np.asarray(values) * grid.weights()).ravel())


def integrate(f: ScalarField) -> float:
    return integrate_array(f.values, f.grid)


def distance_to_boundary(grid: Grid) -> ScalarField:
    x, y = grid.mesh()
    d = np.minimum(np.minimum(x, grid.lx - x), np.minimum(y, grid.ly - y))
    d[0, :] = d[-1, :] = 0.0
    d[:, 0] = d[:, -1] = 0.0
    return ScalarField(grid, d)


# --- mollification ---------------------------------------------------------------


def bump_kernel(grid: Grid, sigma: float) -> np.ndarray:
    """Discrete ``(1 - r^2/sigma^2)^3`` bump on the grid lattice, summing to 1."""
    check_resolved(grid, sigma, "sigma")
    kx = int(math.floor(sigma / grid.hx))
    ky = int(math.floor(sigma / grid.hy))
    x = np.arange(-kx, kx + 1) * grid.hx
    y = np.arange(-ky, ky + 1) * grid.hy
    r2 = (x[:, None] ** 2 + y[None, :] ** 2) / sigma**2
    k = np.where(r2 < 1.0, (1.0 - r2) ** 3, 0.0)
    # symmetrize explicitly so affine data is reproduced to rounding
    k = 0.25 * (k + k[::-1, :] + k[:, ::-1] + k[::-1, ::-1])
    return k / k.sum()


def check_resolved(
    grid: Grid, length: float, name: str, cells: float = 2.0, spacing: float | None = None
) -> None:
    """Raise unless ``length`` spans ``cells`` spacings (default: the coarser axis)."""
    h = max(grid.hx, grid.hy) if spacing is None else spacing
    if not length >= cells * h:
        raise ResolutionError(f"{name}={length:g} is below {cells:g} grid spacings (spacing {h:g})")


def _convolve_valid(padded: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    return fftconvolve(padded, kernel, mode="valid")


def mollify(f: ScalarField, sigma: float) -> ScalarField:
    """Convolve with the normalized bump of radius ``sigma`` (zero extension)."""
    g = f.grid
    k = bump_kernel(g, sigma)
    px, py = (k.shape[0] - 1) // 2, (k.shape[1] - 1) // 2
    padded = np.pad(f.values, ((px, px), (py, py)))
    return ScalarField(g, _convolve_valid(padded, k))


def mollify_odd(f: ScalarField, sigma: float) -> ScalarField:
    """Mollify after odd reflection across every edge.

    For data vanishing on the boundary the result vanishes on the straight
    edges as well; boundary nodes are then set to exactly zero.
    """
    g = f.grid
    k = bump_kernel(g, sigma)
    px, py = (k.shape[0] - 1) // 2, (k.shape[1] - 1) // 2
    if px > g.nx or py > g.ny:
        raise ResolutionError(f"sigma={sigma:g} exceeds the domain size")
    padded = np.pad(f.values, ((px, px), (py, py)), mode="reflect", reflect_type="odd")
    out = _convolve_valid(padded, k)
    out[0, :] = out[-1, :] = 0.0
    out[:, 0] = out[:, -1] = 0.0
    return ScalarField(g, out)
