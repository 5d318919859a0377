"""Optimal in-plane displacement for a given out-of-plane profile.

The stretching term is quadratic in ``u`` for fixed ``w``: with ``B u`` the
symmetrized gradient (scaled so that its squared norm is ``|Du + Du^T|^2``)
and ``m`` the part of the strain that depends on ``w`` only, the minimizer
solves the normal equations ``B^T W B u = -B^T W m`` on the free nodes.  The
system is symmetric positive definite once one edge is clamped; it is solved
with conjugate gradients, preconditioned by smoothed-aggregation AMG on each
of the four sub-lattice classes that central differences nearly decouple.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
import pyamg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .fields import BoundarySpec, Grid, ScalarField, VectorField2, d1, d2, first_difference

_ROOT2 = math.sqrt(2.0)


def _interleave(a: sp.spmatrix, b: sp.spmatrix) -> sp.csr_matrix:
    """Stack two operators acting on (u1, u2) so unknowns are ordered node by node."""
    m = sp.hstack([a, b], format="csr")
    n = a.shape[1]
    perm = np.empty(2 * n, dtype=np.int64)
    perm[0::2] = np.arange(n)
    perm[1::2] = np.arange(n, 2 * n)
    return m[:, perm]


def _sublattice_class(grid: Grid) -> np.ndarray:
    """Class label 0..3 of every unknown in node-major (u1, u2) order.

    Central differences couple ``u1`` at node parities ``(a, b)`` only with
    ``u2`` at parities ``(1 - a, 1 - b)`` away from the boundary rows, so the
    stiffness matrix is nearly block diagonal over these four classes.
    """
    i, j = np.meshgrid(np.arange(grid.nx + 1) % 2, np.arange(grid.ny + 1) % 2, indexing="ij")
    cls = np.empty(2 * i.size, dtype=np.int64)
    cls[0::2] = (2 * i + j).ravel()
    cls[1::2] = (2 * (1 - i) + (1 - j)).ravel()
    return cls


@lru_cache(maxsize=4)
def _system(grid: Grid, boundary: BoundarySpec):
    ix = sp.identity(grid.nx + 1, format="csr")
    iy = sp.identity(grid.ny + 1, format="csr")
    dx = sp.kron(first_difference(grid.nx, grid.hx), iy, format="csr")
    dy = sp.kron(ix, first_difference(grid.ny, grid.hy), format="csr")
    zero = sp.csr_matrix(dx.shape)
    b = sp.vstack(
        [_interleave(2.0 * dx, zero), _interleave(zero, 2.0 * dy), _interleave(_ROOT2 * dy, _ROOT2 * dx)],
        format="csr",
    )
    wts = np.tile(grid.weights().ravel(), 3)
    a = (b.T @ sp.diags(wts) @ b).tocsr()
    free = np.flatnonzero(~np.repeat(boundary.mask(grid).ravel(), 2))
    a_free = a[free][:, free].tocsr()

    x, y = grid.mesh()
    xs = np.repeat(x.ravel(), 2)[free]
    ys = np.repeat(y.ravel(), 2)[free]
    comp = np.tile([0, 1], x.size)[free]
    cls = _sublattice_class(grid)[free]
    blocks = []
    for k in range(4):
        idx = np.flatnonzero(cls == k)
        # rigid motions span the near null space of each block
        rigid = np.column_stack(
            [comp[idx] == 0, comp[idx] == 1, np.where(comp[idx] == 0, -ys[idx], xs[idx])]
        ).astype(float)
        ml = pyamg.smoothed_aggregation_solver(a_free[idx][:, idx].tocsr(), B=rigid, symmetry="symmetric")
        blocks.append((idx, ml.aspreconditioner(cycle="V")))

    def apply(r):
        z = np.zeros_like(r)
        for idx, op in blocks:
            z[idx] = op @ r[idx]
        return z

    precond = spla.LinearOperator(a_free.shape, apply)
    return b, wts, free, a_free, precond


def relax_inplane(
    w: ScalarField,
    boundary: BoundarySpec,
    eigenstrain: float = 0.5,
    tol: float = 1e-9,
) -> VectorField2:
    """Displacement minimizing ``int |Du + Du^T + Dw (x) Dw - 2 eigenstrain Id|^2``."""
    g = w.grid
    b, wts, free, a, precond = _system(g, boundary)
    w1, w2 = d1(w.values, g), d2(w.values, g)
    m = np.concatenate(
        [
            (w1 * w1 - 2.0 * eigenstrain).ravel(),
            (w2 * w2 - 2.0 * eigenstrain).ravel(),
            (_ROOT2 * w1 * w2).ravel(),
        ]
    )
    rhs = -(b.T @ (wts * m))[free]
    x, info = spla.cg(a, rhs, rtol=tol, M=precond, maxiter=2000)
    if info != 0:
        raise RuntimeError(f"in-plane relaxation did not converge (info={info})")
    u = np.zeros(2 * w.values.size)
    u[free] = x
    return VectorField2(g, u[0::2].reshape(g.shape), u[1::2].reshape(g.shape))
