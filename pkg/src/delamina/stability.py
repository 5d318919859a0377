"""Linear stability of the flat film on a disc, restricted to radial deflections.

For ``w(x) = phi(|x|)`` with ``phi(R) = 0`` the linearized plate energy is

    (1/2) Y h int_0^R [ -4 delta (1 + 2 nu) phi'^2
                        + h^2/12 (phi''^2 + (phi'/r)^2 + 2 nu phi' phi''/r) ] r dr,

which is affine in ``delta``.  The flat state loses stability at the smallest
``delta`` for which some profile makes it non-positive; on a grid this is a
generalized eigenvalue problem between the bending and destabilizing forms.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp


@dataclass(frozen=True)
class StabilityParams:
    young: float = 1.0
    thickness: float = 20e-9
    radius: float = 10e-6
    nu: float = 0.277
    n_points: int = 256

    def __post_init__(self):
        if not self.young > 0:
            raise ValueError(f"young must be positive, got {self.young}")
        if not self.thickness > 0:
            raise ValueError(f"thickness must be positive, got {self.thickness}")
        if not self.radius > 0:
            raise ValueError(f"radius must be positive, got {self.radius}")
        if not (-1.0 <= self.nu <= 0.5):
            raise ValueError(f"nu must lie in [-1, 1/2], got {self.nu}")
        if int(self.n_points) != self.n_points or self.n_points < 64:
            raise ValueError(f"n_points must be an integer >= 64, got {self.n_points}")

    def radii(self) -> np.ndarray:
        """Uniform radial nodes ``0 = r_0 < ... < r_n = R``."""
        return np.linspace(0.0, self.radius, self.n_points + 1)


@dataclass(frozen=True, eq=False)
class StabilityResult:
    delta_crit: float
    prefactor: float
    radii: np.ndarray = field(repr=False)
    mode: np.ndarray = field(repr=False)
    ratio_to_experiment: float | None = None

    def as_dict(self) -> dict:
        return {
            "delta_crit": self.delta_crit,
            "prefactor": self.prefactor,
            "ratio_to_experiment": self.ratio_to_experiment,
            "n_points": int(self.radii.size - 1),
        }


def buckling_estimate(h: float, R: float) -> float:
    """Order-of-magnitude threshold ``h^2 / R^2``."""
    if not (h > 0 and R > 0):
        raise ValueError("h and R must be positive")
    return h * h / (R * R)


@lru_cache(maxsize=8)
def _operators(n: int, dr: float):
    """Second-order first and second derivative matrices on ``n + 1`` uniform nodes."""
    d1 = sp.lil_matrix((n + 1, n + 1))
    d2 = sp.lil_matrix((n + 1, n + 1))
    for i in range(1, n):
        d1[i, i - 1], d1[i, i + 1] = -0.5 / dr, 0.5 / dr
        d2[i, i - 1], d2[i, i], d2[i, i + 1] = 1 / dr**2, -2 / dr**2, 1 / dr**2
    d1[0, :3] = np.array([-3.0, 4.0, -1.0]) / (2 * dr)
    d1[n, n - 2 :] = np.array([1.0, -4.0, 3.0]) / (2 * dr)
    d2[0, :4] = np.array([2.0, -5.0, 4.0, -1.0]) / dr**2
    d2[n, n - 3 :] = np.array([-1.0, 4.0, -5.0, 2.0]) / dr**2
    return d1.toarray(), d2.toarray()


def _terms(phi: np.ndarray, r: np.ndarray):
    """Quadrature of the destabilizing and bending integrands (without prefactors)."""
    n = r.size - 1
    dr = r[1] - r[0]
    d1, d2 = _operators(n, float(dr))
    p1, p2 = d1 @ phi, d2 @ phi
    q = np.empty_like(p1)
    q[1:] = p1[1:] / r[1:]
    q[0] = p2[0]  # limit of phi'/r at the origin
    wts = np.full(n + 1, dr) * r
    wts[[0, -1]] *= 0.5
    return wts, p1, p2, q


def _check_profile(phi: np.ndarray, r: np.ndarray) -> None:
    if phi.shape != r.shape:
        raise ValueError(f"profile needs {r.size} samples, got {phi.shape}")
    scale = max(float(np.max(np.abs(phi))), 1e-300)
    if abs(phi[-1]) > 1e-12 * scale:
        raise ValueError("profile must vanish at r = R")
    dr = r[1] - r[0]
    slope = (-3 * phi[0] + 4 * phi[1] - phi[2]) / (2 * dr)
    # a smooth admissible profile meets the one-sided condition up to truncation error
    if abs(slope) > 1e-3 * float(np.max(np.abs(np.diff(phi)))) / dr:
        raise ValueError("profile must satisfy phi'(0) = 0")


def radial_quadratic_form(phi, delta: float, params: StabilityParams) -> float:
    """The radial linearized energy of ``phi`` sampled on ``params.radii()``."""
    r = params.radii()
    phi = np.asarray(phi, dtype=float)
    _check_profile(phi, r)
    wts, p1, p2, q = _terms(phi, r)
    h, nu = params.thickness, params.nu
    destab = -4.0 * delta * (1.0 + 2.0 * nu) * p1 * p1
    bend = h * h / 12.0 * (p2 * p2 + q * q + 2.0 * nu * p2 * q)
    return 0.5 * params.young * h * float(np.sum(wts * (destab + bend)))


def _reduced_forms(n: int, nu: float):
    """Bending and gradient Gram matrices on the unit disc over the admissible profiles.

    Unknowns are ``phi_1 .. phi_{n-1}``; ``phi_n = 0`` and ``phi_0`` follows
    from the one-sided condition ``phi'(0) = 0``.
    """
    r = np.linspace(0.0, 1.0, n + 1)
    dr = r[1]
    d1, d2 = _operators(n, dr)
    e = np.zeros((n + 1, n - 1))
    e[1:n, :] = np.eye(n - 1)
    e[0, 0], e[0, 1] = 4.0 / 3.0, -1.0 / 3.0
    p1, p2 = d1 @ e, d2 @ e
    q = np.empty_like(p1)
    q[1:] = p1[1:] / r[1:, None]
    q[0] = p2[0]
    wts = np.full(n + 1, dr) * r
    wts[[0, -1]] *= 0.5
    bend = p2.T @ (wts[:, None] * p2) + q.T @ (wts[:, None] * q)
    cross = q.T @ (wts[:, None] * p2)
    bend += nu * (cross + cross.T)
    grad = p1.T @ (wts[:, None] * p1)
    return r, e, bend, grad


def critical_strain(params: StabilityParams, delta_exp: float | None = None) -> StabilityResult:
    """Smallest eigenstrain at which a radial profile makes the form non-positive."""
    if not 1.0 + 2.0 * params.nu > 0:
        raise ValueError("1 + 2 nu must be positive for a finite threshold")
    n = params.n_points
    r, e, bend, grad = _reduced_forms(n, params.nu)
    try:
        # largest grad/bend ratio gives the smallest bend/grad Rayleigh quotient
        vals, vecs = sla.eigh(grad, bend, subset_by_index=[n - 2, n - 2])
    except (sla.LinAlgError, ValueError) as exc:
        raise RuntimeError(f"stability eigenproblem failed: {exc}") from exc
    mu = float(vals[0])
    if not mu > 0 or not np.isfinite(mu):
        raise RuntimeError(f"stability eigenproblem returned a non-positive eigenvalue {mu}")
    lam = 1.0 / mu
    prefactor = lam / (48.0 * (1.0 + 2.0 * params.nu))
    delta = prefactor * buckling_estimate(params.thickness, params.radius)
    mode = e @ vecs[:, 0]
    mode /= mode[np.argmax(np.abs(mode))]
    ratio = None if delta_exp is None else compare_to_experiment_value(delta, delta_exp)
    return StabilityResult(delta, prefactor, r * params.radius, mode, ratio)


def crossing_strain(phi, params: StabilityParams) -> float:
    """The ``delta`` at which the form of a fixed profile changes sign."""
    q0 = radial_quadratic_form(phi, 0.0, params)
    q1 = radial_quadratic_form(phi, 1.0, params)
    return q0 / (q0 - q1)


def compare_to_experiment_value(delta_crit: float, delta_exp: float) -> float:
    if not delta_exp > 0:
        raise ValueError("delta_exp must be positive")
    return delta_exp / delta_crit


def compare_to_experiment(params: StabilityParams, delta_exp: float) -> float:
    """Ratio of the applied strain to the computed radial critical strain."""
    return compare_to_experiment_value(critical_strain(params).delta_crit, delta_exp)
