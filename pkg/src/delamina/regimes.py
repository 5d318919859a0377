"""Regime labels and bound formulas for the bonded film in the (sigma, gamma) plane."""

from __future__ import annotations

import math

UPPER_LABELS = ("D", "C", "B", "A")
LOWER_LABELS = ("D'", "B'", "A")
TIE_RTOL = 1e-12


class RegimeError(ValueError):
    """Parameters outside the range where a formula or construction applies."""


def _check(sigma: float, gamma: float) -> None:
    if not (0.0 < sigma < 1.0):
        raise RegimeError(f"sigma must lie in (0, 1), got {sigma}")
    if not gamma > 0.0:
        raise RegimeError(f"gamma must be positive, got {gamma}")


def thresholds(sigma: float) -> tuple[float, float, float]:
    """The three gamma thresholds ``sigma^(4/5) < sigma^(-4/9) < sigma^(-1)``."""
    return sigma ** 0.8, sigma ** (-4.0 / 9.0), 1.0 / sigma


def upper_formula(label: str, sigma: float, gamma: float) -> float:
    if label == "A":
        return 1.0
    if label == "B":
        return (sigma * gamma) ** 0.4
    if label == "C":
        return sigma**0.5 * gamma**0.625
    if label == "D":
        return sigma
    raise ValueError(f"unknown regime {label!r}")


def classify_regime(sigma: float, gamma: float) -> str:
    """Upper-bound regime; on a threshold the smaller formula wins (ties go to lower gamma)."""
    _check(sigma, gamma)
    # thresholds and formula values are compared up to rounding, so exact ties stay ties
    t_cd, t_bc, t_ab = (t * (1.0 + TIE_RTOL) for t in thresholds(sigma))
    b_cd, b_bc, b_ab = (t * (1.0 - TIE_RTOL) for t in thresholds(sigma))
    candidates = []
    if gamma <= t_cd:
        candidates.append("D")
    if b_cd <= gamma <= t_bc:
        candidates.append("C")
    if b_bc <= gamma <= t_ab:
        candidates.append("B")
    if gamma >= b_ab:
        candidates.append("A")
    best = min(upper_formula(lab, sigma, gamma) for lab in candidates)
    return next(lab for lab in candidates if upper_formula(lab, sigma, gamma) <= best * (1.0 + TIE_RTOL))


def upper_bound_value(sigma: float, gamma: float) -> float:
    return upper_formula(classify_regime(sigma, gamma), sigma, gamma)


def classify_lower_regime(sigma: float, gamma: float) -> str:
    _check(sigma, gamma)
    if sigma * gamma > 1.0:
        return "A"
    if gamma >= math.sqrt(sigma):
        return "B'"
    return "D'"


def lower_bound_value(sigma: float, gamma: float) -> float:
    label = classify_lower_regime(sigma, gamma)
    if label == "A":
        return 1.0
    if label == "B'":
        return (sigma * gamma) ** (2.0 / 3.0)
    return sigma
