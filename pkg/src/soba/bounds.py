"""Closed-form exploration-rate settings and the tuning inequalities behind them."""

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError


def regret_tuned_gamma(k, d, T):
    """min(1, sqrt(k^2 d ln T / T)), with the O(.) constant taken as 1."""
    if T < 2:
        return 1.0
    return min(1.0, math.sqrt(k * k * d * math.log(T) / T))


@dataclass(frozen=True)
class TuningInput:
    """L: competitor hinge loss, T: horizon, H: d k^2 X^2 ln T, U: ||U||_F^2."""

    L: float
    T: float
    H: float
    U: float

    def __post_init__(self):
        for name in ("L", "T", "H", "U"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0:
                raise ConfigurationError(f"{name} must be finite and nonnegative, got {v}")
        if self.T <= 0 or self.H <= 0:
            raise ConfigurationError("T and H must be positive")

    @classmethod
    def from_problem(cls, hinge_loss, T, k, d, x_bound, competitor_frob):
        return cls(hinge_loss, T, d * k * k * x_bound**2 * math.log(T), competitor_frob**2)


SQRT_CASE = "sqrt"
CUBE_ROOT_CASE = "cube_root"


def fallback_gamma(inp):
    """Exploration rate for a known competitor hinge loss.

    Returns ``(gamma, case)``: the square-root setting min(sqrt(H/T), 1) when
    L <= (U+1) sqrt(HT), else the cube-root setting min((HL/T^2)^(1/3), 1).
    """
    L, T, H, U = inp.L, inp.T, inp.H, inp.U
    if L <= (U + 1.0) * math.sqrt(H * T):
        return min(math.sqrt(H / T), 1.0), SQRT_CASE
    return min((H * L / (T * T)) ** (1.0 / 3.0), 1.0), CUBE_ROOT_CASE


def tuning_objective(inp, gamma):
    """F(gamma) = min(T, L + gamma T + UH/gamma + sqrt(UHL/gamma))."""
    L, T, H, U = inp.L, inp.T, inp.H, inp.U
    return min(T, L + gamma * T + U * H / gamma + math.sqrt(U * H * L / gamma))


def fallback_case_bound(inp, case):
    L, T, H, U = inp.L, inp.T, inp.H, inp.U
    if case == SQRT_CASE:
        return L + 3.0 * (U + 1.0) * math.sqrt(H * T)
    return L + 2.0 * (math.sqrt(U) + 1.0) * (H * L * T) ** (1.0 / 3.0)


def selfconfident_gammas(c, b):
    """gamma_t = min(sqrt((b + sum_{s<t} c_s) / t), 1) for t = 1..T."""
    c = np.asarray(c, dtype=float)
    prefix = np.concatenate(([0.0], np.cumsum(c)[:-1])) if len(c) else c
    t = np.arange(1, len(c) + 1)
    return np.minimum(np.sqrt((b + prefix) / t), 1.0)


def selfconfident_sides(c, b, a_coef):
    """(lhs, rhs) of sum(gamma_t + a c_t/gamma_t) <= (2+2a) sqrt(T) sqrt(b + sum c) + a sum c."""
    c = np.asarray(c, dtype=float)
    if b <= 0:
        raise ConfigurationError("b must be positive")
    if a_coef <= 0:
        raise ConfigurationError("a must be positive")
    if np.any(c < 0) or np.any(c > b):
        raise ConfigurationError("every c_t must lie in [0, b]")
    gammas = selfconfident_gammas(c, b)
    lhs = float(np.sum(gammas + a_coef * c / gammas))
    total = float(c.sum())
    T = len(c)
    rhs = (2.0 + 2.0 * a_coef) * math.sqrt(T) * math.sqrt(b + total) + a_coef * total
    return lhs, rhs


def selfconfident_check(c, b, a_coef):
    lhs, rhs = selfconfident_sides(c, b, a_coef)
    return lhs <= rhs
