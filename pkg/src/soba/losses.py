"""Multiclass margins and the eta-loss family.

The binary eta-loss is

    l_eta(x) = 1 - 2/(2-eta) x + eta/(2-eta) x^2   for x <= 1,   0 otherwise,

with eta in [0, 1]: eta = 0 is the hinge loss, eta = 1 the squared hinge.
The multiclass version applies it to the margin (Ux)_y - max_{i != y} (Ux)_i.
"""

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import ConfigurationError


def _check_eta(eta):
    if not 0.0 <= eta <= 1.0:
        raise ConfigurationError(f"eta must lie in [0, 1], got {eta}")
    return float(eta)


def eta_loss_scalar(eta, x):
    """Binary eta-loss; vectorized over ``x``."""
    eta = _check_eta(eta)
    x = np.asarray(x, dtype=float)
    c = 2.0 - eta
    # factored as (1-x)((2-eta) - eta x)/(2-eta): exact hinge at eta=0 and
    # exact squared hinge at eta=1, and nonnegative on x <= 1 without clipping
    val = np.where(x <= 1.0, (1.0 - x) * ((c - eta * x) / c), 0.0)
    return float(val) if val.ndim == 0 else val


def eta_quadratic(eta, x):
    """The unclipped quadratic 1 - 2/(2-eta) x + eta/(2-eta) x^2, expanded."""
    c = 2.0 - eta
    return 1.0 - (2.0 / c) * x + (eta / c) * x * x


def hinge(x):
    """[1 - x]_+ ; vectorized."""
    return np.maximum(1.0 - np.asarray(x, dtype=float), 0.0)


def _scores(model, x):
    model = np.asarray(model, dtype=float)
    if model.ndim != 2 or model.shape[0] < 2:
        raise ConfigurationError("model must be a k x d matrix with k >= 2")
    return model @ np.asarray(x, dtype=float)


def argmax_excluding(scores, exclude):
    """Index of the largest score other than ``exclude``; ties to the lowest index."""
    best, best_val = -1, -np.inf
    for i, s in enumerate(scores):
        if i != exclude and (best < 0 or s > best_val):
            best, best_val = i, s
    return best


def margin_from_scores(scores, y):
    scores = np.asarray(scores, dtype=float)
    others = np.delete(scores, y)
    return float(scores[y] - others.max())


def multiclass_margin(model, x, y):
    """(Ux)_y - max_{i != y} (Ux)_i."""
    return margin_from_scores(_scores(model, x), y)


def multiclass_margins(model, X, y):
    """Vectorized margins for a batch of rows ``X`` (dense or scipy sparse)."""
    model = np.asarray(model, dtype=float)
    if model.ndim != 2 or model.shape[0] < 2:
        raise ConfigurationError("model must be a k x d matrix with k >= 2")
    S = np.asarray(X @ model.T, dtype=float)
    y = np.asarray(y)
    rows = np.arange(S.shape[0])
    own = S[rows, y]
    S = S.copy()
    S[rows, y] = -np.inf
    return own - S.max(axis=1)


def eta_loss(model, x, y, eta):
    return eta_loss_scalar(eta, multiclass_margin(model, x, y))


def multiclass_hinge(model, x, y):
    """max_{i != y} [1 - (Ux)_y + (Ux)_i]_+ , written out directly."""
    s = _scores(model, x)
    return max(max(1.0 - s[y] + s[i], 0.0) for i in range(len(s)) if i != y)


def cumulative_eta_loss(model, dataset, eta):
    """Sum of multiclass eta-losses of ``model`` over ``dataset`` in order."""
    if len(dataset) == 0:
        return 0.0
    margins = multiclass_margins(model, dataset.features, dataset.labels)
    return float(np.sum(eta_loss_scalar(eta, margins)))


@dataclass(frozen=True)
class CompetitorModel:
    """A fixed linear predictor U with its norms cached."""

    weights: np.ndarray
    frob_norm: float = field(init=False)
    max_row_norm: float = field(init=False)

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        if w.ndim != 2:
            raise ConfigurationError("competitor weights must be a k x d matrix")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "frob_norm", float(np.linalg.norm(w)))
        object.__setattr__(self, "max_row_norm", float(np.linalg.norm(w, axis=1).max()))

    @property
    def k(self):
        return self.weights.shape[0]

    @property
    def d(self):
        return self.weights.shape[1]


class EtaRange(NamedTuple):
    """The half-open interval (low, high]."""

    low: float
    high: float

    def __contains__(self, eta):
        return self.low < eta <= self.high


def eta_admissible_range(model, x_bound):
    """Range of eta for which the regret bound applies to ``model``."""
    if x_bound <= 0:
        raise ConfigurationError("x_bound must be positive")
    if not isinstance(model, CompetitorModel):
        model = CompetitorModel(model)
    return EtaRange(0.0, min(1.0, 2.0 / (2.0 * model.max_row_norm * x_bound + 1.0)))
