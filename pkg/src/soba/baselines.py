"""First-order baselines: multiclass Perceptron (full information) and Banditron."""

import numpy as np

from .errors import ConfigurationError, ProtocolError
from .learners import PredictionDist, check_features, gamma_greedy
from .losses import CompetitorModel, hinge, multiclass_margins


class Perceptron:
    """Multiclass Perceptron. Sees the true label every round."""

    name = "perceptron"

    def __init__(self, k, d, keep_history=False):
        if k < 2 or d < 1:
            raise ConfigurationError(f"bad dimensions k={k}, d={d}")
        self.k, self.d = k, d
        self.weights = np.zeros((k, d))
        self.mistake_count = 0
        self.update_flags = [] if keep_history else None

    def predict(self, x):
        return int(np.argmax(self.weights @ x))

    def step(self, x, y):
        """One full-information round; returns whether a mistake was made."""
        x = check_features(x, self.d)
        y_hat = self.predict(x)
        mistake = y_hat != y
        if mistake:
            self.weights[y] += x
            self.weights[y_hat] -= x
            self.mistake_count += 1
        if self.update_flags is not None:
            self.update_flags.append(mistake)
        return mistake

    def greedy_model(self):
        return self.weights.copy()


def banditron_update(x, greedy, sampled, probs, correct):
    """The realized Banditron update as a dense ``k x d`` matrix.

    (1[correct] / p_sampled) e_sampled kron x  -  e_greedy kron x
    """
    coef = [0] * len(probs)
    if correct:
        coef[sampled] += 1 / probs[sampled]
    coef[greedy] -= 1
    # plain lists keep exact arithmetic when probs are Fractions
    return np.outer(np.array(coef), np.asarray(x))


class Banditron:
    """Banditron: Perceptron with gamma-greedy exploration and an
    importance-weighted update whose expectation is the Perceptron step."""

    name = "banditron"

    def __init__(self, k, d, gamma, seed=0):
        if k < 2 or d < 1:
            raise ConfigurationError(f"bad dimensions k={k}, d={d}")
        if not 0.0 < gamma <= 1.0:
            raise ConfigurationError(f"Banditron needs gamma in (0, 1], got {gamma}")
        self.k, self.d = k, d
        self.gamma = float(gamma)
        self.weights = np.zeros((k, d))
        self.rng = np.random.default_rng(seed)
        self.step_count = 0
        self._pending = None

    def predict(self, x):
        x = check_features(x, self.d)
        scores = self.weights @ x
        probs, greedy, sampled = gamma_greedy(scores, self.gamma, self.rng)
        dist = PredictionDist(probs, greedy, sampled, self.gamma, scores, self.step_count)
        self._pending = dist
        return dist

    def observe(self, x, dist, correct):
        """Apply the update; returns whether the weights changed."""
        if self._pending is None or dist is not self._pending:
            raise ProtocolError("observe() must follow exactly one predict() for the same round")
        self._pending = None
        self.step_count += 1
        x = np.asarray(x, dtype=float)
        up = 1.0 / dist.probs[dist.sampled] if correct else 0.0
        self.weights[dist.sampled] += up * x
        self.weights[dist.greedy] -= x
        net = up - 1.0 if dist.sampled == dist.greedy else 1.0
        return bool(net != 0.0 and np.any(x))

    def greedy_model(self):
        return self.weights.copy()


def perceptron_bound_rhs(q, mistakes, competitor, dataset, x_bound):
    """Right side of the Perceptron mistake bound for exponent q in [1, 2].

    M^(1-1/q) * (sum_t hinge_t^q)^(1/q) + ||U||_F X sqrt(2) sqrt(M)

    The first factor is read as 0 when M = 0 (the limit of (sum b_t^p)^(1/p)).
    """
    if not 1.0 <= q <= 2.0:
        raise ConfigurationError(f"q must lie in [1, 2], got {q}")
    if mistakes < 0:
        raise ConfigurationError("mistake count must be nonnegative")
    if mistakes == 0:
        return 0.0
    if not isinstance(competitor, CompetitorModel):
        competitor = CompetitorModel(competitor)
    losses = hinge(multiclass_margins(competitor.weights, dataset.features, dataset.labels))
    lq = float(np.sum(losses**q)) ** (1.0 / q)
    return (mistakes ** (1.0 - 1.0 / q)) * lq + competitor.frob_norm * x_bound * np.sqrt(2.0 * mistakes)
