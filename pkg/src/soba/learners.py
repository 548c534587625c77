"""Second Order Banditron (SOBA) and its diagonal / adaptive-exploration variants.

Round protocol::

    dist = learner.predict(x)            # samples dist.sampled
    learner.observe(x, dist, correct)    # correct = (dist.sampled == y)

The true label is never handed to ``observe``. When the sampled label is
correct the learner knows it is ``dist.sampled``, otherwise it learns nothing.
Class indices are 0-based.
"""

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .errors import ConfigurationError, InputError, ProtocolError
from .linalg import InverseKind, InverseState, SparseKronVector, mat
from .losses import argmax_excluding

ADAPTIVE = "adaptive"


@dataclass(frozen=True)
class LearnerConfig:
    k: int
    d: int
    a: float = 1.0
    gamma: Union[float, str] = 0.01
    inverse_kind: str = "full"
    seed: int = 0

    def __post_init__(self):
        if self.k < 2:
            raise ConfigurationError(f"need at least 2 classes, got k={self.k}")
        if self.d < 1:
            raise ConfigurationError(f"need d >= 1, got d={self.d}")
        if not self.a > 0:
            raise ConfigurationError(f"regularizer a must be positive, got {self.a}")
        if self.gamma != ADAPTIVE and not 0.0 <= float(self.gamma) <= 1.0:
            raise ConfigurationError(f"gamma must be in [0, 1] or 'adaptive', got {self.gamma}")
        InverseKind(self.inverse_kind)

    @property
    def adaptive(self):
        return self.gamma == ADAPTIVE


@dataclass(frozen=True, eq=False)
class PredictionDist:
    probs: np.ndarray
    greedy: int
    sampled: int
    gamma: float
    scores: np.ndarray
    step: int = -1


@dataclass(frozen=True)
class StepTrace:
    greedy: int
    sampled: int
    correct: bool
    updated: bool
    gamma_used: float
    runner_up: Optional[int] = None
    m_value: Optional[float] = None
    q_flag: Optional[bool] = None
    h_flag: Optional[bool] = None
    quad_term: Optional[float] = None
    quad_prev: Optional[float] = field(default=None, repr=False)


def check_features(x, d):
    x = np.asarray(x, dtype=float)
    if x.shape != (d,):
        raise ConfigurationError(f"expected a feature vector of length {d}, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise InputError("feature vector contains NaN or infinite entries")
    return x


def gamma_greedy(scores, gamma, rng):
    """Greedy argmax mixed with uniform exploration at rate ``gamma``.

    Returns ``(probs, greedy, sampled)``. A single uniform draw u decides:
    u < gamma explores (class floor(k u / gamma)), otherwise the greedy class
    is played, which realizes p = (1-gamma) e_greedy + gamma/k.
    """
    k = len(scores)
    greedy = int(np.argmax(scores))
    probs = np.full(k, gamma / k)
    probs[greedy] += 1.0 - gamma
    u = rng.random()
    if u < gamma:
        sampled = min(int(u / gamma * k), k - 1)
    else:
        sampled = greedy
    return probs, greedy, sampled


def adaptive_gamma(k, accumulator, t):
    """min(sqrt(k (1 + accumulator) / t), 1); 1 when t = 0."""
    if t <= 0:
        return 1.0
    return min(math.sqrt(k * (1.0 + accumulator) / t), 1.0)


class Soba:
    """SOBA learner.

    ``inverse_kind="full"`` maintains the exact ``kd x kd`` inverse;
    ``"diag"`` is SOBAdiag, which keeps only a diagonal surrogate and uses it
    for both the update statistic and the weights. ``gamma="adaptive"`` sets
    the exploration rate from the running sum of post-update quadratic terms.
    """

    def __init__(self, config):
        self.config = config
        self.k, self.d = config.k, config.d
        self.weights = np.zeros((self.k, self.d))
        self.inverse = InverseState(config.inverse_kind, self.k, self.d, config.a)
        self.theta = np.zeros(self.k * self.d)
        self.invariant_sum = 0.0
        self.adaptive_accumulator = 0.0
        self.step_count = 0
        self.rng = np.random.default_rng(config.seed)
        self._pending = None

    @property
    def name(self):
        if self.config.adaptive:
            return "soba-adaptive"
        return "sobadiag" if self.config.inverse_kind == "diag" else "soba"

    def current_gamma(self):
        """Exploration rate for the upcoming round."""
        if self.config.adaptive:
            return adaptive_gamma(self.k, self.adaptive_accumulator, self.step_count + 1)
        return float(self.config.gamma)

    def greedy_model(self):
        return self.weights.copy()

    def predict(self, x):
        x = check_features(x, self.d)
        scores = self.weights @ x
        gamma = self.current_gamma()
        probs, greedy, sampled = gamma_greedy(scores, gamma, self.rng)
        dist = PredictionDist(probs, greedy, sampled, gamma, scores, self.step_count)
        self._pending = dist
        return dist

    def observe(self, x, dist, correct):
        if self._pending is None or dist is not self._pending:
            raise ProtocolError("observe() must follow exactly one predict() for the same round")
        self._pending = None
        self.step_count += 1
        if not correct:
            return StepTrace(dist.greedy, dist.sampled, False, False, dist.gamma)

        x = np.asarray(x, dtype=float)
        y = dist.sampled
        scores = dist.scores
        runner_up = argmax_excluding(scores, y)
        p = float(dist.probs[y])
        g = SparseKronVector(runner_up, y, 1.0 / p, x)
        z = SparseKronVector(runner_up, y, 1.0 / math.sqrt(p), x)
        diff = float(scores[runner_up] - scores[y])
        wz = z.scale * diff
        wg = g.scale * diff
        q = self.inverse.quad_form(z)
        m = (wz * wz + 2.0 * wg) / (1.0 + q)
        q_flag = self.invariant_sum + m >= 0.0
        h_flag = dist.greedy != y or q_flag

        quad_term = None
        if q_flag:
            self.inverse.rank_one_update(z)
            d = self.d
            self.theta[runner_up * d:(runner_up + 1) * d] -= g.scale * x
            self.theta[y * d:(y + 1) * d] += g.scale * x
            self.invariant_sum += m
            self.weights = mat(self.inverse.apply(self.theta), self.k, self.d)
            quad_term = q / (1.0 + q)
            if self.config.adaptive:
                self.adaptive_accumulator += quad_term
        return StepTrace(
            dist.greedy, dist.sampled, True, bool(q_flag), dist.gamma,
            runner_up=runner_up, m_value=m, q_flag=bool(q_flag), h_flag=bool(h_flag),
            quad_term=quad_term, quad_prev=q,
        )

    def to_dict(self):
        """JSON-compatible snapshot of the full learner state."""
        return {
            "config": {
                "k": self.k, "d": self.d, "a": self.config.a, "gamma": self.config.gamma,
                "inverse_kind": self.config.inverse_kind, "seed": self.config.seed,
            },
            "weights": self.weights.reshape(-1).tolist(),
            "theta": self.theta.tolist(),
            "inverse": self.inverse.to_dict(),
            "invariant_sum": self.invariant_sum,
            "adaptive_accumulator": self.adaptive_accumulator,
            "step_count": self.step_count,
            "rng_state": self.rng.bit_generator.state,
        }

    @classmethod
    def from_dict(cls, payload):
        learner = cls(LearnerConfig(**payload["config"]))
        learner.weights = np.asarray(payload["weights"], dtype=float).reshape(learner.k, learner.d)
        learner.theta = np.asarray(payload["theta"], dtype=float)
        learner.inverse = InverseState.from_dict(payload["inverse"])
        learner.invariant_sum = float(payload["invariant_sum"])
        learner.adaptive_accumulator = float(payload["adaptive_accumulator"])
        learner.step_count = int(payload["step_count"])
        learner.rng.bit_generator.state = payload["rng_state"]
        return learner


def soba(k, d, a=1.0, gamma=0.01, seed=0):
    return Soba(LearnerConfig(k, d, a, gamma, "full", seed))


def soba_diag(k, d, a=1.0, gamma=0.01, seed=0):
    return Soba(LearnerConfig(k, d, a, gamma, "diag", seed))


def soba_adaptive(k, d, a=1.0, inverse_kind="full", seed=0):
    return Soba(LearnerConfig(k, d, a, ADAPTIVE, inverse_kind, seed))
