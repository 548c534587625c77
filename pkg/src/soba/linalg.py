"""Structured vectors and inverse maintenance for second-order updates.

Every update vector used by the learners has the form
``scale * (e_plus - e_minus) kron x``: two nonzero row blocks in the
row-major vectorization of a ``k x d`` matrix. The helpers here exploit that
structure and never materialize the ``kd`` vector unless asked to.
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ConfigurationError


def vec(matrix):
    """Row-major vectorization of a ``k x d`` matrix."""
    return np.asarray(matrix).reshape(-1)


def mat(vector, k, d=None):
    """Reshape a length ``k*d`` vector into a ``k x d`` matrix (row-major)."""
    vector = np.asarray(vector)
    if vector.ndim != 1:
        raise ConfigurationError("mat() expects a 1-d vector")
    n = vector.shape[0]
    if d is None:
        if k <= 0 or n % k:
            raise ConfigurationError(f"length {n} is not divisible by k={k}")
        d = n // k
    if k * d != n:
        raise ConfigurationError(f"length {n} does not match k*d = {k}*{d}")
    return vector.reshape(k, d)


@dataclass(frozen=True)
class SparseKronVector:
    """The kd-vector ``scale * (e_plus_row - e_minus_row) kron features``."""

    plus_row: int
    minus_row: int
    scale: float
    features: np.ndarray

    def __post_init__(self):
        if self.plus_row == self.minus_row:
            raise ConfigurationError("plus_row and minus_row must differ")
        if self.scale < 0:
            raise ConfigurationError("scale must be nonnegative")

    @property
    def d(self):
        return self.features.shape[0]

    def sq_norm(self):
        return 2.0 * self.scale**2 * float(self.features @ self.features)

    def inner(self, matrix):
        """<M, v> for a ``k x d`` matrix M, i.e. scale * ((Mx)_plus - (Mx)_minus)."""
        matrix = np.asarray(matrix)
        if matrix.ndim == 1:
            matrix = mat(matrix, matrix.shape[0] // self.d, self.d)
        x = self.features
        return self.scale * float(matrix[self.plus_row] @ x - matrix[self.minus_row] @ x)

    def to_dense(self, k):
        if max(self.plus_row, self.minus_row) >= k:
            raise ConfigurationError(f"row index out of range for k={k}")
        out = np.zeros((k, self.d))
        out[self.plus_row] = self.scale * self.features
        out[self.minus_row] = -self.scale * self.features
        return out.reshape(-1)


class InverseKind(str, Enum):
    FULL = "full"
    DIAGONAL = "diag"


class InverseState:
    """Maintained inverse of ``A = a I + sum z z^T``.

    ``FULL`` keeps the symmetric ``kd x kd`` inverse; ``DIAGONAL`` keeps
    ``1 / diag(A)`` where ``diag(A)`` only accumulates squared entries of the
    update vectors.
    """

    def __init__(self, kind, k, d, a):
        if a <= 0:
            raise ConfigurationError(f"regularizer a must be positive, got {a}")
        if k < 1 or d < 1:
            raise ConfigurationError(f"bad dimensions k={k}, d={d}")
        self.kind = InverseKind(kind)
        self.k = int(k)
        self.d = int(d)
        self.a = float(a)
        n = self.k * self.d
        if self.kind is InverseKind.FULL:
            self.data = np.eye(n) / self.a
        else:
            self.data = np.full(n, 1.0 / self.a)

    @property
    def dim(self):
        return self.k * self.d

    def copy(self):
        other = InverseState.__new__(InverseState)
        other.kind, other.k, other.d, other.a = self.kind, self.k, self.d, self.a
        other.data = self.data.copy()
        return other

    def _block(self, row):
        return slice(row * self.d, (row + 1) * self.d)

    def _check(self, v):
        if isinstance(v, SparseKronVector):
            if v.d != self.d or max(v.plus_row, v.minus_row) >= self.k:
                raise ConfigurationError(
                    f"vector of shape ({v.plus_row},{v.minus_row}) x {v.d} "
                    f"does not fit k={self.k}, d={self.d}")
        else:
            v = np.asarray(v, dtype=float)
            if v.shape != (self.dim,):
                raise ConfigurationError(f"expected a vector of length {self.dim}, got {v.shape}")
        return v

    def quad_form(self, v):
        """v^T A^{-1} v."""
        v = self._check(v)
        if not isinstance(v, SparseKronVector):
            if self.kind is InverseKind.FULL:
                return float(v @ self.data @ v)
            return float(v**2 @ self.data)
        if v.scale == 0.0:
            return 0.0
        x = v.scale * v.features
        bi, bj = self._block(v.plus_row), self._block(v.minus_row)
        if self.kind is InverseKind.FULL:
            B = self.data
            q = x @ B[bi, bi] @ x - 2.0 * (x @ B[bi, bj] @ x) + x @ B[bj, bj] @ x
        else:
            x2 = x * x
            q = x2 @ self.data[bi] + x2 @ self.data[bj]
        return max(float(q), 0.0)

    def rank_one_update(self, z):
        """Replace the state by the inverse of ``A + z z^T`` in place."""
        z = self._check(z)
        if self.kind is InverseKind.FULL:
            B = self.data
            if isinstance(z, SparseKronVector):
                if z.scale == 0.0:
                    return
                x = z.scale * z.features
                bi, bj = self._block(z.plus_row), self._block(z.minus_row)
                u = B[:, bi] @ x - B[:, bj] @ x
                q = float(u[bi] @ x - u[bj] @ x)
            else:
                u = B @ z
                q = float(z @ u)
            B -= np.outer(u, u / (1.0 + q))
            self.data = 0.5 * (B + B.T)
        else:
            if isinstance(z, SparseKronVector):
                x2 = (z.scale * z.features) ** 2
                for b in (self._block(z.plus_row), self._block(z.minus_row)):
                    self.data[b] = 1.0 / (1.0 / self.data[b] + x2)
            else:
                self.data = 1.0 / (1.0 / self.data + z * z)

    def apply(self, theta):
        """A^{-1} theta."""
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.dim,):
            raise ConfigurationError(f"expected a vector of length {self.dim}, got {theta.shape}")
        if self.kind is InverseKind.FULL:
            return self.data @ theta
        return self.data * theta

    def to_dense(self):
        """The inverse as a dense ``kd x kd`` matrix."""
        if self.kind is InverseKind.FULL:
            return self.data.copy()
        return np.diag(self.data)

    def logdet_forward(self):
        """ln det A (of the diagonal surrogate for the DIAGONAL kind)."""
        if self.kind is InverseKind.FULL:
            sign, logdet = np.linalg.slogdet(self.data)
            if sign <= 0:
                raise ConfigurationError("maintained inverse is not positive definite")
            return -float(logdet)
        return -float(np.sum(np.log(self.data)))

    def to_dict(self):
        return {
            "kind": self.kind.value, "k": self.k, "d": self.d, "a": self.a,
            "data": self.data.reshape(-1).tolist(),
        }

    @classmethod
    def from_dict(cls, payload):
        state = cls(payload["kind"], payload["k"], payload["d"], payload["a"])
        data = np.asarray(payload["data"], dtype=float)
        state.data = data.reshape(state.data.shape)
        return state


# Free-function spellings of the methods above.

def quad_form(inv, v):
    return inv.quad_form(v)


def rank_one_update(inv, z):
    inv.rank_one_update(z)
    return inv


def apply_inverse(inv, theta):
    return inv.apply(theta)
