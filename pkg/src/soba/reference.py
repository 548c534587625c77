"""Dense reference transcriptions used as independent oracles.

Nothing here shares code with the structured learners: the update vectors
are materialized as kd-vectors, A is kept in forward form, and every
inverse-dependent quantity is obtained with a fresh linear solve.
"""

import math

import numpy as np


def kron_update(k, row_plus, row_minus, x, scale):
    e = np.zeros(k)
    e[row_plus] += 1.0
    e[row_minus] -= 1.0
    return scale * np.kron(e, x)


def dense_soba(stream, k, d, a, gamma, uniforms):
    """Straight-line dense SOBA.

    ``stream`` yields (x, y); ``uniforms`` supplies one U[0,1) draw per round,
    consumed with the same mixture rule as the learner (u < gamma explores to
    class floor(k u / gamma)). Returns (final weights, list of n_t, list of
    (z_t, quad_t) for updated rounds, final A).
    """
    A = a * np.eye(k * d)
    theta = np.zeros(k * d)
    W = np.zeros((k, d))
    total = 0.0
    flags, updates = [], []
    for (x, y), u in zip(stream, uniforms):
        s = W @ x
        y_hat = int(np.argmax(s))
        p = np.full(k, gamma / k)
        p[y_hat] += 1 - gamma
        y_tilde = min(int(u / gamma * k), k - 1) if u < gamma else y_hat
        n_t = 0
        if y_tilde == y:
            others = [i for i in range(k) if i != y]
            y_bar = others[int(np.argmax(s[others]))]
            g = kron_update(k, y_bar, y, x, 1.0 / p[y])
            z = math.sqrt(p[y]) * g
            w = W.reshape(-1)
            m = ((w @ z) ** 2 + 2 * (w @ g)) / (1 + z @ np.linalg.solve(A, z))
            if m + total >= 0:
                n_t = 1
                total += m
        if n_t:
            A = A + np.outer(z, z)
            theta = theta - g
            updates.append((z, float(z @ np.linalg.solve(A, z))))
            W = np.linalg.solve(A, theta).reshape(k, d)
        flags.append(n_t)
    return W, flags, updates, A
