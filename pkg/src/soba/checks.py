"""Realized-sequence checks of the invariants and inequalities SOBA relies on.

Each check returns a :class:`CheckResult`. The same functions back the
``soba check`` command and the acceptance tests; only the scale differs.
"""

import math
import time
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .baselines import Banditron, Perceptron, banditron_update, perceptron_bound_rhs
from .bounds import (TuningInput, fallback_case_bound, fallback_gamma, selfconfident_sides,
                     tuning_objective)
from .datasets import DatasetSpec, generate_synnonsep, generate_synsep
from .harness import cell_seed, make_learner
from .learners import LearnerConfig, Soba, gamma_greedy
from .linalg import InverseState, SparseKronVector
from .losses import eta_loss_scalar, eta_quadratic, hinge
from .reference import dense_soba


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str = ""
    elapsed: float = 0.0
    stats: dict = field(default_factory=dict, repr=False)

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.name}: {self.detail} ({self.elapsed:.1f}s)"


def _timed(fn):
    def wrapper(*args, **kwargs):
        start = time.perf_counter()
        result = fn(*args, **kwargs)
        result.elapsed = time.perf_counter() - start
        return result
    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


def _noisy_stream(k, d, n, seed, noise=0.1):
    """Small synthetic stream for protocol checks; margin kept low so any (k, d) is feasible."""
    return generate_synnonsep(DatasetSpec("synnonsep", n=n, k=k, d=d, margin=0.05,
                                          noise_rate=noise, seed=seed))


@_timed
def invariant_suite(runs=50, T=2000, ks=(2, 3, 9), ds=(2, 5, 20),
                    gammas=(0.02, 0.05, 0.1, 0.3), seed=0, logdet_max_kd=30):
    """Invariant sum >= 0, update gating, and the realized log-det bound.

    On every step: invariant_sum >= 0, updated => correct, and
    (correct and greedy != label) => updated. For runs with kd <= logdet_max_kd,
    sum over updates of z^T A_t^{-1} z <= ln(det A_T / det A_0) + 1e-6.
    """
    combos = [(k, d) for k in ks for d in ds]
    violations = {"invariant": 0, "gating": 0, "forced": 0, "logdet": 0}
    logdet_runs, worst_slack = 0, math.inf
    for r in range(runs):
        k, d = combos[r % len(combos)]
        gamma = gammas[r % len(gammas)]
        data = _noisy_stream(k, d, T, seed=seed * 1000 + r)
        learner = Soba(LearnerConfig(k, d, 1.0, gamma, "full", seed * 1000 + r))
        quad_sum = 0.0
        for x, y in data:
            dist = learner.predict(x)
            tr = learner.observe(x, dist, dist.sampled == y)
            if learner.invariant_sum < 0:
                violations["invariant"] += 1
            if tr.updated and not tr.correct:
                violations["gating"] += 1
            if tr.correct and dist.greedy != y and not tr.updated:
                violations["forced"] += 1
            if tr.updated:
                quad_sum += tr.quad_term
        if k * d <= logdet_max_kd:
            logdet_runs += 1
            rhs = learner.inverse.logdet_forward() - k * d * math.log(learner.config.a)
            slack = rhs - quad_sum
            worst_slack = min(worst_slack, slack)
            if slack < -1e-6:
                violations["logdet"] += 1
    ok_inv = violations["invariant"] + violations["gating"] + violations["forced"] == 0
    return CheckResult(
        "invariant suite", ok_inv and violations["logdet"] == 0,
        f"{runs} runs x {T} steps, violations {violations}, log-det runs {logdet_runs}, "
        f"worst log-det slack {worst_slack:.3g}",
        stats={"violations": violations, "logdet_runs": logdet_runs, "worst_slack": worst_slack},
    )


@_timed
def linalg_oracle(sequences=20, length=100, max_kd=30, seed=0, tol=1e-8):
    """Maintained inverse vs direct inversion, and the discount identity."""
    rng = np.random.default_rng(seed)
    worst_inv, worst_disc = 0.0, 0.0
    for _ in range(sequences):
        while True:
            k, d = int(rng.integers(2, 7)), int(rng.integers(1, 11))
            if k * d <= max_kd:
                break
        a = float(rng.uniform(0.5, 2.0))
        inv = InverseState("full", k, d, a)
        A = a * np.eye(k * d)
        for _ in range(length):
            i, j = rng.choice(k, size=2, replace=False)
            z = SparseKronVector(int(i), int(j), float(rng.uniform(0.1, 3.0)), rng.standard_normal(d))
            before = inv.quad_form(z)
            inv.rank_one_update(z)
            zd = z.to_dense(k)
            A += np.outer(zd, zd)
            worst_inv = max(worst_inv, float(np.abs(inv.data - np.linalg.inv(A)).max()))
            after = inv.quad_form(z)
            worst_disc = max(worst_disc, abs((1.0 - after) - 1.0 / (1.0 + before)))
    passed = worst_inv <= tol and worst_disc <= tol
    return CheckResult(
        "linear-algebra oracle", passed,
        f"{sequences} sequences x {length}, max |inv - direct| = {worst_inv:.2e}, "
        f"max discount error = {worst_disc:.2e}",
        stats={"worst_inv": worst_inv, "worst_disc": worst_disc},
    )


@_timed
def dense_reference(k=3, d=2, T=200, gamma=0.3, seed=0, tol=1e-6):
    """Structured SOBA vs a dense kd x kd transcription with direct solves."""
    data = _noisy_stream(k, d, T, seed=seed, noise=0.2)
    learner = Soba(LearnerConfig(k, d, 1.0, gamma, "full", seed))
    flags = []
    for x, y in data:
        dist = learner.predict(x)
        flags.append(int(learner.observe(x, dist, dist.sampled == y).updated))
    uniforms = np.random.default_rng(seed).random(T)
    W, ref_flags, _, _ = dense_soba(data, k, d, 1.0, gamma, uniforms)
    err = float(np.abs(W - learner.weights).max())
    passed = flags == ref_flags and err <= tol
    return CheckResult(
        "dense-reference equivalence", passed,
        f"k={k} d={d} T={T}: n_t sequences {'identical' if flags == ref_flags else 'DIFFER'} "
        f"({sum(flags)} updates), max weight error {err:.2e}",
        stats={"updates": sum(flags), "err": err},
    )


@_timed
def loss_identities(samples=10_000, seed=0):
    """Endpoint identities, quadratic roots, dominance and the 0-1 upper bound."""
    rng = np.random.default_rng(seed)
    x = rng.uniform(-10.0, 10.0, samples)
    bad = {}
    bad["eta0_hinge"] = int(np.sum(eta_loss_scalar(0.0, x) != hinge(x)))
    bad["eta1_sq_hinge"] = int(np.sum(eta_loss_scalar(1.0, x) != hinge(x) ** 2))
    root_err = 0.0
    for eta in np.round(np.arange(0.1, 1.01, 0.1), 10):
        root_err = max(root_err, abs(eta_quadratic(eta, 1.0)),
                       abs(eta_quadratic(eta, (2.0 - eta) / eta)))
    bad["roots"] = int(root_err > 1e-12)
    etas = rng.uniform(0.0, 1.0, samples)
    vals = np.array([eta_loss_scalar(e, v) for e, v in zip(etas, x)])
    upper = np.maximum(eta_loss_scalar(0.0, x), eta_loss_scalar(1.0, x))
    bad["dominance"] = int(np.sum(vals > upper))
    bad["zero_one"] = int(np.sum(vals < (x < 0)))
    return CheckResult(
        "loss-family identities", sum(bad.values()) == 0,
        f"{samples} samples, violations {bad}, max root residual {root_err:.1e}",
        stats=bad,
    )


@_timed
def perceptron_mistake_bound(datasets=20, k=4, d=10, T=1000, qs=(1.0, 1.25, 1.5, 1.75, 2.0), seed=0):
    """Perceptron mistakes vs the q-family bound, against the planted competitor."""
    violations, worst_ratio = 0, 0.0
    for i in range(datasets):
        noisy = i % 2 == 1
        spec = DatasetSpec("synnonsep" if noisy else "synsep", n=T, k=k, d=d, margin=1.0,
                           noise_rate=0.1 if noisy else None, seed=seed * 1000 + i)
        data = generate_synnonsep(spec) if noisy else generate_synsep(spec)
        p = Perceptron(k, d)
        for x, y in data:
            p.step(x, y)
        for q in qs:
            rhs = perceptron_bound_rhs(q, p.mistake_count, data.planted, data, data.x_bound)
            if p.mistake_count > rhs:
                violations += 1
            if rhs > 0:
                worst_ratio = max(worst_ratio, p.mistake_count / rhs)
    return CheckResult(
        "Perceptron q-family bound", violations == 0,
        f"{datasets} datasets x {len(qs)} exponents, violations {violations}, "
        f"max M_T / bound = {worst_ratio:.3f}",
        stats={"violations": violations, "worst_ratio": worst_ratio},
    )


@_timed
def per_step_least_squares(instances=1000, max_dim=12, max_len=30, seed=0, tol=1e-8):
    """Per-step online-least-squares inequality on random sequences.

    A_t = a I + sum_{s<=t} z_s z_s^T, w_t = -A_{t-1}^{-1} sum_{s<t} alpha_s z_s; for every t:
    1/2 (<w_t,z_t> + alpha_t)^2 (1 - z_t^T A_t^{-1} z_t) - 1/2 (<u,z_t> + alpha_t)^2
        <= 1/2 ||u - w_t||^2_{A_{t-1}} - 1/2 ||u - w_{t+1}||^2_{A_t}.
    """
    rng = np.random.default_rng(seed)
    worst = math.inf
    for _ in range(instances):
        n = int(rng.integers(1, max_dim + 1))
        steps = int(rng.integers(1, max_len + 1))
        a = float(rng.uniform(0.1, 2.0))
        inv = InverseState("full", 1, n, a)
        A = a * np.eye(n)
        b = np.zeros(n)
        u = rng.standard_normal(n) * rng.uniform(0.1, 3.0)
        w = np.zeros(n)
        for _ in range(steps):
            z = rng.standard_normal(n) * rng.uniform(0.1, 3.0)
            alpha = float(rng.standard_normal() * rng.uniform(0.1, 5.0))
            A_prev = A.copy()
            inv.rank_one_update(z)
            A += np.outer(z, z)
            b += alpha * z
            w_next = -inv.apply(b)
            quad = float(z @ inv.apply(z))
            lhs = 0.5 * (w @ z + alpha) ** 2 * (1.0 - quad) - 0.5 * (u @ z + alpha) ** 2
            du, dn = u - w, u - w_next
            rhs = 0.5 * du @ A_prev @ du - 0.5 * dn @ A @ dn
            worst = min(worst, rhs - lhs)
            w = w_next
    return CheckResult(
        "per-step least-squares inequality", worst >= -tol,
        f"{instances} instances, worst slack {worst:.3e}",
        stats={"worst": worst},
    )


@_timed
def tuning_inequalities(sequences=1000, max_T=500, grid=10, Us=(0.0, 1.0, 10.0), seed=0):
    """Self-confident tuning inequality on random sequences, and the fallback tuning grid."""
    rng = np.random.default_rng(seed)
    sc_fail = 0
    for i in range(sequences):
        T = int(rng.integers(1, max_T + 1))
        b = float(rng.uniform(0.1, 10.0))
        a = float(10 ** rng.uniform(-2, 2))
        mode = i % 4
        if mode == 0:
            c = rng.uniform(0, b, T)
        elif mode == 1:
            c = b * (rng.random(T) < 0.1)
        elif mode == 2:
            c = np.full(T, b)
        else:
            c = b * rng.beta(0.2, 2.0, T)
        lhs, rhs = selfconfident_sides(c, b, a)
        sc_fail += lhs > rhs
    fb_fail, cases = 0, {"sqrt": 0, "cube_root": 0}
    Ls = np.concatenate(([0.0], np.logspace(-1, 7, grid - 1)))
    Ts = np.logspace(0, 7, grid)
    Hs = np.logspace(-1, 6, grid)
    for L in Ls:
        for T in Ts:
            for H in Hs:
                for U in Us:
                    inp = TuningInput(float(L), float(T), float(H), float(U))
                    g, case = fallback_gamma(inp)
                    cases[case] += 1
                    if not 0.0 < g <= 1.0:
                        fb_fail += 1
                    elif tuning_objective(inp, g) > fallback_case_bound(inp, case) * (1 + 1e-12):
                        fb_fail += 1
    return CheckResult(
        "tuning inequalities", sc_fail == 0 and fb_fail == 0,
        f"self-confident: {sc_fail}/{sequences} failures; fallback grid: {fb_fail} failures "
        f"over {sum(cases.values())} points {cases}",
        stats={"sc_fail": sc_fail, "fb_fail": fb_fail, "cases": cases},
    )


@_timed
def banditron_unbiasedness(states=100, seed=0, tol=1e-12):
    """Sum over sampled outcomes of p * realized update == (e_y - e_greedy) kron x.

    Checked in floating point against ``tol`` and exactly with rational
    probabilities.
    """
    rng = np.random.default_rng(seed)
    worst, exact_fail = 0.0, 0
    for _ in range(states):
        k, d = int(rng.integers(2, 10)), int(rng.integers(1, 8))
        gamma = float(rng.uniform(0.01, 1.0))
        W = rng.standard_normal((k, d))
        x = rng.standard_normal(d)
        y = int(rng.integers(k))
        probs, greedy, _ = gamma_greedy(W @ x, gamma, rng)
        expected = np.zeros(k)
        expected[y] += 1.0
        expected[greedy] -= 1.0
        mean = sum(probs[s] * banditron_update(x, greedy, s, probs, s == y) for s in range(k))
        worst = max(worst, float(np.abs(mean - np.outer(expected, x)).max()))
        g = Fraction(gamma)
        fprobs = [g / k + (1 - g if i == greedy else 0) for i in range(k)]
        coef = [Fraction(0)] * k
        for s in range(k):
            row = [Fraction(0)] * k
            if s == y:
                row[s] += 1 / fprobs[s]
            row[greedy] -= 1
            coef = [c + fprobs[s] * r for c, r in zip(coef, row)]
        exact_fail += coef != [Fraction(int(v)) for v in expected]
    return CheckResult(
        "Banditron unbiasedness", worst <= tol and exact_fail == 0,
        f"{states} states, max float error {worst:.1e}, rational mismatches {exact_fail}",
        stats={"worst": worst, "exact_fail": exact_fail},
    )


@_timed
def uniform_exploration(T=10_000, k=5, d=10, algorithms=("soba", "sobadiag", "banditron"),
                        seed=0, sigmas=4.0):
    """With gamma = 1 every bandit learner errs at rate (k-1)/k, on clean and noisy data."""
    spec = DatasetSpec("synnonsep", n=T, k=k, d=d, margin=0.5, noise_rate=0.2, seed=seed)
    datasets = {"synsep": generate_synsep(spec), "synnonsep": generate_synnonsep(spec)}
    p = (k - 1) / k
    sigma = math.sqrt(p * (1 - p) / T)
    rates, ok = {}, True
    for dname, data in datasets.items():
        for name in algorithms:
            learner = make_learner(name, k, d, 1.0, 1.0, cell_seed(seed, name, dname))
            mistakes = 0
            for x, y in data:
                dist = learner.predict(x)
                mistakes += dist.sampled != y
                learner.observe(x, dist, dist.sampled == y)
            rates[f"{name}/{dname}"] = mistakes / T
            ok &= abs(mistakes / T - p) <= sigmas * sigma
    return CheckResult(
        "gamma = 1 sanity", ok,
        f"expected {p:.4f} +/- {sigmas:g} sigma ({sigma:.4f}), got "
        + ", ".join(f"{n}={r:.4f}" for n, r in rates.items()),
        stats=rates,
    )


def quick_suite():
    """Scaled-down versions of every check, for ``soba check``."""
    return [
        invariant_suite(runs=10, T=500),
        linalg_oracle(sequences=5, length=50),
        dense_reference(),
        loss_identities(samples=2000),
        perceptron_mistake_bound(datasets=6, T=500),
        per_step_least_squares(instances=200),
        tuning_inequalities(sequences=200, grid=6),
        banditron_unbiasedness(states=30),
        uniform_exploration(T=4000),
    ]


def full_suite():
    return [
        invariant_suite(),
        linalg_oracle(),
        dense_reference(),
        loss_identities(),
        perceptron_mistake_bound(),
        per_step_least_squares(),
        tuning_inequalities(),
        banditron_unbiasedness(),
        uniform_exploration(),
    ]
