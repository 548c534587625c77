"""Seeded experiment runner: single cells, gamma sweeps, aggregation, reports."""

import csv
import hashlib
import json
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .baselines import Banditron, Perceptron
from .datasets import DatasetSpec, load_dataset
from .errors import ConfigurationError
from .learners import ADAPTIVE, LearnerConfig, Soba
from .losses import cumulative_eta_loss

log = logging.getLogger(__name__)

ALGORITHMS = ("soba", "sobadiag", "soba-adaptive", "banditron", "perceptron")
WORKERS_ENV = "SOBA_WORKERS"

SERIES_FIELDS = ["algorithm", "gamma", "seed", "t", "cumulative_mistakes", "error_rate"]
SUMMARY_FIELDS = ["algorithm", "gamma", "mean_error", "std_error", "mean_updates"]


@dataclass(frozen=True)
class Checkpoints:
    """``log`` with ``value`` points log-spaced in [1, T], or ``linear`` every ``value`` steps.

    The final step T is always included.
    """

    kind: str = "log"
    value: int = 100

    def __post_init__(self):
        if self.kind not in ("log", "linear") or self.value < 1:
            raise ConfigurationError(f"bad checkpoint spec {self.kind}:{self.value}")

    @classmethod
    def parse(cls, text):
        kind, _, value = str(text).partition(":")
        try:
            return cls(kind.strip().lower(), int(value))
        except ValueError:
            raise ConfigurationError(f"checkpoints must look like 'log:100' or 'linear:1000', got {text!r}") from None

    def __str__(self):
        return f"{self.kind}:{self.value}"

    def points(self, T):
        if T <= 0:
            return np.zeros(0, dtype=np.int64)
        if self.kind == "linear":
            pts = np.arange(self.value, T + 1, self.value)
        else:
            pts = np.unique(np.round(np.geomspace(1, T, self.value)).astype(np.int64))
            # rounding can merge points; keep at most `value` of them
            pts = pts[-self.value:]
        if len(pts) == 0 or pts[-1] != T:
            if self.kind == "log" and len(pts) >= self.value:
                pts = pts[:-1]
            pts = np.append(pts, T)
        return pts.astype(np.int64)


@dataclass(frozen=True)
class AlgorithmSpec:
    name: str
    a: float = 1.0
    gammas: tuple = (0.01,)
    eta_report: tuple = ()

    def __post_init__(self):
        if self.name not in ALGORITHMS:
            raise ConfigurationError(f"unknown algorithm {self.name!r}; choose from {ALGORITHMS}")
        if self.name == "soba-adaptive":
            object.__setattr__(self, "gammas", (ADAPTIVE,))
        elif self.name == "perceptron":
            object.__setattr__(self, "gammas", (0.0,))
        else:
            gammas = tuple(float(g) for g in self.gammas)
            if not gammas or any(not 0.0 <= g <= 1.0 for g in gammas):
                raise ConfigurationError(f"gammas must be a non-empty list in [0, 1], got {self.gammas}")
            object.__setattr__(self, "gammas", gammas)
        object.__setattr__(self, "eta_report", tuple(float(e) for e in self.eta_report))


@dataclass
class ExperimentConfig:
    dataset: DatasetSpec
    algorithms: list
    seeds: list = field(default_factory=lambda: list(range(10)))
    checkpoints: Checkpoints = Checkpoints()
    output_path: Optional[str] = None
    format: str = "csv"
    parallel: bool = False

    def __post_init__(self):
        if not self.seeds:
            raise ConfigurationError("at least one seed is required")
        if not self.algorithms:
            raise ConfigurationError("at least one algorithm is required")
        if self.format not in ("csv", "json"):
            raise ConfigurationError(f"format must be csv or json, got {self.format!r}")

    def cells(self):
        for alg in self.algorithms:
            for gamma in alg.gammas:
                for seed in self.seeds:
                    yield alg, gamma, seed


@dataclass
class RunRecord:
    algorithm: str
    gamma: object
    seed: int
    series: list
    mistakes: int = 0
    greedy_mistakes: int = 0
    greedy_first_half: int = 0
    greedy_second_half: int = 0
    update_count: int = 0
    steps: int = 0
    eta_losses: dict = field(default_factory=dict)
    aborted: bool = False
    diagnostic: str = ""
    wall_time: float = field(default=0.0, compare=False)

    @property
    def final_error(self):
        return self.mistakes / self.steps if self.steps else 0.0

    def to_dict(self):
        out = asdict(self)
        out.pop("wall_time")
        out["series"] = [list(row) for row in self.series]
        out["eta_losses"] = {repr(k): v for k, v in self.eta_losses.items()}
        return out


@dataclass
class SummaryRow:
    algorithm: str
    gamma: object
    mean_error: float
    std_error: float
    mean_updates: float
    runs: int
    aborted: int


@dataclass
class SweepResult:
    records: list
    summary: list
    metadata: dict = field(default_factory=dict)

    def best(self, algorithm):
        rows = [r for r in self.summary if r.algorithm == algorithm and r.runs > r.aborted]
        return min(rows, key=lambda r: r.mean_error) if rows else None


def cell_seed(seed, algorithm, gamma):
    """Learner seed derived from the (seed, algorithm, gamma) cell key."""
    key = f"{int(seed)}|{algorithm}|{gamma!r}".encode()
    return int.from_bytes(hashlib.sha256(key).digest()[:8], "little")


def make_learner(algorithm, k, d, a=1.0, gamma=0.01, seed=0):
    if algorithm == "soba":
        return Soba(LearnerConfig(k, d, a, gamma, "full", seed))
    if algorithm == "sobadiag":
        return Soba(LearnerConfig(k, d, a, gamma, "diag", seed))
    if algorithm == "soba-adaptive":
        return Soba(LearnerConfig(k, d, a, ADAPTIVE, "full", seed))
    if algorithm == "banditron":
        return Banditron(k, d, gamma, seed)
    if algorithm == "perceptron":
        return Perceptron(k, d)
    raise ConfigurationError(f"unknown algorithm {algorithm!r}")


def run_one(algorithm, gamma, seed, dataset, a=1.0, checkpoints=Checkpoints(), eta_report=()):
    """Run one (algorithm, gamma, seed) cell over ``dataset`` in order."""
    start = time.perf_counter()
    T = len(dataset)
    marks = set(checkpoints.points(T).tolist())
    learner = make_learner(algorithm, dataset.k, dataset.d, a, gamma, cell_seed(seed, algorithm, gamma))
    rec = RunRecord(algorithm, gamma, int(seed), [])
    full_info = algorithm == "perceptron"
    half = T // 2
    for t, (x, y) in enumerate(dataset, start=1):
        if full_info:
            scores = learner.weights @ x
            greedy = int(np.argmax(scores))
            mistake = learner.step(x, y)
            updated = mistake
        else:
            dist = learner.predict(x)
            scores = dist.scores
            greedy = dist.greedy
            mistake = dist.sampled != y
            out = learner.observe(x, dist, not mistake)
            updated = out if isinstance(out, bool) else out.updated
        if not np.all(np.isfinite(scores)):
            rec.aborted = True
            rec.diagnostic = f"non-finite weights detected at step {t}"
            log.warning("%s gamma=%s seed=%s aborted: %s", algorithm, gamma, seed, rec.diagnostic)
            break
        rec.mistakes += mistake
        rec.update_count += updated
        if greedy != y:
            rec.greedy_mistakes += 1
            if t <= half:
                rec.greedy_first_half += 1
            else:
                rec.greedy_second_half += 1
        rec.steps = t
        if t in marks:
            rec.series.append((t, rec.mistakes, rec.mistakes / t))
    if not rec.aborted:
        model = learner.greedy_model()
        rec.eta_losses = {eta: cumulative_eta_loss(model, dataset, eta) for eta in eta_report}
    rec.wall_time = time.perf_counter() - start
    return rec


_WORKER_DATASET = None


def _init_worker(dataset):
    global _WORKER_DATASET
    _WORKER_DATASET = dataset


def _run_cell(args):
    alg, gamma, seed, checkpoints = args
    return _guarded_run(alg, gamma, seed, _WORKER_DATASET, checkpoints)


def _guarded_run(alg, gamma, seed, dataset, checkpoints):
    try:
        return run_one(alg.name, gamma, seed, dataset, alg.a, checkpoints, alg.eta_report)
    except Exception as exc:  # a failing cell must not stop the sweep
        log.exception("cell %s gamma=%s seed=%s failed", alg.name, gamma, seed)
        return RunRecord(alg.name, gamma, int(seed), [], aborted=True,
                         diagnostic=f"{type(exc).__name__}: {exc}")


def default_workers():
    env = os.environ.get(WORKERS_ENV)
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def aggregate(records):
    """Mean/std of final error per (algorithm, gamma), in first-seen key order."""
    groups = {}
    for rec in records:
        groups.setdefault((rec.algorithm, rec.gamma), []).append(rec)
    rows = []
    for (alg, gamma), recs in groups.items():
        done = [r for r in recs if not r.aborted]
        errors = [r.final_error for r in done]
        rows.append(SummaryRow(
            alg, gamma,
            float(np.mean(errors)) if errors else math.nan,
            float(np.std(errors, ddof=1)) if len(errors) > 1 else 0.0,
            float(np.mean([r.update_count for r in done])) if done else math.nan,
            len(recs), len(recs) - len(done),
        ))
    return rows


def run_sweep(config, dataset=None, parallel=None, workers=None):
    """Run every (algorithm x gamma x seed) cell and aggregate across seeds.

    Output order follows the config (algorithms, then gammas, then seeds)
    whatever the execution order.
    """
    if dataset is None:
        dataset = load_dataset(config.dataset)
    cells = list(config.cells())
    parallel = config.parallel if parallel is None else parallel
    workers = workers or default_workers()
    if parallel and workers > 1 and len(cells) > 1:
        with ProcessPoolExecutor(workers, initializer=_init_worker, initargs=(dataset,)) as pool:
            records = list(pool.map(_run_cell, [(a, g, s, config.checkpoints) for a, g, s in cells]))
    else:
        records = [_guarded_run(a, g, s, dataset, config.checkpoints) for a, g, s in cells]
    metadata = {
        "dataset": asdict(config.dataset), "n": len(dataset), "k": dataset.k, "d": dataset.d,
        "x_bound": dataset.x_bound, "checkpoints": str(config.checkpoints),
        "seeds": [int(s) for s in config.seeds],
    }
    return SweepResult(records, aggregate(records), metadata)


def _fmt(value):
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _parse_gamma(text):
    return text if text == ADAPTIVE else float(text)


def summary_path(path):
    path = Path(path)
    return path.with_name(path.stem + "_summary" + path.suffix)


def report(result, path, fmt="csv"):
    """Write the per-checkpoint series and the per-cell summary.

    ``csv``: ``path`` gets the series, ``<stem>_summary.csv`` the summary and
    ``<stem>.meta.json`` the run metadata. ``json``: one file with all three.
    """
    path = Path(path)
    if isinstance(result, list):
        result = SweepResult(result, aggregate(result))
    if fmt == "json":
        payload = {
            "metadata": result.metadata,
            "runs": [r.to_dict() for r in result.records],
            "summary": [asdict(r) for r in result.summary],
        }
        path.write_text(json.dumps(payload, indent=1, sort_keys=False) + "\n")
        return [path]
    if fmt != "csv":
        raise ConfigurationError(f"unknown report format {fmt!r}")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SERIES_FIELDS)
        for rec in result.records:
            for t, cum, rate in rec.series:
                w.writerow([rec.algorithm, _fmt(rec.gamma), rec.seed, t, cum, _fmt(rate)])
    spath = summary_path(path)
    with open(spath, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_FIELDS)
        for row in result.summary:
            w.writerow([row.algorithm, _fmt(row.gamma), _fmt(row.mean_error),
                        _fmt(row.std_error), _fmt(row.mean_updates)])
    mpath = path.with_name(path.stem + ".meta.json")
    mpath.write_text(json.dumps(result.metadata, indent=1) + "\n")
    return [path, spath, mpath]


def read_series_csv(path):
    """Parse a series CSV back into ``{(algorithm, gamma, seed): [(t, cum, rate), ...]}``."""
    out = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is not None and reader.fieldnames != SERIES_FIELDS:
            raise ConfigurationError(f"unexpected CSV header {reader.fieldnames}")
        for row in reader:
            key = (row["algorithm"], _parse_gamma(row["gamma"]), int(row["seed"]))
            out.setdefault(key, []).append(
                (int(row["t"]), int(row["cumulative_mistakes"]), float(row["error_rate"])))
    return out


def read_summary_csv(path):
    with open(path, newline="") as fh:
        return [
            SummaryRow(r["algorithm"], _parse_gamma(r["gamma"]), float(r["mean_error"]),
                       float(r["std_error"]), float(r["mean_updates"]), 0, 0)
            for r in csv.DictReader(fh)
        ]
