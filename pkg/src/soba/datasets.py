"""Synthetic generators, the LibSVM text loader, and the dataset snapshot format.

Labels are stored 0-based. Features are a dense ``(n, d)`` array for the
synthetic sets and a ``scipy.sparse.csr_matrix`` for loaded files.
"""

import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .errors import ConfigurationError, GenerationError, ParseError
from .losses import multiclass_margins

SYNSEP = "synsep"
SYNNONSEP = "synnonsep"
FILE = "file"

SNAPSHOT_MAGIC = "soba-dataset-v1"


class Dataset:
    """An ordered stream of (features, label) pairs."""

    def __init__(self, features, labels, k, planted=None, label_values=None, name=""):
        if sp.issparse(features):
            features = sp.csr_matrix(features, dtype=float)
        else:
            features = np.asarray(features, dtype=float)
            if features.ndim != 2:
                raise ConfigurationError("features must be an (n, d) array")
        labels = np.asarray(labels, dtype=np.int64)
        if labels.shape != (features.shape[0],):
            raise ConfigurationError("labels and features disagree on n")
        if len(labels) and (labels.min() < 0 or labels.max() >= k):
            raise ConfigurationError(f"labels must lie in [0, {k})")
        self.features = features
        self.labels = labels
        self.k = int(k)
        self.planted = None if planted is None else np.asarray(planted, dtype=float)
        self.label_values = label_values
        self.name = name
        self._norms = None

    @property
    def n(self):
        return self.features.shape[0]

    @property
    def d(self):
        return self.features.shape[1]

    @property
    def sparse(self):
        return sp.issparse(self.features)

    def __len__(self):
        return self.n

    def norms(self):
        if self._norms is None:
            if self.sparse:
                sq = np.asarray(self.features.multiply(self.features).sum(axis=1)).ravel()
            else:
                sq = np.einsum("ij,ij->i", self.features, self.features)
            self._norms = np.sqrt(sq)
        return self._norms

    @property
    def x_bound(self):
        """max_t ||x_t||."""
        return float(self.norms().max()) if self.n else 0.0

    def row(self, t):
        if not self.sparse:
            return self.features[t]
        f = self.features
        x = np.zeros(self.d)
        lo, hi = f.indptr[t], f.indptr[t + 1]
        x[f.indices[lo:hi]] = f.data[lo:hi]
        return x

    def __iter__(self):
        if not self.sparse:
            yield from zip(self.features, self.labels.tolist())
        else:
            for t, y in enumerate(self.labels.tolist()):
                yield self.row(t), y

    def dense_features(self):
        return self.features.toarray() if self.sparse else self.features

    def head(self, n):
        return Dataset(self.features[:n], self.labels[:n], self.k, self.planted,
                       self.label_values, self.name)

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        if (self.k, self.n, self.d, self.sparse) != (other.k, other.n, other.d, other.sparse):
            return False
        if not np.array_equal(self.labels, other.labels):
            return False
        if self.sparse:
            a, b = self.features, other.features
            return (np.array_equal(a.indptr, b.indptr) and np.array_equal(a.indices, b.indices)
                    and np.array_equal(a.data, b.data))
        return np.array_equal(self.features, other.features)

    __hash__ = None


@dataclass(frozen=True)
class DatasetSpec:
    kind: str = SYNSEP
    n: int = 100_000
    k: int = 9
    d: int = 400
    noise_rate: Optional[float] = None
    margin: float = 1.0
    seed: int = 0
    x_bound: Optional[float] = None
    path: Optional[str] = None

    def __post_init__(self):
        if self.kind not in (SYNSEP, SYNNONSEP, FILE):
            raise ConfigurationError(f"unknown dataset kind {self.kind!r}")
        if self.kind == FILE:
            if not self.path:
                raise ConfigurationError("file datasets need a path")
            return
        if self.noise_rate is None:
            object.__setattr__(self, "noise_rate", 0.05 if self.kind == SYNNONSEP else 0.0)
        if self.kind == SYNSEP and self.noise_rate != 0.0:
            raise ConfigurationError("SynSep is noise-free; use synnonsep for label noise")
        if not 0.0 <= self.noise_rate <= 1.0:
            raise ConfigurationError("noise_rate must lie in [0, 1]")
        if self.n < 0 or self.k < 2 or self.d < 2:
            raise ConfigurationError("synthetic data needs n >= 0, k >= 2, d >= 2")
        if not self.margin > 0:
            raise ConfigurationError("margin must be positive")
        if self.x_bound is not None and not self.x_bound > 0:
            raise ConfigurationError("x_bound must be positive")


def _streams(seed):
    features, noise = np.random.SeedSequence(seed).spawn(2)
    return np.random.default_rng(features), np.random.default_rng(noise)


def _planted_sample(spec, rng):
    k, d, n = spec.k, spec.d, spec.n
    U = rng.standard_normal((k, d))
    U /= np.linalg.norm(U, axis=1, keepdims=True)
    X = np.empty((n, d))
    y = np.empty(n, dtype=np.int64)
    filled, attempts = 0, 0
    budget = 1000 * max(n, 1)
    while filled < n:
        if attempts >= budget:
            raise GenerationError(
                f"only {filled}/{n} examples reached margin {spec.margin} "
                f"after {attempts} draws; lower the margin or raise d")
        batch = min(max(2 * (n - filled), 1024), budget - attempts, 1 << 16)
        cand = rng.standard_normal((batch, d))
        cand[:, -1] = 1.0
        attempts += batch
        labels = np.argmax(cand @ U.T, axis=1)
        keep = multiclass_margins(U, cand, labels) >= spec.margin
        take = min(int(keep.sum()), n - filled)
        X[filled:filled + take] = cand[keep][:take]
        y[filled:filled + take] = labels[keep][:take]
        filled += take
    if spec.x_bound is not None and n:
        c = spec.x_bound / float(np.sqrt(np.einsum("ij,ij->i", X, X)).max())
        X *= c
        U /= c
    return X, y, U


def generate_synsep(spec):
    """Linearly separable data with a planted model of margin >= spec.margin.

    Rows of the planted model are uniform on the unit sphere; features are
    standard Gaussian with the last coordinate fixed to 1 (bias); the label is
    the planted argmax, and draws whose margin falls below ``spec.margin`` are
    rejected. With ``spec.x_bound`` set, features are scaled so that the
    largest norm equals it and the planted model is scaled inversely.
    """
    if spec.kind != SYNSEP:
        spec = replace(spec, kind=SYNSEP, noise_rate=0.0)
    feat_rng, _ = _streams(spec.seed)
    X, y, U = _planted_sample(spec, feat_rng)
    return Dataset(X, y, spec.k, planted=U, name="SynSep")


def generate_synnonsep(spec):
    """SynSep features with each label replaced, with probability
    ``noise_rate``, by a uniform draw from the other k - 1 classes."""
    if spec.kind != SYNNONSEP:
        raise ConfigurationError("generate_synnonsep needs a synnonsep spec")
    feat_rng, noise_rng = _streams(spec.seed)
    X, y, U = _planted_sample(spec, feat_rng)
    flip = noise_rng.random(spec.n) < spec.noise_rate
    shift = noise_rng.integers(1, spec.k, size=spec.n)
    y = np.where(flip, (y + shift) % spec.k, y)
    return Dataset(X, y, spec.k, planted=U, name="SynNonSep")


def load_dataset(spec):
    if spec.kind == SYNSEP:
        return generate_synsep(spec)
    if spec.kind == SYNNONSEP:
        return generate_synnonsep(spec)
    path = Path(spec.path)
    with open(path, "rb") as fh:
        first = fh.readline(4096)
    is_snapshot = first.startswith(b"{") and SNAPSHOT_MAGIC.encode() in first
    data = load_snapshot(path) if is_snapshot else load_libsvm(path)
    if spec.x_bound is not None:
        data = rescale_features(data, spec.x_bound)
    return data


def _parse_label(token, lineno):
    try:
        value = float(token)
    except ValueError:
        raise ParseError(f"bad label {token!r}", lineno) from None
    return int(value) if value.is_integer() else value


def load_libsvm(path, expected_classes=None):
    """Parse ``label idx:val idx:val ...`` lines (1-based, strictly increasing).

    Raw labels are mapped to 0..k-1 by sorted order; ``label_values`` keeps
    the raw value of each class. Blank lines and ``#`` comments are skipped.
    """
    raw_labels, indptr, indices, values = [], [0], [], []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            tokens = line.split()
            raw_labels.append(_parse_label(tokens[0], lineno))
            last = 0
            for tok in tokens[1:]:
                idx, sep, val = tok.partition(":")
                if not sep:
                    raise ParseError(f"expected index:value, got {tok!r}", lineno)
                try:
                    idx, val = int(idx), float(val)
                except ValueError:
                    raise ParseError(f"bad feature {tok!r}", lineno) from None
                if idx < 1:
                    raise ParseError(f"feature indices are 1-based, got {idx}", lineno)
                if idx <= last:
                    raise ParseError(f"indices must be strictly increasing ({idx} after {last})", lineno)
                last = idx
                indices.append(idx - 1)
                values.append(val)
            indptr.append(len(indices))
    label_values = sorted(set(raw_labels))
    k = len(label_values)
    if expected_classes is not None:
        if k > expected_classes:
            raise ParseError(f"found {k} distinct labels, expected at most {expected_classes}")
        k = expected_classes
    k = max(k, 2)
    lookup = {v: i for i, v in enumerate(label_values)}
    d = (max(indices) + 1) if indices else 1
    X = sp.csr_matrix(
        (np.asarray(values, dtype=float), np.asarray(indices, dtype=np.int64), np.asarray(indptr)),
        shape=(len(raw_labels), d))
    y = np.array([lookup[v] for v in raw_labels], dtype=np.int64)
    return Dataset(X, y, k, label_values=label_values, name=Path(path).name)


def save_libsvm(dataset, path):
    values = dataset.label_values or list(range(dataset.k))
    X = sp.csr_matrix(dataset.features)
    with open(path, "w") as fh:
        for t, y in enumerate(dataset.labels):
            lo, hi = X.indptr[t], X.indptr[t + 1]
            feats = " ".join(f"{j + 1}:{float(v)!r}" for j, v in zip(X.indices[lo:hi], X.data[lo:hi]))
            fh.write(f"{values[y]} {feats}".rstrip() + "\n")


def rescale_features(dataset, target_x):
    """Scale all features so that the largest norm equals ``target_x``."""
    if not target_x > 0:
        raise ConfigurationError("target_x must be positive")
    current = dataset.x_bound
    if current == 0.0:
        return dataset
    c = target_x / current
    planted = None if dataset.planted is None else dataset.planted / c
    return Dataset(dataset.features * c, dataset.labels, dataset.k, planted,
                   dataset.label_values, dataset.name)


def save_snapshot(dataset, path):
    """One JSON header line, then little-endian binary blocks.

    Dense: labels (int64, n) then features (float64, n*d, row-major).
    CSR: labels, indptr (int64, n+1), indices (int64, nnz), data (float64, nnz).
    A planted model, when present, follows as float64 k*d.
    """
    header = {
        "format": SNAPSHOT_MAGIC, "n": dataset.n, "d": dataset.d, "k": dataset.k,
        "storage": "csr" if dataset.sparse else "dense", "name": dataset.name,
        "label_values": dataset.label_values, "planted": dataset.planted is not None,
    }
    if dataset.sparse:
        header["nnz"] = int(dataset.features.nnz)
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode() + b"\n")
        fh.write(dataset.labels.astype("<i8").tobytes())
        if dataset.sparse:
            f = dataset.features
            fh.write(f.indptr.astype("<i8").tobytes())
            fh.write(f.indices.astype("<i8").tobytes())
            fh.write(f.data.astype("<f8").tobytes())
        else:
            fh.write(np.ascontiguousarray(dataset.features).astype("<f8").tobytes())
        if dataset.planted is not None:
            fh.write(dataset.planted.astype("<f8").tobytes())


def load_snapshot(path):
    with open(path, "rb") as fh:
        try:
            header = json.loads(fh.readline())
        except ValueError:
            raise ParseError(f"{path} is not a dataset snapshot") from None
        if not isinstance(header, dict) or header.get("format") != SNAPSHOT_MAGIC:
            raise ParseError(f"{path} is not a dataset snapshot")
        n, d, k = header["n"], header["d"], header["k"]

        def read(dtype, count):
            raw = fh.read(8 * count)
            if len(raw) != 8 * count:
                raise ParseError(f"{path} is truncated")
            return np.frombuffer(raw, dtype=dtype, count=count).copy()

        labels = read("<i8", n)
        if header["storage"] == "csr":
            indptr = read("<i8", n + 1)
            indices = read("<i8", header["nnz"])
            data = read("<f8", header["nnz"])
            features = sp.csr_matrix((data, indices, indptr), shape=(n, d))
        else:
            features = read("<f8", n * d).reshape(n, d)
        planted = read("<f8", k * d).reshape(k, d) if header["planted"] else None
    return Dataset(features, labels, k, planted, header["label_values"], header["name"])
