import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from soba.datasets import (Dataset, DatasetSpec, generate_synnonsep, generate_synsep, load_dataset,
                           load_libsvm, load_snapshot, rescale_features, save_libsvm,
                           save_snapshot)
from soba.errors import ConfigurationError, GenerationError, ParseError
from soba.losses import multiclass_margins


def small(kind="synsep", **kw):
    base = dict(n=500, k=4, d=6, margin=0.3, seed=3)
    base.update(kw)
    return DatasetSpec(kind, **base)


def test_spec_defaults_and_validation():
    assert DatasetSpec("synnonsep").noise_rate == 0.05
    assert DatasetSpec("synsep").noise_rate == 0.0
    with pytest.raises(ConfigurationError):
        DatasetSpec("synsep", noise_rate=0.1)
    with pytest.raises(ConfigurationError):
        DatasetSpec("mnist")
    with pytest.raises(ConfigurationError):
        DatasetSpec("file")
    with pytest.raises(ConfigurationError):
        DatasetSpec("synsep", d=1)
    with pytest.raises(ConfigurationError):
        DatasetSpec("synsep", margin=0.0)


def test_synsep_is_certified_separable():
    data = generate_synsep(small())
    assert (data.n, data.d, data.k) == (500, 6, 4)
    np.testing.assert_array_equal(data.features[:, -1], 1.0)
    margins = multiclass_margins(data.planted, data.features, data.labels)
    assert margins.min() >= 0.3
    np.testing.assert_allclose(np.linalg.norm(data.planted, axis=1), 1.0)
    # after dividing by the margin the planted model has zero hinge loss
    assert np.all(multiclass_margins(data.planted / 0.3, data.features, data.labels) >= 1 - 1e-12)


def test_generation_is_deterministic_per_seed():
    assert generate_synsep(small()) == generate_synsep(small())
    assert generate_synsep(small()) != generate_synsep(small(seed=4))


def test_noise_free_synnonsep_equals_synsep():
    a = generate_synsep(small())
    b = generate_synnonsep(small("synnonsep", noise_rate=0.0))
    assert a == b


def test_noise_only_changes_labels():
    clean = generate_synsep(small(n=2000))
    dirty = generate_synnonsep(small("synnonsep", n=2000, noise_rate=0.3))
    np.testing.assert_array_equal(clean.features, dirty.features)
    flipped = clean.labels != dirty.labels
    assert 0.25 < flipped.mean() < 0.35


def test_noise_rate_at_desk_scale():
    spec = DatasetSpec("synnonsep", n=100_000, k=9, d=20, margin=0.5, seed=0)
    clean = generate_synsep(spec)
    dirty = generate_synnonsep(spec)
    rate = np.mean(clean.labels != dirty.labels)
    assert abs(rate - 0.05) <= 0.007


def test_x_bound_rescales_model_inversely():
    plain = generate_synsep(small())
    scaled = generate_synsep(small(x_bound=2.0))
    assert scaled.x_bound == pytest.approx(2.0)
    np.testing.assert_array_equal(scaled.labels, plain.labels)
    np.testing.assert_allclose(scaled.planted @ scaled.features.T, plain.planted @ plain.features.T)


def test_generation_budget():
    with pytest.raises(GenerationError):
        generate_synsep(DatasetSpec("synsep", n=50, k=9, d=2, margin=5.0, seed=0))


def test_libsvm_roundtrip(tmp_path):
    data = generate_synnonsep(small("synnonsep"))
    path = tmp_path / "d.svm"
    save_libsvm(data, path)
    back = load_libsvm(path)
    assert back.sparse and back.k == data.k
    np.testing.assert_array_equal(back.labels, data.labels)
    np.testing.assert_array_equal(back.dense_features(), data.features)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.tuples(st.sampled_from([-1, 1, 3, 7]),
                          st.dictionaries(st.integers(1, 30),
                                          st.floats(-1e6, 1e6, allow_nan=False).filter(bool),
                                          max_size=6)),
                min_size=1, max_size=20))
def test_libsvm_parse_roundtrip_property(tmp_path_factory, rows):
    path = tmp_path_factory.mktemp("svm") / "p.svm"
    with open(path, "w") as fh:
        for label, feats in rows:
            fh.write(f"{label} " + " ".join(f"{i}:{v!r}" for i, v in sorted(feats.items())) + "\n")
    data = load_libsvm(path)
    values = sorted({label for label, _ in rows})
    assert data.label_values == values
    for t, (label, feats) in enumerate(rows):
        assert values[data.labels[t]] == label
        x = data.row(t)
        for i, v in feats.items():
            assert x[i - 1] == v
        assert np.count_nonzero(x) == len(feats)
    again = tmp_path_factory.mktemp("svm") / "q.svm"
    save_libsvm(data, again)
    assert load_libsvm(again) == data


def test_libsvm_comments_and_blank_lines(tmp_path):
    path = tmp_path / "c.svm"
    path.write_text("# header\n\n2 1:0.5 3:1\n1 2:-1 # trailing\n")
    data = load_libsvm(path)
    assert data.n == 2 and data.d == 3
    np.testing.assert_array_equal(data.labels, [1, 0])


@pytest.mark.parametrize("line, lineno", [
    ("1 1:0.5\nx 2:1\n", 2),
    ("1 1:0.5 1:0.2\n", 1),
    ("1 0:0.5\n", 1),
    ("1 2:0.5\n2 3\n", 2),
    ("1 2:abc\n", 1),
])
def test_libsvm_errors_report_line(tmp_path, line, lineno):
    path = tmp_path / "bad.svm"
    path.write_text(line)
    with pytest.raises(ParseError, match=f"line {lineno}"):
        load_libsvm(path)


def test_expected_classes(tmp_path):
    path = tmp_path / "e.svm"
    path.write_text("1 1:1\n2 1:2\n3 1:3\n")
    assert load_libsvm(path, expected_classes=5).k == 5
    with pytest.raises(ParseError):
        load_libsvm(path, expected_classes=2)


@pytest.mark.parametrize("sparse", [False, True])
def test_snapshot_roundtrip(tmp_path, sparse):
    data = generate_synsep(small())
    if sparse:
        data = Dataset(sp.csr_matrix(data.features), data.labels, data.k, data.planted)
    path = tmp_path / "s.snap"
    save_snapshot(data, path)
    back = load_snapshot(path)
    assert back == data
    np.testing.assert_array_equal(back.planted, data.planted)
    assert load_dataset(DatasetSpec("file", path=str(path))) == data


def test_snapshot_errors(tmp_path):
    path = tmp_path / "s.snap"
    save_snapshot(generate_synsep(small()), path)
    raw = path.read_bytes()
    path.write_bytes(raw[:-10])
    with pytest.raises(ParseError):
        load_snapshot(path)
    path.write_text("1 1:2\n")
    with pytest.raises(ParseError):
        load_snapshot(path)


def test_rescale():
    data = generate_synsep(small())
    out = rescale_features(data, 10.0)
    assert out.x_bound == pytest.approx(10.0)
    zero = Dataset(np.zeros((3, 2)), [0, 1, 0], 2)
    assert rescale_features(zero, 5.0) is zero
    with pytest.raises(ConfigurationError):
        rescale_features(data, 0.0)


def test_dataset_validation_and_iteration():
    with pytest.raises(ConfigurationError):
        Dataset(np.zeros((2, 2)), [0, 3], 3)
    with pytest.raises(ConfigurationError):
        Dataset(np.zeros((2, 2)), [0], 3)
    X = np.array([[1.0, 0.0], [0.0, 2.0]])
    dense, sparse = Dataset(X, [0, 1], 2), Dataset(sp.csr_matrix(X), [0, 1], 2)
    for (xa, ya), (xb, yb) in zip(dense, sparse):
        np.testing.assert_array_equal(xa, xb)
        assert ya == yb
    assert dense.x_bound == sparse.x_bound == 2.0
    assert len(dense.head(1)) == 1
