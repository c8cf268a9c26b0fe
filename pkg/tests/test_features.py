import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from arpbench.dataset import Dataset, SubjectRecording
from arpbench.features import (
    FeatureError,
    FeatureMatrix,
    FeatureSet,
    extract_features,
    feature_names,
    mean_crossing_rate,
    read_feature_csv,
    write_feature_csv,
)
from arpbench.segmentation import Window, WindowSpec, segment_dataset

from oracles import crossings


@pytest.mark.parametrize("series, expected", [
    ([1, 2, 1, 2], 1.0),
    ([5, 5, 5, 5], 0.0),
    ([1, 2, 3, 4], 1 / 3),
    ([1, 2, 3], 0.0),  # middle sample equals the mean: no strict crossing
])
def test_mean_crossing_rate_examples(series, expected):
    assert mean_crossing_rate(series) == pytest.approx(expected, abs=0)
    assert crossings(series) == pytest.approx(expected)


def test_mean_crossing_rate_needs_two_samples():
    with pytest.raises(FeatureError):
        mean_crossing_rate([1.0])


@settings(max_examples=300, deadline=None)
@given(st.lists(st.integers(-20, 20), min_size=2, max_size=40))
def test_mean_crossing_rate_matches_exact_enumeration(series):
    assert mean_crossing_rate(series) == float(crossings(series))


def _dataset(values, labels=None, sid="s1"):
    values = np.asarray(values, dtype=np.float64)
    if values.ndim == 1:
        values = values[:, None]
    if labels is None:
        labels = np.ones(len(values), dtype=np.int64)
    return Dataset((SubjectRecording(sid, values, labels),))


@pytest.mark.parametrize("fs, width", [(FeatureSet.FS1, 3), (FeatureSet.FS2, 6), (FeatureSet.FS3, 15)])
def test_widths(fs, width):
    ds = _dataset(np.arange(30.0).reshape(10, 3))
    fm = extract_features([Window("s1", 0, 5, 1)], ds, fs)
    assert fm.width == width == fs.width(3)


def test_27_channel_fs3_width():
    assert FeatureSet.FS3.width(27) == 135


def test_fs2_values_population_std():
    ds = _dataset([1.0, 2.0, 3.0])
    fm = extract_features([Window("s1", 0, 3, 1)], ds, FeatureSet.FS2)
    assert fm.X[0].tolist() == [2.0, math.sqrt(2 / 3)]


def test_fs3_layout_is_channel_major():
    # channel 0 = [1, 3, 2, 4], channel 1 = [10, 10, 10, 10]
    ds = _dataset(np.array([[1, 10], [3, 10], [2, 10], [4, 10]], dtype=float))
    fm = extract_features([Window("s1", 0, 4, 1)], ds, FeatureSet.FS3)
    std0 = math.sqrt(((1 - 2.5) ** 2 + (3 - 2.5) ** 2 + (2 - 2.5) ** 2 + (4 - 2.5) ** 2) / 4)
    assert fm.X[0].tolist() == [2.5, std0, 4.0, 1.0, 1.0, 10.0, 0.0, 10.0, 10.0, 0.0]
    assert feature_names(FeatureSet.FS2, ["x", "y"]) == ["x_mean", "x_std", "y_mean", "y_std"]


def test_rows_follow_window_order_across_subjects():
    a = SubjectRecording("a", np.arange(8.0)[:, None], np.full(8, 1))
    b = SubjectRecording("b", 100 + np.arange(8.0)[:, None], np.full(8, 2))
    ds = Dataset((a, b))
    wins = [Window("b", 4, 4, 2), Window("a", 0, 4, 1), Window("b", 0, 4, 2), Window("a", 2, 2, 1)]
    fm = extract_features(wins, ds, FeatureSet.FS1)
    assert fm.X[:, 0].tolist() == [105.5, 1.5, 101.5, 2.5]
    assert fm.subjects.tolist() == ["b", "a", "b", "a"]
    assert fm.labels.tolist() == [2, 1, 2, 1]


def test_unknown_subject_and_bad_ranges():
    ds = _dataset(np.arange(5.0))
    with pytest.raises(FeatureError, match="unknown subject"):
        extract_features([Window("zz", 0, 2, 1)], ds, FeatureSet.FS1)
    with pytest.raises(FeatureError, match="outside"):
        extract_features([Window("s1", 3, 4, 1)], ds, FeatureSet.FS1)
    with pytest.raises(FeatureError, match="at least 2"):
        extract_features([Window("s1", 0, 1, 1)], ds, FeatureSet.FS2)
    # FS1 is defined for single-sample windows
    assert extract_features([Window("s1", 2, 1, 1)], ds, FeatureSet.FS1).X[0, 0] == 2.0


def test_feature_matrix_invariants():
    with pytest.raises(FeatureError, match="non-finite"):
        FeatureMatrix(np.array(["a"], dtype=object), np.array([1]), np.array([[np.nan]]))
    with pytest.raises(FeatureError, match="non-negative"):
        FeatureMatrix(np.array(["a"], dtype=object), np.array([-1]), np.array([[1.0]]))


window_values = st.lists(
    st.lists(st.floats(-1e3, 1e3, allow_nan=False), min_size=2, max_size=2), min_size=2, max_size=30
)


@settings(max_examples=150, deadline=None)
@given(window_values, st.floats(-100, 100), st.floats(0.1, 10))
def test_shift_and_scale(values, c, a):
    vals = np.array(values)
    fs = FeatureSet.FS3
    win = [Window("s1", 0, len(vals), 1)]
    base = extract_features(win, _dataset(vals), fs).X[0].reshape(2, 5)
    shifted = extract_features(win, _dataset(vals + c), fs).X[0].reshape(2, 5)
    scaled = extract_features(win, _dataset(vals * a), fs).X[0].reshape(2, 5)
    tol = dict(rel=1e-9, abs=1e-9 * (1 + abs(c)) * 1e3)
    # mean, max, min shift by c; std and spread unchanged
    assert shifted[:, 0] == pytest.approx(base[:, 0] + c, **tol)
    assert shifted[:, 2] == pytest.approx(base[:, 2] + c, **tol)
    assert shifted[:, 3] == pytest.approx(base[:, 3] + c, **tol)
    assert shifted[:, 1] == pytest.approx(base[:, 1], **tol)
    assert (shifted[:, 2] - shifted[:, 3]) == pytest.approx(base[:, 2] - base[:, 3], **tol)
    for j in range(4):
        assert scaled[:, j] == pytest.approx(base[:, j] * a, rel=1e-9, abs=1e-9 * a * 1e3)
    for f in (base, shifted, scaled):
        assert np.all(f[:, 3] <= f[:, 0]) and np.all(f[:, 0] <= f[:, 2])


@settings(max_examples=150, deadline=None)
@given(st.lists(st.integers(-50, 50), min_size=2, max_size=30), st.integers(-1000, 1000), st.integers(1, 9))
def test_crossing_rate_invariant_under_exact_shift_and_scale(values, c, a):
    vals = np.array(values, dtype=float)
    assert mean_crossing_rate(vals + c) == mean_crossing_rate(vals)
    assert mean_crossing_rate(vals * a) == mean_crossing_rate(vals)


def test_min_mean_max_on_near_constant_window():
    ds = _dataset([0.1, 0.1, 0.1])
    f = extract_features([Window("s1", 0, 3, 1)], ds, FeatureSet.FS3).X[0]
    assert f[3] <= f[0] <= f[2]


def test_feature_sets_are_prefix_projections():
    rng = np.random.default_rng(3)
    ds = Dataset((SubjectRecording("s", rng.normal(size=(200, 3)), np.ones(200, dtype=int)),))
    wins = segment_dataset(ds, WindowSpec(0.5, 0.2))
    f1 = extract_features(wins, ds, FeatureSet.FS1).X.reshape(-1, 3, 1)
    f2 = extract_features(wins, ds, FeatureSet.FS2).X.reshape(-1, 3, 2)
    f3 = extract_features(wins, ds, FeatureSet.FS3).X.reshape(-1, 3, 5)
    assert np.array_equal(f3[:, :, :2], f2)
    assert np.array_equal(f2[:, :, :1], f1)


def test_chunked_extraction_matches_per_window(monkeypatch):
    import arpbench.features as features

    rng = np.random.default_rng(4)
    ds = Dataset((SubjectRecording("s", rng.normal(size=(300, 2)), np.ones(300, dtype=int)),))
    wins = segment_dataset(ds, WindowSpec(0.4, 0.1))
    whole = extract_features(wins, ds, FeatureSet.FS3).X
    monkeypatch.setattr(features, "_BLOCK_ELEMENTS", 50)
    chunked = extract_features(wins, ds, FeatureSet.FS3).X
    assert np.array_equal(whole, chunked)
    single = np.vstack([extract_features([w], ds, FeatureSet.FS3).X for w in wins])
    assert np.array_equal(whole, single)


def test_csv_round_trip(tmp_path):
    rng = np.random.default_rng(5)
    fm = FeatureMatrix(np.array(["a", "b", "a"], dtype=object), np.array([1, 2, 3]), rng.normal(size=(3, 4)))
    path = tmp_path / "f.csv"
    write_feature_csv(path, fm)
    assert path.read_text().splitlines()[0] == "subject,label,f0,f1,f2,f3"
    back = read_feature_csv(path)
    assert np.array_equal(back.X, fm.X)
    assert back.labels.tolist() == [1, 2, 3] and back.subjects.tolist() == ["a", "b", "a"]
