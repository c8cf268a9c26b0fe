import math

import numpy as np
import pytest

from arpbench.dataset import ChannelSelection, load_dataset, read_manifest
from arpbench.synthgen import (
    SynthConfig,
    SynthError,
    activity_means,
    generate,
    subject_id,
    write_dataset,
)

SMALL = SynthConfig(n_subjects=3, n_activities=3, segments_per_activity=2, segment_len_samples=40, n_channels=2)


def test_shape_and_labels():
    ds = generate(SMALL)
    assert ds.subject_ids == ["s01", "s02", "s03"]
    for rec in ds:
        assert rec.values.shape == (SMALL.samples_per_subject, 2)
        counts = np.bincount(rec.labels, minlength=4)
        assert counts.tolist() == [0, 80, 80, 80]


def test_deterministic_per_seed():
    a, b = generate(SMALL), generate(SMALL)
    c = generate(SynthConfig(**{**SMALL.as_dict(), "seed": 7}))
    assert all(np.array_equal(x.values, y.values) for x, y in zip(a, b))
    assert not np.array_equal(a["s01"].values, c["s01"].values)


def test_activity_means_grid():
    mu = activity_means(3, 4)
    assert mu.tolist() == [[0, 2, 4, 0], [2, 4, 0, 2], [4, 0, 2, 4]]
    # every pair of activities differs on every channel
    for i in range(8):
        for j in range(i):
            assert np.all(np.abs(activity_means(8, 8)[i] - activity_means(8, 8)[j]) >= 2.0)


def test_iid_case_recovers_activity_means():
    cfg = SynthConfig(n_subjects=4, n_activities=4, segment_len_samples=500, n_channels=3,
                      subject_sigma=0.0, smoothness=0.0, noise_sigma=1.5, seed=11)
    ds = generate(cfg)
    mu = activity_means(4, 3)
    values = np.vstack([r.values for r in ds])
    labels = np.concatenate([r.labels for r in ds])
    for a in range(1, 5):
        block = values[labels == a]
        tol = 3 * cfg.noise_sigma / math.sqrt(len(block))
        assert np.all(np.abs(block.mean(axis=0) - mu[a - 1]) < tol)
        assert block.std(axis=0) == pytest.approx(np.full(3, 1.5), rel=0.05)


def test_ar1_noise_has_lag_one_correlation():
    cfg = SynthConfig(n_subjects=2, n_activities=2, segments_per_activity=1, segment_len_samples=20000,
                      n_channels=1, subject_sigma=0.0, smoothness=0.9, seed=3)
    rec = generate(cfg)["s01"]
    e = rec.values[:, 0] - activity_means(2, 1)[rec.labels - 1, 0]
    e = e[: cfg.segment_len_samples]
    r = np.corrcoef(e[:-1], e[1:])[0, 1]
    assert r == pytest.approx(0.9, abs=0.02)


def test_subject_offsets_shift_all_activities_equally():
    cfg = SynthConfig(n_subjects=2, n_activities=2, segment_len_samples=4000, n_channels=2,
                      subject_sigma=5.0, smoothness=0.0, noise_sigma=1.0, seed=5)
    rec = generate(cfg)["s01"]
    mu = activity_means(2, 2)
    shifts = [rec.values[rec.labels == a].mean(axis=0) - mu[a - 1] for a in (1, 2)]
    n = int((rec.labels == 1).sum())
    assert np.all(np.abs(shifts[0] - shifts[1]) < 2 * 3 * cfg.noise_sigma / math.sqrt(n))


@pytest.mark.parametrize("field, value", [("n_subjects", 1), ("n_activities", 1), ("n_channels", 0),
                                          ("smoothness", 1.0), ("noise_sigma", 0.0), ("subject_sigma", -1.0),
                                          ("segment_len_samples", 0)])
def test_invalid_config(field, value):
    with pytest.raises(SynthError):
        SynthConfig(**{field: value})


def test_write_and_reload_through_loader(tmp_path):
    ds = generate(SMALL)
    manifest = write_dataset(ds, tmp_path)
    back = load_dataset(read_manifest(manifest), ChannelSelection((0, 1)), label_column=2)
    assert back.subject_ids == ds.subject_ids
    for a, b in zip(ds, back):
        assert np.array_equal(a.values, b.values)
        assert np.array_equal(a.labels, b.labels)


def test_subject_id_format():
    assert subject_id(0) == "s01" and subject_id(16) == "s17"


def test_null_lead_in_desynchronises_subjects():
    cfg = SynthConfig(**{**SMALL.as_dict(), "max_lead_in_samples": 60, "n_subjects": 6})
    ds = generate(cfg)
    leads = []
    for rec in ds:
        lead = int(np.argmax(rec.labels > 0))
        leads.append(lead)
        assert 0 <= lead <= 60 and not rec.labels[:lead].any()
        # activity samples are untouched by the lead-in
        assert np.bincount(rec.labels[lead:], minlength=4).tolist() == [0, 80, 80, 80]
        assert len(rec) == lead + SMALL.samples_per_subject
    assert len(set(leads)) > 1
    assert all(np.array_equal(a.values, b.values) for a, b in zip(ds, generate(cfg)))


def test_lead_in_must_be_non_negative():
    with pytest.raises(SynthError):
        SynthConfig(max_lead_in_samples=-1)
