import csv

import pytest

from arpbench.cli import main

TINY_SYNTH = """
[grid]
window_sizes_s = 0.5, 1
modes = nonoverlap, overlap(0.2)
feature_sets = FS1
classifiers = KNN, NCC
cv_schemes = kfold(5), subject

[synth]
n_subjects = 3
n_activities = 3
segments_per_activity = 1
segment_len_samples = 150
n_channels = 2
"""


@pytest.fixture
def config(tmp_path):
    path = tmp_path / "tiny.ini"
    path.write_text(TINY_SYNTH)
    return path


def _rows(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_grid_command(config, tmp_path, capsys):
    assert main(["grid", "--config", str(config), "--out", str(tmp_path / "out")]) == 0
    assert "16 cells" in capsys.readouterr().out
    summary = _rows(tmp_path / "out" / "summary.csv")
    assert len(summary) == 16
    folds = _rows(tmp_path / "out" / "folds.csv")
    assert len(folds) == 8 * 5 + 8 * 3


def test_grid_same_seed_is_byte_identical(config, tmp_path):
    main(["grid", "--config", str(config), "--out", str(tmp_path / "a"), "--seed", "1"])
    main(["grid", "--config", str(config), "--out", str(tmp_path / "b"), "--seed", "1"])
    a = (tmp_path / "a" / "summary.csv").read_bytes()
    assert a == (tmp_path / "b" / "summary.csv").read_bytes()


def test_synth_then_segment_features_evaluate(config, tmp_path, capsys):
    data = tmp_path / "data"
    assert main(["synth", "--config", str(config), "--out", str(data)]) == 0
    assert (data / "manifest.txt").exists() and (data / "s03.log").exists()

    manifest_cfg = tmp_path / "data.ini"
    manifest_cfg.write_text("[data]\nmanifest = data/manifest.txt\ncolumns = 0, 1\nlabel_column = 2\n")

    windows = tmp_path / "windows.csv"
    assert main(["segment", "--config", str(manifest_cfg), "--window", "1", "--out", str(windows)]) == 0
    rows = _rows(windows)
    assert len(rows) == 3 * 9  # 450 samples // 50 per subject
    assert rows[0] == {"subject": "s01", "start_index": "0", "length": "50", "label": "1"}

    feats = tmp_path / "features.csv"
    assert main(["features", "--config", str(manifest_cfg), "--window", "1", "--step", "0.2",
                 "--feature-set", "FS2", "--out", str(feats)]) == 0
    header = feats.read_text().splitlines()[0]
    assert header == "subject,label,f0,f1,f2,f3"

    folds = tmp_path / "folds.csv"
    assert main(["evaluate", "--features", str(feats), "--classifier", "DT", "--scheme", "subject",
                 "--out", str(folds)]) == 0
    assert "DT SUBJECT" in capsys.readouterr().out
    assert [r["fold"] for r in _rows(folds)] == ["s01", "s02", "s03"]

    assert main(["evaluate", "--features", str(feats), "--scheme", "kfold(4)", "--out", str(folds)]) == 0
    assert len(_rows(folds)) == 4


@pytest.mark.parametrize("argv, message", [
    (["grid", "--config", "/nonexistent.ini", "--out", "x"], "cannot read config"),
    (["evaluate", "--features", "/nonexistent.csv", "--out", "x"], "nonexistent"),
])
def test_errors_exit_nonzero(argv, message, capsys):
    assert main(argv) == 1
    err = capsys.readouterr().err
    assert err.startswith("arpbench: error:") and message in err


def test_failing_cell_is_named(tmp_path, capsys):
    path = tmp_path / "bad.ini"
    path.write_text(TINY_SYNTH.replace("window_sizes_s = 0.5, 1", "window_sizes_s = 0.5, 8"))
    assert main(["grid", "--config", str(path), "--out", str(tmp_path / "o")]) == 1
    assert "window_size_s=8.0" in capsys.readouterr().err


def test_synth_needs_synth_section(tmp_path, capsys):
    path = tmp_path / "d.ini"
    path.write_text("[data]\nmanifest = m.txt\n")
    assert main(["synth", "--config", str(path), "--out", str(tmp_path)]) == 1
    assert "no [synth] section" in capsys.readouterr().err
