"""``arpbench`` command line: grid runs, synthetic data, and single-stage tools."""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from dataclasses import replace

from .classifiers import ClassifierKind, ClassifierSpec
from .evaluation import Scheme, cross_validate, kfold_plan, subject_plan, write_fold_csv
from .features import FeatureSet, extract_features, read_feature_csv, write_feature_csv
from .runner import CVScheme, GridConfig, load_config, load_source, report, run_grid
from .segmentation import WindowSpec, segment_dataset
from .synthgen import generate, write_dataset

log = logging.getLogger("arpbench")


def _windows(cfg: GridConfig, args):
    dataset = load_source(cfg)
    spec = WindowSpec(args.window, args.step if args.step is not None else args.window)
    return dataset, segment_dataset(dataset, spec, keep_null=cfg.keep_null)


def cmd_grid(args) -> int:
    cfg = load_config(args.config, seed=args.seed)
    overrides = {}
    if args.jobs is not None:
        overrides["jobs"] = args.jobs
    if args.timing:
        overrides["record_timing"] = True
    if overrides:
        cfg = replace(cfg, **overrides)
    cells = run_grid(cfg)
    summary, folds = report(cells, args.out)
    print(f"{len(cells)} cells -> {summary}, {folds}")
    return 0


def cmd_synth(args) -> int:
    cfg = load_config(args.config, seed=args.seed)
    synth = cfg.synth_config()
    if synth is None:
        raise ValueError(f"{args.config} has no [synth] section")
    manifest = write_dataset(generate(synth), args.out)
    print(f"wrote {synth.n_subjects} recordings, manifest {manifest}")
    return 0


def cmd_segment(args) -> int:
    cfg = load_config(args.config)
    _, windows = _windows(cfg, args)
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["subject", "start_index", "length", "label"])
        for w in windows:
            writer.writerow([w.subject_id, w.start_index, w.length, w.label])
    print(f"{len(windows)} windows -> {args.out}")
    return 0


def cmd_features(args) -> int:
    cfg = load_config(args.config)
    dataset, windows = _windows(cfg, args)
    matrix = extract_features(windows, dataset, FeatureSet.parse(args.feature_set))
    write_feature_csv(args.out, matrix)
    print(f"{len(matrix)} rows x {matrix.width} features -> {args.out}")
    return 0


def cmd_evaluate(args) -> int:
    matrix = read_feature_csv(args.features)
    scheme = CVScheme.parse(args.scheme)
    if scheme.scheme is Scheme.KFOLD:
        plan = kfold_plan(len(matrix), scheme.k, args.seed)
    else:
        plan = subject_plan(matrix.subjects)
    spec = ClassifierSpec(ClassifierKind.parse(args.classifier), knn_k=args.knn_k)
    result = cross_validate(matrix, plan, spec, aggregation=args.aggregation)
    write_fold_csv(args.out, result, scheme.label)
    print(f"{spec.kind.value} {scheme.label}: mean_f1={result.mean_f1:.4f} std_f1={result.std_f1:.4f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="arpbench", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("grid", help="run the full experiment grid")
    g.add_argument("--config", required=True)
    g.add_argument("--out", required=True, help="output directory for summary.csv and folds.csv")
    g.add_argument("--seed", type=int, default=None, help="override [grid] seed (default 42)")
    g.add_argument("--jobs", type=int, default=None)
    g.add_argument("--timing", action="store_true", help="record per-cell wall time")
    g.set_defaults(func=cmd_grid)

    s = sub.add_parser("synth", help="write a synthetic dataset as raw logs + manifest")
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--seed", type=int, default=None)
    s.set_defaults(func=cmd_synth)

    for name, func, help_ in (("segment", cmd_segment, "write window index CSV"),
                              ("features", cmd_features, "write feature matrix CSV")):
        c = sub.add_parser(name, help=help_)
        c.add_argument("--config", required=True)
        c.add_argument("--window", type=float, required=True, help="window size in seconds")
        c.add_argument("--step", type=float, default=None, help="slide step in seconds (default: non-overlapping)")
        c.add_argument("--out", required=True)
        if name == "features":
            c.add_argument("--feature-set", default="FS3")
        c.set_defaults(func=func)

    e = sub.add_parser("evaluate", help="cross-validate one classifier on a feature CSV")
    e.add_argument("--features", required=True)
    e.add_argument("--classifier", default="KNN")
    e.add_argument("--knn-k", type=int, default=3)
    e.add_argument("--scheme", default="kfold(10)")
    e.add_argument("--seed", type=int, default=42)
    e.add_argument("--aggregation", choices=("mean", "pooled"), default="mean")
    e.add_argument("--out", required=True)
    e.set_defaults(func=cmd_evaluate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"arpbench: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
