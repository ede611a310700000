"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 data error, 3 internal invariant
failure. All randomness flows from --seed (default 42); identical
invocations produce identical outputs. Set OVCP_LOG={error,warn,info,debug}
to control logging.
"""

import argparse
import json
import logging
import math
import os
import sys
from pathlib import Path

from . import classify, metrics_eval, synth
from .corpus import load_dataset, video_from_record, video_to_record
from .errors import DataError, InternalError, OvcpError, UsageError
from .metadata_features import METADATA_FEATURE_NAMES, extract_metadata
from .pipeline import FEATURE_CATEGORIES, FeaturePipeline, ModelBundle, PipelineConfig
from .util import canonical_json, derive_seed

log = logging.getLogger("ovcp")

_LOG_LEVELS = {"error": logging.ERROR, "warn": logging.WARNING,
               "info": logging.INFO, "debug": logging.DEBUG}


class _Parser(argparse.ArgumentParser):
    """argparse exits with code 2 on usage errors; the contract wants 1."""

    def error(self, message):
        raise UsageError(message)


def _add_common(parser, dataset=True, out=True):
    if dataset:
        parser.add_argument("--dataset", required=True, help="dataset directory or zip")
    if out:
        parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--seed", type=int, default=42)


def _add_pipeline_flags(parser):
    parser.add_argument("--walks", type=int, default=100, metavar="M",
                        help="random walks per video")
    parser.add_argument("--walk-len", type=int, default=5, metavar="K",
                        help="maximum walk path length")
    parser.add_argument("--classifier", default="adaboost", choices=classify.ALGORITHMS)
    parser.add_argument("--features", default="network,linguistic,metadata",
                        help="comma-separated feature categories")
    parser.add_argument("--keywords", metavar="FILE", help="clickbait keyword file")
    parser.add_argument("--lexicon", metavar="FILE", help="polarity lexicon file")
    parser.add_argument("--threshold", type=float, default=0.5)
    parser.add_argument("--ae-epochs", type=int, default=80,
                        help="autoencoder training epochs")
    parser.add_argument("--embedding-epochs", type=int, default=20)
    parser.add_argument("--embedding-dim", type=int, default=256)


def _parse_features(spec: str) -> tuple:
    features = tuple(f.strip() for f in spec.split(",") if f.strip())
    unknown = set(features) - set(FEATURE_CATEGORIES)
    if unknown:
        raise UsageError(f"unknown feature categories: {sorted(unknown)}")
    if not features:
        raise UsageError("--features selected nothing")
    return features


def _pipeline_config(args) -> PipelineConfig:
    return PipelineConfig(
        seed=args.seed,
        num_walks=args.walks,
        max_path_len=args.walk_len,
        embedding_dim=args.embedding_dim,
        embedding_epochs=args.embedding_epochs,
        ae_epochs=args.ae_epochs,
        classifier=args.classifier,
        threshold=args.threshold,
        feature_set=_parse_features(args.features),
        lexicon_path=args.lexicon,
        keywords_path=args.keywords,
    )


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _parse_windows(spec: str) -> list[float]:
    windows = []
    for token in spec.split(","):
        token = token.strip().lower()
        if not token:
            continue
        if token in ("inf", "all"):
            windows.append(math.inf)
        else:
            try:
                windows.append(float(token))
            except ValueError:
                raise UsageError(f"bad window value {token!r}") from None
    if not windows:
        raise UsageError("--window selected nothing")
    return windows


# --------------------------------------------------------------------------
# Subcommands

def _cmd_synth(args) -> int:
    knobs = {}
    if args.config:
        path = Path(args.config)
        if not path.is_file():
            raise DataError(f"synth config not found: {path}")
        try:
            knobs = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise DataError(f"bad synth config {path}: {exc}") from None
    knobs.setdefault("n_videos", args.n)
    knobs.setdefault("clickbait_ratio", args.ratio)
    knobs.setdefault("seed", args.seed)
    for key in ("clickbait_thread_params", "nonclickbait_thread_params",
                "sentiment_diversity", "endorsement_skew"):
        if key in knobs:
            knobs[key] = tuple(knobs[key])
    try:
        config = synth.SynthConfig(**knobs)
    except TypeError as exc:
        raise UsageError(f"bad synth config: {exc}") from None
    dataset = synth.generate_corpus(config)
    out = _out_dir(args)
    synth.write_corpus(dataset, out, config=config)
    positives = sum(1 for v in dataset.videos if v.label)
    print(f"wrote {len(dataset)} videos ({positives} clickbait) to {out}")
    return 0


def _cmd_ingest(args) -> int:
    dataset = load_dataset(args.dataset)
    out = _out_dir(args)
    for video in dataset.videos:
        path = out / f"{video.video_id}.json"
        path.write_text(canonical_json(video_to_record(video)), encoding="utf-8")
    print(f"ingested {len(dataset)} videos into {out}")
    return 0


def _cmd_featurize(args) -> int:
    dataset = load_dataset(args.dataset)
    config = _pipeline_config(args)
    out = _out_dir(args)
    pipeline = FeaturePipeline(config)
    features = pipeline.fit_transform(dataset.videos)

    slices = config.segment_slices()
    import csv
    with (out / "features.csv").open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        header = ["video_id"]
        header += [f"network_{i:02d}" for i in range(slices["network"].stop)]
        header += [f"linguistic_{i:02d}"
                   for i in range(slices["linguistic"].stop - slices["linguistic"].start)]
        header += list(METADATA_FEATURE_NAMES)
        header.append("label")
        writer.writerow(header)
        for video, row in zip(dataset.videos, features):
            cells = [video.video_id, *[repr(float(v)) for v in row]]
            cells.append("" if video.label is None else str(bool(video.label)).lower())
            writer.writerow(cells)

    from .metadata_features import export_feature_csv
    metadata_rows = features[:, slices["metadata"]]
    labels = [v.label for v in dataset.videos]
    export_feature_csv(out / "metadata.csv",
                       [v.video_id for v in dataset.videos], metadata_rows,
                       labels=None if any(l is None for l in labels) else labels)
    print(f"featurized {len(dataset)} videos -> {out / 'features.csv'}")
    return 0


def _cmd_train(args) -> int:
    dataset = load_dataset(args.dataset)
    if any(v.label is None for v in dataset.videos):
        raise DataError("training requires a fully labeled dataset")
    config = _pipeline_config(args)
    out = _out_dir(args)

    pipeline = FeaturePipeline(config)
    features = pipeline.fit_transform(dataset.videos)
    columns = config.feature_columns()
    data = [classify.FeatureVector(values=row[columns], label=v.label)
            for row, v in zip(features, dataset.videos)]
    model = classify.train(config.classifier, data,
                           hyperparams=config.classifier_hyperparams,
                           seed=derive_seed(config.seed, "classifier"))
    bundle = ModelBundle(pipeline=pipeline, classifier=model,
                         threshold=config.threshold)
    bundle.save(out)
    print(f"trained {config.classifier} on {len(dataset)} videos -> {out}")
    return 0


def _cmd_predict(args) -> int:
    bundle = ModelBundle.load(args.model)
    for record_path in args.records:
        path = Path(record_path)
        if not path.is_file():
            raise DataError(f"record file not found: {path}")
        try:
            video = video_from_record(json.loads(path.read_text(encoding="utf-8")))
        except json.JSONDecodeError as exc:
            raise DataError(f"bad record {path}: {exc}") from None
        score, label, elapsed_ms = bundle.predict(video)
        print(f"{video.video_id}\t{score:.6f}\t{str(label).lower()}\t{elapsed_ms:.1f}")
    return 0


def _load_eval_inputs(args):
    dataset = load_dataset(args.dataset)
    test = load_dataset(args.test_dataset) if args.test_dataset else None
    return dataset, test


def _cmd_evaluate(args) -> int:
    dataset, test = _load_eval_inputs(args)
    config = _pipeline_config(args)
    out = _out_dir(args)

    if test is not None:
        result = metrics_eval.evaluate_split(dataset.videos, test.videos, config)
        rows = [("holdout", result.report)]
        scores, labels = result.scores, result.labels
    else:
        cv = metrics_eval.run_cv(dataset, config, k=args.k, seed=args.seed)
        rows = [(f"fold{i}", rep) for i, rep in enumerate(cv.fold_reports)]
        rows.append(("mean", cv.mean_report))
        scores, labels = cv.scores, cv.labels

    metrics_eval.write_metrics_csv(out / "metrics.csv", rows)
    points, auc = metrics_eval.roc_auc(scores, labels)
    metrics_eval.write_roc_csv(out / "roc.csv", points)
    (out / "auc.txt").write_text(f"{auc:.6f}\n", encoding="utf-8")
    print(metrics_eval.format_table(out / "metrics.csv"), end="")
    print(f"auc {auc:.4f}")
    return 0


def _cmd_ablate(args) -> int:
    dataset, test = _load_eval_inputs(args)
    config = _pipeline_config(args)
    out = _out_dir(args)
    categories = _parse_features(args.features)
    subsets = [s for s in metrics_eval.all_feature_subsets()
               if set(s) <= set(categories)]
    split = (dataset.videos, test.videos) if test is not None else None
    rows = metrics_eval.run_ablation(dataset if split is None else None, subsets,
                                     config, k=args.k, seed=args.seed, split=split)
    metrics_eval.write_metrics_csv(
        out / "ablation.csv",
        [("+".join(r.feature_set), r.report) for r in rows])
    print(metrics_eval.format_table(out / "ablation.csv"), end="")
    return 0


def _cmd_timesweep(args) -> int:
    dataset, test = _load_eval_inputs(args)
    config = _pipeline_config(args)
    out = _out_dir(args)
    windows = _parse_windows(args.window)
    split = (dataset.videos, test.videos) if test is not None else None
    rows = metrics_eval.run_time_sweep(dataset if split is None else None, windows,
                                       config, k=args.k, seed=args.seed, split=split)

    import csv
    with (out / "timesweep.csv").open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["window_minutes", "comments", *metrics_eval.METRIC_NAMES])
        for row in rows:
            label = "inf" if math.isinf(row.window_minutes) else f"{row.window_minutes:g}"
            writer.writerow([label, row.comment_count,
                             *[f"{getattr(row.report, m):.6f}"
                               for m in metrics_eval.METRIC_NAMES]])
    print(metrics_eval.format_table(out / "timesweep.csv"), end="")
    return 0


def _cmd_timing(args) -> int:
    dataset = load_dataset(args.dataset)
    config = _pipeline_config(args)
    out = _out_dir(args)
    report = metrics_eval.run_timing(dataset, config, repeats=args.repeats)
    metrics_eval.write_timing_csv(out / "timing.csv", report, len(dataset))
    print(metrics_eval.format_table(out / "timing.csv"), end="")
    return 0


def _cmd_report(args) -> int:
    out = Path(args.out)
    if not out.is_dir():
        raise DataError(f"report directory not found: {out}")
    tables = sorted(out.glob("*.csv"))
    if not tables:
        raise DataError(f"no stored CSV tables under {out}")
    for path in tables:
        print(f"== {path.name}")
        print(metrics_eval.format_table(path), end="")
        print()
    return 0


# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ovcp",
                     description="Content-agnostic clickbait video detection")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    p = sub.add_parser("synth", help="generate a labeled synthetic corpus")
    _add_common(p, dataset=False)
    p.add_argument("--n", type=int, default=100, help="number of videos")
    p.add_argument("--ratio", type=float, default=0.2, help="clickbait fraction")
    p.add_argument("--config", metavar="FILE", help="JSON file with generator knobs")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("ingest", help="validate records and write a normalized copy")
    _add_common(p)
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("featurize", help="fit extractors and write feature CSVs")
    _add_common(p)
    _add_pipeline_flags(p)
    p.set_defaults(func=_cmd_featurize)

    p = sub.add_parser("train", help="train a detection model bundle")
    _add_common(p)
    _add_pipeline_flags(p)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("predict", help="score video records with a trained bundle")
    p.add_argument("--model", required=True, help="model bundle directory")
    p.add_argument("records", nargs="+", metavar="RECORD", help="video record JSON files")
    p.set_defaults(func=_cmd_predict)

    for name, help_text, func in (
            ("evaluate", "cross-validated (or held-out) evaluation", _cmd_evaluate),
            ("ablate", "evaluate every feature-set combination", _cmd_ablate),
            ("timesweep", "evaluate across detection time windows", _cmd_timesweep)):
        p = sub.add_parser(name, help=help_text)
        _add_common(p)
        _add_pipeline_flags(p)
        p.add_argument("--k", type=int, default=5, help="cross-validation folds")
        p.add_argument("--test-dataset", metavar="DIR",
                       help="held-out test dataset (skips cross-validation)")
        if name == "timesweep":
            p.add_argument("--window", default="10,30,60,360,720,1440,inf",
                           metavar="MIN[,MIN...]")
        p.set_defaults(func=func)

    p = sub.add_parser("timing", help="per-stage wall-clock measurements")
    _add_common(p)
    _add_pipeline_flags(p)
    p.add_argument("--repeats", type=int, default=3)
    p.set_defaults(func=_cmd_timing)

    p = sub.add_parser("report", help="render stored CSV tables as text")
    p.add_argument("--out", required=True, help="directory with stored CSVs")
    p.set_defaults(func=_cmd_report)
    return parser


def main(argv=None) -> int:
    level = _LOG_LEVELS.get(os.environ.get("OVCP_LOG", "warn").lower(), logging.WARNING)
    logging.basicConfig(level=level, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not getattr(args, "command", None):
            parser.print_usage(sys.stderr)
            return 1
        return args.func(args) or 0
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except (InternalError, AssertionError) as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return 3
    except OvcpError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:
        # argparse --help exits 0 through here
        return int(exc.code or 0)


if __name__ == "__main__":
    sys.exit(main())
