"""Confusion-based metrics, ROC/AUC and the experiment harness.

Zero-denominator convention: any metric whose denominator vanishes is 0.0.
The harness fits all feature extractors on the training split only, so no
test information leaks into the embeddings or encoders.
"""

import csv
import logging
import math
import time
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from . import classify
from .corpus import Dataset, filter_by_window, stratified_kfold
from .errors import DataError, UsageError
from .pipeline import FEATURE_CATEGORIES, FeaturePipeline, PipelineConfig
from .util import derive_seed

log = logging.getLogger(__name__)

METRIC_NAMES = ("accuracy", "precision", "recall", "f1", "kappa", "mcc")


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    @classmethod
    def from_labels(cls, actual, predicted) -> "ConfusionMatrix":
        if len(actual) != len(predicted):
            raise UsageError("actual and predicted lengths differ")
        tp = fp = fn = tn = 0
        for a, p in zip(actual, predicted):
            if p and a:
                tp += 1
            elif p and not a:
                fp += 1
            elif not p and a:
                fn += 1
            else:
                tn += 1
        return cls(tp=tp, fp=fp, fn=fn, tn=tn)


@dataclass(frozen=True)
class MetricReport:
    accuracy: float
    precision: float
    recall: float
    f1: float
    kappa: float
    mcc: float

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def _ratio(num: float, den: float) -> float:
    return num / den if den else 0.0


def compute_metrics(cm: ConfusionMatrix) -> MetricReport:
    total = cm.total
    if total == 0:
        raise DataError("empty confusion matrix")
    tp, fp, fn, tn = cm.tp, cm.fp, cm.fn, cm.tn

    accuracy = (tp + tn) / total
    precision = _ratio(tp, tp + fp)
    recall = _ratio(tp, tp + fn)
    f1 = _ratio(2 * precision * recall, precision + recall)

    expected = ((tp + fp) * (tp + fn) + (fn + tn) * (fp + tn)) / (total * total)
    kappa = _ratio(accuracy - expected, 1.0 - expected)

    mcc_den = math.sqrt(float(tp + fp) * (tp + fn) * (tn + fp) * (tn + fn))
    mcc = _ratio(tp * tn - fp * fn, mcc_den)
    return MetricReport(accuracy=accuracy, precision=precision, recall=recall,
                        f1=f1, kappa=kappa, mcc=mcc)


def roc_auc(scores, labels) -> tuple[list[tuple[float, float, float]], float]:
    """ROC curve from sweeping every distinct score threshold, plus the AUC.

    AUC comes from the trapezoid rule and equals the pairwise probability
    that a positive outranks a negative, ties counted one half.
    """
    scores = [float(s) for s in scores]
    labels = [bool(l) for l in labels]
    if len(scores) != len(labels):
        raise UsageError("scores and labels lengths differ")
    pos = sum(labels)
    neg = len(labels) - pos
    if pos == 0 or neg == 0:
        raise DataError("roc_auc requires both classes present")

    order = sorted(range(len(scores)), key=lambda i: -scores[i])
    points = [(0.0, 0.0, math.inf)]
    tp = fp = 0
    auc = 0.0
    i = 0
    while i < len(order):
        threshold = scores[order[i]]
        # consume the whole tie group at this threshold
        while i < len(order) and scores[order[i]] == threshold:
            if labels[order[i]]:
                tp += 1
            else:
                fp += 1
            i += 1
        prev_fpr, prev_tpr, _ = points[-1]
        fpr, tpr = fp / neg, tp / pos
        auc += (fpr - prev_fpr) * (tpr + prev_tpr) / 2.0
        points.append((fpr, tpr, threshold))
    return points, auc


# --------------------------------------------------------------------------
# Harness

@dataclass
class SplitResult:
    report: MetricReport
    scores: list[float]
    labels: list[bool]


@dataclass
class CVResult:
    fold_reports: list[MetricReport]
    mean_report: MetricReport
    scores: list[float]
    labels: list[bool]


def _mean_report(reports) -> MetricReport:
    return MetricReport(**{
        name: float(np.mean([getattr(r, name) for r in reports]))
        for name in METRIC_NAMES
    })


def _check_labeled(videos):
    if any(v.label is None for v in videos):
        raise DataError("every video must be labeled for evaluation")


def _classify_split(features_train, features_test, train_videos, test_videos,
                    config: PipelineConfig,
                    timings: dict | None = None) -> SplitResult:
    columns = config.feature_columns()
    features_train = features_train[:, columns]
    features_test = features_test[:, columns]
    start = time.perf_counter()
    data = [classify.FeatureVector(values=x, label=v.label)
            for x, v in zip(features_train, train_videos)]
    model = classify.train(config.classifier, data,
                           hyperparams=config.classifier_hyperparams,
                           seed=derive_seed(config.seed, "classifier"))
    scores = [classify.predict_score(model, x) for x in features_test]
    if timings is not None:
        timings["classification"] = timings.get("classification", 0.0) + (
            time.perf_counter() - start)
    labels = [bool(v.label) for v in test_videos]
    predicted = [s >= config.threshold for s in scores]
    report = compute_metrics(ConfusionMatrix.from_labels(labels, predicted))
    return SplitResult(report=report, scores=scores, labels=labels)


def evaluate_split(train_videos, test_videos, config: PipelineConfig,
                   timings: dict | None = None) -> SplitResult:
    """Fit the full pipeline on the training videos and score the test ones."""
    _check_labeled(train_videos)
    _check_labeled(test_videos)
    pipeline = FeaturePipeline(config)
    features_train = pipeline.fit_transform(train_videos, timings)
    features_test = pipeline.transform(test_videos, timings)
    return _classify_split(features_train, features_test, train_videos,
                           test_videos, config, timings=timings)


def run_cv(dataset: Dataset, config: PipelineConfig, k: int = 5,
           seed: int | None = None) -> CVResult:
    """Stratified k-fold cross-validation of the whole pipeline."""
    if k < 2:
        raise UsageError(f"k must be >= 2, got {k}")
    seed = config.seed if seed is None else seed
    splits = stratified_kfold(dataset, k, seed)
    fold_reports = []
    scores: list[float] = []
    labels: list[bool] = []
    for fold, (train_idx, test_idx) in enumerate(splits):
        fold_config = replace(config, seed=derive_seed(seed, "fold", fold))
        train_videos = [dataset.videos[i] for i in train_idx]
        test_videos = [dataset.videos[i] for i in test_idx]
        result = evaluate_split(train_videos, test_videos, fold_config)
        fold_reports.append(result.report)
        scores.extend(result.scores)
        labels.extend(result.labels)
        log.info("fold %d/%d: f1=%.4f", fold + 1, k, result.report.f1)
    return CVResult(fold_reports=fold_reports, mean_report=_mean_report(fold_reports),
                    scores=scores, labels=labels)


@dataclass
class AblationRow:
    feature_set: tuple[str, ...]
    input_dim: int
    report: MetricReport


def all_feature_subsets() -> list[tuple[str, ...]]:
    subsets = []
    for mask in range(1, 2 ** len(FEATURE_CATEGORIES)):
        subset = tuple(c for i, c in enumerate(FEATURE_CATEGORIES) if mask >> i & 1)
        subsets.append(subset)
    subsets.sort(key=lambda s: (-len(s), s))
    return subsets


def run_ablation(dataset: Dataset | None, feature_sets, config: PipelineConfig,
                 k: int = 5, seed: int | None = None,
                 split: tuple[list, list] | None = None) -> list[AblationRow]:
    """One evaluation row per feature subset.

    Features are computed once per fold (or once for an explicit
    (train_videos, test_videos) split) and sliced per subset, so only the
    classifier retrains.
    """
    feature_sets = [tuple(fs) for fs in feature_sets]
    if not feature_sets:
        raise UsageError("at least one feature set is required")
    for subset in feature_sets:
        if not subset:
            raise UsageError("empty feature subset")
        unknown = set(subset) - set(FEATURE_CATEGORIES)
        if unknown:
            raise UsageError(f"unknown feature categories: {sorted(unknown)}")

    seed = config.seed if seed is None else seed
    if split is not None:
        fold_splits = [split]
    else:
        if dataset is None:
            raise UsageError("run_ablation needs a dataset or an explicit split")
        fold_splits = [
            ([dataset.videos[i] for i in train_idx], [dataset.videos[i] for i in test_idx])
            for train_idx, test_idx in stratified_kfold(dataset, k, seed)
        ]

    per_subset: dict[tuple, list[MetricReport]] = {fs: [] for fs in feature_sets}
    for fold, (train_videos, test_videos) in enumerate(fold_splits):
        _check_labeled(train_videos)
        _check_labeled(test_videos)
        fold_config = replace(config, seed=derive_seed(seed, "fold", fold)) \
            if split is None else config
        pipeline = FeaturePipeline(fold_config)
        features_train = pipeline.fit_transform(train_videos)
        features_test = pipeline.transform(test_videos)
        for subset in feature_sets:
            subset_config = replace(fold_config, feature_set=subset)
            result = _classify_split(features_train, features_test,
                                     train_videos, test_videos, subset_config)
            per_subset[subset].append(result.report)

    rows = []
    for subset in feature_sets:
        columns = replace(config, feature_set=subset).feature_columns()
        rows.append(AblationRow(
            feature_set=subset,
            input_dim=int(columns.size),
            report=_mean_report(per_subset[subset]),
        ))
    return rows


@dataclass
class TimeSweepRow:
    window_minutes: float
    comment_count: int
    report: MetricReport


def run_time_sweep(dataset: Dataset | None, windows, config: PipelineConfig,
                   k: int = 5, seed: int | None = None,
                   split: tuple[list, list] | None = None) -> list[TimeSweepRow]:
    """Evaluate with comments restricted to each detection window.

    Windows must be positive and ascending; a final all-comments row
    (infinite window) is appended when not already requested.
    """
    windows = [float(w) for w in windows]
    if any(w <= 0 for w in windows):
        raise UsageError("windows must be positive")
    if windows != sorted(windows):
        raise UsageError("windows must be ascending")
    if not windows or windows[-1] != math.inf:
        windows.append(math.inf)

    seed = config.seed if seed is None else seed
    rows = []
    for window in windows:
        if split is not None:
            train_videos = [filter_by_window(v, window) for v in split[0]]
            test_videos = [filter_by_window(v, window) for v in split[1]]
            result = evaluate_split(train_videos, test_videos, config)
            comment_count = sum(v.comment_count() for v in train_videos) + \
                sum(v.comment_count() for v in test_videos)
            report = result.report
        else:
            if dataset is None:
                raise UsageError("run_time_sweep needs a dataset or an explicit split")
            filtered = Dataset(
                videos=[filter_by_window(v, window) for v in dataset.videos],
                name=dataset.name)
            comment_count = sum(v.comment_count() for v in filtered.videos)
            report = run_cv(filtered, config, k=k, seed=seed).mean_report
        rows.append(TimeSweepRow(window_minutes=window,
                                 comment_count=comment_count, report=report))
    return rows


STAGE_NAMES = ("ingestion", "graph", "walks", "network_encoding",
               "linguistic", "metadata", "classification")


@dataclass
class TimingReport:
    stage_seconds: dict[str, float]
    total_seconds: float
    per_video_seconds: float


def run_timing(dataset: Dataset, config: PipelineConfig, repeats: int = 3) -> TimingReport:
    """Median-of-`repeats` wall-clock per pipeline stage on `dataset`."""
    if len(dataset) == 0:
        return TimingReport(stage_seconds={s: 0.0 for s in STAGE_NAMES},
                            total_seconds=0.0, per_video_seconds=0.0)
    _check_labeled(dataset.videos)
    runs = []
    totals = []
    for _ in range(max(1, repeats)):
        timings: dict[str, float] = {}
        start = time.perf_counter()
        pipeline = FeaturePipeline(config)
        features = pipeline.fit_transform(dataset.videos, timings)
        _classify_split(features, features, dataset.videos, dataset.videos,
                        config, timings=timings)
        totals.append(time.perf_counter() - start)
        runs.append(timings)
    stage_seconds = {
        stage: float(np.median([run.get(stage, 0.0) for run in runs]))
        for stage in STAGE_NAMES
    }
    total = float(np.median(totals))
    return TimingReport(stage_seconds=stage_seconds, total_seconds=total,
                        per_video_seconds=total / len(dataset))


def grid_search(dataset: Dataset, config: PipelineConfig, param_grid: dict,
                k: int = 5, seed: int | None = None) -> tuple[dict, MetricReport]:
    """Pick the classifier hyperparameters with the best mean CV F1."""
    names = sorted(param_grid)
    combos = [{}]
    for name in names:
        combos = [dict(c, **{name: v}) for c in combos for v in param_grid[name]]
    best: tuple[dict, MetricReport] | None = None
    for combo in combos:
        candidate = replace(config, classifier_hyperparams={
            **config.classifier_hyperparams, **combo})
        result = run_cv(dataset, candidate, k=k, seed=seed)
        if best is None or result.mean_report.f1 > best[1].f1:
            best = (combo, result.mean_report)
    if best is None:
        raise UsageError("empty parameter grid")
    return best


# --------------------------------------------------------------------------
# Report files

def write_metrics_csv(path, rows) -> None:
    """`rows` is a list of (label, MetricReport) pairs."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["run", *METRIC_NAMES])
        for label, report in rows:
            writer.writerow([label, *[f"{getattr(report, m):.6f}" for m in METRIC_NAMES]])


def write_roc_csv(path, points) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["fpr", "tpr", "threshold"])
        for fpr, tpr, threshold in points:
            writer.writerow([f"{fpr:.6f}", f"{tpr:.6f}",
                             "inf" if math.isinf(threshold) else f"{threshold:.6f}"])


def write_timing_csv(path, report: TimingReport, n_videos: int) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["stage", "seconds_total", "seconds_per_video"])
        for stage in STAGE_NAMES:
            seconds = report.stage_seconds[stage]
            per_video = seconds / n_videos if n_videos else 0.0
            writer.writerow([stage, f"{seconds:.6f}", f"{per_video:.6f}"])
        writer.writerow(["total", f"{report.total_seconds:.6f}",
                         f"{report.per_video_seconds:.6f}"])


def format_table(path) -> str:
    """Render a stored CSV as a fixed-width text table (no recomputation)."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        return "(empty table)\n"
    widths = [max(len(row[i]) if i < len(row) else 0 for row in rows)
              for i in range(max(len(r) for r in rows))]
    lines = []
    for idx, row in enumerate(rows):
        cells = [cell.ljust(widths[i]) for i, cell in enumerate(row)]
        lines.append("  ".join(cells).rstrip())
        if idx == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"
