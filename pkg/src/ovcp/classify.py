"""Five from-scratch supervised classifiers over the combined feature vector.

Every algorithm standardizes features with training-set statistics, learns a
bounded decision value and maps it through a logistic transform, so scores
are comparable, strictly inside (0, 1) and threshold at 0.5.
"""

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError, UsageError

ALGORITHMS = ("adaboost", "logistic", "linear_svm", "random_forest", "mlp")

DEFAULT_HYPERPARAMS = {
    "adaboost": {"rounds": 100},
    "logistic": {"epochs": 500, "learning_rate": 0.1, "l2": 1e-4},
    "linear_svm": {"epochs": 100, "learning_rate": 0.02, "l2": 1e-4},
    "random_forest": {"trees": 100, "max_depth": 16},
    "mlp": {"hidden": 64, "epochs": 200, "batch_size": 32, "learning_rate": 0.01},
}

_EPS = 1e-10


@dataclass(frozen=True)
class FeatureVector:
    values: np.ndarray
    label: bool | None = None


@dataclass
class TrainedClassifier:
    algorithm: str
    feature_mean: np.ndarray
    feature_std: np.ndarray
    params: dict
    hyperparams: dict
    seed: int

    @property
    def input_dim(self) -> int:
        return self.feature_mean.shape[0]


def _sigmoid(value: float) -> float:
    return 1.0 / (1.0 + math.exp(-min(30.0, max(-30.0, value))))


def _as_matrix(data):
    vectors = []
    labels = []
    for fv in data:
        values = fv.values if isinstance(fv, FeatureVector) else np.asarray(fv)
        vectors.append(np.asarray(values, dtype=np.float64))
        labels.append(fv.label if isinstance(fv, FeatureVector) else None)
    if not vectors:
        raise DataError("no training samples")
    dims = {v.shape for v in vectors}
    if len(dims) != 1 or vectors[0].ndim != 1:
        raise DataError(f"inconsistent feature dimensions: {sorted(dims)}")
    X = np.stack(vectors)
    if not np.isfinite(X).all():
        raise DataError("features contain non-finite values")
    return X, labels


def train(algorithm: str, data, hyperparams: dict | None = None,
          seed: int = 0) -> TrainedClassifier:
    """Fit `algorithm` on labeled FeatureVectors; deterministic per seed."""
    if algorithm not in ALGORITHMS:
        raise UsageError(f"unknown algorithm {algorithm!r}; choose from {ALGORITHMS}")
    X, labels = _as_matrix(data)
    if any(lbl is None for lbl in labels):
        raise DataError("every training sample must carry a label")
    y = np.array([bool(lbl) for lbl in labels])
    if X.shape[0] < 2:
        raise DataError("need at least 2 training samples")
    if y.all() or not y.any():
        raise DataError("training data contains a single class")

    hp = dict(DEFAULT_HYPERPARAMS[algorithm])
    hp.update(hyperparams or {})

    mean = X.mean(axis=0)
    std = X.std(axis=0)
    std[std == 0] = 1.0
    Z = (X - mean) / std

    ypm = np.where(y, 1.0, -1.0)
    y01 = y.astype(np.float64)
    if algorithm == "adaboost":
        params = _fit_adaboost(Z, ypm, hp)
    elif algorithm == "logistic":
        params = _fit_logistic(Z, y01, hp)
    elif algorithm == "linear_svm":
        params = _fit_linear_svm(Z, ypm, hp, seed)
    elif algorithm == "random_forest":
        params = _fit_random_forest(Z, y, hp, seed)
    else:
        params = _fit_mlp(Z, y01, hp, seed)

    return TrainedClassifier(
        algorithm=algorithm,
        feature_mean=mean,
        feature_std=std,
        params=params,
        hyperparams=hp,
        seed=seed,
    )


def predict_score(model: TrainedClassifier, x) -> float:
    """Clickbait score in (0, 1); higher means more clickbait-like."""
    values = x.values if isinstance(x, FeatureVector) else np.asarray(x)
    values = np.asarray(values, dtype=np.float64)
    if values.shape != (model.input_dim,):
        raise DataError(f"feature dim {values.shape} != model dim ({model.input_dim},)")
    z = (values - model.feature_mean) / model.feature_std
    return _sigmoid(_decision_value(model, z))


def predict_label(model: TrainedClassifier, x, threshold: float = 0.5) -> bool:
    """Score >= threshold counts as clickbait (ties are positive)."""
    if not 0.0 < threshold < 1.0:
        raise UsageError(f"threshold must be inside (0, 1), got {threshold}")
    return predict_score(model, x) >= threshold


def _decision_value(model: TrainedClassifier, z: np.ndarray) -> float:
    algorithm = model.algorithm
    if algorithm == "adaboost":
        return _adaboost_margin(model.params["stumps"], z)
    if algorithm in ("logistic", "linear_svm"):
        return float(z @ model.params["weights"] + model.params["bias"])
    if algorithm == "random_forest":
        fractions = [_tree_fraction(tree, z) for tree in model.params["trees"]]
        return float(np.mean([2.0 * f - 1.0 for f in fractions])) if fractions else 0.0
    if algorithm == "mlp":
        hidden = np.maximum(z @ model.params["w1"] + model.params["b1"], 0.0)
        return float(hidden @ model.params["w2"] + model.params["b2"])
    raise UsageError(f"unknown algorithm {algorithm!r}")


# --------------------------------------------------------------------------
# AdaBoost with depth-1 stumps

def _stump_predict(z, feature: int, threshold: float, polarity: int):
    raw = np.where(np.asarray(z)[..., feature] > threshold, 1.0, -1.0)
    return polarity * raw


def _adaboost_margin(stumps, z: np.ndarray) -> float:
    if not stumps:
        return 0.0
    total = sum(s["alpha"] for s in stumps)
    if total <= 0:
        return 0.0
    vote = sum(s["alpha"] * float(_stump_predict(z, s["feature"], s["threshold"],
                                                 s["polarity"]))
               for s in stumps)
    return vote / total


def _best_stump(Z, y, w):
    """Lowest weighted-error stump; ties break to the lowest feature index,
    then the lowest threshold, then polarity +1."""
    n, d = Z.shape
    best = None
    for j in range(d):
        order = np.argsort(Z[:, j], kind="stable")
        xs = Z[order, j]
        ws = w[order]
        ys = y[order]
        pos_cum = np.cumsum(ws * (ys > 0))
        neg_cum = np.cumsum(ws * (ys < 0))
        splits = np.nonzero(np.diff(xs))[0]
        if splits.size == 0:
            continue
        thresholds = (xs[splits] + xs[splits + 1]) / 2.0
        # polarity +1 predicts positive strictly above the threshold
        err_plus = pos_cum[splits] + (neg_cum[-1] - neg_cum[splits])
        for polarity, errs in ((1, err_plus), (-1, 1.0 - err_plus)):
            i = int(np.argmin(errs))
            err = float(errs[i])
            if best is None or err < best[0] - 1e-15:
                best = (err, j, float(thresholds[i]), polarity)
    return best


def _fit_adaboost(Z, ypm, hp):
    rounds = int(hp["rounds"])
    n = Z.shape[0]
    w = np.full(n, 1.0 / n)
    stumps = []
    for _ in range(rounds):
        found = _best_stump(Z, ypm, w)
        if found is None:
            break
        err, feature, threshold, polarity = found
        if err >= 0.5:
            break
        alpha = 0.5 * math.log((1.0 - err + _EPS) / (err + _EPS))
        pred = _stump_predict(Z, feature, threshold, polarity)
        stumps.append({"feature": feature, "threshold": threshold,
                       "polarity": polarity, "alpha": alpha, "error": err})
        w = w * np.exp(-alpha * ypm * pred)
        w = w / w.sum()
        if err <= _EPS:
            break
    return {"stumps": stumps}


# --------------------------------------------------------------------------
# Logistic regression: full-batch gradient descent, L2 on the weights

def _fit_logistic(Z, y01, hp):
    n, d = Z.shape
    w = np.zeros(d)
    b = 0.0
    lr = float(hp["learning_rate"])
    l2 = float(hp["l2"])
    for _ in range(int(hp["epochs"])):
        p = 1.0 / (1.0 + np.exp(-np.clip(Z @ w + b, -30, 30)))
        residual = p - y01
        w -= lr * (Z.T @ residual / n + l2 * w)
        b -= lr * float(residual.mean())
    return {"weights": w, "bias": b}


# --------------------------------------------------------------------------
# Linear SVM: hinge loss, per-sample SGD

def _fit_linear_svm(Z, ypm, hp, seed):
    n, d = Z.shape
    w = np.zeros(d)
    b = 0.0
    lr = float(hp["learning_rate"])
    l2 = float(hp["l2"])
    rng = np.random.default_rng(seed)
    for _ in range(int(hp["epochs"])):
        for i in rng.permutation(n):
            margin = ypm[i] * (Z[i] @ w + b)
            if margin < 1.0:
                w += lr * (ypm[i] * Z[i] - l2 * w)
                b += lr * ypm[i]
            else:
                w -= lr * l2 * w
    return {"weights": w, "bias": b}


# --------------------------------------------------------------------------
# Random forest: bootstrap, Gini, sqrt(d) features per split

def _gini(pos: float, total: float) -> float:
    if total <= 0:
        return 0.0
    p = pos / total
    return 2.0 * p * (1.0 - p)


def _build_tree(Z, y, rng, depth, max_depth, mtry):
    n = y.shape[0]
    pos = int(y.sum())
    if depth >= max_depth or pos == 0 or pos == n or n < 2:
        return {"leaf": pos / n}

    parent = _gini(pos, n)
    features = rng.choice(Z.shape[1], size=mtry, replace=False)
    best = None
    for j in features:
        order = np.argsort(Z[:, j], kind="stable")
        xs = Z[order, j]
        ys = y[order]
        cum_pos = np.cumsum(ys)
        splits = np.nonzero(np.diff(xs))[0]
        if splits.size == 0:
            continue
        left_n = splits + 1.0
        right_n = n - left_n
        left_pos = cum_pos[splits].astype(np.float64)
        right_pos = pos - left_pos
        left_p = left_pos / left_n
        right_p = right_pos / right_n
        weighted = (left_n * 2 * left_p * (1 - left_p)
                    + right_n * 2 * right_p * (1 - right_p)) / n
        gains = parent - weighted
        i = int(np.argmax(gains))
        gain = float(gains[i])
        if gain > 1e-12 and (best is None or gain > best[0] + 1e-15):
            threshold = float((xs[splits[i]] + xs[splits[i] + 1]) / 2.0)
            best = (gain, int(j), threshold)
    if best is None:
        return {"leaf": pos / n}

    _, feature, threshold = best
    mask = Z[:, feature] <= threshold
    return {
        "feature": feature,
        "threshold": threshold,
        "left": _build_tree(Z[mask], y[mask], rng, depth + 1, max_depth, mtry),
        "right": _build_tree(Z[~mask], y[~mask], rng, depth + 1, max_depth, mtry),
    }


def _tree_fraction(tree, z) -> float:
    node = tree
    while "leaf" not in node:
        node = node["left"] if z[node["feature"]] <= node["threshold"] else node["right"]
    return node["leaf"]


def _fit_random_forest(Z, y, hp, seed):
    n, d = Z.shape
    mtry = max(1, int(round(math.sqrt(d))))
    trees = []
    for t in range(int(hp["trees"])):
        rng = np.random.default_rng([seed, t])
        idx = rng.integers(0, n, size=n)
        trees.append(_build_tree(Z[idx], y[idx], rng, 0, int(hp["max_depth"]), mtry))
    return {"trees": trees}


# --------------------------------------------------------------------------
# MLP: one ReLU hidden layer, logistic output, cross-entropy loss

def _fit_mlp(Z, y01, hp, seed):
    n, d = Z.shape
    hidden = int(hp["hidden"])
    rng = np.random.default_rng(seed)
    limit1 = math.sqrt(6.0 / (d + hidden))
    limit2 = math.sqrt(6.0 / (hidden + 1))
    w1 = rng.uniform(-limit1, limit1, size=(d, hidden))
    b1 = np.zeros(hidden)
    w2 = rng.uniform(-limit2, limit2, size=hidden)
    b2 = 0.0
    lr = float(hp["learning_rate"])
    batch_size = int(hp["batch_size"])

    for _ in range(int(hp["epochs"])):
        perm = rng.permutation(n)
        for start in range(0, n, batch_size):
            idx = perm[start:start + batch_size]
            Xb, yb = Z[idx], y01[idx]
            pre = Xb @ w1 + b1
            act = np.maximum(pre, 0.0)
            logit = act @ w2 + b2
            p = 1.0 / (1.0 + np.exp(-np.clip(logit, -30, 30)))
            dlogit = (p - yb) / idx.size
            gw2 = act.T @ dlogit
            gb2 = float(dlogit.sum())
            dact = np.outer(dlogit, w2) * (pre > 0)
            gw1 = Xb.T @ dact
            gb1 = dact.sum(axis=0)
            w1 -= lr * gw1
            b1 -= lr * gb1
            w2 -= lr * gw2
            b2 -= lr * gb2
    return {"w1": w1, "b1": b1, "w2": w2, "b2": b2}


# --------------------------------------------------------------------------
# Model files

def _params_to_json(params):
    def convert(value):
        if isinstance(value, np.ndarray):
            return value.tolist()
        if isinstance(value, (np.floating, np.integer)):
            return value.item()
        if isinstance(value, dict):
            return {k: convert(v) for k, v in value.items()}
        if isinstance(value, list):
            return [convert(v) for v in value]
        return value
    return convert(params)


def save_classifier(model: TrainedClassifier, path) -> None:
    obj = {
        "format": "ovcp-classifier",
        "version": 1,
        "algorithm": model.algorithm,
        "feature_mean": model.feature_mean.tolist(),
        "feature_std": model.feature_std.tolist(),
        "hyperparams": model.hyperparams,
        "seed": model.seed,
        "params": _params_to_json(model.params),
    }
    Path(path).write_text(json.dumps(obj, sort_keys=True), encoding="utf-8")


def _params_from_json(algorithm, params):
    if algorithm in ("logistic", "linear_svm"):
        return {"weights": np.array(params["weights"]), "bias": float(params["bias"])}
    if algorithm == "mlp":
        return {"w1": np.array(params["w1"]), "b1": np.array(params["b1"]),
                "w2": np.array(params["w2"]), "b2": float(params["b2"])}
    return params


def load_classifier(path) -> TrainedClassifier:
    path = Path(path)
    if not path.is_file():
        raise DataError(f"classifier model file not found: {path}")
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataError(f"corrupt classifier model file {path}: {exc}") from None
    if obj.get("format") != "ovcp-classifier":
        raise DataError(f"{path} is not a classifier model file")
    return TrainedClassifier(
        algorithm=obj["algorithm"],
        feature_mean=np.array(obj["feature_mean"], dtype=np.float64),
        feature_std=np.array(obj["feature_std"], dtype=np.float64),
        params=_params_from_json(obj["algorithm"], obj["params"]),
        hyperparams=obj["hyperparams"],
        seed=obj["seed"],
    )
