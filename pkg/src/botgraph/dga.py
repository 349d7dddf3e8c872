"""Linear max-margin classifier for DGA domain names.

Trained with seeded stochastic subgradient descent on the primal
L2-regularized hinge loss. The solver works on z-scored features and folds
the scaling back into the weights, so a saved model is just eleven weights
and a bias over raw domain features.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple, Optional, Sequence, Union

import numpy as np

from .features import DOMAIN_DIM, DOMAIN_FEATURE_NAMES, DomainFeatures, extract_domain_features

log = logging.getLogger(__name__)

MODEL_SCHEMA_VERSION = 1
DGA = "dga"
BENIGN = "benign"


class ModelError(ValueError):
    pass


class TrainingError(ValueError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    regularization: float = 1e-4
    epochs: int = 30
    learning_rate: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if not self.regularization > 0:
            raise ValueError("regularization must be positive")
        if not (isinstance(self.epochs, int) and self.epochs > 0):
            raise ValueError("epochs must be a positive integer")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")


@dataclass(frozen=True)
class LinearModel:
    weights: tuple[float, ...]
    bias: float
    schema_version: int = MODEL_SCHEMA_VERSION
    trained_on: tuple[int, int] = (0, 0)  # (positive/DGA, negative/benign)

    def __post_init__(self):
        if len(self.weights) != DOMAIN_DIM:
            raise ModelError(f"expected {DOMAIN_DIM} weights, got {len(self.weights)}")
        if not all(math.isfinite(w) for w in self.weights) or not math.isfinite(self.bias):
            raise ModelError("non-finite model parameters")


class Prediction(NamedTuple):
    label: str
    score: float


FeatureInput = Union[DomainFeatures, Sequence[float], np.ndarray]


def _as_matrix(samples: Sequence[FeatureInput]) -> np.ndarray:
    rows = [s.values() if isinstance(s, DomainFeatures) else s for s in samples]
    X = np.asarray(rows, dtype=float)
    if X.ndim != 2 or X.shape[1] != DOMAIN_DIM:
        raise ValueError(f"samples must be n x {DOMAIN_DIM}")
    return X


def hinge_objective(w: np.ndarray, b: float, X: np.ndarray, y: np.ndarray, lam: float) -> float:
    """lam/2 * |w|^2 + mean(max(0, 1 - y (Xw + b)))."""
    margins = y * (X @ w + b)
    return float(0.5 * lam * (w @ w) + np.maximum(0.0, 1.0 - margins).mean())


class SolverResult(NamedTuple):
    weights: np.ndarray
    bias: float
    history: list  # objective of the retained iterate after each epoch


def fit_hinge_sgd(X: np.ndarray, y: np.ndarray, cfg: TrainConfig) -> SolverResult:
    """Seeded SGD over shuffled epochs; bias is not regularized.

    Step size decays as lr / (1 + lr * lam * t). The iterate with the lowest
    full objective seen at an epoch boundary is retained, which keeps the
    reported objective non-increasing.
    """
    n, d = X.shape
    lam, lr = cfg.regularization, cfg.learning_rate
    rng = np.random.default_rng(cfg.seed)
    w = np.zeros(d)
    b = 0.0
    best_w, best_b = w.copy(), b
    best_obj = hinge_objective(w, b, X, y, lam)
    history = []
    t = 0
    for _ in range(cfg.epochs):
        for i in rng.permutation(n):
            t += 1
            eta = lr / (1.0 + lr * lam * t)
            margin = y[i] * (X[i] @ w + b)
            w *= 1.0 - eta * lam
            if margin < 1.0:
                w += (eta * y[i]) * X[i]
                b += eta * y[i]
        obj = hinge_objective(w, b, X, y, lam)
        if obj < best_obj:
            best_obj, best_w, best_b = obj, w.copy(), b
        history.append(best_obj)
    return SolverResult(best_w, float(best_b), history)


def standardize(X: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    std[std == 0] = 1.0
    return (X - mean) / std, mean, std


def train_linear_svm(
    samples: Sequence[FeatureInput], labels: Sequence[int], cfg: TrainConfig = TrainConfig()
) -> LinearModel:
    """Train on domain features with labels +1 (DGA) / -1 (benign)."""
    X = _as_matrix(samples)
    y = np.asarray(labels, dtype=float)
    if y.shape != (X.shape[0],):
        raise TrainingError("samples and labels differ in length")
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise TrainingError("labels must be +1 or -1")
    n_pos = int((y > 0).sum())
    n_neg = int((y < 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise TrainingError("degenerate training set")

    Z, mean, std = standardize(X)
    result = fit_hinge_sgd(Z, y, cfg)
    # w.(x - mean)/std + b  ==  (w/std).x + (b - sum(w*mean/std))
    w_raw = result.weights / std
    b_raw = result.bias - float(w_raw @ mean)
    log.debug("trained on %d DGA / %d benign, final objective %.6f",
              n_pos, n_neg, result.history[-1])
    return LinearModel(
        weights=tuple(float(v) for v in w_raw),
        bias=b_raw,
        trained_on=(n_pos, n_neg),
    )


def _feature_vector(f: FeatureInput) -> np.ndarray:
    x = np.asarray(f.values() if isinstance(f, DomainFeatures) else f, dtype=float)
    if x.shape != (DOMAIN_DIM,):
        raise ModelError(f"feature schema mismatch: expected {DOMAIN_DIM} values")
    return x


def decision_score(m: LinearModel, f: FeatureInput) -> float:
    return float(np.asarray(m.weights) @ _feature_vector(f) + m.bias)


def predict(m: LinearModel, f: FeatureInput) -> Prediction:
    """Label DGA iff w.x + b > 0; a zero score is benign."""
    score = decision_score(m, f)
    return Prediction(DGA if score > 0 else BENIGN, score)


def classify_domain(m: LinearModel, domain: str, suffixes=None) -> Prediction:
    return predict(m, extract_domain_features(domain, suffixes))


@dataclass(frozen=True)
class EvalReport:
    true_pos: int
    false_pos: int
    true_neg: int
    false_neg: int
    precision: Optional[float]
    recall: Optional[float]
    f1: Optional[float]
    accuracy: float

    @property
    def total(self) -> int:
        return self.true_pos + self.false_pos + self.true_neg + self.false_neg


def report_from_counts(tp: int, fp: int, tn: int, fn: int) -> EvalReport:
    total = tp + fp + tn + fn
    if total == 0:
        raise ValueError("empty evaluation")
    precision = tp / (tp + fp) if tp + fp else None
    recall = tp / (tp + fn) if tp + fn else None
    f1 = 2 * tp / (2 * tp + fp + fn) if 2 * tp + fp + fn else None
    return EvalReport(tp, fp, tn, fn, precision, recall, f1, (tp + tn) / total)


def evaluate(m: LinearModel, samples: Sequence[FeatureInput], labels: Sequence[int]) -> EvalReport:
    if len(samples) != len(labels):
        raise ValueError("samples and labels differ in length")
    if not samples:
        raise ValueError("empty evaluation")
    tp = fp = tn = fn = 0
    for f, label in zip(samples, labels):
        predicted_dga = predict(m, f).label == DGA
        if label > 0:
            tp += predicted_dga
            fn += not predicted_dga
        else:
            fp += predicted_dga
            tn += not predicted_dga
    return report_from_counts(tp, fp, tn, fn)


def save_model(m: LinearModel, path) -> None:
    doc = {
        "schemaVersion": m.schema_version,
        "kind": "linear-svm",
        "features": list(DOMAIN_FEATURE_NAMES),
        "weights": list(m.weights),
        "bias": m.bias,
        "trainedOn": {"positive": m.trained_on[0], "negative": m.trained_on[1]},
    }
    Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def load_model(path) -> LinearModel:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (json.JSONDecodeError, UnicodeDecodeError):
        raise ModelError("corrupt model") from None
    if not isinstance(doc, dict) or "schemaVersion" not in doc:
        raise ModelError("corrupt model")
    if doc["schemaVersion"] != MODEL_SCHEMA_VERSION:
        raise ModelError(f"unsupported version {doc['schemaVersion']!r}")
    try:
        counts = doc["trainedOn"]
        return LinearModel(
            weights=tuple(float(w) for w in doc["weights"]),
            bias=float(doc["bias"]),
            trained_on=(int(counts["positive"]), int(counts["negative"])),
        )
    except (KeyError, TypeError, ValueError):
        raise ModelError("corrupt model") from None
