"""Binary classifiers over feature vectors: a CART-style decision tree that
labels candidates True/False, and a logistic regression that scores them.

Both trainers are deterministic given the data order.  Class imbalance
(many False candidates per True one) is handled with inverse-frequency
example weights.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .features import FeatureVector

MODEL_FORMAT_VERSION = 1
N_FEATURES = 5

_GAIN_EPS = 1e-12


class ModelError(ValueError):
    """Raised for untrainable data or malformed model files."""


@dataclass(frozen=True, slots=True)
class LabeledExample:
    features: FeatureVector
    label: bool


def _as_arrays(data: Sequence[LabeledExample]) -> tuple[np.ndarray, np.ndarray]:
    if not data:
        raise ModelError("no training examples")
    X = np.array([ex.features.as_tuple() for ex in data], dtype=np.float64)
    y = np.array([ex.label for ex in data], dtype=bool)
    return X, y


def balanced_weights(y: np.ndarray) -> np.ndarray:
    """Inverse-frequency weights; a single-class set gets uniform weights."""
    n = len(y)
    n_pos = int(y.sum())
    n_neg = n - n_pos
    if n_pos == 0 or n_neg == 0:
        return np.ones(n)
    w = np.empty(n)
    w[y] = n / (2.0 * n_pos)
    w[~y] = n / (2.0 * n_neg)
    return w


# ---------------------------------------------------------------------------
# Decision tree
# ---------------------------------------------------------------------------

@dataclass
class TreeNode:
    feature: int | None = None
    threshold: float | None = None
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None
    label: bool | None = None
    purity: float | None = None

    def is_leaf(self) -> bool:
        return self.feature is None


@dataclass
class DecisionTreeModel:
    root: TreeNode
    max_depth: int | None
    min_leaf: int

    def predict(self, v: FeatureVector) -> bool:
        x = v.as_tuple()
        node = self.root
        while not node.is_leaf():
            # Values exactly at the threshold take the <= branch.
            node = node.left if x[node.feature] <= node.threshold else node.right
        return bool(node.label)

    def depth(self) -> int:
        def walk(node: TreeNode) -> int:
            if node.is_leaf():
                return 0
            return 1 + max(walk(node.left), walk(node.right))

        return walk(self.root)


def _gini(weight_pos: float, weight_neg: float) -> float:
    total = weight_pos + weight_neg
    if total <= 0.0:
        return 0.0
    p = weight_pos / total
    return 1.0 - p * p - (1.0 - p) * (1.0 - p)


def _leaf(y: np.ndarray, w: np.ndarray) -> TreeNode:
    weight_pos = float(w[y].sum())
    weight_neg = float(w[~y].sum())
    total = weight_pos + weight_neg
    label = weight_pos > weight_neg  # exact tie predicts False
    purity = (max(weight_pos, weight_neg) / total) if total > 0 else 1.0
    return TreeNode(label=label, purity=purity)


def _split_candidates(column: np.ndarray) -> np.ndarray:
    values = np.unique(column)
    if len(values) < 2:
        return np.empty(0)
    return (values[:-1] + values[1:]) / 2.0


def _best_split(
    X: np.ndarray, y: np.ndarray, w: np.ndarray, min_leaf: int
) -> tuple[int, float] | None:
    parent = _gini(float(w[y].sum()), float(w[~y].sum()))
    total_w = float(w.sum())
    best: tuple[float, int, float] | None = None
    fallback: tuple[int, float] | None = None
    for f in range(X.shape[1]):
        column = X[:, f]
        for t in _split_candidates(column):
            left = column <= t
            n_left = int(left.sum())
            if n_left < min_leaf or len(y) - n_left < min_leaf:
                continue
            if fallback is None:
                fallback = (f, float(t))
            wl, wr = w[left], w[~left]
            yl, yr = y[left], y[~left]
            child = (
                float(wl.sum()) * _gini(float(wl[yl].sum()), float(wl[~yl].sum()))
                + float(wr.sum()) * _gini(float(wr[yr].sum()), float(wr[~yr].sum()))
            ) / total_w
            gain = parent - child
            # Strict improvement keeps the earliest (feature, threshold) on ties.
            if gain > _GAIN_EPS and (best is None or gain > best[0] + _GAIN_EPS):
                best = (gain, f, float(t))
    if best is not None:
        return best[1], best[2]
    # No impurity-reducing split exists (an XOR-like node).  If the node is
    # impure, force the first valid separating split so consistent data can
    # still be driven to pure leaves.
    if fallback is not None and 0 < int(y.sum()) < len(y):
        return fallback
    return None


def train_decision_tree(
    data: Sequence[LabeledExample],
    max_depth: int | None = 8,
    min_leaf: int = 5,
    class_weights: bool = True,
) -> DecisionTreeModel:
    """Greedy Gini-impurity CART over the five features.

    Single-class data yields a single leaf.  Ties in gain are broken toward
    the lowest feature index, then the lowest threshold.
    """
    X, y = _as_arrays(data)
    w = balanced_weights(y) if class_weights else np.ones(len(y))

    def build(idx: np.ndarray, depth: int) -> TreeNode:
        sub_y, sub_w = y[idx], w[idx]
        if (
            sub_y.all()
            or not sub_y.any()
            or (max_depth is not None and depth >= max_depth)
            or len(idx) < 2 * min_leaf
        ):
            return _leaf(sub_y, sub_w)
        split = _best_split(X[idx], sub_y, sub_w, min_leaf)
        if split is None:
            return _leaf(sub_y, sub_w)
        f, t = split
        left_mask = X[idx, f] <= t
        return TreeNode(
            feature=f,
            threshold=t,
            left=build(idx[left_mask], depth + 1),
            right=build(idx[~left_mask], depth + 1),
        )

    root = build(np.arange(len(y)), 0)
    return DecisionTreeModel(root=root, max_depth=max_depth, min_leaf=min_leaf)


def dt_predict(model: DecisionTreeModel, v: FeatureVector) -> bool:
    return model.predict(v)


def _node_to_json(node: TreeNode) -> dict:
    if node.is_leaf():
        return {"label": node.label, "purity": node.purity}
    return {
        "feature": node.feature,
        "threshold": node.threshold,
        "left": _node_to_json(node.left),
        "right": _node_to_json(node.right),
    }


def _node_from_json(obj: dict) -> TreeNode:
    if "label" in obj:
        return TreeNode(label=bool(obj["label"]), purity=float(obj["purity"]))
    return TreeNode(
        feature=int(obj["feature"]),
        threshold=float(obj["threshold"]),
        left=_node_from_json(obj["left"]),
        right=_node_from_json(obj["right"]),
    )


def save_decision_tree(model: DecisionTreeModel, path: str | Path) -> None:
    payload = {
        "format_version": MODEL_FORMAT_VERSION,
        "kind": "decision_tree",
        "max_depth": model.max_depth,
        "min_leaf": model.min_leaf,
        "root": _node_to_json(model.root),
    }
    Path(path).write_text(
        json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )


def load_decision_tree(path: str | Path) -> DecisionTreeModel:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    if payload.get("kind") != "decision_tree":
        raise ModelError(f"{path}: not a decision tree model file")
    if payload.get("format_version") != MODEL_FORMAT_VERSION:
        raise ModelError(f"{path}: unsupported format version")
    return DecisionTreeModel(
        root=_node_from_json(payload["root"]),
        max_depth=payload.get("max_depth"),
        min_leaf=int(payload.get("min_leaf", 1)),
    )


# ---------------------------------------------------------------------------
# Logistic regression
# ---------------------------------------------------------------------------

@dataclass
class LogisticRegressionModel:
    weights: np.ndarray  # shape (5,)
    bias: float
    loss_history: list[float] = field(default_factory=list, repr=False)

    def score(self, v: FeatureVector) -> float:
        z = float(np.dot(self.weights, v.as_tuple())) + self.bias
        # Clamp away from the endpoints so scores stay strictly inside (0, 1)
        # even when the sigmoid saturates in float64.
        return min(max(float(_sigmoid(z)), 1e-12), 1.0 - 1e-12)


def _sigmoid(z: float | np.ndarray):
    # Branch on the sign so neither exp() overflows.
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    positive = z >= 0
    out[positive] = 1.0 / (1.0 + np.exp(-z[positive]))
    exp_z = np.exp(z[~positive])
    out[~positive] = exp_z / (1.0 + exp_z)
    return out if out.ndim else float(out)


def _loss_and_gradient(
    weights: np.ndarray,
    bias: float,
    X: np.ndarray,
    y01: np.ndarray,
    w: np.ndarray,
    l2: float,
) -> tuple[float, np.ndarray, float]:
    z = X @ weights + bias
    p = _sigmoid(z)
    # Log-loss written against the logits to stay finite for saturated scores.
    ce = np.logaddexp(0.0, z) - y01 * z
    total_w = w.sum()
    loss = float((w * ce).sum() / total_w) + 0.5 * l2 * float(weights @ weights)
    residual = w * (p - y01)
    grad_w = X.T @ residual / total_w + l2 * weights
    grad_b = float(residual.sum() / total_w)
    return loss, grad_w, grad_b


def train_logistic_regression(
    data: Sequence[LabeledExample],
    learning_rate: float = 0.1,
    epochs: int = 500,
    l2: float = 1e-4,
    class_weights: bool = True,
) -> LogisticRegressionModel:
    """Full-batch gradient descent on L2-regularized weighted log-loss.

    Weights start at zero (so zero epochs scores everything 0.5).  Each epoch
    halves the step until the loss does not increase, which keeps the loss
    history monotone non-increasing.
    """
    X, y = _as_arrays(data)
    if y.all() or not y.any():
        raise ModelError("logistic regression needs both labels in the training data")
    y01 = y.astype(np.float64)
    w = balanced_weights(y) if class_weights else np.ones(len(y))
    weights = np.zeros(X.shape[1])
    bias = 0.0
    loss, grad_w, grad_b = _loss_and_gradient(weights, bias, X, y01, w, l2)
    history = [loss]
    for _ in range(epochs):
        step = learning_rate
        improved = False
        for _ in range(60):
            next_weights = weights - step * grad_w
            next_bias = bias - step * grad_b
            next_loss, next_gw, next_gb = _loss_and_gradient(
                next_weights, next_bias, X, y01, w, l2
            )
            if next_loss <= loss + 1e-15:
                improved = True
                break
            step *= 0.5
        if not improved:
            break
        weights, bias, loss = next_weights, next_bias, next_loss
        grad_w, grad_b = next_gw, next_gb
        history.append(loss)
    return LogisticRegressionModel(weights=weights, bias=bias, loss_history=history)


def lr_score(model: LogisticRegressionModel, v: FeatureVector) -> float:
    return model.score(v)


def lr_loss(
    model: LogisticRegressionModel,
    data: Sequence[LabeledExample],
    l2: float = 0.0,
    class_weights: bool = False,
) -> float:
    X, y = _as_arrays(data)
    w = balanced_weights(y) if class_weights else np.ones(len(y))
    loss, _, _ = _loss_and_gradient(model.weights, model.bias, X, y.astype(float), w, l2)
    return loss


def lr_gradient(
    model: LogisticRegressionModel,
    data: Sequence[LabeledExample],
    l2: float = 0.0,
    class_weights: bool = False,
) -> tuple[np.ndarray, float]:
    X, y = _as_arrays(data)
    w = balanced_weights(y) if class_weights else np.ones(len(y))
    _, grad_w, grad_b = _loss_and_gradient(model.weights, model.bias, X, y.astype(float), w, l2)
    return grad_w, grad_b


def gradient_check(
    model: LogisticRegressionModel,
    data: Sequence[LabeledExample],
    l2: float = 0.0,
    class_weights: bool = False,
    step: float = 1e-6,
) -> float:
    """Max relative error between the analytic log-loss gradient and central
    finite differences; should sit well below 1e-5 for healthy code."""
    grad_w, grad_b = lr_gradient(model, data, l2=l2, class_weights=class_weights)
    analytic = np.append(grad_w, grad_b)
    numeric = np.empty_like(analytic)
    for i in range(len(analytic)):
        plus = LogisticRegressionModel(model.weights.copy(), model.bias)
        minus = LogisticRegressionModel(model.weights.copy(), model.bias)
        if i < len(model.weights):
            plus.weights[i] += step
            minus.weights[i] -= step
        else:
            plus.bias += step
            minus.bias -= step
        numeric[i] = (
            lr_loss(plus, data, l2=l2, class_weights=class_weights)
            - lr_loss(minus, data, l2=l2, class_weights=class_weights)
        ) / (2.0 * step)
    denom = np.maximum(np.abs(analytic) + np.abs(numeric), 1e-8)
    return float(np.max(np.abs(analytic - numeric) / denom))


def save_logistic_regression(model: LogisticRegressionModel, path: str | Path) -> None:
    payload = {
        "format_version": MODEL_FORMAT_VERSION,
        "kind": "logistic_regression",
        "weights": [float(x) for x in model.weights],
        "bias": float(model.bias),
    }
    Path(path).write_text(
        json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )


def load_logistic_regression(path: str | Path) -> LogisticRegressionModel:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    if payload.get("kind") != "logistic_regression":
        raise ModelError(f"{path}: not a logistic regression model file")
    if payload.get("format_version") != MODEL_FORMAT_VERSION:
        raise ModelError(f"{path}: unsupported format version")
    weights = np.array(payload["weights"], dtype=np.float64)
    if not np.all(np.isfinite(weights)) or not math.isfinite(payload["bias"]):
        raise ModelError(f"{path}: non-finite model parameters")
    return LogisticRegressionModel(weights=weights, bias=float(payload["bias"]))
