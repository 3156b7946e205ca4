"""Random forest classifier: gini trees on bootstrap resamples.

Trees are grown depth-first with axis-aligned threshold splits. Candidate
thresholds are midpoints between consecutive distinct values; among equally
good splits the lowest feature index wins, then the lowest threshold.
Every tree draws its randomness from ``(seed, tree_index)`` so training is
reproducible and independent of how trees are distributed over workers.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numba
import numpy as np

MODEL_FORMAT = "vasim.forest"
MODEL_VERSION = 1
# Relative slack when comparing split scores, so that splits which are equal
# in exact arithmetic resolve by index rather than by rounding noise.
SCORE_RTOL = 1e-12


@dataclass(frozen=True)
class ForestParams:
    bootstrap: bool = True
    criterion: str = "gini"
    max_depth: int = 10
    n_estimators: int = 200
    min_leaf: int = 1
    features_per_split: str = "sqrt"

    def __post_init__(self):
        if self.n_estimators < 1:
            raise ValueError("n_estimators must be >= 1")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if self.min_leaf < 1:
            raise ValueError("min_leaf must be >= 1")
        if self.criterion != "gini":
            raise ValueError("only the gini criterion is supported")
        if self.features_per_split not in ("sqrt", "all"):
            raise ValueError("features_per_split must be 'sqrt' or 'all'")

    def n_split_features(self, n_features: int) -> int:
        if self.features_per_split == "all":
            return n_features
        return max(1, int(math.sqrt(n_features)))


@dataclass(frozen=True, eq=False)
class Tree:
    """Flat binary tree; ``feature[i] == -1`` marks a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    counts: np.ndarray  # (n_nodes, n_classes)

    @property
    def n_nodes(self) -> int:
        return self.feature.size

    def depth(self) -> int:
        depth = np.zeros(self.n_nodes, dtype=int)
        for i in range(self.n_nodes):
            if self.feature[i] >= 0:
                depth[self.left[i]] = depth[i] + 1
                depth[self.right[i]] = depth[i] + 1
        return int(depth.max())

    def leaf_index(self, x) -> int:
        node = 0
        while self.feature[node] >= 0:
            node = self.left[node] if x[self.feature[node]] <= self.threshold[node] else self.right[node]
        return node

    def predict_proba_one(self, x) -> np.ndarray:
        c = self.counts[self.leaf_index(x)]
        return c / c.sum()

    def same_structure(self, other: "Tree") -> bool:
        return all(np.array_equal(getattr(self, f), getattr(other, f))
                   for f in ("feature", "threshold", "left", "right", "counts"))


@numba.njit(cache=True)
def _scan_feature(X, y, idx, start, end, f, n_classes, min_leaf, best, tol):
    """Best cut of rows ``idx[start:end]`` on feature ``f`` that beats ``best``.

    Returns ``(score, threshold)``; score is ``-inf`` when nothing beats
    ``best``. Weighted child gini impurity is ``n - score``.
    """
    n = end - start
    vals = np.empty(n)
    labels = np.empty(n, dtype=np.int64)
    for i in range(n):
        vals[i] = X[idx[start + i], f]
        labels[i] = y[idx[start + i]]
    order = np.argsort(vals)
    total = np.zeros(n_classes)
    for i in range(n):
        total[labels[i]] += 1.0
    left = np.zeros(n_classes)
    found = -np.inf
    thr = 0.0
    bar = best + tol * abs(best) if best > -np.inf else -np.inf
    for i in range(n - 1):
        left[labels[order[i]]] += 1.0
        lo = vals[order[i]]
        hi = vals[order[i + 1]]
        n_left = i + 1
        n_right = n - n_left
        if hi <= lo or n_left < min_leaf or n_right < min_leaf:
            continue
        sl = 0.0
        sr = 0.0
        for k in range(n_classes):
            r = total[k] - left[k]
            sl += left[k] * left[k]
            sr += r * r
        score = sl / n_left + sr / n_right
        if score > bar:
            bar = score + tol * abs(score)
            found = score
            thr = lo + (hi - lo) / 2.0
            if not (lo <= thr and thr < hi):
                thr = lo
    return found, thr


@numba.njit(cache=True)
def _grow(X, y, n_classes, max_depth, min_leaf, m, keys, tol):
    """Depth-first growth; node ``i`` samples features from ``keys[i]``."""
    n, d = X.shape
    cap = keys.shape[0]
    feature = np.full(cap, -1, dtype=np.int64)
    threshold = np.zeros(cap)
    left = np.full(cap, -1, dtype=np.int64)
    right = np.full(cap, -1, dtype=np.int64)
    counts = np.zeros((cap, n_classes))
    idx = np.arange(n)
    for i in range(n):
        counts[0, y[i]] += 1.0
    stack = np.empty((cap, 4), dtype=np.int64)  # node, start, end, depth
    stack[0, 0] = 0
    stack[0, 1] = 0
    stack[0, 2] = n
    stack[0, 3] = 0
    top = 1
    n_nodes = 1
    all_feats = np.arange(d)
    while top > 0:
        top -= 1
        node = stack[top, 0]
        start = stack[top, 1]
        end = stack[top, 2]
        depth = stack[top, 3]
        pure = 0
        for k in range(n_classes):
            if counts[node, k] > 0:
                pure += 1
        if depth >= max_depth or end - start < 2 * min_leaf or pure <= 1:
            continue
        if m < d:
            feats = np.sort(np.argsort(keys[node])[:m])
        else:
            feats = all_feats
        best = -np.inf
        best_f = -1
        best_t = 0.0
        for attempt in range(2):
            for f in feats:
                score, thr = _scan_feature(X, y, idx, start, end, f, n_classes, min_leaf, best, tol)
                if score > -np.inf:
                    best = score
                    best_f = f
                    best_t = thr
            if best_f >= 0 or feats.size == d:
                break
            feats = all_feats
        if best_f < 0:
            continue
        # Partition rows in place: left block first.
        lo = start
        hi = end - 1
        while lo <= hi:
            if X[idx[lo], best_f] <= best_t:
                lo += 1
            else:
                tmp = idx[lo]
                idx[lo] = idx[hi]
                idx[hi] = tmp
                hi -= 1
        li = n_nodes
        ri = n_nodes + 1
        n_nodes += 2
        for i in range(start, lo):
            counts[li, y[idx[i]]] += 1.0
        for i in range(lo, end):
            counts[ri, y[idx[i]]] += 1.0
        feature[node] = best_f
        threshold[node] = best_t
        left[node] = li
        right[node] = ri
        stack[top, 0] = ri
        stack[top, 1] = lo
        stack[top, 2] = end
        stack[top, 3] = depth + 1
        stack[top + 1, 0] = li
        stack[top + 1, 1] = start
        stack[top + 1, 2] = lo
        stack[top + 1, 3] = depth + 1
        top += 2
    return (feature[:n_nodes], threshold[:n_nodes], left[:n_nodes], right[:n_nodes],
            counts[:n_nodes])


def build_tree(X: np.ndarray, y: np.ndarray, n_classes: int, params: ForestParams,
               rng: np.random.Generator | None) -> Tree:
    """Grow one tree on rows ``X`` with integer labels ``y``."""
    X = np.ascontiguousarray(X, dtype=float)
    y = np.ascontiguousarray(y, dtype=np.int64)
    n, d = X.shape
    m = params.n_split_features(d)
    cap = min(2 ** (params.max_depth + 1) - 1, 2 * n - 1)
    if m < d and rng is not None:
        keys = rng.random((cap, d))
    else:
        keys = np.zeros((cap, d))
        m = d
    parts = _grow(X, y, n_classes, params.max_depth, params.min_leaf, m, keys, SCORE_RTOL)
    return Tree(*parts)


def _tree_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng([int(seed) & 0xFFFFFFFFFFFFFFFF, index])


def _fit_trees(X, y, n_classes, params, seed, indices):
    out = []
    n = X.shape[0]
    for t in indices:
        rng = _tree_rng(seed, t)
        rows = rng.integers(0, n, size=n) if params.bootstrap else np.arange(n)
        out.append((build_tree(X[rows], y[rows], n_classes, params, rng), rows))
    return out


@dataclass(frozen=True, eq=False)
class ForestModel:
    trees: tuple[Tree, ...]
    class_order: tuple[str, ...]
    params: ForestParams
    train_seed: int
    n_features: int
    feature_names: tuple[str, ...] = ()
    oob_accuracy: float | None = None
    _packed: dict = field(default=None, repr=False, compare=False)

    def _pack(self):
        if self._packed is None:
            offsets = np.cumsum([0] + [t.n_nodes for t in self.trees[:-1]])
            feature = np.concatenate([t.feature for t in self.trees])
            leaf = feature < 0
            left = np.concatenate([np.where(t.left >= 0, t.left + o, -1)
                                   for t, o in zip(self.trees, offsets)])
            right = np.concatenate([np.where(t.right >= 0, t.right + o, -1)
                                    for t, o in zip(self.trees, offsets)])
            counts = np.concatenate([t.counts for t in self.trees])
            frac = counts / counts.sum(axis=1, keepdims=True)
            packed = dict(offsets=offsets, feature=np.where(leaf, 0, feature), leaf=leaf,
                          threshold=np.concatenate([t.threshold for t in self.trees]),
                          left=np.where(leaf, np.arange(leaf.size), left),
                          right=np.where(leaf, np.arange(leaf.size), right),
                          frac=frac,
                          depth=max(t.depth() for t in self.trees))
            object.__setattr__(self, "_packed", packed)
        return self._packed

    def leaf_nodes(self, X) -> np.ndarray:
        """Global leaf index reached in every tree, shape ``(n_samples, n_trees)``."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.n_features:
            raise ValueError(
                f"dimension mismatch: model expects {self.n_features} features, got {X.shape[1]}")
        p = self._pack()
        node = np.broadcast_to(p["offsets"], (X.shape[0], len(self.trees))).copy()
        rows = np.arange(X.shape[0])[:, None]
        for _ in range(p["depth"]):
            go_left = X[rows, p["feature"][node]] <= p["threshold"][node]
            node = np.where(go_left, p["left"][node], p["right"][node])
        return node

    def predict_proba(self, X) -> np.ndarray:
        """Mean over trees of the leaf class fractions, ``(n_samples, n_classes)``."""
        frac = self._pack()["frac"][self.leaf_nodes(X)]
        return frac.mean(axis=1)

    def predict(self, X) -> list[str]:
        proba = self.predict_proba(X)
        return [self.class_order[i] for i in np.argmax(proba, axis=1)]

    def class_index(self, label: str) -> int:
        try:
            return self.class_order.index(label)
        except ValueError:
            raise ValueError(f"class {label!r} not in model classes {self.class_order}") from None

    # serialization

    def to_json(self) -> dict:
        return {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "class_order": list(self.class_order),
            "params": asdict(self.params),
            "train_seed": self.train_seed,
            "n_features": self.n_features,
            "feature_names": list(self.feature_names),
            "oob_accuracy": self.oob_accuracy,
            "trees": [
                {
                    "feature": t.feature.tolist(),
                    "threshold": t.threshold.tolist(),
                    "left": t.left.tolist(),
                    "right": t.right.tolist(),
                    "counts": t.counts.astype(int).tolist(),
                }
                for t in self.trees
            ],
        }

    @classmethod
    def from_json(cls, data: dict) -> "ForestModel":
        if data.get("format") != MODEL_FORMAT or data.get("version") != MODEL_VERSION:
            raise ValueError("not a vasim forest model (format/version mismatch)")
        k = len(data["class_order"])
        trees = tuple(
            Tree(np.array(t["feature"], dtype=np.int64), np.array(t["threshold"], dtype=float),
                 np.array(t["left"], dtype=np.int64), np.array(t["right"], dtype=np.int64),
                 np.array(t["counts"], dtype=float).reshape(-1, k))
            for t in data["trees"]
        )
        return cls(trees, tuple(data["class_order"]), ForestParams(**data["params"]),
                   data["train_seed"], data["n_features"], tuple(data.get("feature_names", ())),
                   data.get("oob_accuracy"))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), separators=(",", ":")) + "\n")

    @classmethod
    def load(cls, path) -> "ForestModel":
        return cls.from_json(json.loads(Path(path).read_text()))


def _chunks(n: int, parts: int) -> list[list[int]]:
    parts = max(1, min(parts, n))
    return [list(range(i, n, parts)) for i in range(parts)]


def train(X, y: Sequence, params: ForestParams = ForestParams(), seed: int = 0, *,
          class_order: Sequence[str] | None = None, feature_names: Sequence[str] = (),
          jobs: int = 1) -> ForestModel:
    """Fit a forest. ``class_order`` defaults to the sorted distinct labels."""
    X = np.asarray(X, dtype=float)
    labels = list(y)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("empty dataset")
    if len(labels) != X.shape[0]:
        raise ValueError("X and y lengths differ")
    classes = tuple(class_order) if class_order is not None else tuple(sorted(set(labels)))
    lookup = {c: i for i, c in enumerate(classes)}
    try:
        yi = np.array([lookup[v] for v in labels], dtype=np.int64)
    except KeyError as exc:
        raise ValueError(f"label {exc.args[0]!r} not in class_order") from None

    n_trees = params.n_estimators
    if jobs > 1 and n_trees > 1:
        chunks = _chunks(n_trees, jobs)
        with ProcessPoolExecutor(max_workers=len(chunks)) as pool:
            parts = list(pool.map(_fit_trees, *zip(*[(X, yi, len(classes), params, seed, c)
                                                     for c in chunks])))
        fitted = [None] * n_trees
        for chunk, part in zip(chunks, parts):
            for t, res in zip(chunk, part):
                fitted[t] = res
    else:
        fitted = _fit_trees(X, yi, len(classes), params, seed, range(n_trees))

    trees = tuple(t for t, _ in fitted)
    model = ForestModel(trees, classes, params, int(seed), X.shape[1], tuple(feature_names))
    if params.bootstrap:
        object.__setattr__(model, "oob_accuracy", _oob_accuracy(model, X, yi, fitted))
    return model


def _oob_accuracy(model: ForestModel, X, yi, fitted) -> float | None:
    in_bag = np.zeros((X.shape[0], len(fitted)), dtype=bool)
    for t, (_, rows) in enumerate(fitted):
        in_bag[rows, t] = True
    frac = model._pack()["frac"][model.leaf_nodes(X)]  # (n, T, K)
    votes = np.where(in_bag[:, :, None], 0.0, frac).sum(axis=1)
    seen = (~in_bag).any(axis=1)
    if not seen.any():
        return None
    return float(np.mean(np.argmax(votes[seen], axis=1) == yi[seen]))


# Evaluation ---------------------------------------------------------------

@dataclass(frozen=True)
class ClassMetrics:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass(frozen=True)
class EvalMetrics:
    class_order: tuple[str, ...]
    per_class: dict[str, ClassMetrics]
    confusion: tuple[tuple[int, ...], ...]  # rows: true class, columns: predicted
    accuracy: float
    macro_precision: float
    macro_recall: float
    macro_f1: float
    weighted_precision: float
    weighted_recall: float
    weighted_f1: float
    stratified: bool = True
    warning: str | None = None

    def to_json(self) -> dict:
        d = asdict(self)
        d["class_order"] = list(self.class_order)
        d["confusion"] = [list(r) for r in self.confusion]
        return d


def _f1(p: float, r: float) -> float:
    return 2 * p * r / (p + r) if p + r > 0 else 0.0


def metrics(predictions: Sequence[str], labels: Sequence[str],
            class_order: Sequence[str] | None = None, *, stratified: bool = True,
            warning: str | None = None) -> EvalMetrics:
    """Per-class and averaged precision / recall / F1 from paired labels."""
    predictions, labels = list(predictions), list(labels)
    if len(predictions) != len(labels):
        raise ValueError("predictions and labels differ in length")
    if not labels:
        raise ValueError("empty input")
    classes = tuple(class_order) if class_order is not None else tuple(
        sorted(set(labels) | set(predictions)))
    lookup = {c: i for i, c in enumerate(classes)}
    conf = np.zeros((len(classes), len(classes)), dtype=int)
    for p, t in zip(predictions, labels):
        conf[lookup[t], lookup[p]] += 1
    per = {}
    for i, c in enumerate(classes):
        tp = conf[i, i]
        pred_pos = conf[:, i].sum()
        support = conf[i, :].sum()
        precision = tp / pred_pos if pred_pos else 0.0
        recall = tp / support if support else 0.0
        per[c] = ClassMetrics(float(precision), float(recall), float(_f1(precision, recall)), int(support))
    supports = np.array([per[c].support for c in classes], dtype=float)
    w = supports / supports.sum()

    def avg(attr, weights=None):
        vals = np.array([getattr(per[c], attr) for c in classes])
        return float(vals.mean() if weights is None else (vals * weights).sum())

    return EvalMetrics(
        classes, per, tuple(tuple(int(v) for v in row) for row in conf),
        float(np.trace(conf) / conf.sum()),
        avg("precision"), avg("recall"), avg("f1"),
        avg("precision", w), avg("recall", w), avg("f1", w),
        stratified, warning,
    )


def kfold_assignments(labels: Sequence[str], k: int, seed: int) -> tuple[np.ndarray, bool]:
    """Fold index per row, stratified by label when every class has >= k rows."""
    labels = list(labels)
    rng = np.random.default_rng([int(seed) & 0xFFFFFFFFFFFFFFFF, 0xCF])
    folds = np.empty(len(labels), dtype=int)
    classes = sorted(set(labels))
    stratified = all(labels.count(c) >= k for c in classes)
    if stratified:
        offset = 0
        for c in classes:
            idx = np.array([i for i, v in enumerate(labels) if v == c])
            perm = rng.permutation(idx)
            folds[perm] = (np.arange(perm.size) + offset) % k
            offset += perm.size
    else:
        perm = rng.permutation(len(labels))
        folds[perm] = np.arange(len(labels)) % k
    return folds, stratified


def cross_validate(X, y: Sequence[str], params: ForestParams, k: int, seed: int, *,
                   class_order: Sequence[str] | None = None, jobs: int = 1) -> EvalMetrics:
    """k-fold cross validation; confusion counts are pooled over folds."""
    X = np.asarray(X, dtype=float)
    labels = list(y)
    if k < 2:
        raise ValueError("k must be >= 2")
    if len(labels) < k:
        raise ValueError(f"dataset has {len(labels)} rows, fewer than k={k}")
    classes = tuple(class_order) if class_order is not None else tuple(sorted(set(labels)))
    folds, stratified = kfold_assignments(labels, k, seed)
    predictions: list[str | None] = [None] * len(labels)
    for f in range(k):
        test = np.flatnonzero(folds == f)
        train_rows = np.flatnonzero(folds != f)
        model = train(X[train_rows], [labels[i] for i in train_rows], params,
                      seed=seed * 1000 + f, class_order=classes, jobs=jobs)
        for i, p in zip(test, model.predict(X[test])):
            predictions[i] = p
    warning = None if stratified else f"a class has fewer than {k} rows; folds not stratified"
    return metrics(predictions, labels, classes, stratified=stratified, warning=warning)
