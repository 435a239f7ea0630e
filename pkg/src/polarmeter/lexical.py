"""Unigram features, logistic-regression lexical analysis, and the focal-loss
linear classifier with macro-F1 evaluation.

The binary trainer learns liberal-vs-conservative weights per dimension
(positive = conservative) from raw unigram counts. The multinomial trainer
handles the 3-class task with focal loss, or weighted cross-entropy when the
focusing parameter is 0. Both use deterministic full-batch gradient descent
from a zero initialization, so runs are exactly reproducible and easy to
check against an independent convex solver.

The objective in both cases is

    J = (1/N) * (sum_i loss_i + l2/2 * ||W||^2)

with intercepts unpenalized. The L2 term is applied as a proximal
(implicit) weight-decay step, w <- (w - lr * grad_data) / (1 + lr*l2/N),
which reaches the same stationary point as explicit gradient descent on J
but stays stable for arbitrarily large l2.
"""

from __future__ import annotations

import math
import random
import re
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .corpus import (ADJUDICATED, Corpus, Dimension, DimensionLabel,
                     select_labels)

_TOKEN_RE = re.compile(r"[0-9a-z]+")

P_FLOOR = 1e-12


def tokenize(text: str) -> list[str]:
    """Lowercase and split on any non-alphanumeric run; digits are kept."""
    return _TOKEN_RE.findall(text.lower())


@dataclass(frozen=True)
class Vocabulary:
    terms: tuple[str, ...]
    index: Mapping[str, int]
    doc_frequency: Mapping[str, int]

    def __len__(self) -> int:
        return len(self.terms)


def build_vocab(documents: Iterable[Sequence[str]], min_df: int = 1) -> Vocabulary:
    """Terms with document frequency >= min_df, ordered by (df desc, term asc)."""
    if min_df < 1:
        raise ValueError("min_df must be >= 1")
    df: dict[str, int] = {}
    for tokens in documents:
        for term in set(tokens):
            df[term] = df.get(term, 0) + 1
    kept = sorted((t for t, c in df.items() if c >= min_df),
                  key=lambda t: (-df[t], t))
    if not kept:
        raise ValueError(f"no term reaches min_df={min_df}; lower min_df")
    return Vocabulary(terms=tuple(kept),
                      index={t: i for i, t in enumerate(kept)},
                      doc_frequency={t: df[t] for t in kept})


@dataclass(frozen=True)
class DocTermMatrix:
    vocabulary: Vocabulary
    rows: tuple[Mapping[int, int], ...]          # sparse term index -> count
    row_ids: tuple[tuple[str, int], ...]         # (article_id, paragraph_index)

    def __len__(self) -> int:
        return len(self.rows)

    def to_dense(self) -> np.ndarray:
        dense = np.zeros((len(self.rows), len(self.vocabulary)))
        for i, row in enumerate(self.rows):
            for j, count in row.items():
                dense[i, j] = count
        return dense


def build_matrix(documents: Sequence[tuple[tuple[str, int], Sequence[str]]],
                 vocabulary: Vocabulary, binary: bool = False) -> DocTermMatrix:
    """Sparse count rows over the vocabulary; binary=True stores presence."""
    rows = []
    ids = []
    for row_id, tokens in documents:
        row: dict[int, int] = {}
        for term in tokens:
            j = vocabulary.index.get(term)
            if j is not None:
                row[j] = 1 if binary else row.get(j, 0) + 1
        rows.append(row)
        ids.append(row_id)
    return DocTermMatrix(vocabulary=vocabulary, rows=tuple(rows),
                         row_ids=tuple(ids))


@dataclass
class LinearModel:
    vocabulary: Vocabulary
    weights: np.ndarray                 # (V,) binary, (K, V) multinomial
    intercept: np.ndarray               # scalar array () or (K,)
    classes: tuple[str, ...]
    positive_class: Optional[str] = None
    metadata: dict = field(default_factory=dict)


def _check_rows(X: DocTermMatrix, y: Sequence) -> None:
    if len(X) != len(y):
        raise ValueError(f"X has {len(X)} rows but y has {len(y)} labels")
    if len(y) == 0:
        raise ValueError("empty training set")


def train_binary_lr(X: DocTermMatrix, y: Sequence[int], l2: float = 1.0,
                    lr: float = 0.1, epochs: int = 500, seed: int = 0,
                    classes: tuple[str, str] = ("liberal", "conservative"),
                    ) -> LinearModel:
    """L2-regularized logistic regression by full-batch gradient descent.

    y holds 0 (liberal) / 1 (conservative); positive weights therefore lean
    conservative. The intercept is unpenalized. Zero initialization plus
    full-batch steps make the result deterministic; the seed is recorded for
    provenance only.
    """
    _check_rows(X, y)
    yv = np.asarray(y, dtype=float)
    present = set(np.unique(yv))
    if not present <= {0.0, 1.0}:
        raise ValueError(f"binary labels must be 0/1, got {sorted(present)}")
    if len(present) < 2:
        raise ValueError("both classes must be present in y")

    dense = X.to_dense()
    n = len(yv)
    w = np.zeros(len(X.vocabulary))
    b = 0.0
    history = []
    decay = 1.0 + lr * l2 / n
    for _ in range(epochs):
        z = dense @ w + b
        p = 1.0 / (1.0 + np.exp(-z))
        loss = (np.sum(np.logaddexp(0.0, z) - yv * z)
                + 0.5 * l2 * float(w @ w)) / n
        history.append(loss)
        w = (w - lr * (dense.T @ (p - yv)) / n) / decay
        b -= lr * float(np.mean(p - yv))

    return LinearModel(
        vocabulary=X.vocabulary, weights=w, intercept=np.asarray(b),
        classes=classes, positive_class=classes[1],
        metadata={"loss": "log", "l2": l2, "lr": lr, "epochs": epochs,
                  "seed": seed, "gamma": None, "loss_history": history})


def top_terms(model: LinearModel, k: int,
              ) -> tuple[list[tuple[str, float]], list[tuple[str, float]]]:
    """k largest-weight (conservative) and k smallest-weight (liberal) terms.

    Both lists come from one ranking of (weight desc, term asc): the
    conservative list is its head, the liberal list its reversed tail, so
    the two are disjoint whenever V >= 2k even when weights tie. Weights
    are returned at full precision.
    """
    if model.weights.ndim != 1:
        raise ValueError("top_terms requires a binary model")
    if k > len(model.vocabulary):
        raise ValueError(f"k={k} exceeds vocabulary size {len(model.vocabulary)}")
    pairs = list(zip(model.vocabulary.terms, (float(w) for w in model.weights)))
    ranking = sorted(pairs, key=lambda p: (-p[1], p[0]))
    conservative = ranking[:k]
    liberal = ranking[::-1][:k]
    return conservative, liberal


def focal_loss(p_true: float, gamma: float) -> float:
    """Focal loss -(1-p)^gamma * ln(p) for the correct-class probability.

    gamma = 0 reduces to plain cross-entropy. p_true = 0 is clamped to 1e-12
    with a warning rather than returning inf.
    """
    if gamma < 0:
        raise ValueError("gamma must be >= 0")
    if p_true < 0 or p_true > 1:
        raise ValueError(f"p_true must lie in (0, 1], got {p_true}")
    if p_true == 0:
        warnings.warn("p_true of 0 clamped to 1e-12 in focal loss")
        p_true = P_FLOOR
    return -((1.0 - p_true) ** gamma) * math.log(p_true)


def _class_weight_vector(class_weights, classes: tuple[str, ...],
                         y_idx: np.ndarray) -> np.ndarray:
    k = len(classes)
    if class_weights is None or class_weights == "none":
        return np.ones(k)
    if class_weights in ("auto", "inverse"):
        counts = np.bincount(y_idx, minlength=k).astype(float)
        return len(y_idx) / (k * counts)
    weights = np.array([float(class_weights[c]) for c in classes])
    return weights


def train_multinomial_focal(X: DocTermMatrix, y: Sequence[str],
                            gamma: float = 2.0,
                            class_weights=None,
                            l2: float = 1.0, lr: float = 0.1,
                            epochs: int = 500, seed: int = 0) -> LinearModel:
    """Softmax linear model trained with focal loss (gamma > 0) or
    (optionally class-weighted) cross-entropy (gamma = 0).

    class_weights may be None/"none" (unit), "auto" (inverse frequency,
    w_c = N / (K * n_c)), or an explicit mapping class -> weight.
    """
    _check_rows(X, y)
    if gamma < 0:
        raise ValueError("gamma must be >= 0")
    classes = tuple(sorted(set(y), key=str))
    if len(classes) < 2:
        raise ValueError("at least two classes must be present in y")
    class_index = {c: i for i, c in enumerate(classes)}
    y_idx = np.array([class_index[label] for label in y])
    cw = _class_weight_vector(class_weights, classes, y_idx)

    dense = X.to_dense()
    n, v = dense.shape
    k = len(classes)
    W = np.zeros((k, v))
    b = np.zeros(k)
    onehot = np.zeros((n, k))
    onehot[np.arange(n), y_idx] = 1.0
    sample_w = cw[y_idx]
    history = []
    decay = 1.0 + lr * l2 / n

    for _ in range(epochs):
        Z = dense @ W.T + b
        Z -= Z.max(axis=1, keepdims=True)
        expz = np.exp(Z)
        P = expz / expz.sum(axis=1, keepdims=True)
        u = np.clip(P[np.arange(n), y_idx], P_FLOOR, 1.0)
        one_minus = np.clip(1.0 - u, P_FLOOR, 1.0)

        loss = (np.sum(sample_w * (one_minus ** gamma) * (-np.log(u)))
                + 0.5 * l2 * float(np.sum(W * W))) / n
        history.append(loss)

        # d(loss_i)/dz_k = w_i * (gamma*u*(1-u)^(g-1)*ln u - (1-u)^g) * (onehot - P)
        coef = sample_w * (gamma * u * one_minus ** (gamma - 1.0) * np.log(u)
                           - one_minus ** gamma)
        D = coef[:, None] * (onehot - P)
        W = (W - lr * (D.T @ dense) / n) / decay
        b -= lr * D.sum(axis=0) / n

    return LinearModel(
        vocabulary=X.vocabulary, weights=W, intercept=b, classes=classes,
        metadata={"loss": "focal" if gamma > 0 else "cross_entropy",
                  "gamma": gamma, "class_weights": list(map(float, cw)),
                  "l2": l2, "lr": lr, "epochs": epochs, "seed": seed,
                  "loss_history": history})


def predict(model: LinearModel, X: DocTermMatrix) -> list[str]:
    if X.vocabulary is not model.vocabulary and \
            X.vocabulary.terms != model.vocabulary.terms:
        raise ValueError("model and matrix use different vocabularies")
    dense = X.to_dense()
    if model.weights.ndim == 1:
        scores = dense @ model.weights + float(model.intercept)
        return [model.classes[1] if s >= 0 else model.classes[0]
                for s in scores]
    scores = dense @ model.weights.T + model.intercept
    return [model.classes[i] for i in scores.argmax(axis=1)]


@dataclass(frozen=True)
class ClassMetrics:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass(frozen=True)
class EvalReport:
    classes: tuple[str, ...]
    confusion: tuple[tuple[int, ...], ...]   # rows = true class, cols = predicted
    per_class: Mapping[str, ClassMetrics]
    macro_f1: float


def evaluate(model: LinearModel, X: DocTermMatrix, y: Sequence[str],
             ) -> EvalReport:
    """Per-class precision/recall/F1 and macro-F1 (unweighted mean).

    Classes absent from both y and the predictions are excluded; a class
    with no predicted or no true instances scores 0 on the undefined side.
    """
    if len(y) == 0:
        raise ValueError("cannot evaluate on an empty label set")
    preds = predict(model, X)
    classes = tuple(sorted(set(y) | set(preds), key=str))
    index = {c: i for i, c in enumerate(classes)}
    k = len(classes)
    confusion = [[0] * k for _ in range(k)]
    for true, pred in zip(y, preds):
        confusion[index[true]][index[pred]] += 1

    per_class = {}
    f1s = []
    for c in classes:
        i = index[c]
        tp = confusion[i][i]
        support = sum(confusion[i])
        predicted = sum(confusion[r][i] for r in range(k))
        precision = tp / predicted if predicted else 0.0
        recall = tp / support if support else 0.0
        f1 = (2 * precision * recall / (precision + recall)
              if precision + recall else 0.0)
        per_class[c] = ClassMetrics(precision=precision, recall=recall,
                                    f1=f1, support=support)
        f1s.append(f1)
    return EvalReport(classes=classes,
                      confusion=tuple(tuple(row) for row in confusion),
                      per_class=per_class,
                      macro_f1=sum(f1s) / len(f1s))


def split_by_article(corpus: Corpus,
                     ratios: tuple[int, int, int] = (80, 10, 10),
                     seed: int = 0) -> tuple[set[str], set[str], set[str]]:
    """Train/dev/test article-id sets, stratified over years.

    Articles are shuffled within each year and walked in year order; each is
    assigned to the split with the largest quota deficit, so dev and test
    draw evenly from the whole time period and totals land on the ratios.
    Deterministic given the seed; no article id appears in two splits.
    """
    if sum(ratios) != 100:
        raise ValueError(f"ratios must sum to 100, got {ratios}")
    n = len(corpus.articles)
    if n < len(ratios):
        raise ValueError(f"need at least {len(ratios)} articles, have {n}")

    rng = random.Random(seed)
    by_year: dict[int, list[str]] = {}
    for article in corpus.articles:
        by_year.setdefault(article.year, []).append(article.article_id)
    order: list[str] = []
    for year in sorted(by_year):
        ids = sorted(by_year[year])
        rng.shuffle(ids)
        order.extend(ids)

    fractions = [r / 100.0 for r in ratios]
    splits: tuple[list[str], ...] = ([], [], [])
    for seen, article_id in enumerate(order, start=1):
        deficits = [f * seen - len(s) for f, s in zip(fractions, splits)]
        splits[deficits.index(max(deficits))].append(article_id)
    return tuple(set(s) for s in splits)


def binary_dataset(corpus: Corpus, dimension: Dimension,
                   source: str = ADJUDICATED,
                   ) -> tuple[list[tuple[str, int]], list[list[str]], list[int]]:
    """Paragraphs labeled liberal/conservative on a dimension, as
    (row ids, token lists, 0/1 labels) with conservative = 1."""
    ids, docs, labels = [], [], []
    for article, paragraph, mapping in select_labels(corpus, source):
        lab = mapping.get(dimension)
        if lab is DimensionLabel.LIBERAL:
            y = 0
        elif lab is DimensionLabel.CONSERVATIVE:
            y = 1
        else:
            continue
        ids.append((article.article_id, paragraph.index))
        docs.append(tokenize(paragraph.text))
        labels.append(y)
    return ids, docs, labels


def ternary_dataset(corpus: Corpus, dimension: Dimension,
                    source: str = ADJUDICATED,
                    ) -> tuple[list[tuple[str, int]], list[list[str]], list[str]]:
    """Paragraphs with any non-irrelevant label on a dimension, as
    (row ids, token lists, label strings)."""
    ids, docs, labels = [], [], []
    for article, paragraph, mapping in select_labels(corpus, source):
        lab = mapping.get(dimension)
        if lab is None or lab is DimensionLabel.IRRELEVANT:
            continue
        ids.append((article.article_id, paragraph.index))
        docs.append(tokenize(paragraph.text))
        labels.append(lab.value)
    return ids, docs, labels
