"""Collapsed-Gibbs LDA, keyword curation of raw articles, and topic-based
paragraph segmentation for unsegmented article text.

Segmentation follows the topic-tiling recipe: infer a topic per token
against a fixed LDA model, turn sentences into topic-count vectors, score
cosine similarity between the sentence blocks on either side of each gap,
and cut at similarity valleys whose depth exceeds mean - x * stdev of the
depth scores. The Gibbs chains run single-threaded on a seeded generator so
identical inputs give bit-identical output.
"""

from __future__ import annotations

import json
import logging
import math
import re
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .lexical import tokenize

log = logging.getLogger(__name__)

DEFAULT_BETA = 0.01
DEFAULT_ITERATIONS = 1000
DEFAULT_WINDOW = 2
DEFAULT_THRESHOLD_MULTIPLIER = 0.5
DEFAULT_INFERENCE_ITERATIONS = 100
MODE_WINDOW = 20   # modal topic is taken over this many final inference sweeps

_SENTENCE_RE = re.compile(r"(?<=[.!?])\s+")


@dataclass
class LdaModel:
    k: int
    alpha: float
    beta: float
    vocabulary: tuple[str, ...]
    phi: np.ndarray                                  # (K, V) topic-word rows
    theta: Optional[np.ndarray] = None               # (D, K) doc-topic rows
    assignments: Optional[tuple[tuple[int, ...], ...]] = None
    seed: int = 0


def lda_fit(documents: Sequence[Sequence[str]], k: int,
            alpha: Optional[float] = None, beta: float = DEFAULT_BETA,
            iterations: int = DEFAULT_ITERATIONS, seed: int = 0,
            check_probabilities: bool = False) -> LdaModel:
    """Collapsed Gibbs sampling; phi/theta come from the final-state counts
    with Dirichlet smoothing. alpha defaults to 50/k.

    check_probabilities asserts at every step that the sampling distribution
    is a valid probability vector (debugging aid, off by default).
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    if not documents:
        raise ValueError("cannot fit a topic model on an empty corpus")
    for i, doc in enumerate(documents):
        if not doc:
            raise ValueError(f"document {i} is empty after tokenization")
    if alpha is None:
        alpha = 50.0 / k

    vocab: dict[str, int] = {}
    docs_ids = []
    for doc in documents:
        ids = []
        for term in doc:
            if term not in vocab:
                vocab[term] = len(vocab)
            ids.append(vocab[term])
        docs_ids.append(np.array(ids))
    v = len(vocab)

    rng = np.random.default_rng(seed)
    n_kw = np.zeros((k, v))
    n_k = np.zeros(k)
    n_dk = np.zeros((len(documents), k))
    z: list[np.ndarray] = []
    for d, ids in enumerate(docs_ids):
        zd = rng.integers(0, k, size=len(ids))
        z.append(zd)
        for w, topic in zip(ids, zd):
            n_kw[topic, w] += 1
            n_k[topic] += 1
            n_dk[d, topic] += 1

    for _ in range(iterations):
        for d, ids in enumerate(docs_ids):
            zd = z[d]
            for pos, w in enumerate(ids):
                topic = zd[pos]
                n_kw[topic, w] -= 1
                n_k[topic] -= 1
                n_dk[d, topic] -= 1
                probs = (n_kw[:, w] + beta) / (n_k + v * beta) \
                        * (n_dk[d] + alpha)
                total = probs.sum()
                if check_probabilities:
                    normalized = probs / total
                    assert (normalized >= 0).all()
                    assert abs(normalized.sum() - 1.0) <= 1e-9
                topic = _draw(rng, probs, total)
                zd[pos] = topic
                n_kw[topic, w] += 1
                n_k[topic] += 1
                n_dk[d, topic] += 1

    phi = (n_kw + beta) / (n_k + v * beta)[:, None]
    theta = (n_dk + alpha) / (n_dk.sum(axis=1) + k * alpha)[:, None]
    terms = tuple(sorted(vocab, key=vocab.__getitem__))
    return LdaModel(k=k, alpha=alpha, beta=beta, vocabulary=terms, phi=phi,
                    theta=theta,
                    assignments=tuple(tuple(int(t) for t in zd) for zd in z),
                    seed=seed)


def _draw(rng: np.random.Generator, probs: np.ndarray, total: float) -> int:
    cum = np.cumsum(probs)
    idx = int(np.searchsorted(cum, rng.random() * total, side="right"))
    return min(idx, len(probs) - 1)


def top_words(model: LdaModel, topic: int, k: int) -> list[str]:
    """k highest-probability terms of a topic, ties broken by term."""
    if not 0 <= topic < model.k:
        raise ValueError(f"topic {topic} out of range for k={model.k}")
    row = model.phi[topic]
    ranked = sorted(zip(model.vocabulary, row), key=lambda p: (-p[1], p[0]))
    return [term for term, _ in ranked[:k]]


def save_model(model: LdaModel, path) -> None:
    doc = {"k": model.k, "alpha": model.alpha, "beta": model.beta,
           "seed": model.seed, "vocabulary": list(model.vocabulary),
           "phi": model.phi.tolist(),
           "theta": None if model.theta is None else model.theta.tolist()}
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(doc, handle)


def load_model(path) -> LdaModel:
    with open(path, encoding="utf-8") as handle:
        doc = json.load(handle)
    return LdaModel(k=doc["k"], alpha=doc["alpha"], beta=doc["beta"],
                    vocabulary=tuple(doc["vocabulary"]),
                    phi=np.array(doc["phi"]),
                    theta=None if doc.get("theta") is None
                          else np.array(doc["theta"]),
                    seed=doc.get("seed", 0))


@dataclass(frozen=True)
class RawArticle:
    """An unsegmented article, the input to curation and segmentation."""
    article_id: str
    outlet: str
    year: int
    text: str


def parse_raw_articles(lines: Iterable[str]) -> list[RawArticle]:
    articles = []
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            doc = json.loads(line)
            articles.append(RawArticle(article_id=doc["article_id"],
                                       outlet=doc.get("outlet", ""),
                                       year=doc.get("year", 0),
                                       text=doc["text"]))
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise ValueError(f"line {lineno}: bad raw article: {exc}") from None
    return articles


def serialize_raw_article(article: RawArticle) -> str:
    return json.dumps({"article_id": article.article_id,
                       "outlet": article.outlet, "year": article.year,
                       "text": article.text}, ensure_ascii=False)


@dataclass(frozen=True)
class CurationResult:
    kept: tuple[RawArticle, ...]
    rejected: tuple[tuple[RawArticle, tuple[str, ...]], ...]
    audit: Mapping[str, int]           # rule id -> number of rejections


def curate(articles: Sequence[RawArticle],
           include_terms: Sequence[str] = (),
           exclude_phrases: Sequence[str] = ()) -> CurationResult:
    """Keep an article iff its tokens contain every include term and its raw
    text contains no exclude phrase (case-insensitive substring).

    The audit counts, per rule id ("include:<term>" / "exclude:<phrase>"),
    how many articles that rule rejected; an article violating several rules
    is counted under each.
    """
    include = [t.lower() for t in include_terms]
    exclude = [p.lower() for p in exclude_phrases]
    audit = {f"include:{t}": 0 for t in include}
    audit.update({f"exclude:{p}": 0 for p in exclude})
    kept = []
    rejected = []
    for article in articles:
        tokens = set(tokenize(article.text))
        lowered = article.text.lower()
        violated = [f"include:{t}" for t in include if t not in tokens]
        violated += [f"exclude:{p}" for p in exclude if p in lowered]
        if violated:
            for rule in violated:
                audit[rule] += 1
            rejected.append((article, tuple(violated)))
        else:
            kept.append(article)
    return CurationResult(kept=tuple(kept), rejected=tuple(rejected),
                          audit=audit)


@dataclass(frozen=True)
class SegmentBoundarySet:
    boundaries: tuple[int, ...]        # gap i = a break after sentence i
    depth_scores: tuple[float, ...]    # one per gap
    similarities: tuple[float, ...]    # one per gap
    threshold: float


def infer_token_topics(tokens: Sequence[str], model: LdaModel, seed: int = 0,
                       iterations: int = DEFAULT_INFERENCE_ITERATIONS,
                       mode_window: int = MODE_WINDOW) -> list[Optional[int]]:
    """Per-token modal topic from Gibbs inference against the fixed model.

    Topic-word probabilities stay frozen at the model's phi; only the
    document-topic counts evolve. Out-of-vocabulary tokens get None. The
    mode is taken over the final mode_window sweeps (ties -> lowest id).
    """
    index = {t: i for i, t in enumerate(model.vocabulary)}
    ids = [index.get(t) for t in tokens]
    known = [i for i, w in enumerate(ids) if w is not None]
    result: list[Optional[int]] = [None] * len(tokens)
    if not known:
        return result

    rng = np.random.default_rng(seed)
    z = rng.integers(0, model.k, size=len(known))
    n_dk = np.bincount(z, minlength=model.k).astype(float)
    tallies = np.zeros((len(known), model.k))
    mode_start = max(iterations - mode_window, 0)
    for it in range(iterations):
        for pos, token_pos in enumerate(known):
            w = ids[token_pos]
            n_dk[z[pos]] -= 1
            probs = model.phi[:, w] * (n_dk + model.alpha)
            topic = _draw(rng, probs, probs.sum())
            z[pos] = topic
            n_dk[topic] += 1
        if it >= mode_start:
            tallies[np.arange(len(known)), z] += 1
    modal = tallies.argmax(axis=1)
    for pos, token_pos in enumerate(known):
        result[token_pos] = int(modal[pos])
    return result


def _cosine(a: np.ndarray, b: np.ndarray) -> float:
    na = math.sqrt(float(a @ a))
    nb = math.sqrt(float(b @ b))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(a @ b) / (na * nb)


def boundaries_from_vectors(vectors: np.ndarray, window: int = DEFAULT_WINDOW,
                            threshold_multiplier: float =
                            DEFAULT_THRESHOLD_MULTIPLIER,
                            ) -> SegmentBoundarySet:
    """Boundary detection over per-sentence topic-count vectors.

    Gap i sits between sentences i and i+1; its similarity is the cosine of
    the summed vectors of the window-sized blocks on each side. The depth
    score climbs to the nearest similarity peak on each side. Candidate gaps
    are local minima of the similarity curve; a candidate becomes a boundary
    when its depth is positive and strictly exceeds
    mean(depth) - multiplier * stdev(depth). (The positivity requirement
    keeps flat stretches from firing when one deep valley drags the
    threshold below zero.)
    """
    n = len(vectors)
    if n < 2:
        return SegmentBoundarySet((), (), (), 0.0)
    sims = []
    for gap in range(n - 1):
        left = vectors[max(0, gap - window + 1):gap + 1].sum(axis=0)
        right = vectors[gap + 1:min(n, gap + 1 + window)].sum(axis=0)
        sims.append(_cosine(left, right))

    depths = []
    for gap, sim in enumerate(sims):
        left_peak = sim
        for j in range(gap - 1, -1, -1):
            if sims[j] >= left_peak:
                left_peak = sims[j]
            else:
                break
        right_peak = sim
        for j in range(gap + 1, len(sims)):
            if sims[j] >= right_peak:
                right_peak = sims[j]
            else:
                break
        depths.append((left_peak - sim) + (right_peak - sim))

    mean = sum(depths) / len(depths)
    stdev = math.sqrt(sum((d - mean) ** 2 for d in depths) / len(depths))
    threshold = mean - threshold_multiplier * stdev
    boundaries = tuple(
        gap for gap, depth in enumerate(depths)
        if depth > threshold and depth > 0.0
        and (gap == 0 or sims[gap] <= sims[gap - 1])
        and (gap == len(sims) - 1 or sims[gap] <= sims[gap + 1]))
    return SegmentBoundarySet(boundaries=boundaries,
                              depth_scores=tuple(depths),
                              similarities=tuple(sims), threshold=threshold)


def topic_tiling(sentences: Sequence[Sequence[str]], model: LdaModel,
                 window: int = DEFAULT_WINDOW,
                 inference_iterations: int = DEFAULT_INFERENCE_ITERATIONS,
                 threshold_multiplier: float = DEFAULT_THRESHOLD_MULTIPLIER,
                 seed: int = 0) -> SegmentBoundarySet:
    """Segment boundaries for a list of tokenized sentences."""
    if window < 1:
        raise ValueError("window must be >= 1")
    if len(sentences) < 2:
        return SegmentBoundarySet((), (), (), 0.0)
    flat = [t for sent in sentences for t in sent]
    topics = infer_token_topics(flat, model, seed=seed,
                                iterations=inference_iterations)
    vectors = np.zeros((len(sentences), model.k))
    pos = 0
    for i, sent in enumerate(sentences):
        for _ in sent:
            topic = topics[pos]
            if topic is not None:
                vectors[i, topic] += 1
            pos += 1
    return boundaries_from_vectors(vectors, window=window,
                                   threshold_multiplier=threshold_multiplier)


def split_sentences(text: str) -> list[str]:
    """Split on '.', '!' or '?' followed by whitespace. Deliberately simple
    and deterministic; abbreviations are not special-cased."""
    return [s for s in _SENTENCE_RE.split(text.strip()) if s.strip()]


def segment_article(text: str, model: LdaModel,
                    window: int = DEFAULT_WINDOW,
                    inference_iterations: int = DEFAULT_INFERENCE_ITERATIONS,
                    threshold_multiplier: float = DEFAULT_THRESHOLD_MULTIPLIER,
                    seed: int = 0,
                    max_segments: Optional[int] = None) -> list[str]:
    """Split raw article text into topically coherent paragraph strings."""
    if not text or not text.strip():
        raise ValueError("cannot segment empty article text")
    sentences = split_sentences(text)
    if len(sentences) < 2:
        return [" ".join(sentences)] if sentences else []
    tokenized = [tokenize(s) for s in sentences]
    result = topic_tiling(tokenized, model, window=window,
                          inference_iterations=inference_iterations,
                          threshold_multiplier=threshold_multiplier,
                          seed=seed)
    boundaries = list(result.boundaries)
    if max_segments is not None and len(boundaries) + 1 > max_segments:
        ranked = sorted(boundaries,
                        key=lambda g: (-result.depth_scores[g], g))
        boundaries = sorted(ranked[:max_segments - 1])
    paragraphs = []
    start = 0
    for gap in boundaries:
        paragraphs.append(" ".join(sentences[start:gap + 1]))
        start = gap + 1
    paragraphs.append(" ".join(sentences[start:]))
    return paragraphs
