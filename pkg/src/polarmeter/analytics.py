"""Descriptive statistics over adjudicated labels.

Covers dimensional label counts per outlet, per-outlet label distributions,
paragraph- and article-level label co-occurrence matrices, and statistics on
articles whose labels lean in different directions. Everything here is a
pure read of a Corpus; the label source defaults to the adjudicated view.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Mapping

from .corpus import (ADJUDICATED, Corpus, Dimension, DimensionLabel,
                     DIMENSIONS, SCORED_LABELS, label_score, paragraph_labels,
                     select_labels)

# Fixed 9-cell axis: (dimension, label) in dimension-major order.
COOC_AXIS: tuple[tuple[Dimension, DimensionLabel], ...] = tuple(
    (d, l) for d in DIMENSIONS for l in SCORED_LABELS)

DENOMINATOR_LABELED = "labeled"
DENOMINATOR_ALL = "all"


@dataclass(frozen=True)
class OutletCounts:
    docs: int
    by_dimension: Mapping[Dimension, int]

    @property
    def total(self) -> int:
        return sum(self.by_dimension.values())


@dataclass(frozen=True)
class CountTable:
    rows: Mapping[str, OutletCounts]
    totals: OutletCounts


@dataclass(frozen=True)
class CooccurrenceMatrix:
    axis: tuple[tuple[Dimension, DimensionLabel], ...]
    values: tuple[tuple[float, ...], ...]   # symmetric, percentages in [0, 100]
    level: str                              # "paragraph" | "article"
    denominator_count: int


@dataclass(frozen=True)
class DivergenceStats:
    pct_divergent_articles: float
    shares: Mapping[DimensionLabel, float]  # over divergent articles, sums to 100
    divergent_count: int
    article_count: int


def label_counts(corpus: Corpus, source: str = ADJUDICATED) -> CountTable:
    """Per-outlet document counts and non-irrelevant paragraph-label counts.

    A paragraph contributes to dimension d's count iff its label on d under
    the source is present and not irrelevant. doc counts cover every article
    of the outlet, labeled or not.
    """
    docs: dict[str, int] = {}
    counts: dict[str, dict[Dimension, int]] = {}
    for article in corpus.articles:
        docs[article.outlet] = docs.get(article.outlet, 0) + 1
        counts.setdefault(article.outlet, {d: 0 for d in DIMENSIONS})
    for article, _, labels in select_labels(corpus, source):
        row = counts[article.outlet]
        for dim, lab in labels.items():
            if lab is not DimensionLabel.IRRELEVANT:
                row[dim] += 1
    rows = {outlet: OutletCounts(docs=docs[outlet], by_dimension=counts[outlet])
            for outlet in sorted(docs)}
    totals = OutletCounts(
        docs=sum(docs.values()),
        by_dimension={d: sum(row.by_dimension[d] for row in rows.values())
                      for d in DIMENSIONS})
    return CountTable(rows=rows, totals=totals)


def label_distribution(corpus: Corpus, dimension: Dimension,
                       source: str = ADJUDICATED,
                       ) -> dict[str, dict[DimensionLabel, float]]:
    """Per-outlet fractions over liberal/neutral/conservative for a dimension.

    Fractions are over the outlet's non-irrelevant paragraphs on that
    dimension; outlets with none are absent from the result.
    """
    tallies: dict[str, dict[DimensionLabel, int]] = {}
    for article, _, labels in select_labels(corpus, source):
        lab = labels.get(dimension)
        if lab is None or lab is DimensionLabel.IRRELEVANT:
            continue
        row = tallies.setdefault(article.outlet,
                                 {l: 0 for l in SCORED_LABELS})
        row[lab] += 1
    result = {}
    for outlet in sorted(tallies):
        row = tallies[outlet]
        denom = sum(row.values())
        result[outlet] = {l: row[l] / denom for l in SCORED_LABELS}
    return result


def _paragraph_cells(labels: Mapping[Dimension, DimensionLabel],
                     ) -> frozenset[tuple[Dimension, DimensionLabel]]:
    return frozenset((d, l) for d, l in labels.items()
                     if l is not DimensionLabel.IRRELEVANT)


def cooccurrence(corpus: Corpus, level: str = "paragraph",
                 denominator: str = DENOMINATOR_LABELED,
                 source: str = ADJUDICATED) -> CooccurrenceMatrix:
    """Symmetric 9x9 percentage matrix of (dimension, label) co-occurrence.

    Paragraph level: cell (a, b) is the percentage of paragraphs carrying
    both labels a and b; the diagonal therefore reduces to the marginal of
    its own cell. The denominator is paragraphs with at least one
    non-irrelevant label ("labeled", the default) or every paragraph the
    source covers ("all").

    Article level: cell (a, b) is the percentage of articles containing some
    paragraph with a and some (possibly different) paragraph with b, over
    all articles.
    """
    if level not in ("paragraph", "article"):
        raise ValueError(f"unknown co-occurrence level {level!r}")
    if denominator not in (DENOMINATOR_LABELED, DENOMINATOR_ALL):
        raise ValueError(f"unknown denominator mode {denominator!r}")

    index = {cell: i for i, cell in enumerate(COOC_AXIS)}
    counts = [[0] * len(COOC_AXIS) for _ in COOC_AXIS]
    selection = select_labels(corpus, source)

    if level == "paragraph":
        denom = 0
        for _, _, labels in selection:
            cells = _paragraph_cells(labels)
            if denominator == DENOMINATOR_ALL or cells:
                denom += 1
            for a, b in product(cells, repeat=2):
                counts[index[a]][index[b]] += 1
    else:
        denom = len(corpus.articles)
        per_article: dict[str, set] = {a.article_id: set()
                                       for a in corpus.articles}
        for article, _, labels in selection:
            per_article[article.article_id] |= _paragraph_cells(labels)
        for cells in per_article.values():
            for a, b in product(cells, repeat=2):
                counts[index[a]][index[b]] += 1

    values = tuple(tuple(100.0 * c / denom if denom else 0.0 for c in row)
                   for row in counts)
    return CooccurrenceMatrix(axis=COOC_AXIS, values=values, level=level,
                              denominator_count=denom)


def divergent_article_stats(corpus: Corpus, strict: bool = False,
                            source: str = ADJUDICATED) -> DivergenceStats:
    """Share of articles whose labels lean in different directions.

    An article is divergent iff its non-irrelevant (paragraph, dimension)
    scores contain two distinct values; with strict=True both -1 and +1 must
    be present (opposite leans only, neutral-vs-lean pairs no longer count).
    Shares average, over divergent articles, each article's own proportion
    of neutral/liberal/conservative labels.
    """
    divergent = 0
    share_sums = {l: 0.0 for l in SCORED_LABELS}
    for article in corpus.articles:
        labels: list[DimensionLabel] = []
        for paragraph in article.paragraphs:
            mapping = paragraph_labels(paragraph, source)
            if mapping is None:
                continue
            labels.extend(l for l in mapping.values()
                          if l is not DimensionLabel.IRRELEVANT)
        scores = {label_score(l) for l in labels}
        if strict:
            is_divergent = {-1, 1} <= scores
        else:
            is_divergent = len(scores) >= 2
        if not is_divergent:
            continue
        divergent += 1
        for lab in SCORED_LABELS:
            share_sums[lab] += labels.count(lab) / len(labels)
    total = len(corpus.articles)
    pct = 100.0 * divergent / total if total else 0.0
    shares = ({l: 100.0 * s / divergent for l, s in share_sums.items()}
              if divergent else {})
    return DivergenceStats(pct_divergent_articles=pct, shares=shares,
                           divergent_count=divergent, article_count=total)
