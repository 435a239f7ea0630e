"""The three polarization measures over time-binned article ideology.

Sorting compares an outlet's annotated article ideology with its proclaimed
bias; issue constraint is the Pearson correlation between article ideology
on two dimensions; ideological divergence is the bimodality coefficient of
one dimension's article-ideology distribution pooled across outlets.

Points that cannot be computed are emitted as absent values carrying a
machine-readable reason code, never silently dropped:

    no_articles        no article in the bin has a defined ideology
    bias_near_zero     |composite bias| < eps, sorting ratio undefined
    too_few_pairs      fewer than min_pairs articles define both dimensions
    zero_variance      a correlated or sampled series has no variance
    too_few_samples    fewer than 4 samples for the bimodality coefficient
    no_defined_values  no outlet in the group has a defined value
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping, Optional, Sequence

from .corpus import (ADJUDICATED, Article, Corpus, Dimension, DIMENSIONS,
                     label_score, paragraph_labels)

BIAS_EPS = 1e-3
MIN_PAIRS = 3
# Bimodality of a uniform distribution; the conventional unimodal/bimodal cut.
BC_THRESHOLD = 5.0 / 9.0
DEFAULT_TAU = 0.1
DEFAULT_BIN_WIDTH = 4

R_NO_ARTICLES = "no_articles"
R_BIAS_NEAR_ZERO = "bias_near_zero"
R_TOO_FEW_PAIRS = "too_few_pairs"
R_ZERO_VARIANCE = "zero_variance"
R_TOO_FEW_SAMPLES = "too_few_samples"
R_NO_DEFINED_VALUES = "no_defined_values"

DIMENSION_PAIRS: tuple[tuple[Dimension, Dimension], ...] = (
    (Dimension.ECONOMIC, Dimension.SOCIAL),
    (Dimension.ECONOMIC, Dimension.FOREIGN),
    (Dimension.SOCIAL, Dimension.FOREIGN),
)


class BiasGroup(str, Enum):
    LIBERAL = "liberal"
    NEUTRAL = "neutral"
    CONSERVATIVE = "conservative"


@dataclass(frozen=True)
class OutletBias:
    outlet: str
    site_ratings: Mapping[str, Optional[float]]
    composite: float


def composite_bias(outlet: str,
                   site_ratings: Mapping[str, Optional[float]]) -> OutletBias:
    """Arithmetic mean of the present (non-missing) per-site ratings."""
    present = [v for v in site_ratings.values() if v is not None]
    if not present:
        raise ValueError(f"outlet {outlet!r} has no ratings; "
                         "composite bias is undefined")
    return OutletBias(outlet=outlet, site_ratings=dict(site_ratings),
                      composite=sum(present) / len(present))


def bias_group(composite: float, tau: float = DEFAULT_TAU) -> BiasGroup:
    """conservative iff B > tau, liberal iff B < -tau, else neutral."""
    if tau <= 0:
        raise ValueError("tau must be positive")
    if composite > tau:
        return BiasGroup.CONSERVATIVE
    if composite < -tau:
        return BiasGroup.LIBERAL
    return BiasGroup.NEUTRAL


def parse_bias_file(lines: Iterable[str]) -> dict[str, OutletBias]:
    """CSV of outlet,site,rating rows; literal NA marks a missing rating."""
    reader = csv.reader(lines)
    header = next(reader, None)
    if header is None or [h.strip().lower() for h in header] != \
            ["outlet", "site", "rating"]:
        raise ValueError("bias file must have header outlet,site,rating")
    ratings: dict[str, dict[str, Optional[float]]] = {}
    for row in reader:
        if not row or not any(cell.strip() for cell in row):
            continue
        if len(row) != 3:
            raise ValueError(f"bias file row {row!r} does not have 3 columns")
        outlet, site, raw = (cell.strip() for cell in row)
        value = None if raw.upper() == "NA" else float(raw)
        ratings.setdefault(outlet, {})[site] = value
    return {outlet: composite_bias(outlet, sites)
            for outlet, sites in ratings.items()}


@dataclass(frozen=True)
class ArticleIdeology:
    article_id: str
    overall: Optional[float]
    per_dimension: Mapping[Dimension, Optional[float]]


def article_ideology(article: Article,
                     source: str = ADJUDICATED) -> ArticleIdeology:
    """Mean label score across paragraphs: overall over all (paragraph,
    dimension) pairs, and per dimension; absent when nothing qualifies."""
    overall_scores: list[int] = []
    per_dim: dict[Dimension, list[int]] = {d: [] for d in DIMENSIONS}
    for paragraph in article.paragraphs:
        labels = paragraph_labels(paragraph, source)
        if labels is None:
            continue
        for dim, lab in labels.items():
            score = label_score(lab)
            if score is None:
                continue
            overall_scores.append(score)
            per_dim[dim].append(score)
    return ArticleIdeology(
        article_id=article.article_id,
        overall=sum(overall_scores) / len(overall_scores)
                if overall_scores else None,
        per_dimension={d: (sum(v) / len(v) if v else None)
                       for d, v in per_dim.items()})


@dataclass(frozen=True)
class TimeBin:
    start_year: int
    end_year: int     # inclusive

    @property
    def width(self) -> int:
        return self.end_year - self.start_year + 1

    def __contains__(self, year: int) -> bool:
        return self.start_year <= year <= self.end_year


def make_bins(min_year: int, max_year: int, width: int = DEFAULT_BIN_WIDTH,
              anchor: Optional[int] = None) -> list[TimeBin]:
    """Consecutive bins of `width` years from the anchor (default: min_year);
    the last bin is clipped to max_year and may be short."""
    if width < 1:
        raise ValueError("bin width must be >= 1")
    if min_year > max_year:
        raise ValueError(f"empty year range {min_year}-{max_year}")
    start = min_year if anchor is None else anchor
    if start > min_year:
        raise ValueError(f"anchor {start} is after the first year {min_year}")
    bins = []
    while start <= max_year:
        bins.append(TimeBin(start_year=start,
                            end_year=min(start + width - 1, max_year)))
        start += width
    return bins


def corpus_bins(corpus: Corpus, width: int = DEFAULT_BIN_WIDTH,
                anchor: Optional[int] = None) -> list[TimeBin]:
    if not corpus.articles:
        raise ValueError("corpus has no articles to bin")
    years = [a.year for a in corpus.articles]
    return make_bins(min(years), max(years), width=width, anchor=anchor)


@dataclass(frozen=True)
class MeasureValue:
    value: Optional[float]
    signed: Optional[float] = None
    reason: Optional[str] = None


def sorting_measure(ideologies: Sequence[float], bias: float,
                    eps: float = BIAS_EPS) -> MeasureValue:
    """|mean(I) - B| / |B| plus the signed deviation (mean(I) - B) / |B|.

    Division is by |B| so the unsigned measure stays a nonnegative distance
    for liberal (negative-bias) outlets too; absent when no article has a
    defined ideology or |B| < eps.
    """
    if not ideologies:
        return MeasureValue(None, reason=R_NO_ARTICLES)
    if abs(bias) < eps:
        return MeasureValue(None, reason=R_BIAS_NEAR_ZERO)
    mean = sum(ideologies) / len(ideologies)
    signed = (mean - bias) / abs(bias)
    return MeasureValue(value=abs(signed), signed=signed)


def pearson(xs: Sequence[float], ys: Sequence[float]) -> float:
    if len(xs) != len(ys) or len(xs) < 2:
        raise ValueError("pearson needs two equal-length series of >= 2 points")
    n = len(xs)
    mx = sum(xs) / n
    my = sum(ys) / n
    sxy = sum((x - mx) * (y - my) for x, y in zip(xs, ys))
    sxx = sum((x - mx) ** 2 for x in xs)
    syy = sum((y - my) ** 2 for y in ys)
    if sxx == 0.0 or syy == 0.0:
        raise ValueError("pearson is undefined for a zero-variance series")
    return sxy / math.sqrt(sxx * syy)


def constraint_measure(pairs: Sequence[tuple[float, float]],
                       min_pairs: int = MIN_PAIRS) -> MeasureValue:
    """Pearson r over articles defining both dimensions; absent below
    min_pairs or when either series has zero variance."""
    if len(pairs) < min_pairs:
        return MeasureValue(None, reason=R_TOO_FEW_PAIRS)
    xs = [p[0] for p in pairs]
    ys = [p[1] for p in pairs]
    try:
        return MeasureValue(value=pearson(xs, ys))
    except ValueError:
        return MeasureValue(None, reason=R_ZERO_VARIANCE)


def bimodality_coefficient(samples: Sequence[float],
                           corrected: bool = True) -> float:
    """BC = (g1^2 + 1) / (g2 + 3(n-1)^2 / ((n-2)(n-3))).

    g1/g2 are sample skewness and excess kurtosis with the standard
    small-sample bias corrections (set corrected=False for raw population
    moments, where the denominator correction reduces to +3). Ranges from 0
    (unimodal) to 1; a uniform distribution sits at 5/9.
    """
    n = len(samples)
    if n < 4:
        raise ValueError(f"bimodality coefficient needs n >= 4, got {n}")
    mean = sum(samples) / n
    devs = [x - mean for x in samples]
    m2 = sum(d ** 2 for d in devs) / n
    if m2 == 0.0:
        raise ValueError("bimodality coefficient is undefined at zero variance")
    m3 = sum(d ** 3 for d in devs) / n
    m4 = sum(d ** 4 for d in devs) / n
    g1 = m3 / m2 ** 1.5
    g2 = m4 / m2 ** 2 - 3.0
    if corrected:
        skew = g1 * math.sqrt(n * (n - 1)) / (n - 2)
        kurt = ((n + 1) * g2 + 6) * (n - 1) / ((n - 2) * (n - 3))
        correction = 3.0 * (n - 1) ** 2 / ((n - 2) * (n - 3))
    else:
        skew, kurt, correction = g1, g2, 3.0
    return (skew ** 2 + 1.0) / (kurt + correction)


@dataclass(frozen=True)
class SeriesPoint:
    bin: TimeBin
    value: Optional[float]
    signed: Optional[float] = None
    flag: Optional[str] = None
    reason: Optional[str] = None
    count: int = 0


@dataclass(frozen=True)
class PolarizationSeries:
    measure: str                    # "sorting" | "constraint" | "divergence"
    stratum: str
    points: tuple[SeriesPoint, ...]
    metadata: Mapping[str, object] = field(default_factory=dict)


def _ideology_by_outlet_bin(corpus: Corpus, bins: Sequence[TimeBin],
                            source: str,
                            ) -> dict[str, dict[TimeBin, list[ArticleIdeology]]]:
    table: dict[str, dict[TimeBin, list[ArticleIdeology]]] = {}
    for article in corpus.articles:
        target = next((b for b in bins if article.year in b), None)
        if target is None:
            continue
        table.setdefault(article.outlet, {b: [] for b in bins})
        table[article.outlet][target].append(article_ideology(article, source))
    return table


def sorting_series(corpus: Corpus, biases: Mapping[str, OutletBias],
                   bins: Sequence[TimeBin], eps: float = BIAS_EPS,
                   source: str = ADJUDICATED,
                   ) -> dict[str, PolarizationSeries]:
    """Per-outlet sorting series over the bins; outlets without a bias
    rating are left out."""
    by_outlet = _ideology_by_outlet_bin(corpus, bins, source)
    series = {}
    for outlet in sorted(set(by_outlet) & set(biases)):
        bias = biases[outlet].composite
        points = []
        for b in bins:
            values = [i.overall for i in by_outlet[outlet][b]
                      if i.overall is not None]
            mv = sorting_measure(values, bias, eps=eps)
            points.append(SeriesPoint(bin=b, value=mv.value, signed=mv.signed,
                                      reason=mv.reason, count=len(values)))
        series[outlet] = PolarizationSeries(
            measure="sorting", stratum=f"outlet:{outlet}",
            points=tuple(points), metadata={"bias": bias, "eps": eps})
    return series


def constraint_series(corpus: Corpus, dims: tuple[Dimension, Dimension],
                      bins: Sequence[TimeBin], min_pairs: int = MIN_PAIRS,
                      source: str = ADJUDICATED,
                      ) -> dict[str, PolarizationSeries]:
    """Per-outlet issue-constraint series for one pair of dimensions."""
    d1, d2 = dims
    by_outlet = _ideology_by_outlet_bin(corpus, bins, source)
    series = {}
    for outlet in sorted(by_outlet):
        points = []
        for b in bins:
            pairs = [(i.per_dimension[d1], i.per_dimension[d2])
                     for i in by_outlet[outlet][b]
                     if i.per_dimension[d1] is not None
                     and i.per_dimension[d2] is not None]
            mv = constraint_measure(pairs, min_pairs=min_pairs)
            points.append(SeriesPoint(bin=b, value=mv.value, reason=mv.reason,
                                      count=len(pairs)))
        series[outlet] = PolarizationSeries(
            measure="constraint",
            stratum=f"outlet:{outlet}/{d1.value}-{d2.value}",
            points=tuple(points), metadata={"min_pairs": min_pairs})
    return series


def divergence_series(corpus: Corpus, dimension: Dimension,
                      bins: Sequence[TimeBin],
                      threshold: float = BC_THRESHOLD,
                      corrected: bool = True,
                      source: str = ADJUDICATED) -> PolarizationSeries:
    """Bimodality coefficient of per-dimension article ideology, pooled
    across all outlets per bin; each defined point is flagged "bimodal"
    when BC exceeds the threshold."""
    pooled: dict[TimeBin, list[float]] = {b: [] for b in bins}
    for article in corpus.articles:
        target = next((b for b in bins if article.year in b), None)
        if target is None:
            continue
        value = article_ideology(article, source).per_dimension[dimension]
        if value is not None:
            pooled[target].append(value)
    points = []
    for b in bins:
        samples = pooled[b]
        if len(samples) < 4:
            points.append(SeriesPoint(bin=b, value=None,
                                      reason=R_TOO_FEW_SAMPLES,
                                      count=len(samples)))
            continue
        try:
            bc = bimodality_coefficient(samples, corrected=corrected)
        except ValueError:
            points.append(SeriesPoint(bin=b, value=None,
                                      reason=R_ZERO_VARIANCE,
                                      count=len(samples)))
            continue
        points.append(SeriesPoint(bin=b, value=bc,
                                  flag="bimodal" if bc > threshold else None,
                                  count=len(samples)))
    return PolarizationSeries(
        measure="divergence", stratum=f"dimension:{dimension.value}",
        points=tuple(points),
        metadata={"threshold": threshold, "corrected": corrected})


def group_series(per_outlet: Mapping[str, PolarizationSeries],
                 groups: Mapping[str, BiasGroup],
                 stratum_suffix: str = "") -> dict[BiasGroup, PolarizationSeries]:
    """Average per-outlet series within each proclaimed-bias group.

    Per bin, the unweighted mean of the defined per-outlet values (and of
    the signed values, where present); absent with a reason when no outlet
    in the group defines the bin.
    """
    members: dict[BiasGroup, list[PolarizationSeries]] = {}
    for outlet, series in per_outlet.items():
        group = groups.get(outlet)
        if group is not None:
            members.setdefault(group, []).append(series)
    result = {}
    for group in sorted(members, key=lambda g: g.value):
        series_list = members[group]
        bins = [p.bin for p in series_list[0].points]
        points = []
        for i, b in enumerate(bins):
            values = [s.points[i].value for s in series_list
                      if s.points[i].value is not None]
            signed = [s.points[i].signed for s in series_list
                      if s.points[i].signed is not None]
            count = sum(s.points[i].count for s in series_list)
            if values:
                points.append(SeriesPoint(
                    bin=b, value=sum(values) / len(values),
                    signed=sum(signed) / len(signed) if signed else None,
                    count=count))
            else:
                points.append(SeriesPoint(bin=b, value=None,
                                          reason=R_NO_DEFINED_VALUES,
                                          count=count))
        measure = series_list[0].measure
        result[group] = PolarizationSeries(
            measure=measure, stratum=f"group:{group.value}{stratum_suffix}",
            points=tuple(points),
            metadata={"outlets": sorted(s.stratum for s in series_list)})
    return result


def pooled_group_sorting(corpus: Corpus, biases: Mapping[str, OutletBias],
                         bins: Sequence[TimeBin], tau: float = DEFAULT_TAU,
                         eps: float = BIAS_EPS, source: str = ADJUDICATED,
                         ) -> dict[BiasGroup, PolarizationSeries]:
    """Alternative grouping: pool a group's articles and measure against the
    mean composite bias of its member outlets."""
    group_of = {outlet: bias_group(b.composite, tau)
                for outlet, b in biases.items()}
    by_outlet = _ideology_by_outlet_bin(corpus, bins, source)
    result = {}
    for group in sorted(set(group_of.values()), key=lambda g: g.value):
        outlets = sorted(o for o, g in group_of.items() if g is group)
        bias = sum(biases[o].composite for o in outlets) / len(outlets)
        points = []
        for b in bins:
            values = [i.overall for o in outlets if o in by_outlet
                      for i in by_outlet[o][b] if i.overall is not None]
            mv = sorting_measure(values, bias, eps=eps)
            points.append(SeriesPoint(bin=b, value=mv.value, signed=mv.signed,
                                      reason=mv.reason, count=len(values)))
        result[group] = PolarizationSeries(
            measure="sorting", stratum=f"group:{group.value}",
            points=tuple(points),
            metadata={"bias": bias, "eps": eps, "pooled": True,
                      "outlets": outlets})
    return result
