"""Inter-annotator agreement: Krippendorff's alpha over paragraph units.

Alpha is computed with the coincidence-matrix formulation for nominal data
(disagreement 0 for equal labels, 1 otherwise), which tolerates units with
missing annotators: units holding fewer than two labels contribute nothing
to the coincidences but are retained for reporting.
"""

from __future__ import annotations

import warnings
from collections import Counter
from dataclasses import dataclass
from typing import Hashable

from .corpus import Corpus, Dimension, DimensionLabel

INCLUDE_IRRELEVANT_DEFAULT = True


class AgreementError(Exception):
    """Raised when alpha is undefined for the given reliability data."""


@dataclass(frozen=True)
class ReliabilityUnit:
    unit_id: tuple[str, int]          # (article_id, paragraph_index)
    values: tuple[Hashable, ...]      # labels assigned by available annotators


@dataclass(frozen=True)
class ReliabilityMatrix:
    units: tuple[ReliabilityUnit, ...]
    label_domain: frozenset


@dataclass(frozen=True)
class AgreementResult:
    alpha: float
    pairable_values: int
    observed_disagreement: float
    expected_disagreement: float


def build_reliability(corpus: Corpus, dimension: Dimension,
                      include_irrelevant: bool = INCLUDE_IRRELEVANT_DEFAULT,
                      ) -> ReliabilityMatrix:
    """One unit per paragraph, holding each annotator's label on `dimension`.

    With include_irrelevant=False, `irrelevant` labels are dropped from the
    unit (treating relevance itself as missing data rather than a category).
    """
    units = []
    for article in corpus.articles:
        for paragraph in article.paragraphs:
            values = []
            for annotation in paragraph.annotations:
                label = annotation.labels.get(dimension)
                if label is None:
                    continue
                if not include_irrelevant and label is DimensionLabel.IRRELEVANT:
                    continue
                values.append(label)
            units.append(ReliabilityUnit(
                unit_id=(article.article_id, paragraph.index),
                values=tuple(values)))
    domain = set(DimensionLabel)
    if not include_irrelevant:
        domain.discard(DimensionLabel.IRRELEVANT)
    return ReliabilityMatrix(units=tuple(units), label_domain=frozenset(domain))


def krippendorff_alpha(matrix: ReliabilityMatrix) -> AgreementResult:
    """Nominal-metric alpha = 1 - D_o/D_e over the coincidence matrix.

    Degenerate case: if every pairable value is identical, D_e = 0 and alpha
    is defined as 1 (perfect agreement) with a warning. No pairable values
    at all is an error.
    """
    pairable = [u.values for u in matrix.units if len(u.values) >= 2]
    n = sum(len(values) for values in pairable)
    if n == 0:
        raise AgreementError("no units with two or more labels; "
                             "alpha is undefined")

    coincidence: Counter[tuple[Hashable, Hashable]] = Counter()
    marginals: Counter[Hashable] = Counter()
    for values in pairable:
        m = len(values)
        weight = 1.0 / (m - 1)
        for i, a in enumerate(values):
            marginals[a] += 1
            for j, b in enumerate(values):
                if i != j:
                    coincidence[(a, b)] += weight

    d_obs = sum(count for (a, b), count in coincidence.items() if a != b) / n
    d_exp = sum(marginals[a] * marginals[b]
                for a in marginals for b in marginals if a != b) / (n * (n - 1))

    if d_exp == 0.0:
        warnings.warn("all pairable values are identical; "
                      "expected disagreement is 0, reporting alpha = 1")
        alpha = 1.0
    else:
        alpha = 1.0 - d_obs / d_exp
    return AgreementResult(alpha=alpha, pairable_values=n,
                           observed_disagreement=d_obs,
                           expected_disagreement=d_exp)


def disagreements(corpus: Corpus, dimension: Dimension,
                  ) -> list[tuple[str, int, Counter]]:
    """Paragraphs where two or more annotators assigned distinct labels.

    Returns (article_id, paragraph_index, label multiset) sorted by id and
    index; paragraphs with a single annotator can never be listed.
    """
    found = []
    for article in corpus.articles:
        for paragraph in article.paragraphs:
            labels = [annotation.labels[dimension]
                      for annotation in paragraph.annotations
                      if dimension in annotation.labels]
            if len(labels) >= 2 and len(set(labels)) >= 2:
                found.append((article.article_id, paragraph.index,
                              Counter(labels)))
    found.sort(key=lambda item: (item[0], item[1]))
    return found
