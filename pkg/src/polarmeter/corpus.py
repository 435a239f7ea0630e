"""Data model and on-disk format for paragraph-level ideology annotations.

A corpus is line-delimited JSON, one article per line:

    {"article_id": "a1", "outlet": "NYT", "year": 1952,
     "paragraphs": [
        {"index": 0, "text": "...",
         "annotations": [{"annotator": "A1",
                          "labels": {"economic": "liberal",
                                     "social": "neutral",
                                     "foreign": "irrelevant"}}],
         "adjudicated": {"economic": "liberal", "social": "neutral",
                         "foreign": "irrelevant"}}]}

Label strings are "liberal" | "neutral" | "conservative" | "irrelevant",
lowercase and exact. ``adjudicated`` may be null (or missing). Unknown keys
are ignored with a warning so newer files stay readable by older tooling.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Iterator, Mapping, Optional

log = logging.getLogger(__name__)

CANONICAL_OUTLETS = ("CSM", "CT", "NYT", "TM", "WSJ")
DEFAULT_YEAR_RANGE = (1900, 2100)


class Dimension(str, Enum):
    ECONOMIC = "economic"
    SOCIAL = "social"
    FOREIGN = "foreign"


class DimensionLabel(str, Enum):
    LIBERAL = "liberal"
    NEUTRAL = "neutral"
    CONSERVATIVE = "conservative"
    IRRELEVANT = "irrelevant"


DIMENSIONS = tuple(Dimension)
SCORED_LABELS = (DimensionLabel.LIBERAL, DimensionLabel.NEUTRAL,
                 DimensionLabel.CONSERVATIVE)

_SCORES = {
    DimensionLabel.LIBERAL: -1,
    DimensionLabel.NEUTRAL: 0,
    DimensionLabel.CONSERVATIVE: 1,
}


def label_score(label: DimensionLabel) -> Optional[int]:
    """Numeric leaning of a label: liberal -1, neutral 0, conservative +1.

    Returns None for ``irrelevant``, which never participates in scoring.
    """
    return _SCORES.get(label)


class CorpusError(Exception):
    """Base class for corpus I/O and validation failures."""


class ParseError(CorpusError):
    """Raised when an input line cannot be turned into an Article."""

    def __init__(self, message: str, lineno: int):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


@dataclass(frozen=True)
class AnnotationSet:
    """One annotator's labels for a paragraph, keyed by dimension."""
    annotator_id: str
    labels: Mapping[Dimension, DimensionLabel]


@dataclass(frozen=True)
class Paragraph:
    index: int
    text: str
    annotations: tuple[AnnotationSet, ...] = ()
    adjudicated: Optional[Mapping[Dimension, DimensionLabel]] = None


@dataclass(frozen=True)
class Article:
    article_id: str
    outlet: str
    year: int
    paragraphs: tuple[Paragraph, ...]


@dataclass(frozen=True)
class Corpus:
    articles: tuple[Article, ...]

    def __len__(self) -> int:
        return len(self.articles)

    def paragraph_count(self) -> int:
        return sum(len(a.paragraphs) for a in self.articles)


@dataclass(frozen=True)
class ValidationIssue:
    article_id: str
    paragraph_index: Optional[int]
    message: str


@dataclass
class ValidationReport:
    errors: list[ValidationIssue] = field(default_factory=list)
    warnings: list[ValidationIssue] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors


_ARTICLE_KEYS = {"article_id", "outlet", "year", "paragraphs"}
_PARAGRAPH_KEYS = {"index", "text", "annotations", "adjudicated"}
_ANNOTATION_KEYS = {"annotator", "labels"}


def _parse_label(value: object, lineno: int) -> DimensionLabel:
    try:
        return DimensionLabel(value)
    except ValueError:
        raise ParseError(f"unknown label {value!r}", lineno) from None


def _parse_labels(raw: object, lineno: int) -> dict[Dimension, DimensionLabel]:
    if not isinstance(raw, dict):
        raise ParseError(f"labels must be an object, got {type(raw).__name__}", lineno)
    labels: dict[Dimension, DimensionLabel] = {}
    for key, value in raw.items():
        try:
            dim = Dimension(key)
        except ValueError:
            log.warning("line %d: ignoring unknown dimension key %r", lineno, key)
            continue
        labels[dim] = _parse_label(value, lineno)
    return labels


def _require(raw: dict, key: str, kind: type, lineno: int, where: str):
    if key not in raw:
        raise ParseError(f"{where} is missing required key {key!r}", lineno)
    value = raw[key]
    if kind is int and isinstance(value, bool):
        raise ParseError(f"{where} key {key!r} must be {kind.__name__}", lineno)
    if not isinstance(value, kind):
        raise ParseError(f"{where} key {key!r} must be {kind.__name__}, "
                         f"got {type(value).__name__}", lineno)
    return value


def _warn_unknown(raw: dict, known: set[str], lineno: int, where: str) -> None:
    for key in raw.keys() - known:
        log.warning("line %d: ignoring unknown %s key %r", lineno, where, key)


def _parse_annotation(raw: object, lineno: int) -> AnnotationSet:
    if not isinstance(raw, dict):
        raise ParseError("annotation must be an object", lineno)
    _warn_unknown(raw, _ANNOTATION_KEYS, lineno, "annotation")
    annotator = _require(raw, "annotator", str, lineno, "annotation")
    labels = _parse_labels(_require(raw, "labels", dict, lineno, "annotation"), lineno)
    return AnnotationSet(annotator_id=annotator, labels=labels)


def _parse_paragraph(raw: object, lineno: int) -> Paragraph:
    if not isinstance(raw, dict):
        raise ParseError("paragraph must be an object", lineno)
    _warn_unknown(raw, _PARAGRAPH_KEYS, lineno, "paragraph")
    index = _require(raw, "index", int, lineno, "paragraph")
    text = _require(raw, "text", str, lineno, "paragraph")
    annotations = raw.get("annotations") or []
    if not isinstance(annotations, list):
        raise ParseError("paragraph key 'annotations' must be a list", lineno)
    adjudicated = raw.get("adjudicated")
    return Paragraph(
        index=index,
        text=text,
        annotations=tuple(_parse_annotation(a, lineno) for a in annotations),
        adjudicated=None if adjudicated is None else _parse_labels(adjudicated, lineno),
    )


def _parse_article(raw: object, lineno: int) -> Article:
    if not isinstance(raw, dict):
        raise ParseError("article must be a JSON object", lineno)
    _warn_unknown(raw, _ARTICLE_KEYS, lineno, "article")
    paragraphs = _require(raw, "paragraphs", list, lineno, "article")
    return Article(
        article_id=_require(raw, "article_id", str, lineno, "article"),
        outlet=_require(raw, "outlet", str, lineno, "article"),
        year=_require(raw, "year", int, lineno, "article"),
        paragraphs=tuple(_parse_paragraph(p, lineno) for p in paragraphs),
    )


def parse_corpus(stream: Iterable[str]) -> Corpus:
    """Parse line-delimited JSON articles into a Corpus.

    Blank lines are skipped. Raises ParseError (with the 1-based line
    number) on malformed JSON, unknown label strings, schema-type
    mismatches, and duplicate article ids. Value-level invariants
    (contiguous indices, year window, ...) are the job of validate().
    """
    articles: list[Article] = []
    seen: set[str] = set()
    for lineno, line in enumerate(stream, start=1):
        if not line.strip():
            continue
        try:
            raw = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc.msg}", lineno) from None
        article = _parse_article(raw, lineno)
        if article.article_id in seen:
            raise ParseError(f"duplicate article_id {article.article_id!r}", lineno)
        seen.add(article.article_id)
        articles.append(article)
    return Corpus(articles=tuple(articles))


def load_corpus(path) -> Corpus:
    with open(path, encoding="utf-8") as handle:
        return parse_corpus(handle)


def serialize_article(article: Article) -> str:
    """One JSON line per article; key order fixed so output is byte-stable."""
    doc = {
        "article_id": article.article_id,
        "outlet": article.outlet,
        "year": article.year,
        "paragraphs": [
            {
                "index": p.index,
                "text": p.text,
                "annotations": [
                    {"annotator": a.annotator_id,
                     "labels": {d.value: l.value for d, l in a.labels.items()}}
                    for a in p.annotations
                ],
                "adjudicated": None if p.adjudicated is None else
                               {d.value: l.value for d, l in p.adjudicated.items()},
            }
            for p in article.paragraphs
        ],
    }
    return json.dumps(doc, ensure_ascii=False)


def serialize_corpus(corpus: Corpus) -> Iterator[str]:
    for article in corpus.articles:
        yield serialize_article(article)


def dumps_corpus(corpus: Corpus) -> str:
    return "".join(line + "\n" for line in serialize_corpus(corpus))


def validate(corpus: Corpus,
             year_range: tuple[int, int] = DEFAULT_YEAR_RANGE) -> ValidationReport:
    """Check every type invariant; violations are reported, never raised.

    Issues are ordered by (article_id, paragraph_index, message) so reports
    are deterministic.
    """
    errors: list[ValidationIssue] = []
    seen_ids: set[str] = set()
    lo, hi = year_range
    for article in corpus.articles:
        aid = article.article_id
        if aid in seen_ids:
            errors.append(ValidationIssue(aid, None, "duplicate article_id"))
        seen_ids.add(aid)
        if not (lo <= article.year <= hi):
            errors.append(ValidationIssue(
                aid, None, f"year {article.year} outside validity window {lo}-{hi}"))
        if not article.paragraphs:
            errors.append(ValidationIssue(aid, None, "article has no paragraphs"))
        indices = [p.index for p in article.paragraphs]
        if indices != list(range(len(indices))):
            errors.append(ValidationIssue(
                aid, None, f"paragraph indices {indices} are not contiguous from 0"))
        for paragraph in article.paragraphs:
            pidx = paragraph.index
            annotators = [a.annotator_id for a in paragraph.annotations]
            if len(annotators) != len(set(annotators)):
                errors.append(ValidationIssue(
                    aid, pidx, "duplicate annotator ids within paragraph"))
            for annotation in paragraph.annotations:
                missing = [d.value for d in DIMENSIONS if d not in annotation.labels]
                if missing:
                    errors.append(ValidationIssue(
                        aid, pidx,
                        f"annotation by {annotation.annotator_id!r} missing "
                        f"dimensions: {', '.join(missing)}"))
            if paragraph.adjudicated is not None:
                missing = [d.value for d in DIMENSIONS
                           if d not in paragraph.adjudicated]
                if missing:
                    errors.append(ValidationIssue(
                        aid, pidx,
                        f"adjudicated labels missing dimensions: {', '.join(missing)}"))
    errors.sort(key=lambda e: (e.article_id,
                               -1 if e.paragraph_index is None else e.paragraph_index,
                               e.message))
    return ValidationReport(errors=errors)


ADJUDICATED = "adjudicated"
ANNOTATOR_PREFIX = "annotator:"


def paragraph_labels(paragraph: Paragraph,
                     source: str = ADJUDICATED,
                     ) -> Optional[Mapping[Dimension, DimensionLabel]]:
    """Labels of one paragraph under a source: "adjudicated" or "annotator:<id>".

    Returns None when the paragraph lacks the requested source.
    """
    if source == ADJUDICATED:
        return paragraph.adjudicated
    if source.startswith(ANNOTATOR_PREFIX):
        wanted = source[len(ANNOTATOR_PREFIX):]
        for annotation in paragraph.annotations:
            if annotation.annotator_id == wanted:
                return annotation.labels
        return None
    raise ValueError(f"unknown label source {source!r}; "
                     f"expected 'adjudicated' or 'annotator:<id>'")


@dataclass(frozen=True)
class LabelSelection:
    """Per-paragraph label view plus the count of paragraphs it skipped."""
    items: tuple[tuple[Article, Paragraph, Mapping[Dimension, DimensionLabel]], ...]
    skipped: int
    source: str

    def __iter__(self):
        return iter(self.items)

    def __len__(self) -> int:
        return len(self.items)


def select_labels(corpus: Corpus, source: str = ADJUDICATED) -> LabelSelection:
    """Yield (article, paragraph, labels) for paragraphs carrying the source.

    Paragraphs lacking the source are skipped and counted, so an annotator id
    that never appears gives an empty view with skipped == paragraph count.
    """
    items = []
    skipped = 0
    for article in corpus.articles:
        for paragraph in article.paragraphs:
            labels = paragraph_labels(paragraph, source)
            if labels is None:
                skipped += 1
            else:
                items.append((article, paragraph, labels))
    return LabelSelection(items=tuple(items), skipped=skipped, source=source)
