import random
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from polarmeter.corpus import (AnnotationSet, Article, Corpus, Dimension,
                               DimensionLabel, DIMENSIONS, Paragraph)

L = DimensionLabel.LIBERAL
N = DimensionLabel.NEUTRAL
C = DimensionLabel.CONSERVATIVE
I = DimensionLabel.IRRELEVANT

ECON = Dimension.ECONOMIC
SOC = Dimension.SOCIAL
FGN = Dimension.FOREIGN


def labels(econ=I, social=I, foreign=I):
    return {ECON: econ, SOC: social, FGN: foreign}


def make_paragraph(index, adjudicated=None, annotations=(), text="some text"):
    return Paragraph(index=index, text=text,
                     annotations=tuple(
                         AnnotationSet(annotator_id=aid, labels=labs)
                         for aid, labs in annotations),
                     adjudicated=adjudicated)


def make_article(article_id, outlet="NYT", year=1950, paragraphs=()):
    return Article(article_id=article_id, outlet=outlet, year=year,
                   paragraphs=tuple(paragraphs))


def random_corpus(rng: random.Random, max_articles=30) -> Corpus:
    """A random but always-valid corpus with adjudicated and raw labels."""
    outlets = ["CSM", "CT", "NYT", "TM", "WSJ"]
    all_labels = list(DimensionLabel)
    articles = []
    for a in range(rng.randint(1, max_articles)):
        paragraphs = []
        for p in range(rng.randint(1, 5)):
            adjudicated = None
            if rng.random() < 0.9:
                adjudicated = {d: rng.choice(all_labels) for d in DIMENSIONS}
            annotations = []
            for annotator in ("A1", "A2", "A3"):
                if rng.random() < 0.7:
                    annotations.append((annotator,
                                        {d: rng.choice(all_labels)
                                         for d in DIMENSIONS}))
            paragraphs.append(make_paragraph(p, adjudicated=adjudicated,
                                             annotations=annotations,
                                             text=f"paragraph {a}-{p}"))
        articles.append(make_article(f"art-{a:03d}",
                                     outlet=rng.choice(outlets),
                                     year=rng.randint(1947, 1974),
                                     paragraphs=paragraphs))
    return Corpus(articles=tuple(articles))


@pytest.fixture
def tiny_corpus():
    """Two articles, fully adjudicated, two annotators on every paragraph."""
    a1 = make_article("a1", outlet="NYT", year=1950, paragraphs=[
        make_paragraph(0, adjudicated=labels(econ=L, social=N),
                       annotations=[("A1", labels(econ=L, social=N)),
                                    ("A2", labels(econ=L, social=L))]),
        make_paragraph(1, adjudicated=labels(econ=C),
                       annotations=[("A1", labels(econ=C)),
                                    ("A2", labels(econ=C))]),
    ])
    a2 = make_article("a2", outlet="WSJ", year=1962, paragraphs=[
        make_paragraph(0, adjudicated=labels(foreign=C),
                       annotations=[("A1", labels(foreign=C)),
                                    ("A3", labels(foreign=N))]),
    ])
    return Corpus(articles=(a1, a2))
