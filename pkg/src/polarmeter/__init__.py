"""polarmeter: corpus analytics and polarization measures for paragraph-level
multi-dimensional ideology annotations."""

__version__ = "0.1.0"

from .corpus import (Article, Corpus, Dimension, DimensionLabel, Paragraph,
                     label_score, parse_corpus, select_labels, validate)

__all__ = [
    "__version__",
    "Article", "Corpus", "Dimension", "DimensionLabel", "Paragraph",
    "label_score", "parse_corpus", "select_labels", "validate",
]
