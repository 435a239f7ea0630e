import io
import json
import random

import pytest

from conftest import (C, ECON, FGN, I, L, N, SOC, labels, make_article,
                      make_paragraph, random_corpus)
from polarmeter.corpus import (Corpus, Dimension, DimensionLabel, ParseError,
                               dumps_corpus, label_score, parse_corpus,
                               select_labels, serialize_article, validate)

ARTICLE_LINE = json.dumps({
    "article_id": "a1", "outlet": "NYT", "year": 1950,
    "paragraphs": [
        {"index": 0, "text": "first",
         "annotations": [{"annotator": "A1",
                          "labels": {"economic": "liberal",
                                     "social": "neutral",
                                     "foreign": "irrelevant"}}],
         "adjudicated": {"economic": "liberal", "social": "neutral",
                         "foreign": "irrelevant"}},
        {"index": 1, "text": "second", "annotations": [],
         "adjudicated": None},
    ]})


class TestParse:
    def test_round_trip_of_declared_schema(self):
        corpus = parse_corpus(io.StringIO(ARTICLE_LINE + "\n"))
        assert len(corpus) == 1
        article = corpus.articles[0]
        assert article.outlet == "NYT"
        assert len(article.paragraphs) == 2
        assert article.paragraphs[0].adjudicated[ECON] == L
        assert article.paragraphs[0].annotations[0].annotator_id == "A1"
        assert article.paragraphs[1].adjudicated is None

    def test_empty_stream(self):
        assert len(parse_corpus(io.StringIO(""))) == 0
        assert len(parse_corpus(io.StringIO("\n\n"))) == 0

    def test_unknown_label_names_value_and_line(self):
        line = ARTICLE_LINE.replace('"liberal"', '"centrist"')
        with pytest.raises(ParseError) as err:
            parse_corpus(io.StringIO("\n" + line))
        assert "centrist" in str(err.value)
        assert "line 2" in str(err.value)
        assert err.value.lineno == 2

    def test_malformed_json_carries_line_number(self):
        with pytest.raises(ParseError) as err:
            parse_corpus(io.StringIO(ARTICLE_LINE + "\n{not json\n"))
        assert err.value.lineno == 2

    def test_duplicate_article_id_rejected(self):
        with pytest.raises(ParseError) as err:
            parse_corpus(io.StringIO(ARTICLE_LINE + "\n" + ARTICLE_LINE))
        assert "duplicate" in str(err.value)

    def test_missing_required_key(self):
        doc = json.loads(ARTICLE_LINE)
        del doc["outlet"]
        with pytest.raises(ParseError) as err:
            parse_corpus(io.StringIO(json.dumps(doc)))
        assert "outlet" in str(err.value)

    def test_unknown_keys_ignored_with_warning(self, caplog):
        doc = json.loads(ARTICLE_LINE)
        doc["source_url"] = "http://example.com"
        with caplog.at_level("WARNING"):
            corpus = parse_corpus(io.StringIO(json.dumps(doc)))
        assert len(corpus) == 1
        assert any("source_url" in r.message for r in caplog.records)

    def test_round_trip_on_random_corpora(self):
        rng = random.Random(11)
        for _ in range(10):
            corpus = random_corpus(rng)
            again = parse_corpus(io.StringIO(dumps_corpus(corpus)))
            assert again == corpus

    def test_serializer_output_validates_clean(self):
        rng = random.Random(13)
        for _ in range(10):
            corpus = parse_corpus(io.StringIO(dumps_corpus(random_corpus(rng))))
            assert validate(corpus).errors == []


class TestValidate:
    def test_well_formed_corpus_has_no_errors(self, tiny_corpus):
        assert validate(tiny_corpus).ok

    def test_duplicate_article_id(self):
        article = make_article("dup", paragraphs=[make_paragraph(0)])
        report = validate(Corpus(articles=(article, article)))
        assert len(report.errors) == 1
        assert "duplicate" in report.errors[0].message

    def test_adjudicated_missing_foreign_dimension(self):
        bad = make_article("a1", paragraphs=[
            make_paragraph(0, adjudicated={ECON: L, SOC: N})])
        report = validate(Corpus(articles=(bad,)))
        assert len(report.errors) == 1
        issue = report.errors[0]
        assert issue.article_id == "a1"
        assert issue.paragraph_index == 0
        assert "foreign" in issue.message

    def test_non_contiguous_indices(self):
        bad = make_article("a1", paragraphs=[make_paragraph(0),
                                             make_paragraph(2)])
        report = validate(Corpus(articles=(bad,)))
        assert any("contiguous" in e.message for e in report.errors)

    def test_year_window(self):
        old = make_article("a1", year=1776, paragraphs=[make_paragraph(0)])
        assert not validate(Corpus(articles=(old,))).ok
        assert validate(Corpus(articles=(old,)),
                        year_range=(1700, 2100)).ok

    def test_duplicate_annotators_in_paragraph(self):
        bad = make_article("a1", paragraphs=[make_paragraph(
            0, annotations=[("A1", labels(econ=L)), ("A1", labels(econ=C))])])
        report = validate(Corpus(articles=(bad,)))
        assert any("annotator" in e.message for e in report.errors)

    def test_errors_sorted_deterministically(self):
        articles = (
            make_article("b", paragraphs=[
                make_paragraph(0, adjudicated={ECON: L})]),
            make_article("a", year=1500, paragraphs=[make_paragraph(0)]),
        )
        report = validate(Corpus(articles=articles))
        assert [e.article_id for e in report.errors] == ["a", "b"]


class TestLabelScore:
    def test_scores(self):
        assert label_score(L) == -1
        assert label_score(N) == 0
        assert label_score(C) == 1

    def test_irrelevant_is_absent(self):
        assert label_score(I) is None

    def test_total_on_scored_labels(self):
        for label in DimensionLabel:
            score = label_score(label)
            assert (score is None) == (label is I)


class TestSelectLabels:
    def test_adjudicated_yields_all_when_fully_adjudicated(self, tiny_corpus):
        view = select_labels(tiny_corpus, "adjudicated")
        assert len(view) == 3
        assert view.skipped == 0

    def test_unknown_annotator_gives_empty_view_with_skip_count(self, tiny_corpus):
        view = select_labels(tiny_corpus, "annotator:A9")
        assert len(view) == 0
        assert view.skipped == 3

    def test_mixed_corpus_only_adjudicated(self):
        article = make_article("a1", paragraphs=[
            make_paragraph(0, adjudicated=labels(econ=L)),
            make_paragraph(1)])
        view = select_labels(Corpus(articles=(article,)))
        assert len(view) == 1
        assert view.skipped == 1

    def test_annotator_view(self, tiny_corpus):
        view = select_labels(tiny_corpus, "annotator:A3")
        assert len(view) == 1
        assert view.skipped == 2
        _, paragraph, labs = view.items[0]
        assert labs[FGN] == N

    def test_bad_source_rejected(self, tiny_corpus):
        with pytest.raises(ValueError):
            select_labels(tiny_corpus, "majority-vote")


def test_serialize_article_is_stable(tiny_corpus):
    first = serialize_article(tiny_corpus.articles[0])
    second = serialize_article(tiny_corpus.articles[0])
    assert first == second
    parsed = json.loads(first)
    assert parsed["paragraphs"][0]["index"] == 0
    assert parsed["paragraphs"][0]["adjudicated"]["economic"] == "liberal"
