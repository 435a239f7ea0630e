import math
import random

import numpy as np
import pytest

from conftest import (C, ECON, L, labels, make_article, make_paragraph,
                      random_corpus)
from oracles import macro_f1_by_confusion
from polarmeter.corpus import Corpus
from polarmeter.lexical import (DocTermMatrix, build_matrix, build_vocab,
                                evaluate, focal_loss, predict, split_by_article,
                                tokenize, top_terms, train_binary_lr,
                                train_multinomial_focal)


class TestTokenize:
    def test_lowercase_and_dedup_punctuation(self):
        assert tokenize("Tax, tax TAX!") == ["tax", "tax", "tax"]

    def test_empty(self):
        assert tokenize("") == []

    def test_split_on_non_alphanumerics_keeps_digits(self):
        assert tokenize("anti-poverty $3.5 billion") == \
            ["anti", "poverty", "3", "5", "billion"]


class TestVocabulary:
    def test_min_df_keeps_shared_terms(self):
        vocab = build_vocab([["budget", "cut"], ["budget", "tax"]], min_df=2)
        assert "budget" in vocab.index
        assert "cut" not in vocab.index

    def test_min_df_too_high_is_an_error(self):
        with pytest.raises(ValueError):
            build_vocab([["a"], ["b"]], min_df=3)

    def test_df_matches_recount_oracle(self):
        rng = random.Random(3)
        terms = ["tax", "war", "school", "budget", "farm"]
        docs = [[rng.choice(terms) for _ in range(rng.randint(1, 8))]
                for _ in range(20)]
        vocab = build_vocab(docs, min_df=1)
        for term in vocab.terms:
            expected = sum(1 for d in docs if term in d)
            assert vocab.doc_frequency[term] == expected
        # deterministic order: df desc, then term asc
        keys = [(-vocab.doc_frequency[t], t) for t in vocab.terms]
        assert keys == sorted(keys)


def toy_matrix(docs, min_df=1, binary=False):
    vocab = build_vocab(docs, min_df=min_df)
    ids = [("a", i) for i in range(len(docs))]
    return build_matrix(list(zip(ids, docs)), vocab, binary=binary)


SEPARABLE_DOCS = [
    ["tax", "cut", "now"], ["tax", "relief", "plan"],
    ["tax", "tax", "economy"], ["business", "tax", "growth"],
    ["school", "funding", "now"], ["school", "lunch", "plan"],
    ["school", "school", "economy"], ["public", "school", "growth"],
]
SEPARABLE_Y = [1, 1, 1, 1, 0, 0, 0, 0]


class TestBinaryTrainer:
    def test_separable_signs(self):
        X = toy_matrix(SEPARABLE_DOCS)
        model = train_binary_lr(X, SEPARABLE_Y, l2=1.0, lr=0.1, epochs=500)
        w = dict(zip(X.vocabulary.terms, model.weights))
        assert w["tax"] > 0 > w["school"]

    def test_matches_convex_solver_oracle(self):
        from scipy.optimize import minimize

        X = toy_matrix(SEPARABLE_DOCS)
        dense = X.to_dense()
        y = np.array(SEPARABLE_Y, dtype=float)
        l2 = 1.0
        n, v = dense.shape

        def objective(theta):
            w, b = theta[:v], theta[v]
            z = dense @ w + b
            return (np.sum(np.logaddexp(0.0, z) - y * z)
                    + 0.5 * l2 * w @ w) / n

        solution = minimize(objective, np.zeros(v + 1), method="BFGS",
                            options={"gtol": 1e-12, "maxiter": 10_000})
        model = train_binary_lr(X, SEPARABLE_Y, l2=l2, lr=0.5, epochs=20_000)
        assert np.allclose(model.weights, solution.x[:v], atol=1e-5)
        assert abs(float(model.intercept) - solution.x[v]) < 1e-5

    def test_huge_l2_shrinks_weights(self):
        X = toy_matrix(SEPARABLE_DOCS)
        model = train_binary_lr(X, SEPARABLE_Y, l2=1e6, lr=0.1, epochs=500)
        assert float(np.max(np.abs(model.weights))) < 1e-3

    def test_identical_documents_balanced_labels_give_zero(self):
        docs = [["budget", "vote"]] * 4
        X = toy_matrix(docs)
        model = train_binary_lr(X, [1, 0, 1, 0], epochs=200)
        assert np.allclose(model.weights, 0.0)
        assert float(model.intercept) == pytest.approx(0.0, abs=1e-12)

    def test_label_swap_negates_weights(self):
        X = toy_matrix(SEPARABLE_DOCS)
        model = train_binary_lr(X, SEPARABLE_Y, seed=7)
        swapped = train_binary_lr(X, [1 - v for v in SEPARABLE_Y], seed=7)
        assert np.allclose(model.weights, -swapped.weights, atol=1e-9)
        assert abs(float(model.intercept) + float(swapped.intercept)) < 1e-9

    def test_loss_non_increasing_at_small_lr(self):
        X = toy_matrix(SEPARABLE_DOCS)
        model = train_binary_lr(X, SEPARABLE_Y, lr=1e-3, epochs=300)
        history = model.metadata["loss_history"]
        assert all(b <= a + 1e-12 for a, b in zip(history, history[1:]))

    def test_single_class_rejected(self):
        X = toy_matrix(SEPARABLE_DOCS[:4])
        with pytest.raises(ValueError):
            train_binary_lr(X, [1, 1, 1, 1])


class TestTopTerms:
    def test_format_example(self):
        X = toy_matrix([["tax"], ["school"]])
        model = train_binary_lr(X, [1, 0], epochs=1)
        model.weights = np.array([5.0 if t == "tax" else -4.3
                                  for t in X.vocabulary.terms])
        conservative, liberal = top_terms(model, 1)
        assert conservative == [("tax", 5.0)]
        assert liberal == [("school", -4.3)]

    def test_k_zero(self):
        X = toy_matrix(SEPARABLE_DOCS)
        model = train_binary_lr(X, SEPARABLE_Y, epochs=1)
        assert top_terms(model, 0) == ([], [])

    def test_matches_full_sort_oracle(self):
        rng = np.random.default_rng(9)
        X = toy_matrix(SEPARABLE_DOCS)
        model = train_binary_lr(X, SEPARABLE_Y, epochs=1)
        model.weights = rng.normal(size=len(X.vocabulary))
        conservative, liberal = top_terms(model, 4)
        ranked = sorted(zip(X.vocabulary.terms, model.weights),
                        key=lambda p: (-p[1], p[0]))
        assert conservative == [(t, float(w)) for t, w in ranked[:4]]
        assert liberal == [(t, float(w)) for t, w in ranked[::-1][:4]]

    def test_disjoint_lists(self):
        X = toy_matrix(SEPARABLE_DOCS)
        model = train_binary_lr(X, SEPARABLE_Y)
        conservative, liberal = top_terms(model, len(X.vocabulary) // 2)
        assert not {t for t, _ in conservative} & {t for t, _ in liberal}


class TestFocalLoss:
    def test_perfect_confidence_is_zero(self):
        for gamma in (0.0, 1.0, 2.0, 5.0):
            assert focal_loss(1.0, gamma) == 0.0

    def test_gamma_zero_is_cross_entropy(self):
        assert focal_loss(0.5, 0.0) == pytest.approx(math.log(2), abs=1e-12)
        rng = random.Random(13)
        for _ in range(1000):
            p = rng.uniform(1e-6, 1.0)
            assert focal_loss(p, 0.0) == pytest.approx(-math.log(p),
                                                       abs=1e-12)

    def test_gamma_two_closed_form(self):
        assert focal_loss(0.5, 2.0) == pytest.approx(0.25 * math.log(2),
                                                     abs=1e-12)

    def test_zero_probability_clamped_with_warning(self):
        with pytest.warns(UserWarning):
            value = focal_loss(0.0, 2.0)
        assert value == pytest.approx(-math.log(1e-12), rel=1e-9)

    def test_monotone_decreasing_in_p(self):
        for gamma in (0.0, 0.5, 2.0):
            grid = [focal_loss(p, gamma)
                    for p in np.linspace(0.01, 1.0, 200)]
            assert all(b < a for a, b in zip(grid, grid[1:]))

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            focal_loss(1.2, 1.0)
        with pytest.raises(ValueError):
            focal_loss(0.5, -1.0)


def three_class_data(rng, n=60, weights=(1 / 3, 1 / 3, 1 / 3)):
    vocab_by_class = {
        "liberal": ["school", "wage", "aid"],
        "neutral": ["report", "meeting", "week"],
        "conservative": ["tax", "defense", "business"],
    }
    shared = ["budget", "congress", "year"]
    docs, ys = [], []
    classes = list(vocab_by_class)
    for _ in range(n):
        label = rng.choices(classes, weights=weights)[0]
        tokens = [rng.choice(vocab_by_class[label]) for _ in range(4)]
        tokens += [rng.choice(shared) for _ in range(3)]
        docs.append(tokens)
        ys.append(label)
    return docs, ys


class TestMultinomialTrainer:
    def test_gamma_zero_equals_plain_softmax_trainer_per_step(self):
        rng = random.Random(19)
        docs, ys = three_class_data(rng)
        X = toy_matrix(docs)
        dense = X.to_dense()
        classes = sorted(set(ys))
        y_idx = np.array([classes.index(y) for y in ys])
        n, v = dense.shape
        k = len(classes)
        l2, lr, epochs = 0.5, 0.2, 25

        # independent plain softmax cross-entropy trainer (same prox-L2 step)
        W = np.zeros((k, v))
        b = np.zeros(k)
        onehot = np.eye(k)[y_idx]
        for _ in range(epochs):
            Z = dense @ W.T + b
            P = np.exp(Z - Z.max(axis=1, keepdims=True))
            P /= P.sum(axis=1, keepdims=True)
            W = (W - lr * ((P - onehot).T @ dense) / n) / (1 + lr * l2 / n)
            b -= lr * (P - onehot).sum(axis=0) / n

        model = train_multinomial_focal(X, ys, gamma=0.0, class_weights=None,
                                        l2=l2, lr=lr, epochs=epochs)
        assert np.allclose(model.weights, W, atol=1e-9)
        assert np.allclose(model.intercept, b, atol=1e-9)

    def test_gradient_matches_central_finite_differences(self):
        rng = random.Random(23)
        docs, ys = three_class_data(rng, n=20)
        X = toy_matrix(docs)
        dense = X.to_dense()
        classes = tuple(sorted(set(ys)))
        y_idx = np.array([classes.index(y) for y in ys])
        n, v = dense.shape
        k = len(classes)
        gamma, l2 = 2.0, 0.7
        counts = np.bincount(y_idx, minlength=k)
        cw = n / (k * counts)

        def objective(theta):
            W = theta[:k * v].reshape(k, v)
            b = theta[k * v:]
            Z = dense @ W.T + b
            Z = Z - Z.max(axis=1, keepdims=True)
            P = np.exp(Z) / np.exp(Z).sum(axis=1, keepdims=True)
            u = P[np.arange(n), y_idx]
            per_sample = cw[y_idx] * (1 - u) ** gamma * (-np.log(u))
            return (per_sample.sum() + 0.5 * l2 * np.sum(W * W)) / n

        def analytic_gradient(theta):
            W = theta[:k * v].reshape(k, v)
            b = theta[k * v:]
            Z = dense @ W.T + b
            Z = Z - Z.max(axis=1, keepdims=True)
            P = np.exp(Z) / np.exp(Z).sum(axis=1, keepdims=True)
            u = P[np.arange(n), y_idx]
            onehot = np.eye(k)[y_idx]
            coef = cw[y_idx] * (gamma * u * (1 - u) ** (gamma - 1)
                                * np.log(u) - (1 - u) ** gamma)
            D = coef[:, None] * (onehot - P)
            grad_W = (D.T @ dense + l2 * W) / n
            grad_b = D.sum(axis=0) / n
            return np.concatenate([grad_W.ravel(), grad_b])

        rng_np = np.random.default_rng(5)
        for _ in range(5):
            theta = rng_np.normal(scale=0.5, size=k * v + k)
            grad = analytic_gradient(theta)
            eps = 1e-6
            fd = np.zeros_like(theta)
            for i in range(len(theta)):
                up = theta.copy()
                up[i] += eps
                down = theta.copy()
                down[i] -= eps
                fd[i] = (objective(up) - objective(down)) / (2 * eps)
            scale = np.maximum(np.abs(fd), 1e-8)
            assert np.max(np.abs(grad - fd) / scale) < 1e-6

    def test_trainer_gradient_agrees_with_reference_expression(self):
        # one step of the trainer must move exactly along the verified gradient
        rng = random.Random(29)
        docs, ys = three_class_data(rng, n=15)
        X = toy_matrix(docs)
        model = train_multinomial_focal(X, ys, gamma=2.0, class_weights="auto",
                                        l2=0.7, lr=0.3, epochs=1)
        dense = X.to_dense()
        classes = model.classes
        y_idx = np.array([classes.index(y) for y in ys])
        n = len(ys)
        k = len(classes)
        counts = np.bincount(y_idx, minlength=k)
        cw = n / (k * counts)
        P = np.full((n, k), 1.0 / k)
        u = P[np.arange(n), y_idx]
        onehot = np.eye(k)[y_idx]
        coef = cw[y_idx] * (2.0 * u * (1 - u) * np.log(u) - (1 - u) ** 2)
        D = coef[:, None] * (onehot - P)
        expected_W = (-0.3 * (D.T @ dense) / n) / (1 + 0.3 * 0.7 / n)
        expected_b = -0.3 * D.sum(axis=0) / n
        assert np.allclose(model.weights, expected_W, atol=1e-12)
        assert np.allclose(model.intercept, expected_b, atol=1e-12)

    def test_focal_helps_minority_recall_on_imbalanced_data(self):
        rng = random.Random(31)
        docs, ys = three_class_data(rng, n=200, weights=(0.05, 0.9, 0.05))
        X = toy_matrix(docs)
        plain = train_multinomial_focal(X, ys, gamma=0.0, class_weights=None,
                                        epochs=60, lr=0.5)
        focal = train_multinomial_focal(X, ys, gamma=2.0, class_weights=None,
                                        epochs=60, lr=0.5)

        def minority_recall(model):
            report = evaluate(model, X, ys)
            return (report.per_class["liberal"].recall
                    + report.per_class["conservative"].recall) / 2

        assert minority_recall(focal) >= minority_recall(plain)

    def test_single_class_rejected(self):
        X = toy_matrix([["a", "b"], ["a", "c"]])
        with pytest.raises(ValueError):
            train_multinomial_focal(X, ["neutral", "neutral"])


class TestSplitByArticle:
    def make_corpus(self, n, years=range(1947, 1975)):
        years = list(years)
        articles = [make_article(f"a{i}", year=years[i % len(years)],
                                 paragraphs=[make_paragraph(0)])
                    for i in range(n)]
        return Corpus(articles=tuple(articles))

    def test_ten_articles_split_8_1_1(self):
        train, dev, test = split_by_article(self.make_corpus(10), seed=4)
        assert (len(train), len(dev), len(test)) == (8, 1, 1)

    def test_deterministic_given_seed(self):
        corpus = self.make_corpus(37)
        assert split_by_article(corpus, seed=7) == \
            split_by_article(corpus, seed=7)
        assert split_by_article(corpus, seed=7) != \
            split_by_article(corpus, seed=8)

    def test_disjoint_and_complete(self):
        corpus = self.make_corpus(53)
        train, dev, test = split_by_article(corpus, seed=2)
        assert not train & dev and not train & test and not dev & test
        assert train | dev | test == {a.article_id for a in corpus.articles}

    def test_dev_test_spread_over_years(self):
        corpus = self.make_corpus(280)
        _, dev, test = split_by_article(corpus, seed=3)
        years = sorted({a.year for a in corpus.articles})
        half = years[len(years) // 2]
        for split in (dev, test):
            split_years = [a.year for a in corpus.articles
                           if a.article_id in split]
            early = sum(1 for y in split_years if y < half)
            assert 0 < early < len(split_years)

    def test_ratios_must_sum_to_100(self):
        with pytest.raises(ValueError):
            split_by_article(self.make_corpus(10), ratios=(70, 20, 20))

    def test_too_few_articles(self):
        with pytest.raises(ValueError):
            split_by_article(self.make_corpus(2))


class TestEvaluate:
    def test_all_correct(self):
        docs = [["tax"], ["school"]]
        X = toy_matrix(docs)
        model = train_binary_lr(X, [1, 0], epochs=2000)
        report = evaluate(model, X, ["conservative", "liberal"])
        assert report.macro_f1 == 1.0

    def test_hand_computed_confusion(self):
        # confusion [[1, 1], [0, 2]] -> F1 = (2/3, 4/5), macro 11/15
        docs = [["tax"], ["school"], ["school", "school"],
                ["school", "school", "school"]]
        X = toy_matrix(docs)
        model = train_binary_lr(X, [1, 1, 0, 0], epochs=1)
        model.weights = np.array([1.0 if t == "tax" else -1.0
                                  for t in X.vocabulary.terms])
        model.intercept = np.asarray(0.0)
        y = ["conservative", "conservative", "liberal", "liberal"]
        report = evaluate(model, X, y)
        assert report.confusion == ((1, 1), (0, 2))
        assert report.per_class["conservative"].f1 == pytest.approx(2 / 3)
        assert report.per_class["liberal"].f1 == pytest.approx(4 / 5)
        assert report.macro_f1 == pytest.approx(11 / 15, abs=1e-12)

    def test_majority_predictor_on_balanced_classes(self):
        rng = random.Random(37)
        docs, ys = three_class_data(rng, n=30)
        X = toy_matrix(docs)
        model = train_multinomial_focal(X, ys, gamma=0.0, epochs=1, lr=0.0)
        preds = predict(model, X)
        assert len(set(preds)) == 1  # zero model ties -> first class always
        report = evaluate(model, X, ys)
        assert report.macro_f1 == pytest.approx(
            macro_f1_by_confusion(ys, preds), abs=1e-12)

    def test_macro_f1_matches_sklearn(self):
        from sklearn.metrics import f1_score

        rng = random.Random(41)
        docs, ys = three_class_data(rng, n=80)
        X = toy_matrix(docs)
        model = train_multinomial_focal(X, ys, gamma=2.0, epochs=30, lr=0.5)
        preds = predict(model, X)
        report = evaluate(model, X, ys)
        classes = sorted(set(ys) | set(preds))
        expected = f1_score(ys, preds, labels=classes, average="macro",
                            zero_division=0)
        assert report.macro_f1 == pytest.approx(expected, abs=1e-12)

    def test_empty_y_is_an_error(self):
        X = toy_matrix([["tax"], ["school"]])
        model = train_binary_lr(X, [1, 0], epochs=1)
        empty = DocTermMatrix(vocabulary=X.vocabulary, rows=(), row_ids=())
        with pytest.raises(ValueError):
            evaluate(model, empty, [])


def test_datasets_pull_from_adjudicated_labels():
    from polarmeter.lexical import binary_dataset, ternary_dataset

    corpus = Corpus(articles=(make_article("a1", paragraphs=[
        make_paragraph(0, adjudicated=labels(econ=L), text="school aid"),
        make_paragraph(1, adjudicated=labels(econ=C), text="tax cut"),
        make_paragraph(2, adjudicated=labels(), text="no labels"),
    ]),))
    ids, docs, ys = binary_dataset(corpus, ECON)
    assert ids == [("a1", 0), ("a1", 1)]
    assert ys == [0, 1]
    assert docs[1] == ["tax", "cut"]
    _, _, ternary = ternary_dataset(corpus, ECON)
    assert ternary == ["liberal", "conservative"]
