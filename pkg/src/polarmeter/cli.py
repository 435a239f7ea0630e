"""polarmeter command-line interface.

One entry point with subcommands over a shared configuration:

    ingest, validate, agreement, analyze, lexical, classify, polarize,
    curate, lda, segment

Precedence is flags > config file (--config, JSON with RunConfig keys) >
built-in defaults. Every run writes a manifest.json into the output
directory recording the resolved configuration, SHA-256 digests of the
inputs, the tool version and the seed, so outputs are reproducible.

All randomness flows from the single --seed; each module draws a derived
seed from sha256("<seed>:<module tag>") so adding one command never shifts
another command's stream. Exit codes: 0 success, 1 data or validation
failure, 2 usage error. POLARMETER_JOBS mirrors --jobs.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from . import agreement as agreement_mod
from . import analytics, lexical, polarization, report, topicmodel
from .corpus import (Corpus, Dimension, DIMENSIONS, ParseError, dumps_corpus,
                     load_corpus, validate)

log = logging.getLogger("polarmeter")

_DIM_ALIASES = {"econ": Dimension.ECONOMIC, "economic": Dimension.ECONOMIC,
                "social": Dimension.SOCIAL, "soc": Dimension.SOCIAL,
                "foreign": Dimension.FOREIGN, "fgn": Dimension.FOREIGN}


class UsageError(Exception):
    """Bad flags, bad config keys, out-of-range parameters. Exit 2."""


class DataError(Exception):
    """Unreadable or invalid input data. Exit 1."""


@dataclass
class RunConfig:
    input: Optional[str] = None
    bias_file: Optional[str] = None
    model: Optional[str] = None
    out_dir: str = "."
    out: Optional[str] = None
    audit: Optional[str] = None
    disagreements: Optional[str] = None
    format: str = "csv"
    seed: int = 0
    jobs: int = 1
    label_source: str = "adjudicated"
    year_min: int = 1900
    year_max: int = 2100
    include_irrelevant: bool = True
    denominator: str = "labeled"
    strict: bool = False
    bin_width: int = 4
    bin_anchor: Optional[int] = None
    tau: float = polarization.DEFAULT_TAU
    bc_threshold: float = polarization.BC_THRESHOLD
    population_moments: bool = False
    sorting_eps: float = polarization.BIAS_EPS
    min_pairs: int = polarization.MIN_PAIRS
    pooled: bool = False
    dimension: str = "all"
    top_k: int = 5
    l2: float = 1.0
    lr: float = 0.1
    epochs: int = 500
    min_df: int = 2
    binary_features: bool = False
    gamma: float = 2.0
    class_weights: str = "auto"
    split: str = "80,10,10"
    topics: int = 50
    lda_alpha: Optional[float] = None
    lda_beta: float = topicmodel.DEFAULT_BETA
    iters: int = topicmodel.DEFAULT_ITERATIONS
    window: int = topicmodel.DEFAULT_WINDOW
    threshold_multiplier: float = topicmodel.DEFAULT_THRESHOLD_MULTIPLIER
    inference_iters: int = topicmodel.DEFAULT_INFERENCE_ITERATIONS
    max_segments: Optional[int] = None
    include: str = ""
    exclude: tuple[str, ...] = ()


_CONFIG_FIELDS = {f.name for f in dataclasses.fields(RunConfig)}


def _check_config(cfg: RunConfig) -> None:
    rules = [
        (cfg.format in ("csv", "json"), "format must be csv or json"),
        (cfg.jobs >= 1, "jobs must be >= 1"),
        (cfg.denominator in ("labeled", "all"),
         "denominator must be labeled or all"),
        (cfg.year_min <= cfg.year_max, "year_min must not exceed year_max"),
        (cfg.bin_width >= 1, "bin_width must be >= 1"),
        (cfg.tau > 0, "tau must be positive"),
        (0 <= cfg.bc_threshold <= 1, "bc_threshold must lie in [0, 1]"),
        (cfg.sorting_eps > 0, "sorting_eps must be positive"),
        (cfg.min_pairs >= 2, "min_pairs must be >= 2"),
        (cfg.top_k >= 0, "top_k must be >= 0"),
        (cfg.l2 >= 0, "l2 must be >= 0"),
        (cfg.lr > 0, "lr must be positive"),
        (cfg.epochs >= 1, "epochs must be >= 1"),
        (cfg.min_df >= 1, "min_df must be >= 1"),
        (cfg.gamma >= 0, "gamma must be >= 0"),
        (cfg.class_weights in ("auto", "none"),
         "class_weights must be auto or none"),
        (cfg.topics >= 1, "topics must be >= 1"),
        (cfg.lda_beta > 0, "lda_beta must be positive"),
        (cfg.iters >= 1, "iters must be >= 1"),
        (cfg.window >= 1, "window must be >= 1"),
        (cfg.inference_iters >= 1, "inference_iters must be >= 1"),
        (cfg.max_segments is None or cfg.max_segments >= 1,
         "max_segments must be >= 1"),
    ]
    for ok, message in rules:
        if not ok:
            raise UsageError(message)
    _parse_split(cfg.split)


def _parse_split(raw: str) -> tuple[int, int, int]:
    try:
        parts = tuple(int(p) for p in raw.split(","))
    except ValueError:
        raise UsageError(f"split must be three comma-separated integers, "
                         f"got {raw!r}") from None
    if len(parts) != 3 or sum(parts) != 100:
        raise UsageError(f"split ratios must be three integers summing to "
                         f"100, got {raw!r}")
    return parts


def load_config_file(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as handle:
            raw = json.load(handle)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from None
    if not isinstance(raw, dict):
        raise UsageError("config file must hold a JSON object")
    unknown = set(raw) - _CONFIG_FIELDS
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
    return raw


def resolve_config(ns: argparse.Namespace) -> RunConfig:
    values = dataclasses.asdict(RunConfig())
    if getattr(ns, "config", None):
        values.update(load_config_file(ns.config))
    for key in _CONFIG_FIELDS:
        flag_value = getattr(ns, key, None)
        if flag_value is not None:
            values[key] = flag_value
    if values.get("jobs") is None:
        values["jobs"] = 1
    cfg = RunConfig(**values)
    if isinstance(cfg.exclude, list):
        cfg.exclude = tuple(cfg.exclude)
    _check_config(cfg)
    return cfg


def derive_seed(seed: int, tag: str) -> int:
    digest = hashlib.sha256(f"{seed}:{tag}".encode()).digest()
    return int.from_bytes(digest[:8], "big") % (2 ** 32)


def _sha256(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


class Run:
    """Collects written artifacts and finishes with a manifest."""

    def __init__(self, command: str, cfg: RunConfig):
        self.command = command
        self.cfg = cfg
        self.out_dir = Path(cfg.out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.outputs: list[str] = []
        self.inputs: dict[str, str] = {}

    def note_input(self, path: Optional[str]) -> None:
        if path:
            self.inputs[str(path)] = _sha256(path)

    def write(self, name: str, content: str, explicit: Optional[str] = None,
              ) -> Path:
        path = Path(explicit) if explicit else self.out_dir / name
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(content, encoding="utf-8", newline="")
        self.outputs.append(str(path))
        return path

    def finish(self) -> None:
        manifest = {
            "tool": "polarmeter",
            "version": __version__,
            "command": self.command,
            "config": dataclasses.asdict(self.cfg),
            "inputs": self.inputs,
            "outputs": sorted(self.outputs),
            "seed": self.cfg.seed,
        }
        path = self.out_dir / "manifest.json"
        path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n",
                        encoding="utf-8", newline="")


def _require_input(cfg: RunConfig) -> str:
    if not cfg.input:
        raise UsageError("an input corpus is required (--in)")
    return cfg.input


def _load_corpus(cfg: RunConfig) -> Corpus:
    path = _require_input(cfg)
    try:
        return load_corpus(path)
    except ParseError as exc:
        raise DataError(f"{path}: {exc}") from None
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from None


def _dimensions(cfg: RunConfig) -> list[Dimension]:
    if cfg.dimension == "all":
        return list(DIMENSIONS)
    dim = _DIM_ALIASES.get(cfg.dimension.lower())
    if dim is None:
        raise UsageError(f"unknown dimension {cfg.dimension!r}")
    return [dim]


def _short(dim: Dimension) -> str:
    return report.DIM_SHORT[dim.value]


def _ext(cfg: RunConfig) -> str:
    return cfg.format


def _map_jobs(jobs: int, func, items: list):
    if jobs <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(func, items))


def cmd_ingest(cfg: RunConfig, ns) -> int:
    run = Run("ingest", cfg)
    corpus = _load_corpus(cfg)
    run.note_input(cfg.input)
    rep = validate(corpus, (cfg.year_min, cfg.year_max))
    run.write(f"validation_report.{_ext(cfg)}",
              report.validation_csv(rep) if cfg.format == "csv"
              else _validation_json(rep))
    if not rep.ok:
        run.finish()
        print(f"ingest: {len(rep.errors)} validation errors; see "
              f"{run.outputs[-1]}", file=sys.stderr)
        return 1
    run.write("corpus.jsonl", dumps_corpus(corpus), explicit=cfg.out)
    run.finish()
    print(f"ingest: {len(corpus)} articles, "
          f"{corpus.paragraph_count()} paragraphs")
    return 0


def _validation_json(rep) -> str:
    doc = {"errors": [dataclasses.asdict(issue) for issue in rep.errors],
           "warnings": [dataclasses.asdict(issue) for issue in rep.warnings]}
    return json.dumps(doc, indent=2) + "\n"


def cmd_validate(cfg: RunConfig, ns) -> int:
    run = Run("validate", cfg)
    corpus = _load_corpus(cfg)
    run.note_input(cfg.input)
    rep = validate(corpus, (cfg.year_min, cfg.year_max))
    path = run.write(f"validation_report.{_ext(cfg)}",
                     report.validation_csv(rep) if cfg.format == "csv"
                     else _validation_json(rep))
    run.finish()
    if rep.ok:
        print(f"validate: OK ({len(corpus)} articles)")
        return 0
    print(f"validate: {len(rep.errors)} errors; report at {path}",
          file=sys.stderr)
    return 1


def cmd_agreement(cfg: RunConfig, ns) -> int:
    run = Run("agreement", cfg)
    corpus = _load_corpus(cfg)
    run.note_input(cfg.input)

    def one(dim: Dimension):
        matrix = agreement_mod.build_reliability(
            corpus, dim, include_irrelevant=cfg.include_irrelevant)
        try:
            result = agreement_mod.krippendorff_alpha(matrix)
        except agreement_mod.AgreementError:
            result = None
        return dim, result, len(matrix.units)

    rows = _map_jobs(cfg.jobs, one, list(DIMENSIONS))
    results = {dim.value: result for dim, result, _ in rows}
    units = {dim.value: count for dim, _, count in rows}
    content = (report.agreement_csv(results, units) if cfg.format == "csv"
               else report.agreement_json(results, units))
    run.write(f"agreement.{_ext(cfg)}", content)
    if cfg.disagreements:
        lines = ["dimension,article_id,paragraph_index,labels"]
        for dim in DIMENSIONS:
            for aid, idx, counter in agreement_mod.disagreements(corpus, dim):
                labels = ";".join(f"{l.value}x{c}"
                                  for l, c in sorted(counter.items()))
                lines.append(f"{dim.value},{aid},{idx},{labels}")
        run.write("disagreements.csv", "\n".join(lines) + "\n",
                  explicit=cfg.disagreements)
    run.finish()
    for dim, result, _ in rows:
        shown = "undefined" if result is None else f"{result.alpha:.4f}"
        print(f"agreement[{dim.value}]: alpha = {shown}")
    return 0


def cmd_analyze(cfg: RunConfig, ns) -> int:
    what = ns.what
    run = Run("analyze", cfg)
    corpus = _load_corpus(cfg)
    run.note_input(cfg.input)
    src = cfg.label_source
    if what in ("counts", "all"):
        table = analytics.label_counts(corpus, source=src)
        run.write(f"counts.{_ext(cfg)}",
                  report.counts_csv(table) if cfg.format == "csv"
                  else report.counts_json(table))
        t = table.totals
        print(f"counts: docs={t.docs} econ={t.by_dimension[Dimension.ECONOMIC]}"
              f" social={t.by_dimension[Dimension.SOCIAL]}"
              f" foreign={t.by_dimension[Dimension.FOREIGN]} total={t.total}")
    if what in ("dist", "all"):
        def one(dim):
            return dim, analytics.label_distribution(corpus, dim, source=src)
        for dim, dist in _map_jobs(cfg.jobs, one, list(DIMENSIONS)):
            run.write(f"dist_{_short(dim)}.{_ext(cfg)}",
                      report.distribution_csv(dist) if cfg.format == "csv"
                      else report.distribution_json(dist))
    if what in ("cooc", "all"):
        for level in ("paragraph", "article"):
            matrix = analytics.cooccurrence(corpus, level=level,
                                            denominator=cfg.denominator,
                                            source=src)
            run.write(f"cooc_{level}.{_ext(cfg)}",
                      report.cooccurrence_csv(matrix) if cfg.format == "csv"
                      else report.cooccurrence_json(matrix))
    if what in ("divergent", "all"):
        stats = analytics.divergent_article_stats(corpus, strict=cfg.strict,
                                                  source=src)
        run.write(f"divergent.{_ext(cfg)}",
                  report.divergent_csv(stats) if cfg.format == "csv"
                  else report.divergent_json(stats))
        print(f"divergent: {stats.pct_divergent_articles:.2f}% of "
              f"{stats.article_count} articles")
    run.finish()
    return 0


def cmd_lexical(cfg: RunConfig, ns) -> int:
    run = Run("lexical", cfg)
    corpus = _load_corpus(cfg)
    run.note_input(cfg.input)
    failures = []
    for dim in _dimensions(cfg):
        ids, docs, labels = lexical.binary_dataset(corpus, dim,
                                                   source=cfg.label_source)
        if len(set(labels)) < 2:
            failures.append(f"{dim.value}: needs both liberal and "
                            f"conservative paragraphs")
            continue
        try:
            vocab = lexical.build_vocab(docs, min_df=cfg.min_df)
        except ValueError as exc:
            failures.append(f"{dim.value}: {exc}")
            continue
        matrix = lexical.build_matrix(list(zip(ids, docs)), vocab,
                                      binary=cfg.binary_features)
        model = lexical.train_binary_lr(
            matrix, labels, l2=cfg.l2, lr=cfg.lr, epochs=cfg.epochs,
            seed=derive_seed(cfg.seed, f"lexical:{dim.value}"))
        k = min(cfg.top_k, len(vocab))
        conservative, liberal = lexical.top_terms(model, k)
        run.write(f"lexical_{_short(dim)}.csv",
                  report.lexical_csv(conservative, liberal))
        show = lambda pairs: ", ".join(f"{t} ({w:.1f})" for t, w in pairs)
        print(f"lexical[{dim.value}] C: {show(conservative)}")
        print(f"lexical[{dim.value}] L: {show(liberal)}")
    run.finish()
    if failures:
        for failure in failures:
            print(f"lexical: {failure}", file=sys.stderr)
        return 1
    return 0


def cmd_classify(cfg: RunConfig, ns) -> int:
    run = Run("classify", cfg)
    corpus = _load_corpus(cfg)
    run.note_input(cfg.input)
    ratios = _parse_split(cfg.split)
    train_ids, dev_ids, test_ids = lexical.split_by_article(
        corpus, ratios, seed=derive_seed(cfg.seed, "split"))
    weights = None if cfg.class_weights == "none" else "auto"
    failures = []
    for dim in _dimensions(cfg):
        ids, docs, labels = lexical.ternary_dataset(corpus, dim,
                                                    source=cfg.label_source)
        parts = {"train": ([], []), "test": ([], [])}
        for row_id, doc, label in zip(ids, docs, labels):
            if row_id[0] in train_ids:
                part = parts["train"]
            elif row_id[0] in test_ids:
                part = parts["test"]
            else:
                continue
            part[0].append((row_id, doc))
            part[1].append(label)
        train_docs, train_y = parts["train"]
        test_docs, test_y = parts["test"]
        if len(set(train_y)) < 2 or not test_y:
            failures.append(f"{dim.value}: not enough labeled data to train "
                            f"and evaluate")
            continue
        try:
            vocab = lexical.build_vocab((d for _, d in train_docs),
                                        min_df=cfg.min_df)
        except ValueError as exc:
            failures.append(f"{dim.value}: {exc}")
            continue
        x_train = lexical.build_matrix(train_docs, vocab,
                                       binary=cfg.binary_features)
        x_test = lexical.build_matrix(test_docs, vocab,
                                      binary=cfg.binary_features)
        model = lexical.train_multinomial_focal(
            x_train, train_y, gamma=cfg.gamma, class_weights=weights,
            l2=cfg.l2, lr=cfg.lr, epochs=cfg.epochs,
            seed=derive_seed(cfg.seed, f"classify:{dim.value}"))
        result = lexical.evaluate(model, x_test, test_y)
        run.write(f"eval_{_short(dim)}.csv", report.eval_csv(result))
        run.write(f"confusion_{_short(dim)}.csv", report.confusion_csv(result))
        print(f"classify[{dim.value}]: macro-F1 = {result.macro_f1:.4f} "
              f"(train {len(train_y)}, test {len(test_y)})")
    run.finish()
    if failures:
        for failure in failures:
            print(f"classify: {failure}", file=sys.stderr)
        return 1
    return 0


def _load_biases(cfg: RunConfig, run: Run):
    if not cfg.bias_file:
        raise UsageError("this measure needs --bias-file")
    try:
        with open(cfg.bias_file, encoding="utf-8") as handle:
            biases = polarization.parse_bias_file(handle)
    except OSError as exc:
        raise DataError(f"cannot read {cfg.bias_file}: {exc}") from None
    except ValueError as exc:
        raise DataError(f"{cfg.bias_file}: {exc}") from None
    run.note_input(cfg.bias_file)
    return biases


def cmd_polarize(cfg: RunConfig, ns) -> int:
    measure = ns.measure
    run = Run("polarize", cfg)
    corpus = _load_corpus(cfg)
    run.note_input(cfg.input)
    try:
        bins = polarization.corpus_bins(corpus, width=cfg.bin_width,
                                        anchor=cfg.bin_anchor)
    except ValueError as exc:
        raise DataError(str(exc)) from None
    src = cfg.label_source

    def emit(name: str, series_list):
        run.write(f"{name}.csv", report.series_csv(series_list))
        run.write(f"{name}.json", report.series_json(series_list))
        defined = sum(1 for s in series_list for p in s.points
                      if p.value is not None)
        print(f"polarize {name}: {len(series_list)} strata, "
              f"{defined} defined points")

    if measure in ("sorting", "all"):
        biases = _load_biases(cfg, run)
        per_outlet = polarization.sorting_series(
            corpus, biases, bins, eps=cfg.sorting_eps, source=src)
        groups = {outlet: polarization.bias_group(b.composite, cfg.tau)
                  for outlet, b in biases.items()}
        if cfg.pooled:
            grouped = polarization.pooled_group_sorting(
                corpus, biases, bins, tau=cfg.tau, eps=cfg.sorting_eps,
                source=src)
        else:
            grouped = polarization.group_series(per_outlet, groups)
        emit("sorting", list(per_outlet.values()) + list(grouped.values()))
    if measure in ("constraint", "all"):
        series_list = []
        groups = None
        if cfg.bias_file:
            biases = _load_biases(cfg, run)
            groups = {outlet: polarization.bias_group(b.composite, cfg.tau)
                      for outlet, b in biases.items()}
        for pair in polarization.DIMENSION_PAIRS:
            per_outlet = polarization.constraint_series(
                corpus, pair, bins, min_pairs=cfg.min_pairs, source=src)
            series_list.extend(per_outlet.values())
            if groups:
                suffix = f"/{pair[0].value}-{pair[1].value}"
                grouped = polarization.group_series(per_outlet, groups,
                                                    stratum_suffix=suffix)
                series_list.extend(grouped.values())
        emit("constraint", series_list)
    if measure in ("divergence", "all"):
        series_list = [polarization.divergence_series(
            corpus, dim, bins, threshold=cfg.bc_threshold,
            corrected=not cfg.population_moments, source=src)
            for dim in DIMENSIONS]
        emit("divergence", series_list)
    run.finish()
    return 0


def _read_raw_articles(cfg: RunConfig, run: Run):
    path = _require_input(cfg)
    try:
        with open(path, encoding="utf-8") as handle:
            articles = topicmodel.parse_raw_articles(handle)
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from None
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from None
    run.note_input(path)
    return articles


def cmd_curate(cfg: RunConfig, ns) -> int:
    run = Run("curate", cfg)
    articles = _read_raw_articles(cfg, run)
    include = [t.strip() for t in cfg.include.split(",") if t.strip()]
    result = topicmodel.curate(articles, include_terms=include,
                               exclude_phrases=list(cfg.exclude))
    kept_lines = "".join(topicmodel.serialize_raw_article(a) + "\n"
                         for a in result.kept)
    run.write("kept.jsonl", kept_lines, explicit=cfg.out)
    run.write("audit.csv",
              report.audit_csv(result.audit, total=len(articles),
                               kept=len(result.kept)),
              explicit=cfg.audit)
    run.finish()
    print(f"curate: kept {len(result.kept)} of {len(articles)} articles")
    return 0


def cmd_lda(cfg: RunConfig, ns) -> int:
    run = Run("lda", cfg)
    path = _require_input(cfg)
    try:
        with open(path, encoding="utf-8") as handle:
            lines = [line for line in handle if line.strip()]
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from None
    run.note_input(path)
    documents = []
    for line in lines:
        doc = json.loads(line)
        text = doc["text"] if "text" in doc else \
            " ".join(p["text"] for p in doc.get("paragraphs", []))
        tokens = lexical.tokenize(text)
        if tokens:
            documents.append(tokens)
        else:
            log.warning("skipping article %s: no tokens",
                        doc.get("article_id"))
    try:
        model = topicmodel.lda_fit(documents, k=cfg.topics,
                                   alpha=cfg.lda_alpha, beta=cfg.lda_beta,
                                   iterations=cfg.iters,
                                   seed=derive_seed(cfg.seed, "lda"))
    except ValueError as exc:
        raise DataError(str(exc)) from None
    out = cfg.out or str(Path(cfg.out_dir) / "model.json")
    topicmodel.save_model(model, out)
    run.outputs.append(out)
    run.finish()
    for topic in range(model.k):
        words = ", ".join(topicmodel.top_words(model, topic, 10))
        print(f"topic {topic}: {words}")
    return 0


def cmd_segment(cfg: RunConfig, ns) -> int:
    run = Run("segment", cfg)
    if not cfg.model:
        raise UsageError("segment needs --model")
    try:
        model = topicmodel.load_model(cfg.model)
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        raise DataError(f"cannot load model {cfg.model}: {exc}") from None
    run.note_input(cfg.model)
    articles = _read_raw_articles(cfg, run)
    lines = []
    for article in articles:
        try:
            paragraphs = topicmodel.segment_article(
                article.text, model, window=cfg.window,
                inference_iterations=cfg.inference_iters,
                threshold_multiplier=cfg.threshold_multiplier,
                seed=derive_seed(cfg.seed, f"segment:{article.article_id}"),
                max_segments=cfg.max_segments)
        except ValueError as exc:
            raise DataError(f"article {article.article_id}: {exc}") from None
        doc = {"article_id": article.article_id, "outlet": article.outlet,
               "year": article.year,
               "paragraphs": [{"index": i, "text": text, "annotations": [],
                               "adjudicated": None}
                              for i, text in enumerate(paragraphs)]}
        lines.append(json.dumps(doc, ensure_ascii=False))
    run.write("segmented.jsonl", "".join(line + "\n" for line in lines),
              explicit=cfg.out)
    run.finish()
    print(f"segment: wrote {len(articles)} articles")
    return 0


_HANDLERS = {
    "ingest": cmd_ingest,
    "validate": cmd_validate,
    "agreement": cmd_agreement,
    "analyze": cmd_analyze,
    "lexical": cmd_lexical,
    "classify": cmd_classify,
    "polarize": cmd_polarize,
    "curate": cmd_curate,
    "lda": cmd_lda,
    "segment": cmd_segment,
}


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument("--in", dest="input", help="input file")
    parser.add_argument("--out-dir", dest="out_dir",
                        help="output directory (default .)")
    parser.add_argument("--format", choices=["csv", "json"])
    parser.add_argument("--seed", type=int)
    parser.add_argument("--jobs", type=int,
                        default=_env_jobs(), help="parallel workers "
                        "(POLARMETER_JOBS)")
    parser.add_argument("--label-source", dest="label_source",
                        help="adjudicated or annotator:<id>")
    parser.add_argument("-v", "--verbose", action="store_true", default=None)


def _env_jobs() -> Optional[int]:
    raw = os.environ.get("POLARMETER_JOBS")
    if raw is None:
        return None
    try:
        return int(raw)
    except ValueError:
        return None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="polarmeter",
        description="Corpus analytics and polarization measures for "
                    "paragraph-level ideology annotations.")
    parser.add_argument("--version", action="version",
                        version=f"polarmeter {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse, validate and normalize a corpus")
    _add_common(p)
    p.add_argument("--out", help="normalized corpus path")
    p.add_argument("--year-min", dest="year_min", type=int)
    p.add_argument("--year-max", dest="year_max", type=int)

    p = sub.add_parser("validate", help="check corpus invariants")
    _add_common(p)
    p.add_argument("--year-min", dest="year_min", type=int)
    p.add_argument("--year-max", dest="year_max", type=int)

    p = sub.add_parser("agreement", help="Krippendorff's alpha per dimension")
    _add_common(p)
    p.add_argument("--include-irrelevant", dest="include_irrelevant",
                   action=argparse.BooleanOptionalAction)
    p.add_argument("--disagreements", help="also write disagreement list")

    p = sub.add_parser("analyze", help="descriptive label analytics")
    _add_common(p)
    p.add_argument("what", nargs="?", default="all",
                   choices=["counts", "dist", "cooc", "divergent", "all"])
    p.add_argument("--denominator", choices=["labeled", "all"])
    p.add_argument("--strict", action=argparse.BooleanOptionalAction,
                   help="divergent = strictly opposite leans only")

    p = sub.add_parser("lexical", help="liberal-vs-conservative unigram weights")
    _add_common(p)
    p.add_argument("--dimension", help="econ|social|foreign|all")
    p.add_argument("--top-k", dest="top_k", type=int)
    p.add_argument("--l2", type=float)
    p.add_argument("--lr", type=float)
    p.add_argument("--epochs", type=int)
    p.add_argument("--min-df", dest="min_df", type=int)
    p.add_argument("--binary-features", dest="binary_features",
                   action=argparse.BooleanOptionalAction)

    p = sub.add_parser("classify", help="focal-loss 3-class baseline")
    _add_common(p)
    p.add_argument("--dimension", help="econ|social|foreign|all")
    p.add_argument("--gamma", type=float)
    p.add_argument("--class-weights", dest="class_weights",
                   choices=["auto", "none"])
    p.add_argument("--split", help="train,dev,test percentages")
    p.add_argument("--l2", type=float)
    p.add_argument("--lr", type=float)
    p.add_argument("--epochs", type=int)
    p.add_argument("--min-df", dest="min_df", type=int)
    p.add_argument("--binary-features", dest="binary_features",
                   action=argparse.BooleanOptionalAction)

    p = sub.add_parser("polarize", help="sorting, constraint and divergence")
    _add_common(p)
    p.add_argument("measure", nargs="?", default="all",
                   choices=["sorting", "constraint", "divergence", "all"])
    p.add_argument("--bias-file", dest="bias_file",
                   help="CSV outlet,site,rating (NA = missing)")
    p.add_argument("--bin-width", dest="bin_width", type=int)
    p.add_argument("--bin-anchor", dest="bin_anchor", type=int)
    p.add_argument("--tau", type=float)
    p.add_argument("--bc-threshold", dest="bc_threshold", type=float)
    p.add_argument("--population-moments", dest="population_moments",
                   action=argparse.BooleanOptionalAction)
    p.add_argument("--sorting-eps", dest="sorting_eps", type=float)
    p.add_argument("--min-pairs", dest="min_pairs", type=int)
    p.add_argument("--pooled", action=argparse.BooleanOptionalAction,
                   help="pool group articles instead of averaging outlets")

    p = sub.add_parser("curate", help="keyword-filter raw articles")
    _add_common(p)
    p.add_argument("--include", help="comma-separated required terms")
    p.add_argument("--exclude", action="append",
                   help="forbidden phrase (repeatable)")
    p.add_argument("--out", help="kept articles path")
    p.add_argument("--audit", help="per-rule rejection counts path")

    p = sub.add_parser("lda", help="fit a collapsed-Gibbs topic model")
    _add_common(p)
    p.add_argument("--topics", type=int)
    p.add_argument("--alpha", dest="lda_alpha", type=float)
    p.add_argument("--beta", dest="lda_beta", type=float)
    p.add_argument("--iters", type=int)
    p.add_argument("--save", dest="out", help="model JSON path")

    p = sub.add_parser("segment", help="topic-tiling paragraph segmentation")
    _add_common(p)
    p.add_argument("--model", help="fitted model JSON")
    p.add_argument("--window", type=int)
    p.add_argument("--threshold-multiplier", dest="threshold_multiplier",
                   type=float)
    p.add_argument("--inference-iters", dest="inference_iters", type=int)
    p.add_argument("--max-segments", dest="max_segments", type=int)
    p.add_argument("--out", help="segmented corpus path")

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if getattr(ns, "verbose", None) else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(ns)
        return _HANDLERS[ns.command](cfg, ns)
    except UsageError as exc:
        print(f"polarmeter: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"polarmeter: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
