"""CSV and JSON emitters for every result type the CLI writes.

All CSVs are UTF-8 with ',' delimiters, '\\n' line endings and a header
row. Percentages are written with 2 decimals; measure values keep full
precision (repr round-trip) so reruns are byte-identical.
"""

from __future__ import annotations

import csv
import io
import json
from typing import Mapping, Sequence

from .agreement import AgreementResult
from .analytics import (CooccurrenceMatrix, CountTable, DivergenceStats)
from .corpus import DIMENSIONS, SCORED_LABELS, ValidationReport
from .lexical import EvalReport
from .polarization import PolarizationSeries

DIM_SHORT = {"economic": "econ", "social": "social", "foreign": "foreign"}


def _csv_buffer() -> tuple[io.StringIO, csv.writer]:
    buffer = io.StringIO()
    return buffer, csv.writer(buffer, lineterminator="\n")


def fmt_pct(value: float) -> str:
    return f"{value:.2f}"


def fmt_full(value) -> str:
    if value is None:
        return ""
    return repr(float(value))


def counts_csv(table: CountTable) -> str:
    buffer, writer = _csv_buffer()
    writer.writerow(["outlet", "docs", "econ", "social", "foreign", "total"])
    for outlet, row in table.rows.items():
        writer.writerow([outlet, row.docs]
                        + [row.by_dimension[d] for d in DIMENSIONS]
                        + [row.total])
    writer.writerow(["Total", table.totals.docs]
                    + [table.totals.by_dimension[d] for d in DIMENSIONS]
                    + [table.totals.total])
    return buffer.getvalue()


def counts_json(table: CountTable) -> str:
    doc = {
        "rows": {outlet: {"docs": row.docs,
                          **{d.value: row.by_dimension[d] for d in DIMENSIONS},
                          "total": row.total}
                 for outlet, row in table.rows.items()},
        "totals": {"docs": table.totals.docs,
                   **{d.value: table.totals.by_dimension[d] for d in DIMENSIONS},
                   "total": table.totals.total},
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def distribution_csv(dist: Mapping[str, Mapping]) -> str:
    buffer, writer = _csv_buffer()
    writer.writerow(["outlet", "liberal", "neutral", "conservative"])
    for outlet, row in dist.items():
        writer.writerow([outlet] + [fmt_pct(100.0 * row[l])
                                    for l in SCORED_LABELS])
    return buffer.getvalue()


def distribution_json(dist: Mapping[str, Mapping]) -> str:
    doc = {outlet: {l.value: row[l] for l in SCORED_LABELS}
           for outlet, row in dist.items()}
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _cell_name(cell) -> str:
    dim, lab = cell
    return f"{dim.value}_{lab.value}"


def cooccurrence_csv(matrix: CooccurrenceMatrix) -> str:
    buffer, writer = _csv_buffer()
    names = [_cell_name(c) for c in matrix.axis]
    writer.writerow(["cell"] + names)
    for name, row in zip(names, matrix.values):
        writer.writerow([name] + [fmt_pct(v) for v in row])
    return buffer.getvalue()


def cooccurrence_json(matrix: CooccurrenceMatrix) -> str:
    doc = {"level": matrix.level,
           "denominator_count": matrix.denominator_count,
           "axis": [_cell_name(c) for c in matrix.axis],
           "values": [list(row) for row in matrix.values]}
    return json.dumps(doc, indent=2) + "\n"


def divergent_csv(stats: DivergenceStats) -> str:
    buffer, writer = _csv_buffer()
    writer.writerow(["pct_divergent_articles", "neutral_share",
                     "liberal_share", "conservative_share",
                     "divergent_count", "article_count"])
    shares = stats.shares
    writer.writerow([
        fmt_pct(stats.pct_divergent_articles),
        *(fmt_pct(shares[l]) if shares else "" for l in (
            SCORED_LABELS[1], SCORED_LABELS[0], SCORED_LABELS[2])),
        stats.divergent_count, stats.article_count])
    return buffer.getvalue()


def divergent_json(stats: DivergenceStats) -> str:
    doc = {"pct_divergent_articles": stats.pct_divergent_articles,
           "shares": {l.value: v for l, v in stats.shares.items()},
           "divergent_count": stats.divergent_count,
           "article_count": stats.article_count}
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def agreement_csv(results: Mapping[str, AgreementResult],
                  unit_counts: Mapping[str, int]) -> str:
    buffer, writer = _csv_buffer()
    writer.writerow(["dimension", "alpha", "pairable_values", "units"])
    for dim, result in results.items():
        writer.writerow([dim, fmt_full(result.alpha), result.pairable_values,
                         unit_counts[dim]])
    return buffer.getvalue()


def agreement_json(results: Mapping[str, AgreementResult],
                   unit_counts: Mapping[str, int]) -> str:
    doc = {dim: {"alpha": result.alpha,
                 "pairable_values": result.pairable_values,
                 "units": unit_counts[dim],
                 "observed_disagreement": result.observed_disagreement,
                 "expected_disagreement": result.expected_disagreement}
           for dim, result in results.items()}
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def validation_csv(report: ValidationReport) -> str:
    buffer, writer = _csv_buffer()
    writer.writerow(["severity", "article_id", "paragraph_index", "message"])
    for kind, issues in (("error", report.errors), ("warning", report.warnings)):
        for issue in issues:
            writer.writerow([kind, issue.article_id,
                             "" if issue.paragraph_index is None
                             else issue.paragraph_index,
                             issue.message])
    return buffer.getvalue()


def lexical_csv(conservative: Sequence[tuple[str, float]],
                liberal: Sequence[tuple[str, float]]) -> str:
    buffer, writer = _csv_buffer()
    writer.writerow(["rank", "side", "term", "weight"])
    for rank, (term, weight) in enumerate(conservative, start=1):
        writer.writerow([rank, "conservative", term, fmt_full(weight)])
    for rank, (term, weight) in enumerate(liberal, start=1):
        writer.writerow([rank, "liberal", term, fmt_full(weight)])
    return buffer.getvalue()


def eval_csv(report: EvalReport) -> str:
    buffer, writer = _csv_buffer()
    writer.writerow(["class", "precision", "recall", "f1", "support"])
    for cls in report.classes:
        m = report.per_class[cls]
        writer.writerow([cls, fmt_full(m.precision), fmt_full(m.recall),
                         fmt_full(m.f1), m.support])
    writer.writerow(["macro", "", "", fmt_full(report.macro_f1),
                     sum(m.support for m in report.per_class.values())])
    return buffer.getvalue()


def confusion_csv(report: EvalReport) -> str:
    buffer, writer = _csv_buffer()
    writer.writerow(["true\\pred"] + list(report.classes))
    for cls, row in zip(report.classes, report.confusion):
        writer.writerow([cls] + list(row))
    return buffer.getvalue()


SERIES_HEADER = ["measure", "stratum", "bin_start", "bin_end", "value",
                 "signed_value_or_flag", "reason"]


def _series_rows(series: PolarizationSeries) -> list[list]:
    rows = []
    for point in series.points:
        if point.signed is not None:
            extra = fmt_full(point.signed)
        elif point.flag is not None:
            extra = point.flag
        else:
            extra = ""
        rows.append([series.measure, series.stratum, point.bin.start_year,
                     point.bin.end_year, fmt_full(point.value), extra,
                     point.reason or ""])
    return rows


def series_csv(series_list: Sequence[PolarizationSeries]) -> str:
    buffer, writer = _csv_buffer()
    writer.writerow(SERIES_HEADER)
    for series in series_list:
        writer.writerows(_series_rows(series))
    return buffer.getvalue()


def series_json(series_list: Sequence[PolarizationSeries]) -> str:
    docs = []
    for series in series_list:
        for row in _series_rows(series):
            docs.append({key: (value if value != "" else None)
                         for key, value in zip(SERIES_HEADER, row)})
    return json.dumps(docs, indent=2) + "\n"


def audit_csv(audit: Mapping[str, int], total: int, kept: int) -> str:
    buffer, writer = _csv_buffer()
    writer.writerow(["rule", "count"])
    writer.writerow(["total", total])
    writer.writerow(["kept", kept])
    for rule in sorted(audit):
        writer.writerow([rule, audit[rule]])
    return buffer.getvalue()
