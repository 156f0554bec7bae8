"""Render detection results as markdown or CSV tables.

Symmetric candidates are bold in markdown, mirroring how the results tables
mark symmetries; CSV carries an explicit ``symmetric`` column instead.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Any, Sequence

from .transforms import CandidateTransform

MD_HEADER = (
    "| Transformation | Accuracy (%) | 95% CI (%) | n_test | δ | Verdict |\n"
    "|---|---|---|---|---|---|\n"
)
CSV_FIELDS = ["transformation", "accuracy_pct", "ci_low_pct", "ci_high_pct",
              "n_test", "delta", "symmetric", "error"]


@dataclass
class ReportRow:
    label: str
    accuracy_pct: float | None
    ci: tuple[float, float] | None
    n_test: int
    delta: float | None
    symmetric: bool | None
    error: str | None = None

    @classmethod
    def from_result(cls, r: dict[str, Any]) -> "ReportRow":
        label = CandidateTransform.from_dict(r["transform"]).label
        if r.get("error") or r.get("accuracy") is None:
            return cls(label, None, None, r.get("n_test", 0), r.get("delta"), None,
                       r.get("error") or "no accuracy")
        return cls(
            label,
            100.0 * r["accuracy"],
            (100.0 * r["ci_low"], 100.0 * r["ci_high"]),
            r["n_test"],
            r.get("delta"),
            r["verdict"] == "symmetric",
        )


def _pct(x: float) -> str:
    return f"{x:.1f}"


def to_markdown(results: Sequence[dict[str, Any]]) -> str:
    out = [MD_HEADER]
    for row in map(ReportRow.from_result, results):
        delta = "" if row.delta is None else f"{row.delta:g}"
        if row.error:
            out.append(f"| {row.label} | n/a | n/a | {row.n_test} | {delta} | failed: {row.error} |\n")
            continue
        acc = _pct(row.accuracy_pct)
        if row.symmetric:
            acc = f"**{acc}**"
        ci = f"[{_pct(row.ci[0])}, {_pct(row.ci[1])}]"
        verdict = "symmetric" if row.symmetric else "asymmetric"
        out.append(f"| {row.label} | {acc} | {ci} | {row.n_test} | {delta} | {verdict} |\n")
    return "".join(out)


def to_csv(results: Sequence[dict[str, Any]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    for row in map(ReportRow.from_result, results):
        if row.error:
            w.writerow([row.label, "", "", "", row.n_test, row.delta, "", row.error])
            continue
        w.writerow([
            row.label, _pct(row.accuracy_pct), _pct(row.ci[0]), _pct(row.ci[1]),
            row.n_test, row.delta, "true" if row.symmetric else "false", "",
        ])
    return buf.getvalue()
