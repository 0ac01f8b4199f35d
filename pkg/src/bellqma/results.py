"""Result-row construction and serialization (CSV / JSON).

Column orders are fixed so that repeated runs produce byte-identical
output; every cell passes through :func:`format_cell`, which renders
floats with ``repr`` and exact rationals as ``"num/den"`` strings.
"""

from __future__ import annotations

import csv
import io
import json
import math
from fractions import Fraction

from . import __version__

RUN_COLUMNS = (
    "instance_id", "C", "n", "K", "num_provers", "trials", "seed",
    "acceptance", "ci_halfwidth", "uniformity_trials", "consistency_trials",
    "count_none", "count_low_zero_count", "count_vertex_fourier_nonzero",
    "count_edge_violation", "count_vertex_color_mismatch",
)

SWEEP_COLUMNS = ("param", "value") + RUN_COLUMNS

COLLISION_COLUMNS = (
    "param", "value", "instance_id", "n", "K", "num_samples", "trials", "seed",
    "mean_violations", "mean_ci", "mean_lower_bound", "prob_zero",
    "prob_zero_ci", "chebyshev_bound", "degenerate",
)

AUDIT_COLUMNS = ("audit", "item", "ok", "measured", "bound")

__all__ = [
    "AUDIT_COLUMNS", "COLLISION_COLUMNS", "RUN_COLUMNS", "SWEEP_COLUMNS",
    "format_cell", "render", "run_row",
]


def format_cell(value) -> str:
    """Render one cell deterministically (Fractions as num/den)."""
    if isinstance(value, Fraction):
        return f"{value.numerator}/{value.denominator}"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def run_row(instance_id: str, params, trials: int, seed: int, estimate,
            counts) -> dict:
    """Assemble the canonical single-run row."""
    row = {
        "instance_id": instance_id,
        "C": params.C,
        "n": params.n,
        "K": params.K,
        "num_provers": params.num_provers,
        "trials": trials,
        "seed": seed,
        "acceptance": estimate.value,
        "ci_halfwidth": estimate.ci_halfwidth,
        "uniformity_trials": counts.uniformity_trials,
        "consistency_trials": counts.consistency_trials,
    }
    for reason, tally in counts.reasons.items():
        row[f"count_{reason}"] = tally
    return row


def _csv_text(columns, rows) -> str:
    buf = io.StringIO(newline="")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_cell(row[c]) for c in columns])
    return buf.getvalue()


def _json_ready(value):
    if isinstance(value, Fraction):
        return f"{value.numerator}/{value.denominator}"
    if isinstance(value, float) and not math.isfinite(value):
        return repr(value)  # "inf"/"nan" are not valid JSON numbers
    return value


def _json_text(command: str, columns, rows, extra) -> str:
    doc = {
        "command": command,
        "version": __version__,
        "rows": [
            {c: _json_ready(row[c]) for c in columns} for row in rows
        ],
    }
    doc.update(extra)
    return json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n"


def render(command: str, columns, rows, fmt: str, **extra) -> str:
    """Serialize rows to ``fmt`` ("csv" or "json"), byte-stable."""
    if fmt == "csv":
        return _csv_text(columns, rows)
    if fmt == "json":
        return _json_text(command, columns, rows, extra)
    raise ValueError(f"unknown format {fmt!r}")
