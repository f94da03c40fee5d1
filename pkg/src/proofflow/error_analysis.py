"""Error-source classification per node.

Decision order (first hit wins):
  faithfulness below threshold, or statement never compiled -> Formalizer
  kind carries no proof obligation                          -> NotApplicable
  tactics verified                                          -> None
  negation of the statement was proved                      -> NLStatement
  otherwise                                                 -> Tactic

The NLStatement case means the formal statement is semantically faithful
and syntactically fine, but provably wrong, so the flaw traces back to the
natural-language step itself.
"""

from __future__ import annotations

import csv
import io
from collections import Counter
from enum import Enum
from pathlib import Path
from typing import Iterable

from .graph import NodeKind
from .scoring import FAITHFULNESS_THRESHOLD


class ErrorSource(Enum):
    NONE = "None"
    FORMALIZER = "Formalizer"
    TACTIC = "Tactic"
    NL_STATEMENT = "NLStatement"
    NOT_APPLICABLE = "NotApplicable"


TABLE_COLUMNS = ("None", "Formalizer", "Tactic", "NLStatement")


def classify_node(
    kind: NodeKind,
    f: float,
    c_formalizer: bool,
    tactic_ok: bool,
    negation_proved: bool,
    threshold: float = FAITHFULNESS_THRESHOLD,
) -> ErrorSource:
    if f < threshold or not c_formalizer:
        return ErrorSource.FORMALIZER
    if not kind.provable:
        return ErrorSource.NOT_APPLICABLE
    if tactic_ok:
        return ErrorSource.NONE
    if negation_proved:
        return ErrorSource.NL_STATEMENT
    return ErrorSource.TACTIC


def tabulate_errors(sources: Iterable[ErrorSource]) -> dict[str, float]:
    """Percentages per source over the four attributable columns, rounded to
    one decimal; NotApplicable nodes are excluded from the denominator."""
    counts = Counter(s for s in sources if s is not ErrorSource.NOT_APPLICABLE)
    total = sum(counts.values())
    table: dict[str, float] = {"total_steps": total}
    for column in TABLE_COLUMNS:
        n = counts.get(ErrorSource(column), 0)
        table[column] = round(100.0 * n / total, 1) if total else 0.0
    return table


def emit_error_table(
    sources: Iterable[ErrorSource],
    csv_path: Path | str,
    json_path: Path | str,
    extra: dict | None = None,
) -> dict:
    """Write the tabulation as CSV and JSON side by side; returns the table."""
    from .util import write_json

    table = tabulate_errors(sources)
    payload = dict(table)
    if extra:
        payload.update(extra)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = ["total_steps", *TABLE_COLUMNS]
    writer.writerow(header)
    writer.writerow([str(table["total_steps"])] + [f"{table[c]:.1f}" for c in TABLE_COLUMNS])
    Path(csv_path).write_text(buf.getvalue(), encoding="utf-8")
    write_json(json_path, payload)
    return table
