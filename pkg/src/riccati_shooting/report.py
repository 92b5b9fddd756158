"""Tabular diagnostic reports with named pass/fail checks."""

import io
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional


@dataclass(frozen=True)
class Row:
    case: str
    quantity: str
    computed: float
    expected: Optional[float] = None

    @property
    def abs_err(self) -> Optional[float]:
        if self.expected is None:
            return None
        return abs(self.computed - self.expected)


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float) and not math.isfinite(v):
        return repr(v)
    return f"{v:.17g}"


@dataclass
class Report:
    rows: List[Row] = field(default_factory=list)
    checks: Dict[str, bool] = field(default_factory=dict)

    def add(self, case, quantity, computed, expected=None):
        row = Row(case, quantity, float(computed), None if expected is None else float(expected))
        self.rows.append(row)
        return row

    def value(self, case, quantity) -> float:
        for row in self.rows:
            if row.case == case and row.quantity == quantity:
                return row.computed
        raise KeyError((case, quantity))

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def to_csv(self, target=None):
        buf = io.StringIO()
        buf.write("case,quantity,computed,expected,abs_err\n")
        for r in self.rows:
            buf.write(f"{r.case},{r.quantity},{_fmt(r.computed)},{_fmt(r.expected)},{_fmt(r.abs_err)}\n")
        text = buf.getvalue()
        if target is None:
            return text
        if hasattr(target, "write"):
            target.write(text)
        else:
            with open(target, "w", newline="") as fh:
                fh.write(text)
        return None
