"""Per-iteration run traces and their CSV form."""

from __future__ import annotations

import csv
import io
from dataclasses import astuple, dataclass, fields
from typing import Iterator, List, Optional

COLUMNS = (
    "k",
    "f_y",
    "true_gap",
    "certified_gap",
    "L_k",
    "gamma_k",
    "beta_k",
    "eta_k",
    "inner_iters",
    "lmo_calls_cum",
    "grad_evals_cum",
    "grad_evals_with_retries_cum",
    "wall_ns",
)
_INT_COLUMNS = {"k", "inner_iters", "lmo_calls_cum", "grad_evals_cum", "grad_evals_with_retries_cum", "wall_ns"}


@dataclass(frozen=True)
class TraceRow:
    k: int
    f_y: float
    true_gap: Optional[float]
    certified_gap: Optional[float]
    L_k: Optional[float]
    gamma_k: float
    beta_k: float
    eta_k: float
    inner_iters: int
    lmo_calls_cum: int
    grad_evals_cum: int
    grad_evals_with_retries_cum: int
    wall_ns: int = 0


assert tuple(f.name for f in fields(TraceRow)) == COLUMNS


class RunTrace:
    """Ordered list of :class:`TraceRow`, one per outer iteration."""

    def __init__(self, rows: Optional[List[TraceRow]] = None):
        self.rows: List[TraceRow] = list(rows or [])

    def append(self, row: TraceRow) -> None:
        self.rows.append(row)

    def __len__(self):
        return len(self.rows)

    def __iter__(self) -> Iterator[TraceRow]:
        return iter(self.rows)

    def __getitem__(self, i):
        return self.rows[i]

    def __eq__(self, other):
        return isinstance(other, RunTrace) and self.rows == other.rows

    def column(self, name: str) -> list:
        return [getattr(r, name) for r in self.rows]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(COLUMNS)
        for row in self.rows:
            w.writerow([_fmt(name, v) for name, v in zip(COLUMNS, astuple(row))])
        return buf.getvalue()

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="ascii") as fh:
            fh.write(self.to_csv())

    @classmethod
    def from_csv(cls, text: str) -> "RunTrace":
        reader = csv.reader(io.StringIO(text))
        header = next(reader)
        if tuple(header) != COLUMNS:
            raise ValueError(f"unexpected trace header {header}")
        rows = []
        for rec in reader:
            vals = {name: _parse(name, s) for name, s in zip(COLUMNS, rec)}
            rows.append(TraceRow(**vals))
        return cls(rows)

    @classmethod
    def read_csv(cls, path) -> "RunTrace":
        with open(path, encoding="ascii") as fh:
            return cls.from_csv(fh.read())


def _fmt(name, v) -> str:
    if v is None:
        return ""
    if name in _INT_COLUMNS:
        return str(int(v))
    return "%.17g" % v


def _parse(name, s):
    if s == "":
        return None
    if name in _INT_COLUMNS:
        return int(s)
    return float(s)
