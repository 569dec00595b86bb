"""Readers for the experiment tables emitted by the solver harness.

Three CSV schemas are understood (header names are the contract):

  traces.csv  run_id, algo, lambda, n, monitor1, monitor2, gap, error
  finals.csv  run_id, algo, lambda, final_gap, final_error, iters,
              stop_reason, cluster
  chain.csv   seed, cp_gap, dr_gap

Empty cells denote missing values and load as NaN.
"""

import csv
import math
from dataclasses import dataclass

TRACES_COLUMNS = ["run_id", "algo", "lambda", "n", "monitor1", "monitor2", "gap", "error"]
FINALS_COLUMNS = ["run_id", "algo", "lambda", "final_gap", "final_error", "iters",
                  "stop_reason", "cluster"]
CHAIN_COLUMNS = ["seed", "cp_gap", "dr_gap"]


class SchemaError(ValueError):
    """A required column is missing from an input table."""


@dataclass
class Table:
    columns: list
    rows: list

    def column(self, name: str) -> list:
        try:
            i = self.columns.index(name)
        except ValueError:
            raise SchemaError(
                f"required column {name!r} not found; file has {self.columns}") from None
        return [row[i] for row in self.rows]

    def floats(self, name: str) -> list:
        out = []
        for cell in self.column(name):
            out.append(float(cell) if cell not in ("", None) else math.nan)
        return out

    def __len__(self) -> int:
        return len(self.rows)


def read_table(path, required=None) -> Table:
    """Load a CSV table and check that the required columns are present."""
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file, expected a header row") from None
        rows = [row for row in reader if row]
    table = Table(columns=header, rows=rows)
    for name in required or []:
        if name not in header:
            raise SchemaError(
                f"{path}: required column {name!r} not found; file has {header}")
    return table


def group_by(table: Table, key: str) -> dict:
    """Row indexes of the table grouped by the values of one column."""
    groups = {}
    for i, value in enumerate(table.column(key)):
        groups.setdefault(value, []).append(i)
    return groups
