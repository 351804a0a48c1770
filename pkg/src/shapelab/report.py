"""Structured experiment records with CSV tables and a JSON summary."""
from __future__ import annotations

import csv
import enum
import io
import json
import math
import os
from dataclasses import dataclass, field


class Verdict(enum.Enum):
    PASS = "Pass"
    FAIL = "Fail"
    INFORMATIONAL = "Informational"

    @property
    def exit_code(self) -> int:
        return 1 if self is Verdict.FAIL else 0


def _cell(v):
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        return format(v, ".17g")
    return str(v)


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()


@dataclass
class ExperimentReport:
    """Parameters, named CSV tables, a verdict and free-form notes."""

    name: str
    params: dict = field(default_factory=dict)
    tables: dict = field(default_factory=dict)
    verdict: Verdict = Verdict.INFORMATIONAL
    notes: list = field(default_factory=list)

    def add_table(self, name: str, header, rows) -> None:
        self.tables[name] = csv_text(header, rows)

    def add_csv(self, name: str, text: str) -> None:
        self.tables[name] = text

    @property
    def passed(self) -> bool:
        return self.verdict is not Verdict.FAIL

    def summary(self) -> dict:
        return {
            "name": self.name,
            "params": self.params,
            "verdict": self.verdict.value,
            "tables": sorted(self.tables),
            "notes": list(self.notes),
        }

    def write(self, out_dir: str) -> list:
        """Write ``<table>.csv`` files and ``summary.json``; return the paths written."""
        os.makedirs(out_dir, exist_ok=True)
        paths = []
        for name in sorted(self.tables):
            path = os.path.join(out_dir, f"{name}.csv")
            with open(path, "w", newline="") as fh:
                fh.write(self.tables[name])
            paths.append(path)
        path = os.path.join(out_dir, "summary.json")
        with open(path, "w") as fh:
            json.dump(self.summary(), fh, indent=2, sort_keys=True, default=_json_default)
            fh.write("\n")
        paths.append(path)
        return paths


def _json_default(obj):
    if hasattr(obj, "tolist"):
        return obj.tolist()
    if isinstance(obj, enum.Enum):
        return obj.value
    return str(obj)
