"""Survival-curve CSV and JSON metadata files."""
from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import numpy as np

from .ensemble import SurvivalSeries

CSV_HEADER = "t,mean,stderr"


def format_csv(series: SurvivalSeries) -> str:
    lines = [CSV_HEADER]
    for t, m, s in zip(range(series.mean.size), series.mean.tolist(), series.stderr.tolist()):
        lines.append(f"{t},{m!r},{s!r}")
    return "\n".join(lines) + "\n"


def write_csv(path: str | Path, series: SurvivalSeries) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(format_csv(series))


def read_csv(path: str | Path) -> SurvivalSeries:
    text = Path(path).read_text(encoding="ascii")
    rows = [ln for ln in text.splitlines() if ln.strip()]
    if not rows or rows[0].strip() != CSV_HEADER:
        raise ValueError(f"{path}: expected header {CSV_HEADER!r}")
    t, mean, err = [], [], []
    for lineno, ln in enumerate(rows[1:], start=2):
        parts = ln.split(",")
        if len(parts) != 3:
            raise ValueError(f"{path}:{lineno}: expected 3 columns")
        t.append(int(parts[0]))
        mean.append(float(parts[1]))
        err.append(float(parts[2]))
    if t != list(range(len(t))):
        raise ValueError(f"{path}: times must run 0, 1, 2, ... without gaps")
    return SurvivalSeries(np.array(mean), np.array(err))


def dump_json(obj: Any) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_json(path: str | Path, obj: Any) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dump_json(obj))
