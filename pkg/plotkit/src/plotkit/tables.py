"""Typed access to stats.csv files.

The stats.csv schema is the contract between the engine and this
package: one row per (scenario, method, seed, step) with the count of
valid particles, four Chamfer summary values, and the ground-truth
kernel likelihood. Rows with n_valid == 0 leave the summary fields
empty. Steps in a series run contiguously from 0.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

STATS_COLUMNS = ("scenario", "method", "seed", "step", "n_valid",
                 "mean", "q1", "median", "q3", "likelihood")

# the four per-step Chamfer summaries; empty in the CSV when n_valid == 0
SUMMARY_FIELDS = ("mean", "q1", "median", "q3")


class SchemaError(ValueError):
    """A stats file does not match the documented schema."""


@dataclass(frozen=True)
class StatsRow:
    scenario: str
    method: str
    seed: int
    step: int
    n_valid: int
    mean: float | None
    q1: float | None
    median: float | None
    q3: float | None
    likelihood: float

    @property
    def series_key(self) -> tuple[str, str, int]:
        return (self.scenario, self.method, self.seed)

    @property
    def has_box(self) -> bool:
        return self.n_valid > 0


@dataclass(frozen=True)
class StatsTable:
    rows: tuple[StatsRow, ...]

    def __post_init__(self):
        for row in self.rows:
            summaries = [getattr(row, f) for f in SUMMARY_FIELDS]
            if row.n_valid > 0 and any(v is None for v in summaries):
                raise SchemaError(
                    f"row {row.series_key} step {row.step}: n_valid > 0 "
                    "but a summary field is empty")
            if row.n_valid == 0 and any(v is not None for v in summaries):
                raise SchemaError(
                    f"row {row.series_key} step {row.step}: n_valid == 0 "
                    "but a summary field is set")
        for key, rows in self.series().items():
            steps = [r.step for r in rows]
            if steps != list(range(len(steps))):
                raise SchemaError(
                    f"series {key}: steps {steps} not contiguous from 0")

    def series(self) -> dict[tuple[str, str, int], tuple[StatsRow, ...]]:
        """Rows grouped by (scenario, method, seed), first-appearance order."""
        groups: dict[tuple[str, str, int], list[StatsRow]] = {}
        for row in self.rows:
            groups.setdefault(row.series_key, []).append(row)
        return {k: tuple(v) for k, v in groups.items()}


def _parse_row(fields: Sequence[str], path, line_no: int) -> StatsRow:
    if len(fields) != len(STATS_COLUMNS):
        raise SchemaError(f"{path}:{line_no}: expected "
                          f"{len(STATS_COLUMNS)} fields, got {len(fields)}")
    rec = dict(zip(STATS_COLUMNS, fields))
    try:
        return StatsRow(
            scenario=rec["scenario"],
            method=rec["method"],
            seed=int(rec["seed"]),
            step=int(rec["step"]),
            n_valid=int(rec["n_valid"]),
            mean=float(rec["mean"]) if rec["mean"] != "" else None,
            q1=float(rec["q1"]) if rec["q1"] != "" else None,
            median=float(rec["median"]) if rec["median"] != "" else None,
            q3=float(rec["q3"]) if rec["q3"] != "" else None,
            likelihood=float(rec["likelihood"]),
        )
    except ValueError as exc:
        raise SchemaError(f"{path}:{line_no}: {exc}") from exc


def _read_one(path: Path) -> Iterable[StatsRow]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise SchemaError(f"{path}: empty file")
        if header != list(STATS_COLUMNS):
            missing = [c for c in STATS_COLUMNS if c not in header]
            if missing:
                raise SchemaError(
                    f"{path}: missing columns: {', '.join(missing)}")
            raise SchemaError(f"{path}: schema mismatch: {header}")
        for line_no, fields in enumerate(reader, start=2):
            if not fields:
                continue
            yield _parse_row(fields, path, line_no)


def read_stats(paths: Sequence[str | Path] | str | Path) -> StatsTable:
    """Read and merge one or more stats.csv files into a StatsTable.

    Rows keep file order; later files append. Merging two files that
    both carry the same (scenario, method, seed) series is rejected by
    the contiguity invariant, since the steps would collide.
    """
    if isinstance(paths, (str, Path)):
        paths = [paths]
    rows: list[StatsRow] = []
    for path in paths:
        rows.extend(_read_one(Path(path)))
    return StatsTable(tuple(rows))
