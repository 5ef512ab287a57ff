"""Run metrics and result artifacts.

Summarizes per-particle Chamfer distances into boxplot statistics, scores a
query scene against the belief with an inverse-Chamfer kernel, runs the
train-similarity analysis, and reads/writes the results/stats CSV files that
the CLI emits and the plotting tools consume.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
import yaml

from .voxelgrid import VoxelGrid, chamfer_distance, grid_like

RESULTS_COLUMNS = ("scenario", "method", "seed", "step", "particle_id", "valid", "cd_m")
STATS_COLUMNS = ("scenario", "method", "seed", "step", "n_valid",
                 "mean", "q1", "median", "q3", "likelihood")

# CD=0 would make the kernel blow up; clamp keeps the ordering and a finite peak.
LIKELIHOOD_EPS = 1e-6


@dataclass(frozen=True)
class StepStats:
    """Boxplot summary of per-sample Chamfer distances at one observation step.

    Whiskers are the extreme values lying within 1.5 IQR of the middle
    quartiles; samples outside that fence are outliers and excluded from
    them.  All summary fields are None when no sample had a distance.
    """

    step: int
    cds: tuple[float, ...]
    n_valid: int
    mean: float | None
    q1: float | None
    median: float | None
    q3: float | None
    whisker_lo: float | None
    whisker_hi: float | None


def step_stats(step: int, cds) -> StepStats:
    vals = np.asarray([float(c) for c in cds], dtype=np.float64)
    if vals.size == 0:
        return StepStats(step, (), 0, None, None, None, None, None, None)
    q1, med, q3 = np.percentile(vals, [25.0, 50.0, 75.0], method="linear")
    fence = 1.5 * (q3 - q1)
    inside = vals[(vals >= q1 - fence) & (vals <= q3 + fence)]
    return StepStats(
        step=step,
        cds=tuple(vals.tolist()),
        n_valid=int(vals.size),
        mean=float(vals.mean()),
        q1=float(q1),
        median=float(med),
        q3=float(q3),
        whisker_lo=float(inside.min()),
        whisker_hi=float(inside.max()),
    )


def kernel_likelihood(cds, n_total: int, eps: float = LIKELIHOOD_EPS) -> float:
    """Non-normalized likelihood: mean of 1/CD over the whole belief.

    ``cds`` holds the distances of the samples that produced one; the
    remaining ``n_total - len(cds)`` samples contribute zero.
    """
    if n_total < 1:
        raise ValueError("belief must contain at least one sample")
    total = sum(1.0 / max(float(c), eps) for c in cds)
    return total / n_total


def masked_chamfer(shape: VoxelGrid, truth: VoxelGrid,
                   exclude: VoxelGrid | None = None) -> float | None:
    """Chamfer distance with an optional evaluation mask removed from both sides.

    Returns None when either side has no occupied voxels left to compare.
    """
    a = shape.occupied_mask()
    b = truth.occupied_mask()
    if exclude is not None:
        keep = ~exclude.occupied_mask()
        a = a & keep
        b = b & keep
    if not a.any() or not b.any():
        return None
    return chamfer_distance(grid_like(shape, a.astype(np.float64)),
                            grid_like(truth, b.astype(np.float64)))


@dataclass(frozen=True)
class SimilarityReport:
    """How sampled completions relate to a held-out shape vs its nearest training shape."""

    closest_train_index: int
    closest_train_cd: float
    cds_to_test: tuple[float, ...]
    cds_to_train: tuple[float, ...]
    mean_cd_to_test: float
    mean_cd_to_train: float
    fraction_closer_to_train: float


def train_similarity_study(train_shapes, test_shape: VoxelGrid,
                           completions) -> SimilarityReport:
    """Compare completions against the test shape and its closest training shape.

    "Closer to train" counts completions strictly closer (by Chamfer
    distance) to the nearest training shape than to the test shape itself.
    """
    train = list(train_shapes)
    comps = list(completions)
    if not train:
        raise ValueError("train set is empty")
    if not comps:
        raise ValueError("no completions given")
    train_cds = [chamfer_distance(t, test_shape) for t in train]
    closest = int(np.argmin(train_cds))
    to_test = [chamfer_distance(c, test_shape) for c in comps]
    to_train = [chamfer_distance(c, train[closest]) for c in comps]
    closer = sum(1 for a, b in zip(to_test, to_train) if b < a)
    return SimilarityReport(
        closest_train_index=closest,
        closest_train_cd=float(train_cds[closest]),
        cds_to_test=tuple(float(v) for v in to_test),
        cds_to_train=tuple(float(v) for v in to_train),
        mean_cd_to_test=float(np.mean(to_test)),
        mean_cd_to_train=float(np.mean(to_train)),
        fraction_closer_to_train=closer / len(comps),
    )


@dataclass(frozen=True)
class ResultRow:
    """One particle at one step; cd_m is None when no distance was measurable."""

    scenario: str
    method: str
    seed: int
    step: int
    particle_id: int
    valid: bool
    cd_m: float | None


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


def _fmt(value) -> str:
    # Fixed short-precision rendering keeps re-runs byte-identical.
    return "" if value is None else "%.9g" % value


def write_results(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(RESULTS_COLUMNS)
        for r in rows:
            writer.writerow([r.scenario, r.method, r.seed, r.step,
                             r.particle_id, int(r.valid), _fmt(r.cd_m)])


def read_results(path) -> list[ResultRow]:
    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in RESULTS_COLUMNS if c not in (reader.fieldnames or ())]
        if missing:
            raise ValueError("results file missing columns: " + ", ".join(missing))
        for rec in reader:
            rows.append(ResultRow(
                scenario=rec["scenario"],
                method=rec["method"],
                seed=int(rec["seed"]),
                step=int(rec["step"]),
                particle_id=int(rec["particle_id"]),
                valid=bool(int(rec["valid"])),
                cd_m=float(rec["cd_m"]) if rec["cd_m"] != "" else None,
            ))
    return rows


def stats_from_results(rows) -> list[StatsRow]:
    """Collapse per-particle rows into per-step summary rows.

    Both the runner and the eval command funnel through here, so stats
    written at run time and stats re-derived from results.csv agree byte
    for byte.  Groups keep first-appearance order.
    """
    groups: dict[tuple, list[ResultRow]] = {}
    for row in rows:
        key = (row.scenario, row.method, row.seed, row.step)
        groups.setdefault(key, []).append(row)
    out = []
    for (scenario, method, seed, step), members in groups.items():
        cds = [r.cd_m for r in members if r.valid and r.cd_m is not None]
        st = step_stats(step, cds)
        like = kernel_likelihood(cds, len(members))
        out.append(StatsRow(scenario, method, seed, step, st.n_valid,
                            st.mean, st.q1, st.median, st.q3, like))
    return out


def write_stats(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(STATS_COLUMNS)
        for r in rows:
            writer.writerow([r.scenario, r.method, r.seed, r.step, r.n_valid,
                             _fmt(r.mean), _fmt(r.q1), _fmt(r.median),
                             _fmt(r.q3), _fmt(r.likelihood)])


def read_stats(path) -> list[StatsRow]:
    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in STATS_COLUMNS if c not in (reader.fieldnames or ())]
        if missing:
            raise ValueError("stats file missing columns: " + ", ".join(missing))

        def opt(text):
            return float(text) if text != "" else None

        for rec in reader:
            rows.append(StatsRow(
                scenario=rec["scenario"],
                method=rec["method"],
                seed=int(rec["seed"]),
                step=int(rec["step"]),
                n_valid=int(rec["n_valid"]),
                mean=opt(rec["mean"]),
                q1=opt(rec["q1"]),
                median=opt(rec["median"]),
                q3=opt(rec["q3"]),
                likelihood=float(rec["likelihood"]),
            ))
    return rows


def write_manifest(path, manifest: dict) -> None:
    with open(path, "w") as fh:
        yaml.safe_dump(manifest, fh, sort_keys=False)


def read_manifest(path) -> dict:
    with open(path) as fh:
        return yaml.safe_load(fh)
