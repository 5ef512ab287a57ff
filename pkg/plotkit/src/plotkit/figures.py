"""Render stats.csv tables as figures.

Both plot functions draw exactly the numbers in the table and embed the
drawn values as a JSON payload in the image metadata, so a figure can be
audited against its source CSV without pixel comparisons. Rendering the
same table twice produces identical payloads (and identical SVG bytes:
the SVG id hash salt is pinned and the date stamp is dropped).
"""

from __future__ import annotations

import json
from collections import Counter
from pathlib import Path
from typing import Mapping, Sequence
from xml.etree import ElementTree

import matplotlib
from matplotlib.figure import Figure
from matplotlib.patches import Patch

from .tables import SchemaError, StatsTable

_RC = {"svg.hashsalt": "plotkit", "svg.fonttype": "none"}


def _series_labels(keys: Sequence[tuple[str, str, int]],
                   labels: Mapping[str, str] | None) -> list[str]:
    """Display label per series: mapped method name, qualified only when
    the table makes it ambiguous (several scenarios, repeated seeds)."""
    labels = labels or {}
    many_scenarios = len({k[0] for k in keys}) > 1
    seeds_per_method = Counter((k[0], k[1]) for k in keys)
    out = []
    for scenario, method, seed in keys:
        name = labels.get(method, method)
        if many_scenarios:
            name = f"{scenario}: {name}"
        if seeds_per_method[(scenario, method)] > 1:
            name = f"{name} (seed {seed})"
        out.append(name)
    return out


def _require_rows(table: StatsTable):
    if not table.rows:
        raise SchemaError("empty table: nothing to plot")


def _save(fig: Figure, out_path: Path, payload: dict):
    text = json.dumps(payload)
    if out_path.suffix == ".svg":
        # Date: None drops the timestamp so re-renders are byte-identical
        metadata = {"Description": text, "Date": None}
    elif out_path.suffix == ".png":
        metadata = {"Description": text}
    else:
        raise ValueError(f"output must be .svg or .png, got {out_path.name}")
    with matplotlib.rc_context(_RC):
        fig.savefig(out_path, metadata=metadata)


def read_metadata(path) -> dict:
    """Parse the JSON payload back out of a figure written by this module."""
    path = Path(path)
    if path.suffix == ".svg":
        root = ElementTree.parse(path).getroot()
        for elem in root.iter():
            if elem.tag.rsplit("}", 1)[-1] == "description" and elem.text:
                return json.loads(elem.text)
        raise SchemaError(f"{path}: no description metadata found")
    if path.suffix == ".png":
        from PIL import Image
        with Image.open(path) as image:
            text = image.info.get("Description")
        if not text:
            raise SchemaError(f"{path}: no Description text chunk found")
        return json.loads(text)
    raise ValueError(f"unsupported figure type: {path.name}")


def _draw_boxes(ax, table: StatsTable, labels=None) -> tuple[dict, int]:
    """Draw grouped per-step boxes onto ax; return (payload, boxes drawn).

    One box per (series, step) with n_valid > 0; steps with no valid
    particles leave a gap. The box spans q1..q3 with the median line and
    a mean marker. stats.csv carries no whisker spans, so whiskers sit
    on the box edges instead of being recomputed from raw results.
    """
    series = table.series()
    keys = list(series)
    names = _series_labels(keys, labels)
    slot = 0.8 / max(len(keys), 1)
    drawn = 0
    payload_series = []
    max_step = 0
    for i, (key, rows) in enumerate(series.items()):
        color = f"C{i}"
        offset = (i - (len(keys) - 1) / 2) * slot
        stats, positions, steps_payload = [], [], []
        for row in rows:
            max_step = max(max_step, row.step)
            if not row.has_box:
                steps_payload.append({"step": row.step, "n_valid": 0})
                continue
            stats.append({"med": row.median, "q1": row.q1, "q3": row.q3,
                          "whislo": row.q1, "whishi": row.q3,
                          "mean": row.mean, "fliers": []})
            positions.append(row.step + offset)
            steps_payload.append({"step": row.step, "n_valid": row.n_valid,
                                  "mean": row.mean, "q1": row.q1,
                                  "median": row.median, "q3": row.q3})
        if stats:
            ax.bxp(stats, positions=positions, widths=slot * 0.85,
                   showmeans=True, showcaps=False, showfliers=False,
                   manage_ticks=False, patch_artist=True,
                   boxprops={"facecolor": color, "alpha": 0.45,
                             "edgecolor": color},
                   whiskerprops={"color": color},
                   medianprops={"color": "black"},
                   meanprops={"marker": "D", "markersize": 4,
                              "markerfacecolor": color,
                              "markeredgecolor": "black"})
            drawn += len(stats)
        payload_series.append({"scenario": key[0], "method": key[1],
                               "seed": key[2], "label": names[i],
                               "steps": steps_payload})
    ax.set_xticks(range(max_step + 1))
    ax.set_xlabel("observation step")
    ax.set_ylabel("Chamfer distance (m)")
    ax.grid(axis="y", alpha=0.3)
    ax.legend(handles=[Patch(facecolor=f"C{i}", alpha=0.45,
                             edgecolor=f"C{i}", label=names[i])
                       for i in range(len(keys))],
              loc="best", fontsize="small")
    return {"kind": "chamfer-boxes", "series": payload_series}, drawn


def plot_chamfer_boxes(table: StatsTable, out_path, labels=None,
                       title=None) -> dict:
    """Grouped box plot of per-step Chamfer summaries, one group colour
    per (scenario, method, seed) series. Returns the embedded payload."""
    _require_rows(table)
    fig = Figure(figsize=(7.0, 4.2), layout="constrained")
    ax = fig.add_subplot()
    payload, _ = _draw_boxes(ax, table, labels)
    if title:
        ax.set_title(title)
    _save(fig, Path(out_path), payload)
    return payload


def _draw_likelihood(ax, table: StatsTable, labels=None) -> tuple[dict, list]:
    series = table.series()
    keys = list(series)
    names = _series_labels(keys, labels)
    lines = []
    payload_series = []
    for i, (key, rows) in enumerate(series.items()):
        steps = [r.step for r in rows]
        values = [r.likelihood for r in rows]
        lines += ax.plot(steps, values, marker="o", markersize=4,
                         color=f"C{i}", label=names[i])
        payload_series.append({"scenario": key[0], "method": key[1],
                               "seed": key[2], "label": names[i],
                               "steps": steps, "likelihood": values})
    ax.set_xticks(range(max((r.step for r in table.rows), default=0) + 1))
    ax.set_xlabel("observation step")
    ax.set_ylabel("kernel likelihood (1/m)")
    ax.grid(alpha=0.3)
    ax.legend(loc="best", fontsize="small")
    return {"kind": "likelihood", "series": payload_series}, lines


def plot_likelihood(table: StatsTable, out_path, labels=None,
                    title=None) -> dict:
    """Ground-truth kernel likelihood per step, one line per series.
    Returns the embedded payload."""
    _require_rows(table)
    fig = Figure(figsize=(6.5, 4.0), layout="constrained")
    ax = fig.add_subplot()
    payload, _ = _draw_likelihood(ax, table, labels)
    if title:
        ax.set_title(title)
    _save(fig, Path(out_path), payload)
    return payload
