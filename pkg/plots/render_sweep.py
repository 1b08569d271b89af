#!/usr/bin/env python3
"""Render a perturbation-sweep CSV (D vs eps) into a figure.

Consumes the sweep CSV schema
``eps,c_f_nats,D,feasible_all,rank,min_plan_entry`` and draws D against eps,
marking the points whose output law was certified non-realizable without
feedback.  Rendering is read-only over the CSV; no quantity is recomputed.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be pinned first)

EXPECTED_HEADER = ["eps", "c_f_nats", "D", "feasible_all", "rank", "min_plan_entry"]


class SweepFormatError(ValueError):
    """The CSV does not match the sweep schema."""


@dataclass(frozen=True)
class SweepTable:
    eps: tuple
    d: tuple
    feasible: tuple  # bool per row

    @property
    def row_count(self) -> int:
        return len(self.eps)


def load_sweep(csv_path) -> SweepTable:
    """Parse and validate a sweep CSV: exact header, eps strictly increasing, D >= 0."""
    path = Path(csv_path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise SweepFormatError(f"cannot read {path}: {exc}") from exc
    reader = csv.reader(text.strip().splitlines())
    try:
        header = next(reader)
    except StopIteration:
        raise SweepFormatError(f"{path}: empty file") from None
    if header != EXPECTED_HEADER:
        raise SweepFormatError(f"{path}: header {header!r} != {EXPECTED_HEADER!r}")
    eps, d, feasible = [], [], []
    for i, row in enumerate(reader, start=2):
        if len(row) != len(EXPECTED_HEADER):
            raise SweepFormatError(f"{path}: line {i} has {len(row)} fields")
        try:
            e, d_val = float(row[0]), float(row[2])
        except ValueError as exc:
            raise SweepFormatError(f"{path}: line {i}: {exc}") from exc
        if math.isnan(d_val):
            raise SweepFormatError(f"{path}: line {i}: D is NaN")
        if d_val < 0:
            raise SweepFormatError(f"{path}: line {i}: D = {d_val} < 0")
        if row[3] not in ("true", "false"):
            raise SweepFormatError(f"{path}: line {i}: feasible_all must be true/false")
        if eps and e <= eps[-1]:
            raise SweepFormatError(f"{path}: line {i}: eps not strictly increasing")
        eps.append(e)
        d.append(d_val)
        feasible.append(row[3] == "true")
    if not eps:
        raise SweepFormatError(f"{path}: no data rows")
    return SweepTable(tuple(eps), tuple(d), tuple(feasible))


def render(csv_path, out_path, title: str | None = None, log_y: bool = False):
    """Draw D vs eps and write the figure; returns the matplotlib Figure.

    Every CSV row contributes exactly one plotted point; rows certified
    non-realizable (feasible_all false) get an overlay marker.  Single-row
    tables render as a lone marker with no connecting line.
    """
    table = load_sweep(csv_path)
    fig, ax = plt.subplots(figsize=(6, 4), dpi=150)
    style = "o-" if table.row_count > 1 else "o"
    ax.plot(table.eps, table.d, style, color="tab:blue", markersize=4, label="D")
    infeas_eps = [e for e, ok in zip(table.eps, table.feasible) if not ok]
    infeas_d = [v for v, ok in zip(table.d, table.feasible) if not ok]
    if infeas_eps:
        ax.plot(infeas_eps, infeas_d, "x", color="tab:red", markersize=7,
                label="not realizable without feedback")
        ax.legend(loc="best", fontsize=8)
    if log_y:
        ax.set_yscale("log")
    ax.set_xlabel(r"$\epsilon$")
    ax.set_ylabel("D")
    if title:
        ax.set_title(title)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(out_path)
    return fig


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description="Render a sweep CSV into a D-vs-eps figure")
    ap.add_argument("csv_path")
    ap.add_argument("out_path", help="figure file; format from the extension (.svg default style)")
    ap.add_argument("--title")
    ap.add_argument("--log-y", action="store_true")
    args = ap.parse_args(argv)
    try:
        render(args.csv_path, args.out_path, title=args.title, log_y=args.log_y)
    except SweepFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
