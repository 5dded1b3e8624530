"""Figures and CSV tables for the CLI report path.

All plotting goes through the Agg backend so nothing needs a display.
"""

from __future__ import annotations

import csv
import io
import math
from pathlib import Path
from typing import Iterable, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(row)
    return buf.getvalue()


def _save(fig, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    # fixed metadata keeps repeated renders byte-stable
    fig.savefig(path, dpi=100, metadata={"Software": None})
    plt.close(fig)
    return path


def plot_contfrac(data: dict, path: Path) -> Path:
    qs = [int(c.split("/")[1]) for c in data["convergents"]]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(range(len(qs)), [math.log10(q) for q in qs], marker="o")
    ax.set_xlabel("k")
    ax.set_ylabel("log10 q_k")
    ax.set_title("convergent denominators")
    return _save(fig, path)


def plot_bestapprox(records: list[dict], path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    qs = [r["q"] for r in records]
    errs = [r["err"] for r in records]
    ax.loglog(qs, [e if e > 0 else float("nan") for e in errs], marker=".", linestyle="-")
    ax.loglog(qs, [q ** -0.5 for q in qs], linestyle="--", label="q^(-1/2)")
    ax.set_xlabel("q")
    ax.set_ylabel("error")
    ax.legend()
    return _save(fig, path)


def plot_pm(report: dict, path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    sums = report["partial_sums"]
    ax.plot(range(1, len(sums) + 1), sums, marker="o")
    ax.set_xlabel("k")
    ax.set_ylabel("partial sum")
    ax.set_title(report["classification_hint"])
    return _save(fig, path)


def plot_zexp(data: dict, path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    for kind, marker in (("loop", "o"), ("slit", "s")):
        pts = [(e["height"], e["hor"]) for e in data["entries"] if e["kind"] == kind and e["height"] > 0]
        if pts:
            ax.loglog(*zip(*pts), marker=marker, linestyle="none", label=kind)
    ax.set_xlabel("height")
    ax.set_ylabel("horizontal offset")
    ax.legend()
    return _save(fig, path)


def plot_tree(data: dict, path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    for nd in data["nodes"]:
        h = math.log10(nd["height"])
        if nd["parent"] is not None:
            ph = math.log10(data["nodes"][nd["parent"]]["height"])
            ax.plot([nd["level"] - 1, nd["level"]], [ph, h], color="0.5", linewidth=0.8)
        ax.plot(nd["level"], h, "o", color="C0", markersize=3)
    ax.set_xlabel("level")
    ax.set_ylabel("log10 |w|")
    return _save(fig, path)


def plot_dimension(report: dict, path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    rows = report["levels"]
    ax.plot([r["j"] for r in rows], [r["d"] for r in rows], marker="o")
    ax.set_xlabel("j")
    ax.set_ylabel("d_j")
    return _save(fig, path)


def plot_occupancy(series: list[tuple], diagnostic: dict, path: Path) -> Path:
    fig, (top, bottom) = plt.subplots(2, 1, figsize=(6, 6))
    ts = [float(t) for t, _, _ in series[1:]]
    share = [float(a) / float(t) if t else 0.5 for t, a, _ in series[1:]]
    top.plot(ts, share)
    top.axhline(0.5, color="0.6", linestyle="--")
    top.set_xlabel("time")
    top.set_ylabel("share on sheet 0")
    fr = diagnostic["fractions"]
    bottom.bar(range(len(fr)), fr)
    bottom.axhline(0.5, color="0.6", linestyle="--")
    bottom.set_xlabel("window")
    bottom.set_ylabel("sheet 0 share")
    fig.tight_layout()
    return _save(fig, path)
