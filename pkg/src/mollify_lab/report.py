"""Machine-readable reports: JSON, CSV, and rendered figures.

Every report embeds a header with the canonical config hash, the library
version, and the kernel constants, so a run is reproducible from its output
alone.  When delimited output is requested the same data is rendered to a
PNG figure next to it.
"""

from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from . import __version__  # noqa: E402
from .mollifier import standard_kernel  # noqa: E402


def config_hash(config: dict) -> str:
    canon = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


def report_header(config: dict) -> dict:
    kern = standard_kernel()
    return {
        "config": config,
        "config_hash": config_hash(config),
        "version": __version__,
        "kernel_normalization": kern.normalization,
        "kernel_grad_l1": kern.grad_l1,
    }


def write_json(path, payload: dict) -> None:
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True,
                                     default=float) + "\n")


def write_csv(path, rows: list[dict]) -> None:
    if not rows:
        Path(path).write_text("")
        return
    fieldnames = list(rows[0].keys())
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: row.get(k, "") for k in fieldnames})


def figure_path(csv_path) -> Path:
    return Path(csv_path).with_suffix(".png")


def render_rate_figure(path, series: dict[str, tuple[list[float], list[float]]],
                       title: str, xlabel: str = "smoothing radius") -> None:
    """Log-log decay plot, one line per labelled (eps, value) series."""
    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    plotted = False
    for label, (eps, vals) in series.items():
        pairs = [(e, v) for e, v in zip(eps, vals) if v > 0]
        if not pairs:
            continue
        e, v = zip(*pairs)
        ax.loglog(e, v, "o-", label=label)
        plotted = True
    if plotted:
        ax.legend(fontsize=8)
    ax.set_xlabel(xlabel)
    ax.set_ylabel("value")
    ax.set_title(title, fontsize=10)
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_verdict_figure(path, verdicts: list[dict]) -> None:
    """Measured-over-allowed constants, one bar per check."""
    labels = [v["lemma"] for v in verdicts]
    ratios = []
    for v in verdicts:
        theo = v["constant_theoretical"]
        ratios.append(v["constant_measured"] / theo if theo > 0 else 0.0)
    fig, ax = plt.subplots(figsize=(6.0, 0.4 * len(labels) + 1.4))
    colors = ["tab:green" if v["passed"] else "tab:red" for v in verdicts]
    ax.barh(range(len(labels)), ratios, color=colors)
    ax.axvline(1.0, color="k", lw=0.8, ls="--")
    ax.set_yticks(range(len(labels)))
    ax.set_yticklabels(labels, fontsize=7)
    ax.set_xlabel("measured / sharp constant")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
