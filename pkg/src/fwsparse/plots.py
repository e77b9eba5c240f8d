"""Figure rendering for experiment outputs.

Figures are drawn from the emitted CSVs, not from in-memory state, so the
delimited reports stay the single source of truth and plots can be
regenerated after the fact with ``fwsparse report``.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt


def _read_csv(path: Path) -> list[dict]:
    with path.open(newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def render_experiment_figures(out_dir) -> list[Path]:
    """Residual-decay and support-purity figures next to the experiment CSVs."""
    out = Path(out_dir)
    written: list[Path] = []

    trace_files = sorted(out.glob("trial_*_trace.csv"))
    if trace_files:
        fig, ax = plt.subplots(figsize=(7, 4.5))
        for path in trace_files:
            rows = _read_csv(path)
            if not rows:
                continue
            ks = [int(r["k"]) for r in rows]
            rns = [float(r["residual_norm"]) for r in rows]
            ax.semilogy(ks, rns, alpha=0.4, lw=1)
        ax.set_xlabel("iteration")
        ax.set_ylabel("residual norm")
        ax.set_title(f"Residual decay across {len(trace_files)} trials")
        ax.grid(True, which="both", alpha=0.3)
        fig.tight_layout()
        target = out / "residual_decay.png"
        fig.savefig(target, dpi=150)
        plt.close(fig)
        written.append(target)

    summary = out / "summary.csv"
    if summary.exists():
        rows = _read_csv(summary)
        if rows:
            fig, ax = plt.subplots(figsize=(7, 3.5))
            trials = [int(r["trial"]) for r in rows]
            purity = [float(r["support_purity"]) for r in rows]
            ax.bar(trials, purity, width=0.9)
            ax.set_xlabel("trial")
            ax.set_ylabel("support purity")
            ax.set_ylim(0, 1.05)
            ax.set_title("Fraction of iterations selecting a true-support atom")
            fig.tight_layout()
            target = out / "support_purity.png"
            fig.savefig(target, dpi=150)
            plt.close(fig)
            written.append(target)

    return written


def render_comparison_figures(out_dir) -> list[Path]:
    """Per-solver residual curves next to the comparison CSVs."""
    out = Path(out_dir)
    curves = out / "comparison_curves.csv"
    if not curves.exists():
        return []
    rows = _read_csv(curves)
    by_key: dict[tuple[str, str], list[tuple[int, float]]] = {}
    for r in rows:
        by_key.setdefault((r["trial"], r["solver"]), []).append(
            (int(r["k"]), float(r["residual_norm"]))
        )

    colors = {"fw": "tab:blue", "mp": "tab:orange", "omp": "tab:green"}
    fig, ax = plt.subplots(figsize=(7, 4.5))
    seen = set()
    for (trial, solver), pts in sorted(by_key.items()):
        pts.sort()
        label = solver if solver not in seen else None
        seen.add(solver)
        ax.semilogy(
            [k for k, _ in pts],
            [rn for _, rn in pts],
            color=colors.get(solver, "gray"),
            alpha=0.45,
            lw=1,
            label=label,
        )
    ax.set_xlabel("iteration")
    ax.set_ylabel("residual norm")
    ax.set_title("Residual decay by solver")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    target = out / "comparison_curves.png"
    fig.savefig(target, dpi=150)
    plt.close(fig)
    return [target]
