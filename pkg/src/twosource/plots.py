"""Figure rendering for the CLI report paths.

Each function takes the rows already written to CSV (lists of dicts keyed
by column name) and renders a PNG next to the delimited output.  Figures
are a convenience view; the CSV remains the contract.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def render_overlaps(rows: list[dict], path: Path) -> Path:
    theta2 = [r["theta2"] for r in rows]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.6))
    for key in ("delta", "gamma", "eta3", "eta4"):
        ax1.plot(theta2, [r[key] for r in rows], label=key)
    ax1.set_xlabel("separation / sigma")
    ax1.set_ylabel("overlap value (sigma units)")
    ax1.legend(fontsize=8)
    ax2.plot(theta2, [r["beta"] for r in rows], label="beta")
    ax2.axhline(0.0, color="gray", lw=0.8)
    ax2.axvline(2.0, color="gray", lw=0.8, ls="--")
    ax2.set_xlabel("separation / sigma")
    ax2.set_ylabel("beta (sigma units)")
    ax2.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_regrets(rows: list[dict], path: Path) -> Path:
    theta2_values = sorted({r["theta2"] for r in rows})
    fig, ax = plt.subplots(figsize=(6, 3.8))
    if len(theta2_values) == 1:
        names = [r["measurement"] for r in rows]
        x = range(len(names))
        width = 0.35
        ax.bar([i - width / 2 for i in x], [r["delta1"] for r in rows], width,
               label="centroid regret")
        ax.bar([i + width / 2 for i in x], [r["delta2"] for r in rows], width,
               label="separation regret")
        ax.set_xticks(list(x))
        ax.set_xticklabels(names)
        ax.set_title(f"information regrets at separation {theta2_values[0]:g} sigma")
    else:
        names = sorted({r["measurement"] for r in rows})
        for name in names:
            sel = [r for r in rows if r["measurement"] == name]
            sel.sort(key=lambda r: r["theta2"])
            ax.plot([r["theta2"] for r in sel], [r["delta1"] for r in sel],
                    label=f"{name}: centroid")
            ax.plot([r["theta2"] for r in sel], [r["delta2"] for r in sel],
                    ls="--", label=f"{name}: separation")
        ax.set_xlabel("separation / sigma")
    ax.set_ylabel("information regret")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_gauge(rows: list[dict], path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(6, 3.8))
    ok = [r for r in rows if r["status"] == "ok"]
    labels = [f"{r['solver']}\n(th2={r['theta2']:g})" for r in ok]
    x = range(len(ok))
    width = 0.27
    for offset, key in zip((-width, 0.0, width), ("c1_residual", "c2_residual", "commutator_norm")):
        vals = [max(r[key], 1e-18) for r in ok]
        ax.bar([i + offset for i in x], vals, width, label=key)
    ax.set_yscale("log")
    ax.set_xticks(list(x))
    ax.set_xticklabels(labels, fontsize=7)
    ax.set_ylabel("residual (sigma units)")
    ax.legend(fontsize=8)
    skipped = len(rows) - len(ok)
    if skipped:
        ax.set_title(f"{skipped} solver run(s) reported no solution")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_simulate(rows: list[dict], path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(6, 3.8))
    names = [r["measurement"] for r in rows]
    x = range(len(rows))
    width = 0.35
    ax.bar([i - width / 2 for i in x], [r["ratio1"] for r in rows], width,
           label="centroid var / CRB")
    ax.bar([i + width / 2 for i in x], [r["ratio2"] for r in rows], width,
           label="separation var / CRB")
    ax.axhline(1.0, color="gray", lw=0.8, ls="--")
    ax.set_xticks(list(x))
    ax.set_xticklabels(names)
    ax.set_ylabel("empirical variance / Cramer-Rao bound")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
