"""Figures drawn from report CSVs; no statistics are computed here."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .io import read_table  # noqa: E402


def _float(text: str):
    try:
        return float(text)
    except ValueError:
        try:
            num, den = text.split("/")
            return int(num) / int(den)
        except ValueError:
            return None


def plot_report(report_csv, out_png) -> Path:
    """Standardized deviations ``(estimate - oracle) / SE`` for every row that has an SE."""
    rows = [r for r in read_table(report_csv)
            if _float(r["std_error"]) and _float(r["estimate"]) is not None and _float(r["oracle"]) is not None]
    labels = [f"{r['experiment']}:{r['check']}" for r in rows]
    z = [(_float(r["estimate"]) - _float(r["oracle"])) / _float(r["std_error"]) for r in rows]
    colors = ["tab:blue" if r["verdict"] == "pass" else "tab:red" for r in rows]
    fig, ax = plt.subplots(figsize=(8, 0.25 * len(rows) + 1.5))
    ax.barh(range(len(rows)), z, color=colors)
    for bound in (-5, 5):
        ax.axvline(bound, color="grey", linestyle="--", linewidth=0.8)
    ax.set_yticks(range(len(rows)), labels, fontsize=7)
    ax.invert_yaxis()
    ax.set_xlabel("(estimate - oracle) / SE")
    fig.tight_layout()
    fig.savefig(out_png)
    plt.close(fig)
    return Path(out_png)


def plot_cesaro(moments_csv, out_png) -> Path | None:
    rows = [r for r in read_table(moments_csv) if r["estimator"] == "cesaro"]
    if not rows:
        return None
    k = [int(r["k"]) for r in rows]
    value = [float(r["value"]) for r in rows]
    se = [float(r["SE"]) for r in rows]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.errorbar(k, value, yerr=se, fmt=".", capsize=2, label="Cesaro average")
    ax.axhline(_float(rows[0]["oracle"]), color="tab:red", label="mu(A) mu(B)")
    ax.set_xlabel("L")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_png)
    plt.close(fig)
    return Path(out_png)


def plot_directory(out_dir) -> list[Path]:
    """Render every figure whose source CSV exists in ``out_dir``."""
    out_dir = Path(out_dir)
    made = []
    if (out_dir / "report.csv").exists():
        made.append(plot_report(out_dir / "report.csv", out_dir / "report.png"))
    if (out_dir / "moments.csv").exists():
        fig = plot_cesaro(out_dir / "moments.csv", out_dir / "cesaro.png")
        if fig is not None:
            made.append(fig)
    return made
