"""Render figures from harness CSV/JSON outputs.

All fitted coefficients are read from summary.json and plotted as-is; this
package never recomputes a fit. Rendering is read-only with respect to its
inputs.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = ["FIGURE_KINDS", "FigureSpec", "SchemaError", "render", "read_runs", "read_summary"]

FIGURE_KINDS = ("scaling", "collapse", "ablation", "alignment")

# Run-table schema written by the harness.
RUN_COLUMNS = (
    "run_id",
    "seed",
    "T",
    "variant",
    "sum_d",
    "sum_kappa",
    "c_t",
    "empirical_risk",
    "population_risk",
    "gap",
    "aux1",
    "aux2",
)

_INT_COLUMNS = {"seed", "T"}
_STR_COLUMNS = {"run_id", "variant"}


class SchemaError(ValueError):
    """Input file does not conform to the harness output schema."""


@dataclass(frozen=True)
class FigureSpec:
    runs_path: str | Path
    summary_path: str | Path
    kind: str
    out_path: str | Path

    def __post_init__(self) -> None:
        if self.kind not in FIGURE_KINDS:
            raise SchemaError(
                f"unknown figure kind {self.kind!r}; expected one of {FIGURE_KINDS}"
            )


def read_runs(path: str | Path) -> list[dict]:
    path = Path(path)
    if not path.exists():
        raise SchemaError(f"run table not found: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        fields = reader.fieldnames or []
        missing = [c for c in RUN_COLUMNS if c not in fields]
        if missing:
            raise SchemaError(f"run table missing column(s): {', '.join(missing)}")
        rows = []
        for lineno, raw in enumerate(reader, start=2):
            row = {}
            for col in RUN_COLUMNS:
                value = raw[col]
                try:
                    if col in _STR_COLUMNS:
                        row[col] = value
                    elif col in _INT_COLUMNS:
                        row[col] = int(value)
                    else:
                        row[col] = float(value)
                except (TypeError, ValueError) as exc:
                    raise SchemaError(
                        f"column {col!r} has a malformed value {value!r} "
                        f"on line {lineno}"
                    ) from exc
            rows.append(row)
    if not rows:
        raise SchemaError(f"run table is empty: {path}")
    return rows


def read_summary(path: str | Path) -> dict:
    path = Path(path)
    if not path.exists():
        raise SchemaError(f"summary file not found: {path}")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"summary is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise SchemaError("summary root must be a JSON object")
    return data


def _fit_coefficients(fit: dict) -> dict[str, float]:
    try:
        labels = fit["labels"]
        coefs = fit["coefficients"]
    except (KeyError, TypeError) as exc:
        raise SchemaError("summary fit block needs 'labels' and 'coefficients'") from exc
    if len(labels) != len(coefs):
        raise SchemaError("summary fit labels and coefficients differ in length")
    return {str(l): float(c) for l, c in zip(labels, coefs)}


def _mean_gap_by(rows: list[dict], keys: tuple[str, ...]) -> dict:
    groups: dict[tuple, list[float]] = {}
    for row in rows:
        groups.setdefault(tuple(row[k] for k in keys), []).append(row["gap"])
    return {k: float(np.mean(v)) for k, v in groups.items()}


def _render_scaling(rows: list[dict], summary: dict, ax) -> None:
    means = _mean_gap_by(rows, ("variant", "T"))
    variants = sorted({v for v, _ in means})
    for variant in variants:
        ts = sorted(t for v, t in means if v == variant)
        ys = [means[(variant, t)] for t in ts]
        ax.loglog(ts, ys, marker="o", label=variant)
    # Reference T^{-1/2} line anchored at the first point of the first variant.
    ts = np.array(sorted({t for _, t in means}), dtype=float)
    anchor_variant = variants[0]
    anchor = means[(anchor_variant, int(ts[0]))]
    ax.loglog(
        ts,
        anchor * np.sqrt(ts[0] / ts),
        linestyle="--",
        color="gray",
        label="reference slope -1/2",
    )
    slope = summary.get("stationary_loglog_slope")
    if slope is not None:
        ax.set_title(f"gap vs horizon (fitted stationary slope {float(slope):.2f})")
    else:
        ax.set_title("gap vs horizon")
    ax.set_xlabel("horizon T")
    ax.set_ylabel("mean gap")
    ax.legend()


def _render_collapse(rows: list[dict], summary: dict, ax) -> None:
    fit_block = summary.get("collapse") or summary.get("held_out_collapse")
    if fit_block is None:
        raise SchemaError("summary has neither 'collapse' nor 'held_out_collapse'")
    coefs = _fit_coefficients(fit_block)
    x = np.array([row["c_t"] / row["T"] for row in rows])
    y = np.array([row["gap"] for row in rows])
    ax.scatter(x, y, s=12, alpha=0.6, label="runs")
    grid = np.linspace(0.0, float(x.max()) * 1.05 + 1e-12, 100)
    line = np.full_like(grid, coefs.get("intercept", 0.0))
    line = line + coefs.get("budget_rate", 0.0) * grid
    if "inv_sqrt_T" in coefs:
        mean_t = float(np.mean([row["T"] for row in rows]))
        line = line + coefs["inv_sqrt_T"] / np.sqrt(mean_t)
    ax.plot(grid, line, color="crimson", label="fitted collapse line")
    r2 = fit_block.get("r_squared")
    title = "gap vs budget rate C_T / T"
    if r2 is not None:
        title += f" (R^2 = {float(r2):.3f})"
    ax.set_title(title)
    ax.set_xlabel("C_T / T")
    ax.set_ylabel("gap")
    ax.legend()


def _render_ablation(rows: list[dict], summary: dict, ax) -> None:
    block = summary.get("ablation")
    if not isinstance(block, dict):
        raise SchemaError("summary has no 'ablation' block")
    order = ("r2_full", "r2_no_budget", "r2_no_variance")
    missing = [k for k in order if k not in block]
    if missing:
        raise SchemaError(f"ablation block missing key(s): {', '.join(missing)}")
    values = [float(block[k]) for k in order]
    labels = ("full", "no budget", "no variance")
    ax.bar(labels, values, color=("steelblue", "lightgray", "darkgray"))
    for i, v in enumerate(values):
        ax.text(i, v, f"{v:.3f}", ha="center", va="bottom")
    ax.set_ylabel("R^2")
    ax.set_ylim(0.0, 1.05)
    ax.set_title("nested-model ablation")


def _render_alignment(rows: list[dict], summary: dict, fig) -> None:
    lengths = summary.get("fisher_length")
    steps = summary.get("steps")
    if not isinstance(lengths, dict) or not isinstance(steps, dict):
        raise SchemaError("summary needs 'fisher_length' and 'steps' blocks")
    ax1, ax2 = fig.subplots(1, 2)
    labels = ("euclidean", "natural")
    try:
        len_means = [float(lengths[k]["mean"]) for k in labels]
        len_ses = [float(lengths[k]["se"]) for k in labels]
        step_means = [float(steps[k]["mean"]) for k in labels]
        step_ses = [float(steps[k]["se"]) for k in labels]
    except (KeyError, TypeError) as exc:
        raise SchemaError("alignment blocks need euclidean/natural mean and se") from exc
    ax1.bar(labels, len_means, yerr=len_ses, capsize=4, color=("tomato", "seagreen"))
    ax1.set_ylabel("cumulative Fisher length")
    ratio = lengths.get("ratio_euclidean_over_natural")
    ax1.set_title(
        "path length" + (f" (ratio {float(ratio):.2f})" if ratio is not None else "")
    )
    ax2.bar(labels, step_means, yerr=step_ses, capsize=4, color=("tomato", "seagreen"))
    ax2.set_ylabel("steps to target")
    ax2.set_title("step count")


def render(spec: FigureSpec) -> Path:
    """Render the figure described by spec and return the output path."""
    rows = read_runs(spec.runs_path)
    summary = read_summary(spec.summary_path)
    out = Path(spec.out_path)
    out.parent.mkdir(parents=True, exist_ok=True)

    if spec.kind == "alignment":
        fig = plt.figure(figsize=(8, 4))
        try:
            _render_alignment(rows, summary, fig)
            fig.tight_layout()
            fig.savefig(out, dpi=150)
        finally:
            plt.close(fig)
        return out

    fig, ax = plt.subplots(figsize=(6, 4.5))
    try:
        if spec.kind == "scaling":
            _render_scaling(rows, summary, ax)
        elif spec.kind == "collapse":
            _render_collapse(rows, summary, ax)
        else:
            _render_ablation(rows, summary, ax)
        fig.tight_layout()
        fig.savefig(out, dpi=150)
    finally:
        plt.close(fig)
    return out
