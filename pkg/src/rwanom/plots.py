"""Report figures with deterministic output.

Every figure is rendered headless to SVG with a fixed hash salt and no
embedded date, so identical inputs produce identical bytes.  Each plot
function also writes a CSV twin holding exactly the plotted numbers, for
inspection without an image viewer.
"""

from __future__ import annotations

import io
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "rwanom"

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np  # noqa: E402

from .formats import atomic_write_bytes, atomic_write_text, fmt_float  # noqa: E402

_BUCKET_COLORS = {
    "C1": "#1b9e77", "C2": "#66a61e", "C3": "#a6761d", "no_pair": "#666666",
    "D1": "#7570b3", "D2": "#e7298a", "D3": "#d95f02", "no_jump": "#666666",
}


def _save_fig(fig: plt.Figure, path: Path) -> None:
    buf = io.BytesIO()
    fig.savefig(buf, format="svg", metadata={"Date": None})
    plt.close(fig)
    atomic_write_bytes(path, buf.getvalue())


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(
            fmt_float(v) if isinstance(v, float) else str(v) for v in row))
    atomic_write_text(path, "\n".join(lines) + "\n")


def robustness_curves(report: dict, out_dir: str | Path) -> list[Path]:
    """Robust rate versus strength, one figure per perturbation kind.

    Solid lines are the full per-class robust rate; dashed lines are the
    anomaly-versus-none binary rate.  Returns the files written.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    cells = report["cells"]
    for kind in report["kinds"]:
        kind_cells = [c for c in cells if c["kind"] == kind]
        if not kind_cells:
            continue
        fig, ax = plt.subplots(figsize=(6.0, 4.0))
        rows: list[list] = []
        for bucket in sorted({c["bucket"] for c in kind_cells}):
            pts = sorted((c for c in kind_cells if c["bucket"] == bucket),
                         key=lambda c: c["epsilon"])
            eps = [c["epsilon"] for c in pts]
            color = _BUCKET_COLORS.get(bucket, "#000000")
            ax.plot(eps, [c["robust_rate"] for c in pts], "-o", ms=3,
                    color=color, label=bucket)
            ax.plot(eps, [c["binary_rate"] for c in pts], "--", lw=0.9,
                    color=color)
            rows.extend([bucket, float(c["epsilon"]), float(c["robust_rate"]),
                         float(c["binary_rate"]), int(c["n_errors"])]
                        for c in pts)
        ax.set_xscale("log")
        ax.set_ylim(-0.03, 1.03)
        ax.set_xlabel("perturbation strength")
        ax.set_ylabel("verified robust rate")
        ax.set_title(f"local robustness under {kind}")
        ax.legend(fontsize=7, ncol=2)
        ax.grid(True, alpha=0.3)
        fig.tight_layout()
        svg = out_dir / f"robustness_{kind}.svg"
        _save_fig(fig, svg)
        csv = out_dir / f"robustness_{kind}.csv"
        _write_csv(csv, ["bucket", "epsilon", "robust_rate", "binary_rate",
                         "n_errors"], rows)
        written.extend([svg, csv])
    return written


def envelope_plot(lower: np.ndarray, upper: np.ndarray, edges: np.ndarray,
                  path: str | Path, title: str = "histogram envelope",
                  ) -> list[Path]:
    """Band between the componentwise bounds of a perturbed histogram."""
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    edges = np.asarray(edges, dtype=float)
    path = Path(path)
    centers = 0.5 * (edges[:-1] + edges[1:])
    fig, ax = plt.subplots(figsize=(6.0, 3.6))
    ax.fill_between(centers, lower, upper, step="mid", alpha=0.4,
                    color="#1f77b4", label="envelope")
    ax.step(centers, upper, where="mid", color="#1f77b4", lw=1.0)
    ax.step(centers, lower, where="mid", color="#1f77b4", lw=1.0)
    ax.set_xlabel("jump magnitude [mNm]")
    ax.set_ylabel("relative frequency")
    ax.set_title(title)
    ax.legend(fontsize=8)
    fig.tight_layout()
    _save_fig(fig, path)
    csv = path.with_suffix(".csv")
    _write_csv(csv, ["bin_lo", "bin_hi", "lower", "upper"],
               [[float(edges[i]), float(edges[i + 1]), float(lower[i]),
                 float(upper[i])] for i in range(lower.shape[0])])
    return [path, csv]


def class_bounds_plot(uppers: dict[str, np.ndarray], edges: np.ndarray,
                      path: str | Path) -> list[Path]:
    """Per-class componentwise upper bounds of the synthesised regions."""
    path = Path(path)
    edges = np.asarray(edges, dtype=float)
    centers = 0.5 * (edges[:-1] + edges[1:])
    fig, ax = plt.subplots(figsize=(6.0, 3.6))
    rows: list[list] = []
    for name in sorted(uppers):
        ub = np.asarray(uppers[name], dtype=float)
        ax.step(centers, ub, where="mid", label=name)
        rows.extend([[name, i, float(v)] for i, v in enumerate(ub)])
    ax.set_xlabel("jump magnitude [mNm]")
    ax.set_ylabel("bin upper bound")
    ax.set_title("class region upper bounds")
    ax.legend(fontsize=8)
    fig.tight_layout()
    _save_fig(fig, path)
    csv = path.with_suffix(".csv")
    _write_csv(csv, ["class", "bin", "upper"], rows)
    return [path, csv]


def weighted_sum_plot(values: dict[str, list[tuple[int, float]]],
                      path: str | Path,
                      intervals: dict[str, tuple[float, float]] | None = None,
                      ) -> list[Path]:
    """Weighted-sum scatter per class with optional trimmed intervals.

    ``values`` maps a class name to (series_id, weighted_sum) pairs.  The
    horizontal jitter is seeded, so output is reproducible.
    """
    path = Path(path)
    rng = np.random.default_rng(np.random.SeedSequence(20_260_823))
    fig, ax = plt.subplots(figsize=(6.0, 3.6))
    names = sorted(values)
    rows: list[list] = []
    for x, name in enumerate(names):
        pairs = sorted(values[name])
        ws = np.array([w for _, w in pairs], dtype=float)
        jitter = rng.uniform(-0.18, 0.18, size=ws.shape[0])
        ax.plot(x + jitter, ws, ".", ms=3, alpha=0.6)
        if intervals and name in intervals:
            lo, hi = intervals[name]
            ax.hlines([lo, hi], x - 0.3, x + 0.3, color="#333333", lw=1.0)
        rows.extend([[name, sid, float(w)] for sid, w in pairs])
    ax.set_xticks(range(len(names)), names)
    ax.set_ylabel("histogram weighted sum")
    ax.set_title("weighted sums by class")
    ax.grid(True, axis="y", alpha=0.3)
    fig.tight_layout()
    _save_fig(fig, path)
    csv = path.with_suffix(".csv")
    _write_csv(csv, ["class", "series_id", "weighted_sum"], rows)
    return [path, csv]


def confusion_plot(matrix: np.ndarray, labels: list[str], path: str | Path,
                   ) -> list[Path]:
    """Heatmap of the count matrix (rows: predicted, columns: actual)."""
    path = Path(path)
    matrix = np.asarray(matrix)
    n = len(labels)
    fig, ax = plt.subplots(figsize=(6.4, 5.6))
    ax.imshow(matrix, cmap="Blues")
    vmax = matrix.max() if matrix.size else 1
    for i in range(n):
        for j in range(n):
            v = int(matrix[i, j])
            if v:
                ax.text(j, i, str(v), ha="center", va="center", fontsize=6,
                        color="white" if v > 0.6 * vmax else "black")
    ax.set_xticks(range(n), labels, fontsize=7)
    ax.set_yticks(range(n), labels, fontsize=7)
    ax.set_xlabel("actual")
    ax.set_ylabel("predicted")
    ax.set_title("confusion matrix")
    fig.tight_layout()
    _save_fig(fig, path)
    csv = path.with_suffix(".csv")
    rows = [[labels[i]] + [int(matrix[i, j]) for j in range(n)]
            for i in range(n)]
    _write_csv(csv, ["predicted"] + list(labels), rows)
    return [path, csv]
