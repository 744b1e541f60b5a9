"""Hand-rolled SVG line charts for run metrics. No plotting dependency;
output is deterministic text."""

from __future__ import annotations

import os
import sys

from .errors import DataError

WIDTH, HEIGHT = 720, 420
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 60, 20, 30, 40
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
          "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf")


def read_metrics(run_dir: str) -> dict[str, list[float]]:
    """Columns of metrics.csv as lists; malformed rows are skipped with a
    warning on stderr."""
    path = os.path.join(run_dir, "metrics.csv")
    if not os.path.exists(path):
        raise DataError(f"{path} not found")
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    lines = [ln for ln in lines if not ln.startswith("#")]
    if not lines:
        raise DataError(f"{path}: missing header row")
    header = lines[0].split(",")
    table: dict[str, list[float]] = {name: [] for name in header}
    for ln in lines[1:]:
        parts = ln.split(",")
        if len(parts) != len(header):
            print(f"warning: skipping malformed row in {path}: '{ln}'", file=sys.stderr)
            continue
        try:
            values = [float(p) for p in parts]
        except ValueError:
            print(f"warning: skipping malformed row in {path}: '{ln}'", file=sys.stderr)
            continue
        for name, value in zip(header, values):
            table[name].append(value)
    return table


def _scale(values, lo, hi, out_lo, out_hi):
    if hi <= lo:
        return [0.5 * (out_lo + out_hi) for _ in values]
    k = (out_hi - out_lo) / (hi - lo)
    return [out_lo + (v - lo) * k for v in values]


def line_chart(series: list[tuple[str, list[float], list[float]]],
               title: str, path: str, y_label: str = ""):
    """Write one SVG with a polyline per (label, xs, ys) series."""
    xs_all = [x for _, xs, _ in series for x in xs]
    ys_all = [y for _, _, ys in series for y in ys]
    x_lo, x_hi = (min(xs_all), max(xs_all)) if xs_all else (0.0, 1.0)
    y_lo, y_hi = (min(ys_all), max(ys_all)) if ys_all else (0.0, 1.0)
    if y_lo == y_hi:
        y_lo, y_hi = y_lo - 0.5, y_hi + 0.5

    px_l, px_r = MARGIN_L, WIDTH - MARGIN_R
    px_t, px_b = MARGIN_T, HEIGHT - MARGIN_B
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH // 2}" y="20" text-anchor="middle" '
        f'font-family="sans-serif" font-size="14">{title}</text>',
        f'<line x1="{px_l}" y1="{px_b}" x2="{px_r}" y2="{px_b}" stroke="black"/>',
        f'<line x1="{px_l}" y1="{px_t}" x2="{px_l}" y2="{px_b}" stroke="black"/>',
        f'<text x="{px_l}" y="{px_b + 16}" font-family="sans-serif" '
        f'font-size="11" text-anchor="middle">{x_lo:g}</text>',
        f'<text x="{px_r}" y="{px_b + 16}" font-family="sans-serif" '
        f'font-size="11" text-anchor="middle">{x_hi:g}</text>',
        f'<text x="{px_l - 6}" y="{px_b}" font-family="sans-serif" '
        f'font-size="11" text-anchor="end">{y_lo:.4g}</text>',
        f'<text x="{px_l - 6}" y="{px_t + 10}" font-family="sans-serif" '
        f'font-size="11" text-anchor="end">{y_hi:.4g}</text>',
    ]
    if y_label:
        out.append(f'<text x="14" y="{(px_t + px_b) // 2}" font-family="sans-serif" '
                   f'font-size="11" transform="rotate(-90 14 {(px_t + px_b) // 2})" '
                   f'text-anchor="middle">{y_label}</text>')
    for k, (label, xs, ys) in enumerate(series):
        color = COLORS[k % len(COLORS)]
        if xs:
            sx = _scale(xs, x_lo, x_hi, px_l, px_r)
            sy = _scale(ys, y_lo, y_hi, px_b, px_t)
            points = " ".join(f"{x:.2f},{y:.2f}" for x, y in zip(sx, sy))
            out.append(f'<polyline points="{points}" fill="none" '
                       f'stroke="{color}" stroke-width="1.5"/>')
        ly = px_t + 14 * (k + 1)
        out.append(f'<line x1="{px_r - 150}" y1="{ly - 4}" x2="{px_r - 130}" '
                   f'y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{px_r - 125}" y="{ly}" font-family="sans-serif" '
                   f'font-size="11">{label}</text>')
    out.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(out) + "\n")


ACCURACY_METRICS = ("train_acc", "test_acc", "clean_train_acc",
                    "noisy_acc_vs_assigned", "noisy_acc_vs_true")


def plot_runs(run_dirs: list[str], outdir: str) -> list[str]:
    """Emit one SVG per metric family; multiple runs are overlaid."""
    os.makedirs(outdir, exist_ok=True)
    tables = []
    for run_dir in run_dirs:
        tables.append((os.path.basename(os.path.normpath(run_dir)) or run_dir,
                       read_metrics(run_dir)))
    written = []

    def series_for(metrics: tuple[str, ...]):
        out = []
        for name, table in tables:
            for metric in metrics:
                label = f"{name}:{metric}" if len(tables) > 1 else metric
                out.append((label, table.get("epoch", []), table.get(metric, [])))
        return out

    path = os.path.join(outdir, "accuracy.svg")
    line_chart(series_for(ACCURACY_METRICS), "accuracy over epochs", path, "accuracy")
    written.append(path)

    path = os.path.join(outdir, "loss.svg")
    line_chart(series_for(("train_loss",)), "training loss", path, "loss")
    written.append(path)

    path = os.path.join(outdir, "energy.svg")
    line_chart(series_for(("dirichlet_energy",)), "representation energy", path, "energy")
    written.append(path)

    # max-normalized variant for cross-run comparison
    norm_series = []
    for name, table in tables:
        energy = table.get("dirichlet_energy", [])
        peak = max((abs(v) for v in energy), default=0.0)
        scaled = [v / peak for v in energy] if peak > 0 else list(energy)
        label = f"{name}:energy/max" if len(tables) > 1 else "energy/max"
        norm_series.append((label, table.get("epoch", []), scaled))
    path = os.path.join(outdir, "energy_normalized.svg")
    line_chart(norm_series, "representation energy (max-normalized)", path,
               "energy / max")
    written.append(path)
    return written
