"""Static charts for benchmark CSVs, written next to the CSV as PNG."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .bench import read_csv  # noqa: E402


def plot_csv(csv_path, png_path=None) -> Path:
    """Line chart of wall time against depth, or grouped bars per system when depth is constant."""
    csv_path = Path(csv_path)
    png_path = csv_path.with_suffix(".png") if png_path is None else Path(png_path)
    rows = read_csv(csv_path)
    series: dict[str, list[tuple]] = {}
    for row in rows:
        key = f"{row['method']} {row['phase']}"
        series.setdefault(key, []).append((row["system_id"], int(row["depth"]), float(row["wall_ms"])))
    fig, ax = plt.subplots(figsize=(8, 5))
    systems = sorted({r["system_id"] for r in rows})
    by_depth = len({r["depth"] for r in rows}) > 1 and all(r["system_id"].startswith("recursive") for r in rows)
    if by_depth:
        for key, points in sorted(series.items()):
            points.sort(key=lambda p: p[1])
            ax.plot([p[1] for p in points], [p[2] for p in points], marker="o", label=key)
        ax.set_xlabel("depth")
    elif rows:
        width = 0.8 / max(len(series), 1)
        for i, (key, points) in enumerate(sorted(series.items())):
            lookup = {p[0]: p[2] for p in points}
            xs = [j + i * width for j, s in enumerate(systems) if s in lookup]
            ax.bar(xs, [lookup[s] for s in systems if s in lookup], width=width, label=key)
        ax.set_xticks([j + 0.4 - width / 2 for j in range(len(systems))])
        ax.set_xticklabels(systems)
    ax.set_yscale("log")
    ax.set_ylabel("wall time (ms, median)")
    if series:
        ax.legend(fontsize="small")
    fig.tight_layout()
    fig.savefig(png_path, dpi=110)
    plt.close(fig)
    return png_path
