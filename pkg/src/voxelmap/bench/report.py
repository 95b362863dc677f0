"""Write benchmark results: ``results.csv``, ``results.gp``, per-point CSVs and figures."""
from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from ..camera import project_points  # noqa: E402
from ..frustum import write_result_csv  # noqa: E402
from .experiments import BenchRecord, ExperimentResult  # noqa: E402

PLOT_STYLE = {
    "figure.figsize": (6.4, 4.0),
    "figure.dpi": 100,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "font.size": 10,
    "legend.frameon": False,
}


def write_records_csv(path: str | Path, records: list[BenchRecord]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(BenchRecord.columns())
        for rec in records:
            writer.writerow(rec.row())


def write_gnuplot_data(path: str | Path, result: ExperimentResult) -> None:
    """Whitespace-separated blocks, two blank lines apart, one per series
    (select with ``index N`` in gnuplot)."""
    blocks = []
    if result.name == "scaling":
        for kind in ("voxel", "keyframe"):
            rows = [(r.map_size, r.time_median_ns / 1e6, r.time_mean_ns / 1e6)
                    for r in result.records if r.map_kind == kind]
            blocks.append((f"{kind}: map_size median_ms mean_ms", rows))
    elif result.name == "occlusion":
        for key in ("voxel", "voxel_all", "keyframe"):
            vis = result.series[key]
            uv, z, _ = _projected(result.series["cam"], result.series["pose"], vis.points)
            blocks.append((f"{key}: u v depth", list(zip(uv[:, 0], uv[:, 1], z))))
    elif result.name == "voxel-sweep":
        for first_hit in (False, True):
            rows = [(r.voxel_size, r.time_median_ns / 1e6, r.recall, r.precision)
                    for r in result.records if r.first_hit_only is first_hit]
            label = "first_hit" if first_hit else "all_samples"
            blocks.append((f"{label}: voxel_size median_ms recall precision", rows))
    elif result.name == "recall":
        for step in result.series["steps"]:
            rows = list(enumerate(result.series["recall"][step]))
            blocks.append((f"grid_step={step:g}: trial recall", rows))
    with open(path, "w") as fh:
        fh.write(f"# {result.name}\n")
        for i, (title, rows) in enumerate(blocks):
            if i:
                fh.write("\n\n")
            fh.write(f"# index {i} {title}\n")
            for row in rows:
                fh.write(" ".join(f"{v:.6g}" if isinstance(v, float) else str(v) for v in row))
                fh.write("\n")


def _projected(cam, pose, points):
    if not points:
        return np.empty((0, 2)), np.empty(0), np.empty(0, dtype=bool)
    return project_points(cam, pose, np.array([p.position for p in points]))


def plot_scaling(result: ExperimentResult, path: Path) -> None:
    s = result.series
    fig, ax = plt.subplots()
    ax.plot(s["map_size"], s["keyframe_ms"], "o-", label="keyframe scan")
    ax.plot(s["map_size"], s["voxel_ms"], "s-", label="voxel raycast")
    ax.set_xlabel("map points")
    ax.set_ylabel("median query time (ms)")
    ax.set_ylim(bottom=0)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def plot_occlusion(result: ExperimentResult, path: Path) -> None:
    s = result.series
    cam, pose, scene = s["cam"], s["pose"], s["scene"]
    fig, axes = plt.subplots(1, 3, figsize=(13, 4))

    ax = axes[0]
    ax.scatter(scene.positions[:, 0], scene.positions[:, 1], s=1, c="0.6")
    traj = np.array([p.translation for p in s["trajectory"].poses])
    ax.plot(traj[:, 0], traj[:, 1], "k-", lw=1)
    eye = pose.translation
    fwd = pose.rotation[:, 2]
    ax.annotate("", eye[:2] + 4 * fwd[:2], eye[:2], arrowprops={"arrowstyle": "->", "color": "r"})
    ax.set_aspect("equal")
    ax.set_title("corridor (top view)")

    depth_max = max([1.0] + [float(np.max(_projected(cam, pose, s[k].points)[1]))
                             for k in ("keyframe", "voxel") if s[k].points])
    for ax, key, title in ((axes[1], "keyframe", "keyframe query"),
                           (axes[2], "voxel", "voxel raycast query")):
        uv, z, _ = _projected(cam, pose, s[key].points)
        sc = ax.scatter(uv[:, 0], uv[:, 1], c=z, s=3, cmap="RdYlGn_r", vmin=0, vmax=depth_max)
        ax.set_xlim(0, cam.width)
        ax.set_ylim(cam.height, 0)
        ax.set_aspect("equal")
        ax.set_title(f"{title} ({len(s[key].points)} pts)")
    fig.colorbar(sc, ax=axes[1:], label="depth (m)")
    fig.savefig(path)
    plt.close(fig)


def plot_sweep(result: ExperimentResult, path: Path) -> None:
    s = result.series
    fig, ax = plt.subplots()
    ax.plot(s["voxel_size"], s["time_ms"], "o-", color="k", label="query time")
    ax.set_xlabel("voxel size (m)")
    ax.set_ylabel("median query time (ms)")
    ax2 = ax.twinx()
    ax2.plot(s["voxel_size"], s["recall"], "s--", color="tab:blue", label="recall")
    ax2.plot(s["voxel_size"], s["precision"], "^--", color="tab:red", label="precision")
    ax2.set_ylim(0, 1.05)
    ax2.set_ylabel("vs. oracle")
    handles = ax.get_legend_handles_labels()[0] + ax2.get_legend_handles_labels()[0]
    ax.legend(handles, [h.get_label() for h in handles], loc="center right")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def plot_recall(result: ExperimentResult, path: Path) -> None:
    s = result.series
    fig, ax = plt.subplots()
    bins = np.linspace(min(min(v) for v in s["recall"].values()), 1.0, 21)
    for step in s["steps"]:
        ax.hist(s["recall"][step], bins=bins, alpha=0.6, label=f"grid step {step:g} px")
    ax.set_xlabel("recall per (scene, pose)")
    ax.set_ylabel("trials")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


PLOTTERS = {
    "scaling": plot_scaling,
    "occlusion": plot_occlusion,
    "voxel-sweep": plot_sweep,
    "recall": plot_recall,
}


def write_report(result: ExperimentResult, out_dir: str | Path, figures: bool = True) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = [out / "results.csv", out / "results.gp"]
    write_records_csv(written[0], result.records)
    write_gnuplot_data(written[1], result)
    for name, rows in result.point_tables.items():
        path = out / f"{name}.csv"
        write_result_csv(path, rows)
        written.append(path)
    (out / "checks.txt").write_text("".join(c.line() + "\n" for c in result.checks))
    written.append(out / "checks.txt")
    if figures:
        path = out / f"{result.name}.png"
        with plt.rc_context(PLOT_STYLE):
            PLOTTERS[result.name](result, path)
        written.append(path)
    return written
