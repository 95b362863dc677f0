"""Benchmark experiments: query-time scaling, occlusion, voxel-size sweep, recall.

Each ``run_*`` returns an :class:`ExperimentResult` holding the CSV records,
the pass/fail checks that ``bench --check`` enforces, and plot series.
Thresholds are fixed encodings of qualitative claims:

* scaling: voxel median time grows at most 1.5x over the sweep, probes per
  query are identical at every size, keyframe time grows at least 5x;
* occlusion: first-hit voxel query returns no occluded point, keyframe
  query returns at least one;
* voxel-size sweep: smallest voxels slower than 5 m voxels, 20 m voxels
  less precise than 5 m voxels;
* recall: mean recall >= 0.95 and every returned point inside the dilated
  image.
"""
from __future__ import annotations

import gc
import math
import statistics
import time
from dataclasses import asdict, dataclass, field, fields
from typing import Callable

import numpy as np

from ..camera import CameraModel, Pose, project_points
from ..core import VoxelMap, VoxelMapConfig
from ..frustum import (RayTemplate, VisibleSet, build_ray_template, occlusion_violations,
                       query_visible, visible_rows)
from ..keyframes import build_from_scene, keyframe_rows, query_visible_kf
from ..scenes import (CorridorParams, Scene, brute_force_visible, make_corridor_scene,
                      make_corridor_trajectory, make_random_box_scene,
                      make_wall_scene, occluded_mask, random_box_poses, wall_keyframe_poses,
                      wall_trajectory)
from .config import BenchConfig

SCALING_VOXEL_MAX_RATIO = 1.5
SCALING_KEYFRAME_MIN_RATIO = 5.0
RECALL_MIN_MEAN = 0.95
NEAR_WALL = "inner_south"


@dataclass
class BenchRecord:
    experiment: str
    map_kind: str
    map_size: int
    voxel_size: float | None
    grid_step: float | None
    first_hit_only: bool | None
    n_queries: int
    time_median_ns: float
    time_mean_ns: float
    probes: float | None
    keyframes_scanned: float | None
    returned_points: float
    recall: float
    precision: float
    precision_dilated: float | None
    occluded_returned: int

    @classmethod
    def columns(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    def row(self) -> list:
        out = []
        for value in asdict(self).values():
            if value is None:
                out.append("")
            elif isinstance(value, bool):
                out.append("true" if value else "false")
            elif isinstance(value, float):
                out.append(f"{value:.6g}")
            else:
                out.append(value)
        return out


@dataclass
class Check:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.detail}"


@dataclass
class ExperimentResult:
    name: str
    records: list[BenchRecord]
    checks: list[Check] = field(default_factory=list)
    series: dict = field(default_factory=dict)
    point_tables: dict[str, list[tuple]] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)


class PreconditionError(RuntimeError):
    """Scene does not exhibit the configuration an experiment measures."""


def camera_from(cfg: BenchConfig) -> CameraModel:
    return CameraModel(cfg.fx, cfg.fy, cfg.cx, cfg.cy, cfg.width, cfg.height)


def template_from(cfg: BenchConfig, cam: CameraModel, voxel_size: float | None = None,
                  grid_step: float | None = None) -> RayTemplate:
    return build_ray_template(cam, grid_step or cfg.grid_step, cfg.d_min, cfg.d_max,
                              voxel_size or cfg.voxel_size)


def build_voxel_map(scene: Scene, voxel_size: float, table_size_n: int) -> VoxelMap:
    vmap = VoxelMap(VoxelMapConfig(voxel_size=voxel_size, table_size_n=table_size_n))
    vmap.insert_points(scene.points)
    return vmap


def time_queries(query: Callable[[Pose], object], poses: list[Pose], repeats: int,
                 warmup: int) -> list[int]:
    """Per-query wall times in ns over ``repeats`` passes.

    Warm-up passes are discarded and the garbage collector is paused while
    timing, as :mod:`timeit` does.
    """
    for _ in range(warmup):
        for pose in poses:
            query(pose)
    times = []
    gc.collect()
    was_enabled = gc.isenabled()
    gc.disable()
    try:
        for _ in range(repeats):
            for pose in poses:
                t0 = time.perf_counter_ns()
                query(pose)
                times.append(time.perf_counter_ns() - t0)
    finally:
        if was_enabled:
            gc.enable()
    return times


def recall_precision(returned: set[int], truth: set[int]) -> tuple[float, float]:
    hit = len(returned & truth)
    recall = hit / len(truth) if truth else 1.0
    precision = hit / len(returned) if returned else 1.0
    return recall, precision


def dilated_fraction(cam: CameraModel, pose: Pose, vis: VisibleSet, voxel_size: float,
                     d_min: float) -> float:
    """Share of returned points projecting inside the image grown by
    ``voxel_size * max(fx, fy) / d_min`` pixels."""
    if not vis.points:
        return 1.0
    margin = voxel_size * max(cam.fx, cam.fy) / d_min
    uv, z, _ = project_points(cam, pose, np.array([p.position for p in vis.points]))
    inside = ((z > 0) & (uv[:, 0] >= -margin) & (uv[:, 0] < cam.width + margin)
              & (uv[:, 1] >= -margin) & (uv[:, 1] < cam.height + margin))
    return float(inside.mean())


def _occluded_count(scene: Scene, pose: Pose, point_ids: list[int]) -> int:
    if not scene.walls or not point_ids:
        return 0
    idx = np.array([scene.index[i] for i in point_ids])
    labels = [scene.labels[i] for i in idx]
    return int(occluded_mask(scene, pose.translation, scene.positions[idx], labels).sum())


def _ratio(values: list[float]) -> float:
    return values[-1] / values[0] if values[0] > 0 else math.inf


def run_scaling(cfg: BenchConfig) -> ExperimentResult:
    """Query time against wall length, voxel map versus keyframe map."""
    cam = camera_from(cfg)
    template = template_from(cfg, cam)
    trajectory = wall_trajectory(cfg.n_poses, cfg.wall_offset, cfg.pose_x_start, cfg.pose_x_end,
                                 cfg.wall_height / 2)
    poses = trajectory.poses
    records = []
    probe_lists = []
    for length, count in zip(cfg.wall_lengths, cfg.wall_points):
        scene = make_wall_scene(length, count, cfg.seed, cfg.wall_height)
        truth = [{p.id for p in brute_force_visible(scene, cam, pose, cfg.d_min, cfg.d_max)}
                 for pose in poses]

        vmap = build_voxel_map(scene, cfg.voxel_size, cfg.table_size_n)
        results = [query_visible(vmap, template, pose, cfg.first_hit_only) for pose in poses]
        times = time_queries(lambda pose: query_visible(vmap, template, pose, cfg.first_hit_only),
                             poses, cfg.repeats, cfg.warmup)
        probe_lists.append([r.probes for r in results])
        records.append(_record("scaling", "voxel", scene, times, results, truth, poses, cam, cfg,
                               voxel_size=cfg.voxel_size, grid_step=cfg.grid_step,
                               probes=statistics.fmean(r.probes for r in results)))

        n_kf = max(1, math.ceil(count / cfg.max_points_per_kf))
        kf_map = build_from_scene(scene.points,
                                  wall_keyframe_poses(length, n_kf, cfg.wall_offset,
                                                      cfg.wall_height / 2),
                                  cam, cfg.max_points_per_kf)
        kf_results = [query_visible_kf(kf_map, pose, cfg.d_min, cfg.d_max) for pose in poses]
        times = time_queries(lambda pose: query_visible_kf(kf_map, pose, cfg.d_min, cfg.d_max),
                             poses, cfg.repeats, cfg.warmup)
        records.append(_record("scaling", "keyframe", scene, times, kf_results, truth, poses, cam,
                               cfg, keyframes_scanned=statistics.fmean(
                                   r.keyframes_scanned for r in kf_results)))

    voxel = [r for r in records if r.map_kind == "voxel"]
    keyframe = [r for r in records if r.map_kind == "keyframe"]
    v_ratio = _ratio([r.time_median_ns for r in voxel])
    k_ratio = _ratio([r.time_median_ns for r in keyframe])
    probes_same = all(p == probe_lists[0] for p in probe_lists)
    checks = [
        Check("voxel time ratio", v_ratio <= SCALING_VOXEL_MAX_RATIO,
              f"largest/smallest median = {v_ratio:.3f} (<= {SCALING_VOXEL_MAX_RATIO})"),
        Check("voxel probes constant", probes_same,
              f"per-query probes {sorted(set(probe_lists[0]))} at every size"
              if probes_same else "per-query probes differ between sizes"),
        Check("keyframe time ratio", k_ratio >= SCALING_KEYFRAME_MIN_RATIO,
              f"largest/smallest median = {k_ratio:.3f} (>= {SCALING_KEYFRAME_MIN_RATIO})"),
    ]
    series = {"map_size": [r.map_size for r in voxel],
              "voxel_ms": [r.time_median_ns / 1e6 for r in voxel],
              "keyframe_ms": [r.time_median_ns / 1e6 for r in keyframe],
              "probes": probe_lists,
              "r_s": template.r * template.s}
    return ExperimentResult("scaling", records, checks, series)


def _record(experiment, kind, scene, times, results, truths, poses, cam, cfg, *, voxel_size=None,
            grid_step=None, probes=None, keyframes_scanned=None, first_hit=None,
            dilated=True) -> BenchRecord:
    recalls, precisions, dil, occluded, sizes = [], [], [], 0, []
    for res, truth, pose in zip(results, truths, poses):
        ids = res.point_ids()
        r, p = recall_precision(ids, truth)
        recalls.append(r)
        precisions.append(p)
        sizes.append(len(ids))
        occluded += _occluded_count(scene, pose, sorted(ids))
        if kind == "voxel" and dilated:
            dil.append(dilated_fraction(cam, pose, res, voxel_size, cfg.d_min))
    if kind == "voxel" and first_hit is None:
        first_hit = cfg.first_hit_only
    return BenchRecord(
        experiment=experiment, map_kind=kind, map_size=len(scene), voxel_size=voxel_size,
        grid_step=grid_step, first_hit_only=first_hit if kind == "voxel" else None,
        n_queries=len(poses), time_median_ns=float(statistics.median(times)) if times else 0.0,
        time_mean_ns=statistics.fmean(times) if times else 0.0, probes=probes,
        keyframes_scanned=keyframes_scanned, returned_points=statistics.fmean(sizes),
        recall=statistics.fmean(recalls), precision=statistics.fmean(precisions),
        precision_dilated=min(dil) if dil else None, occluded_returned=occluded)


def corridor_params(cfg: BenchConfig) -> CorridorParams:
    return CorridorParams(cfg.corridor_leg_length, cfg.corridor_width, cfg.corridor_density,
                          cfg.corridor_height, cfg.corridor_thickness, cfg.wall_height / 2,
                          cfg.turn_setback, cfg.corridor_n_poses)


def near_far_rays(vmap: VoxelMap, template: RayTemplate, pose: Pose, scene: Scene) -> int:
    """Number of rays whose first non-empty voxel holds near-wall points and
    that later pass through a voxel holding other wall points."""
    label_of = dict(zip((p.id for p in scene.points), scene.labels))
    world = pose.to_world(template.samples)
    keys = np.floor(world / vmap.config.voxel_size).astype(np.int64).tolist()
    count = 0
    for ray in keys:
        first = None
        for ijk in ray:
            voxel = vmap.get_voxel(tuple(ijk))
            if voxel is None:
                continue
            labels = {label_of[p.id] for p in voxel.points}
            if first is None:
                first = labels
                if NEAR_WALL not in first:
                    break
            elif labels - {NEAR_WALL}:
                count += 1
                break
    return count


def run_occlusion(cfg: BenchConfig) -> ExperimentResult:
    """Visible points at the corridor turn pose, with and without occlusion handling."""
    cam = camera_from(cfg)
    template = template_from(cfg, cam)
    params = corridor_params(cfg)
    scene = make_corridor_scene(params, cfg.seed)
    trajectory = make_corridor_trajectory(params)
    pose = trajectory.poses[trajectory.turn_index]
    vmap = build_voxel_map(scene, cfg.voxel_size, cfg.table_size_n)

    if len(scene):
        shared = near_far_rays(vmap, template, pose, scene)
        if shared == 0:
            raise PreconditionError(
                "no template ray at the turn pose meets the near wall and then a farther wall; "
                "occlusion cannot be measured with this corridor/camera configuration")
    else:
        shared = 0

    truth = [{p.id for p in brute_force_visible(scene, cam, pose, cfg.d_min, cfg.d_max)}]
    far_ids = {p.id for p, lab in zip(scene.points, scene.labels) if lab != NEAR_WALL}
    records = []
    vis = {}
    for first_hit in (True, False):
        res = query_visible(vmap, template, pose, first_hit)
        vis[first_hit] = res
        times = time_queries(lambda p: query_visible(vmap, template, p, first_hit), [pose],
                             cfg.repeats, cfg.warmup)
        records.append(_record("occlusion", "voxel", scene, times, [res], truth, [pose], cam, cfg,
                               voxel_size=cfg.voxel_size, grid_step=cfg.grid_step,
                               probes=float(res.probes), first_hit=first_hit))

    kf_map = build_from_scene(scene.points, trajectory.poses, cam, cfg.max_points_per_kf)
    kf_res = query_visible_kf(kf_map, pose, cfg.d_min, cfg.d_max)
    times = time_queries(lambda p: query_visible_kf(kf_map, p, cfg.d_min, cfg.d_max), [pose],
                         cfg.repeats, cfg.warmup)
    records.append(_record("occlusion", "keyframe", scene, times, [kf_res], truth, [pose], cam, cfg,
                           keyframes_scanned=float(kf_res.keyframes_scanned)))

    voxel_rec, _, kf_rec = records
    violations = occlusion_violations(vmap, template, pose, vis[True])
    far_voxel = len(vis[True].point_ids() & far_ids)
    far_all = len(vis[False].point_ids() & far_ids)
    far_kf = len(kf_res.point_ids() & far_ids)
    checks = [
        Check("voxel first-hit ray audit", violations == 0,
              f"{violations} points returned through a ray with a nearer non-empty voxel"),
        Check("voxel first-hit occluded points", voxel_rec.occluded_returned == 0,
              f"{voxel_rec.occluded_returned} geometrically occluded points returned "
              f"({far_voxel} far-wall points, {shared} rays see near and far walls)"),
        Check("keyframe returns occluded points", kf_rec.occluded_returned >= 1 and far_kf >= 1,
              f"{kf_rec.occluded_returned} occluded points, {far_kf} far-wall points"),
    ]
    series = {"cam": cam, "pose": pose, "scene": scene, "trajectory": trajectory,
              "voxel": vis[True], "voxel_all": vis[False], "keyframe": kf_res,
              "far_counts": {"voxel": far_voxel, "voxel_all": far_all, "keyframe": far_kf}}
    tables = {"visible_voxel": visible_rows(vis[True], pose),
              "visible_keyframe": keyframe_rows(kf_res)}
    return ExperimentResult("occlusion", records, checks, series, tables)


def _box_trials(cfg: BenchConfig, n: int, seed_offset: int):
    for k in range(n):
        scene = make_random_box_scene(cfg.box_extent, cfg.box_points, cfg.seed + seed_offset + k)
        pose = random_box_poses(1, cfg.seed + seed_offset + k, cfg.box_extent)[0]
        yield scene, pose


def run_voxel_size_sweep(cfg: BenchConfig) -> ExperimentResult:
    """Query time and oracle recall/precision for each voxel size on one
    random-box scene.

    Recall and precision are measured with every sample probed, since the
    occlusion-free oracle only speaks to field-of-view fidelity; first-hit
    rows are recorded alongside for reference.
    """
    cam = camera_from(cfg)
    scene = make_random_box_scene(cfg.box_extent, cfg.box_points, cfg.seed)
    poses = random_box_poses(cfg.sweep_poses, cfg.seed + 1, cfg.box_extent)
    truth = [{p.id for p in brute_force_visible(scene, cam, pose, cfg.d_min, cfg.d_max)}
             for pose in poses]
    records = []
    for size in cfg.voxel_sizes:
        template = template_from(cfg, cam, voxel_size=size)
        vmap = build_voxel_map(scene, size, cfg.table_size_n)
        for first_hit in (False, True):
            results = [query_visible(vmap, template, pose, first_hit) for pose in poses]
            times = time_queries(lambda p: query_visible(vmap, template, p, first_hit), poses,
                                 cfg.repeats, cfg.warmup)
            records.append(_record("voxel-sweep", "voxel", scene, times, results, truth, poses,
                                   cam, cfg, voxel_size=size, grid_step=cfg.grid_step,
                                   probes=statistics.fmean(r.probes for r in results),
                                   first_hit=first_hit))

    main = {r.voxel_size: r for r in records if r.first_hit_only is False}
    checks = []
    if 0.5 in main and 5.0 in main:
        a, b = main[0.5], main[5.0]
        checks.append(Check("0.5 m slower than 5 m", a.time_median_ns > b.time_median_ns,
                            f"{a.time_median_ns / 1e6:.3f} ms vs {b.time_median_ns / 1e6:.3f} ms"))
    if 20.0 in main and 5.0 in main:
        a, b = main[20.0], main[5.0]
        checks.append(Check("20 m less precise than 5 m", a.precision < b.precision,
                            f"precision {a.precision:.3f} vs {b.precision:.3f}"))
    sizes = sorted(main)
    series = {"voxel_size": sizes,
              "time_ms": [main[s].time_median_ns / 1e6 for s in sizes],
              "recall": [main[s].recall for s in sizes],
              "precision": [main[s].precision for s in sizes]}
    return ExperimentResult("voxel-sweep", records, checks, series)


def run_recall(cfg: BenchConfig) -> ExperimentResult:
    """Recall and precision against the oracle over random (scene, pose) pairs,
    at ``grid_step`` and at half of it.

    Every sample is probed: the oracle has no notion of occlusion, so this
    measures how well the ray grid covers the frustum.
    """
    cam = camera_from(cfg)
    steps = [cfg.grid_step, max(1.0, cfg.grid_step / 2)]
    templates = [template_from(cfg, cam, grid_step=s) for s in steps]
    per_step = {s: {"recall": [], "precision": [], "dilated": [], "times": [], "probes": [],
                    "returned": []} for s in steps}
    for scene, pose in _box_trials(cfg, cfg.n_trials, 10_000):
        truth = {p.id for p in brute_force_visible(scene, cam, pose, cfg.d_min, cfg.d_max)}
        vmap = build_voxel_map(scene, cfg.voxel_size, cfg.table_size_n)
        for step, template in zip(steps, templates):
            t0 = time.perf_counter_ns()
            res = query_visible(vmap, template, pose, first_hit_only=False)
            elapsed = time.perf_counter_ns() - t0
            r, p = recall_precision(res.point_ids(), truth)
            acc = per_step[step]
            acc["recall"].append(r)
            acc["precision"].append(p)
            acc["dilated"].append(dilated_fraction(cam, pose, res, cfg.voxel_size, cfg.d_min))
            acc["times"].append(elapsed)
            acc["probes"].append(res.probes)
            acc["returned"].append(len(res.points))

    records = []
    for step in steps:
        acc = per_step[step]
        records.append(BenchRecord(
            experiment="recall", map_kind="voxel", map_size=cfg.box_points,
            voxel_size=cfg.voxel_size, grid_step=step, first_hit_only=False,
            n_queries=cfg.n_trials, time_median_ns=float(statistics.median(acc["times"])),
            time_mean_ns=statistics.fmean(acc["times"]), probes=statistics.fmean(acc["probes"]),
            keyframes_scanned=None, returned_points=statistics.fmean(acc["returned"]),
            recall=statistics.fmean(acc["recall"]), precision=statistics.fmean(acc["precision"]),
            precision_dilated=min(acc["dilated"]), occluded_returned=0))

    base, fine = records
    checks = [
        Check("mean recall", base.recall >= RECALL_MIN_MEAN,
              f"{base.recall:.4f} over {cfg.n_trials} trials (>= {RECALL_MIN_MEAN})"),
        Check("dilated precision", base.precision_dilated == 1.0,
              f"worst trial {base.precision_dilated:.4f} (== 1.0)"),
        Check("denser grid recall", fine.recall >= base.recall,
              f"grid_step {steps[1]:g}: {fine.recall:.4f} vs {steps[0]:g}: {base.recall:.4f}"),
    ]
    series = {"steps": steps, "recall": {s: per_step[s]["recall"] for s in steps}}
    return ExperimentResult("recall", records, checks, series)


RUNNERS = {
    "scaling": run_scaling,
    "occlusion": run_occlusion,
    "voxel-sweep": run_voxel_size_sweep,
    "recall": run_recall,
}
