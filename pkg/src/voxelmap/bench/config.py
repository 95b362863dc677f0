"""Benchmark configuration file.

Plain ``key = value`` lines; ``#`` starts a comment, lists are
comma-separated, booleans are ``true``/``false``. An optional ``[bench]``
section header is accepted. Every key is a :class:`BenchConfig` field::

    repeats = 5
    seed = 0
    voxel_size = 2.0
    wall_lengths = 100, 200, 300
    wall_points = 1000, 2000, 3000
"""
from __future__ import annotations

import configparser
import dataclasses
import typing
from dataclasses import dataclass, field
from pathlib import Path

EXPERIMENTS = ("scaling", "occlusion", "voxel-sweep", "recall")


class ConfigError(ValueError):
    """Invalid benchmark configuration; ``field`` names the offending key."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass
class BenchConfig:
    experiment: str = "scaling"
    repeats: int = 5
    warmup: int = 1
    seed: int = 0

    # camera
    fx: float = 500.0
    fy: float = 500.0
    cx: float = 320.0
    cy: float = 240.0
    width: int = 640
    height: int = 480

    # ray template and map
    grid_step: float = 32.0
    d_min: float = 0.5
    d_max: float = 30.0
    voxel_size: float = 2.0
    table_size_n: int = 100003
    first_hit_only: bool = True
    max_points_per_kf: int = 100

    # scaling: wall sweep, poses on a line parallel to the wall
    wall_lengths: list[float] = field(default_factory=lambda: [100.0 * k for k in range(1, 10)])
    wall_points: list[int] = field(default_factory=lambda: [1000 * k for k in range(1, 10)])
    wall_height: float = 4.0
    wall_offset: float = 5.0
    n_poses: int = 10
    pose_x_start: float = 10.0
    pose_x_end: float = 90.0

    # occlusion: U-shaped corridor
    corridor_leg_length: float = 40.0
    corridor_width: float = 6.0
    corridor_density: float = 10.0
    corridor_height: float = 4.0
    corridor_thickness: float = 6.0
    corridor_n_poses: int = 30
    turn_setback: float = 4.0

    # voxel-size sweep and recall: random box seen from outside
    voxel_sizes: list[float] = field(default_factory=lambda: [0.5, 5.0, 10.0, 15.0, 20.0])
    box_extent: float = 20.0
    box_points: int = 2000
    sweep_poses: int = 10
    n_trials: int = 100

    def validate(self) -> "BenchConfig":
        if self.experiment not in EXPERIMENTS:
            raise ConfigError("experiment", f"must be one of {', '.join(EXPERIMENTS)}")
        positive = ("repeats", "fx", "fy", "width", "height", "voxel_size", "table_size_n",
                    "max_points_per_kf", "n_poses", "corridor_leg_length", "corridor_width",
                    "corridor_height", "corridor_thickness", "box_extent", "sweep_poses",
                    "n_trials")
        for name in positive:
            if not getattr(self, name) > 0:
                raise ConfigError(name, f"must be > 0, got {getattr(self, name)}")
        if self.warmup < 0:
            raise ConfigError("warmup", "must be >= 0")
        if self.grid_step < 1:
            raise ConfigError("grid_step", f"must be >= 1, got {self.grid_step}")
        if not 0 < self.d_min < self.d_max:
            raise ConfigError("d_min", f"need 0 < d_min < d_max, got {self.d_min}, {self.d_max}")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise ConfigError("cx", "principal point must lie inside the image")
        if len(self.wall_lengths) != len(self.wall_points):
            raise ConfigError("wall_points", "wall_lengths and wall_points differ in length")
        if not self.wall_lengths:
            raise ConfigError("wall_lengths", "must not be empty")
        if any(v <= 0 for v in self.wall_lengths):
            raise ConfigError("wall_lengths", "all lengths must be > 0")
        if any(v < 0 for v in self.wall_points):
            raise ConfigError("wall_points", "counts must be >= 0")
        if not self.voxel_sizes or any(v <= 0 for v in self.voxel_sizes):
            raise ConfigError("voxel_sizes", "must be a non-empty list of sizes > 0")
        if self.corridor_density < 0:
            raise ConfigError("corridor_density", "must be >= 0")
        if self.corridor_n_poses < 2:
            raise ConfigError("corridor_n_poses", "must be >= 2")
        if self.box_points < 0:
            raise ConfigError("box_points", "must be >= 0")
        return self


_TYPES = typing.get_type_hints(BenchConfig)


def _convert(name: str, raw: str):
    kind = _TYPES[name]
    try:
        if kind is bool:
            low = raw.strip().lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(raw)
            return low in ("true", "1", "yes")
        if typing.get_origin(kind) is list:
            (item,) = typing.get_args(kind)
            return [item(x) for x in raw.replace(",", " ").split()]
        if kind is int:
            return int(raw)
        return kind(raw.strip())
    except (TypeError, ValueError):
        raise ConfigError(name, f"cannot parse {raw!r} as {getattr(kind, '__name__', kind)}") from None


def parse_config(text: str, **overrides) -> BenchConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    parser.optionxform = str
    if not text.lstrip().startswith("["):
        text = "[bench]\n" + text
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError("config", str(exc).splitlines()[0]) from None
    values = {}
    for section in parser.sections():
        for key, raw in parser.items(section):
            if key not in _TYPES:
                raise ConfigError(key, "unknown key")
            values[key] = _convert(key, raw)
    values.update({k: v for k, v in overrides.items() if v is not None})
    return BenchConfig(**values).validate()


def load_config(path: str | Path | None, **overrides) -> BenchConfig:
    text = Path(path).read_text() if path is not None else ""
    return parse_config(text, **overrides)


def config_fields() -> list[str]:
    return [f.name for f in dataclasses.fields(BenchConfig)]
