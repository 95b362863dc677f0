"""Benchmark harness for the voxel map and the keyframe baseline."""
from .config import BenchConfig, ConfigError, load_config, parse_config
from .experiments import (BenchRecord, Check, ExperimentResult, PreconditionError, run_occlusion,
                          run_recall, run_scaling, run_voxel_size_sweep)

__all__ = ["BenchConfig", "BenchRecord", "Check", "ConfigError", "ExperimentResult",
           "PreconditionError", "load_config", "parse_config", "run_occlusion", "run_recall",
           "run_scaling", "run_voxel_size_sweep"]
