"""Continuous-encoded particle swarm feature selection with wrapper random-forest scoring."""

from .datasets import Dataset, GroundTruth, SplitPlan, generate, load_csv, make_split
from .harness import ExperimentSpec, run_experiment, srf_coverage
from .mo_engine import MOConfig, run_mo
from .oracle import ForestParams, WrapperOracle
from .so_engine import SOConfig, run_so

__all__ = [
    "Dataset", "GroundTruth", "SplitPlan", "generate", "load_csv", "make_split",
    "ExperimentSpec", "run_experiment", "srf_coverage", "MOConfig", "run_mo",
    "ForestParams", "WrapperOracle", "SOConfig", "run_so",
]
