"""Vertex ordering for parallel and cycle-form Sankey diagrams by weighted crossing reduction."""

__version__ = "0.1.0"

from .graph import (
    CrossingReport,
    Edge,
    GraphError,
    LayeredGraph,
    Ordering,
    apply_ordering,
    crossing_report,
    ingest,
    interconnection,
    log_transform,
    weighted_crossing_level,
)
from .markov import Stage1Config, Stage1Result, run_stage1
from .refine import Stage2Config, Stage2Result, run_stage2
from .baselines import RobustCase, bc_method, brute_force_optimal, random_instance, robust_test


def layout(g: LayeredGraph, stage1: Stage1Config = Stage1Config(), stage2: Stage2Config = Stage2Config()) -> Stage2Result:
    """Both stages: Markov chain ordering refined by partition refinement."""
    s1 = run_stage1(g, stage1)
    return run_stage2(g, s1.ordering, stage2)


__all__ = [
    "CrossingReport",
    "Edge",
    "GraphError",
    "LayeredGraph",
    "Ordering",
    "RobustCase",
    "Stage1Config",
    "Stage1Result",
    "Stage2Config",
    "Stage2Result",
    "apply_ordering",
    "bc_method",
    "brute_force_optimal",
    "crossing_report",
    "ingest",
    "interconnection",
    "layout",
    "log_transform",
    "random_instance",
    "robust_test",
    "run_stage1",
    "run_stage2",
    "weighted_crossing_level",
]
