"""Overlap-aware scheduling of multi-robot map fusion across edge servers and a cloud."""
from .costmodel import (
    CostParams,
    CostProfile,
    FusionLatencyModel,
    cloud_baseline_latency,
    edge_latency,
    estimate_group_output_size,
    load_profile,
    predict_fusion_latency,
    robot_map_latency,
    total_latency,
)
from .grouping import gain, initial_grouping
from .offload import assign, oracle_optimal_assignment
from .overlap_graph import Grouping, OverlapGraph, fitness, in_group_weight
from .pipeline import (
    ScheduleResult,
    run_cloud_baseline,
    run_greedy_baseline,
    run_random_baseline,
    run_recslam,
)
from .scene import (
    EdgeServerSpec,
    RobotSpec,
    Scenario,
    ScenarioError,
    Scene,
    build_overlap_matrix,
    coverage_region,
    load_scenario,
    overlap_degree,
)
from .tabu import TabuConfig, TabuList, optimize

__version__ = "0.1.0"
