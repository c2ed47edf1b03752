"""QoS-weighted Borda placement pipeline and the leader's scheduling loop."""

from qonnect.scheduler.borda import (
    BordaCountStrategy,
    ClusterScore,
    NodeScore,
    PlacementResult,
    PlacementStrategy,
    aggregate_clusters,
    borda_rank,
    eligibility_filter,
    score_and_filter_nodes,
    score_nodes,
    threshold_filter,
)
from qonnect.scheduler.loop import SchedulerConfig, scheduler_tick

__all__ = [
    "BordaCountStrategy",
    "ClusterScore",
    "NodeScore",
    "PlacementResult",
    "PlacementStrategy",
    "SchedulerConfig",
    "aggregate_clusters",
    "borda_rank",
    "eligibility_filter",
    "score_and_filter_nodes",
    "score_nodes",
    "scheduler_tick",
    "threshold_filter",
]
