"""Rank-based node scoring and cluster selection.

The pipeline runs in seven steps over the node snapshots of one target
domain: filter out ineligible nodes, rank every attribute by Borda count
(lower values win for energy and pricing, higher for the four capacity
attributes), fold the capacity ranks into one score, weight the three
criteria by the user's QoS vector, keep nodes at or above the mean score,
aggregate per cluster, and return the top cluster with its retained nodes.

Because Borda scores depend only on ordering, the outcome is invariant
under positive scaling of any attribute column.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol, Sequence

from qonnect.kb.model import NodeSnapshot, QoSVector


@dataclass(frozen=True)
class NodeScore:
    cluster_id: str
    node_name: str
    energy_borda: int
    pricing_borda: int
    cpu_borda: int
    memory_borda: int
    bandwidth_borda: int
    storage_borda: int
    weighted: float

    @property
    def capacity_borda(self) -> int:
        return self.cpu_borda + self.memory_borda + self.bandwidth_borda + self.storage_borda


@dataclass(frozen=True)
class ClusterScore:
    cluster_id: str
    retained_score: float
    total_score: float


@dataclass(frozen=True)
class PlacementResult:
    cluster_id: str
    node_names: tuple[str, ...]
    ranking: tuple[ClusterScore, ...]


def eligibility_filter(
    nodes: Sequence[NodeSnapshot], now: float, staleness: float
) -> list[NodeSnapshot]:
    """Drop unready, unschedulable, pressured, or stale-snapshot nodes."""
    return [
        n
        for n in nodes
        if n.ready and n.schedulable and not n.pressured and now - n.taken_at <= staleness
    ]


def borda_rank(values: Sequence[float], lower_wins: bool) -> list[int]:
    """Competition-ranked Borda scores: best value gets n-1 points, worst 0.

    Ties share the score of the first position of their tie group.
    """
    if not values:
        raise ValueError("cannot rank an empty value list")
    n = len(values)
    order = sorted(range(n), key=lambda i: values[i], reverse=not lower_wins)
    scores = [0] * n
    position = 0
    while position < n:
        tie_end = position
        while tie_end + 1 < n and values[order[tie_end + 1]] == values[order[position]]:
            tie_end += 1
        for i in range(position, tie_end + 1):
            scores[order[i]] = n - 1 - position
        position = tie_end + 1
    return scores


def score_nodes(eligible: Sequence[NodeSnapshot], qos: QoSVector) -> list[NodeScore]:
    """Per-attribute Borda rankings over all eligible nodes, folded by QoS weights."""
    if not eligible:
        raise ValueError("cannot score an empty node set")
    weights = qos.normalized()
    energy = borda_rank([n.energy for n in eligible], lower_wins=True)
    pricing = borda_rank([n.pricing for n in eligible], lower_wins=True)
    cpu = borda_rank([n.cpu for n in eligible], lower_wins=False)
    memory = borda_rank([n.memory for n in eligible], lower_wins=False)
    bandwidth = borda_rank([n.bandwidth for n in eligible], lower_wins=False)
    storage = borda_rank([n.storage for n in eligible], lower_wins=False)
    scored = []
    for i, node in enumerate(eligible):
        capacity = cpu[i] + memory[i] + bandwidth[i] + storage[i]
        weighted = (
            energy[i] * weights.energy
            + pricing[i] * weights.pricing
            + capacity * weights.performance
        )
        scored.append(
            NodeScore(
                cluster_id=node.cluster_id,
                node_name=node.node_name,
                energy_borda=energy[i],
                pricing_borda=pricing[i],
                cpu_borda=cpu[i],
                memory_borda=memory[i],
                bandwidth_borda=bandwidth[i],
                storage_borda=storage[i],
                weighted=weighted,
            )
        )
    return scored


def threshold_filter(scored: Sequence[NodeScore]) -> list[NodeScore]:
    """Keep nodes scoring at or above the arithmetic mean; never empty."""
    if not scored:
        raise ValueError("cannot threshold an empty score list")
    mean = sum(s.weighted for s in scored) / len(scored)
    return [s for s in scored if s.weighted >= mean]


def aggregate_clusters(
    retained: Sequence[NodeScore], all_scored: Sequence[NodeScore]
) -> list[ClusterScore]:
    """Order clusters by retained score, then total score, then id."""
    retained_by_cluster: dict[str, float] = {}
    total_by_cluster: dict[str, float] = {}
    for s in all_scored:
        total_by_cluster[s.cluster_id] = total_by_cluster.get(s.cluster_id, 0.0) + s.weighted
        retained_by_cluster.setdefault(s.cluster_id, 0.0)
    for s in retained:
        retained_by_cluster[s.cluster_id] += s.weighted
    ranking = [
        ClusterScore(
            cluster_id=cid,
            retained_score=retained_by_cluster[cid],
            total_score=total_by_cluster[cid],
        )
        for cid in total_by_cluster
    ]
    ranking.sort(key=lambda c: (-c.retained_score, -c.total_score, c.cluster_id))
    return ranking


def score_and_filter_nodes(
    snapshots: Sequence[NodeSnapshot],
    qos: QoSVector,
    now: float,
    staleness: float,
) -> PlacementResult | None:
    """Full pipeline over one domain's snapshots; None when nothing is eligible."""
    eligible = eligibility_filter(snapshots, now=now, staleness=staleness)
    if not eligible:
        return None
    scored = score_nodes(eligible, qos)
    retained = threshold_filter(scored)
    ranking = aggregate_clusters(retained, scored)
    top = ranking[0]
    chosen = [s for s in retained if s.cluster_id == top.cluster_id]
    chosen.sort(key=lambda s: (-s.weighted, s.node_name))
    return PlacementResult(
        cluster_id=top.cluster_id,
        node_names=tuple(s.node_name for s in chosen),
        ranking=tuple(ranking),
    )


class PlacementStrategy(Protocol):
    """Swap point for alternative ranking algorithms."""

    def place(
        self,
        snapshots: Sequence[NodeSnapshot],
        qos: QoSVector,
        now: float,
        staleness: float,
    ) -> PlacementResult | None: ...


class BordaCountStrategy:
    def place(
        self,
        snapshots: Sequence[NodeSnapshot],
        qos: QoSVector,
        now: float,
        staleness: float,
    ) -> PlacementResult | None:
        return score_and_filter_nodes(snapshots, qos, now=now, staleness=staleness)
