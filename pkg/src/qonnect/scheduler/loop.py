"""The periodic placement loop run by the Raft leader.

Each tick requeues stalled components and places pending ones. A component
requeued in a tick is deliberately not placed until the next tick, so its
placement uses snapshots that postdate the stall.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from qonnect.kb.commands import KBCommand, RecordDecision, RequeueComponent
from qonnect.kb.store import KnowledgeBase
from qonnect.scheduler.borda import BordaCountStrategy, PlacementStrategy


@dataclass
class SchedulerConfig:
    tick_period: float = 5.0
    grace_period: float = 30.0
    # Snapshots older than this are ineligible; defaults to 3x the agents'
    # snapshot interval so a dead cluster ages out before its grace expires.
    snapshot_staleness: float = 15.0
    strategy: PlacementStrategy = field(default_factory=BordaCountStrategy)


def scheduler_tick(
    kb: KnowledgeBase, now: float, term: int, config: SchedulerConfig
) -> list[KBCommand]:
    """Compute this tick's commands from a consistent KB view."""
    commands: list[KBCommand] = []
    for app, comp in kb.stalled_components(now=now, grace=config.grace_period):
        commands.append(
            RequeueComponent(
                app_id=app.app_id,
                component=comp.name,
                version=app.version,
                reason="heartbeat-stalled",
            )
        )
    for app, comp in kb.pending_components():
        snapshots = kb.nodes_in_domain(comp.target_domain)
        result = config.strategy.place(
            snapshots, app.qos, now=now, staleness=config.snapshot_staleness
        )
        if result is None:
            continue  # nothing eligible; the component stays pending
        commands.append(
            RecordDecision(
                app_id=app.app_id,
                component=comp.name,
                cluster_id=result.cluster_id,
                node_names=result.node_names,
                decided_at=now,
                deciding_term=term,
                version=app.version,
            )
        )
    return commands
