"""Leader scheduling loop: place pending, requeue stalled, halt on stale."""

from __future__ import annotations

from qonnect.kb import (
    KnowledgeBase,
    PutNodeSnapshot,
    QoSVector,
    RecordDecision,
    RecordHeartbeat,
    RegisterCluster,
    SubmitApplication,
)
from qonnect.kb.commands import RequeueComponent
from qonnect.kb.model import Domain
from qonnect.scheduler import SchedulerConfig, scheduler_tick
from qonnect.sim.profiles import PROFILES


def profile_nodes(profile: str) -> tuple[dict, ...]:
    spec = PROFILES[profile]
    return tuple(
        {
            "node_name": f"{profile}-w{i}",
            "ready": True,
            "schedulable": True,
            "pressured": False,
            "energy": spec.energy,
            "pricing": spec.pricing,
            "cpu": spec.cpu,
            "memory": spec.memory,
            "bandwidth": spec.bandwidth,
            "storage": spec.storage,
            "role": "worker",
        }
        for i in range(2)
    )


def build_kb(now: float = 0.0) -> tuple[KnowledgeBase, dict[str, str]]:
    """Nine-cluster KB with fresh snapshots everywhere."""
    kb = KnowledgeBase()
    ids: dict[str, str] = {}
    for d_idx, domain in enumerate(Domain):
        for p_idx, profile in enumerate(("energy", "cost", "performance")):
            effect = kb.apply(
                RegisterCluster(f"10.{d_idx}.{p_idx}.1", domain, registered_at=now)
            )
            cid = effect.detail["cluster_id"]
            ids[f"{domain.value}-{profile}"] = cid
            kb.apply(PutNodeSnapshot(cid, profile_nodes(profile), taken_at=now))
    return kb, ids


def submit(kb: KnowledgeBase, qos: QoSVector, name: str = "bookinfo", at: float = 0.0) -> str:
    manifest = {"objects": []}
    kb.apply(
        SubmitApplication(
            app_id=f"{name}-id",
            name=name,
            labels=(),
            qos=qos,
            components=(
                ("productpage", Domain.CLOUD, manifest),
                ("details", Domain.FOG, manifest),
                ("reviews", Domain.FOG, manifest),
                ("ratings", Domain.EDGE, manifest),
            ),
            submitted_at=at,
        )
    )
    return f"{name}-id"


def test_four_pending_components_yield_four_decisions_on_performance():
    kb, ids = build_kb()
    submit(kb, QoSVector(performance=1.0))
    commands = scheduler_tick(kb, now=1.0, term=2, config=SchedulerConfig())
    decisions = [c for c in commands if isinstance(c, RecordDecision)]
    assert len(decisions) == 4
    by_component = {c.component: c for c in decisions}
    assert by_component["productpage"].cluster_id == ids["cloud-performance"]
    assert by_component["details"].cluster_id == ids["fog-performance"]
    assert by_component["reviews"].cluster_id == ids["fog-performance"]
    assert by_component["ratings"].cluster_id == ids["edge-performance"]
    assert all(c.deciding_term == 2 for c in decisions)
    assert all(len(c.node_names) >= 1 for c in decisions)


def test_energy_qos_places_on_energy_clusters():
    kb, ids = build_kb()
    submit(kb, QoSVector(energy=1.0))
    commands = scheduler_tick(kb, now=1.0, term=2, config=SchedulerConfig())
    targets = {c.component: c.cluster_id for c in commands if isinstance(c, RecordDecision)}
    assert targets["ratings"] == ids["edge-energy"]
    assert targets["productpage"] == ids["cloud-energy"]


def test_stalled_component_requeues_then_places_elsewhere_next_tick():
    kb, ids = build_kb()
    app_id = submit(kb, QoSVector(performance=1.0))
    config = SchedulerConfig()
    for command in scheduler_tick(kb, now=1.0, term=2, config=config):
        kb.apply(command)
    edge_perf = ids["edge-performance"]
    kb.apply(RecordHeartbeat(app_id, "ratings", edge_perf, 1, "healthy", at=2.0))
    # Keep the healthy components' heartbeats fresh; `ratings` goes silent.
    for comp, cid in (
        ("productpage", ids["cloud-performance"]),
        ("details", ids["fog-performance"]),
        ("reviews", ids["fog-performance"]),
    ):
        kb.apply(RecordHeartbeat(app_id, comp, cid, 1, "healthy", at=40.0))

    # Refresh every cluster's snapshots except the dead edge-performance one.
    for key, cid in ids.items():
        if key == "edge-performance":
            continue
        profile = key.split("-", 1)[1]
        kb.apply(PutNodeSnapshot(cid, profile_nodes(profile), taken_at=40.0))

    commands = scheduler_tick(kb, now=40.0, term=2, config=config)
    requeues = [c for c in commands if isinstance(c, RequeueComponent)]
    assert [r.component for r in requeues] == ["ratings"]
    # Requeue wins this tick: no placement yet for ratings.
    assert not any(
        isinstance(c, RecordDecision) and c.component == "ratings" for c in commands
    )
    for command in commands:
        kb.apply(command)

    next_commands = scheduler_tick(kb, now=45.0, term=2, config=config)
    placements = [c for c in next_commands if isinstance(c, RecordDecision)]
    assert len(placements) == 1
    assert placements[0].component == "ratings"
    # Stale snapshots keep the dead cluster out; capacity QoS picks energy
    # (better bandwidth than cost) among the survivors.
    assert placements[0].cluster_id == ids["edge-energy"]


def test_all_snapshots_stale_halts_and_component_stays_pending():
    kb, ids = build_kb(now=0.0)
    submit(kb, QoSVector(performance=1.0))
    commands = scheduler_tick(kb, now=100.0, term=2, config=SchedulerConfig())
    assert commands == []
    assert len(kb.pending_components()) == 4


def test_quiet_kb_produces_no_commands():
    kb, _ = build_kb()
    assert scheduler_tick(kb, now=1.0, term=2, config=SchedulerConfig()) == []
