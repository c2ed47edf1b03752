"""Simulated cluster: rollouts, idempotent applies, faults, determinism."""

from __future__ import annotations

import pytest

from qonnect.kb.model import Domain
from qonnect.sim import (
    CrashLoop,
    DeleteNamespace,
    KillRa,
    NodePressure,
    PROFILES,
    SimCluster,
    WorkloadPhase,
    make_cluster,
)
from qonnect.sim.cluster import SimClusterError


def cluster(profile: str = "performance") -> SimCluster:
    return make_cluster("edge-perf", Domain.EDGE, profile, "10.3.2.1", seed=1)


def deployment(name: str = "web", replicas: int = 1, **extra) -> dict:
    return {"kind": "Deployment", "name": name, "replicas": replicas, **extra}


def test_profile_attributes_match_parameter_table():
    c = cluster("cost")
    workers = [n for n in c.list_nodes() if n.role == "worker"]
    assert len(workers) == 2
    assert all(n.pricing == 0.0042 for n in workers)
    assert all(n.energy == 0.0025689 for n in workers)
    assert all(n.bandwidth == 5.0 for n in workers)
    assert PROFILES["energy"].pricing == 16.3884
    assert PROFILES["performance"].bandwidth == 100.0


def test_rollout_reaches_ready_after_latency():
    c = cluster()
    c.ensure_namespace("app")
    c.apply_objects("app", [deployment()], pinned_nodes=("edge-perf-worker-0",))
    workload = c.workload_state("app", "web")
    assert workload.phase == WorkloadPhase.ROLLING and workload.ready == 0
    events = []
    for _ in range(5):
        events += c.step(0.5)
    assert workload.phase == WorkloadPhase.READY and workload.ready == 1
    assert any(e.kind == "workload-ready" for e in events)


def test_reapply_same_objects_is_idempotent():
    c = cluster()
    c.ensure_namespace("app")
    objs = [deployment()]
    c.apply_objects("app", objs, pinned_nodes=())
    c.step(3.0)
    assert c.workload_state("app", "web").phase == WorkloadPhase.READY
    c.apply_objects("app", objs, pinned_nodes=())
    assert c.workload_state("app", "web").phase == WorkloadPhase.READY  # no second rollout


def test_label_merge_incoming_wins():
    c = cluster()
    c.ensure_namespace("app")
    c.apply_objects("app", [{"kind": "Service", "name": "svc", "labels": {"tier": "web"}}], ())
    c.apply_objects("app", [{"kind": "Service", "name": "svc", "labels": {"app": "x"}}], ())
    stored = c.namespaces["app"]["Service/svc"]
    assert stored["labels"] == {"tier": "web", "app": "x"}


def test_pin_to_unknown_node_rejected():
    c = cluster()
    c.ensure_namespace("app")
    with pytest.raises(SimClusterError):
        c.apply_objects("app", [deployment()], pinned_nodes=("nope",))
    # Control-plane nodes are not valid pin targets either.
    with pytest.raises(SimClusterError):
        c.apply_objects("app", [deployment()], pinned_nodes=("edge-perf-control-plane",))


def test_step_rejects_nonpositive_dt():
    with pytest.raises(SimClusterError):
        cluster().step(0.0)


def test_crashloop_never_reaches_ready():
    c = cluster()
    c.ensure_namespace("app")
    c.apply_objects("app", [deployment(replicas=2)], ())
    c.step(3.0)
    c.inject_fault(CrashLoop("app", "web"))
    ready_values = set()
    for _ in range(10):
        c.step(0.5)
        workload = c.workload_state("app", "web")
        ready_values.add(workload.ready)
        assert workload.phase == WorkloadPhase.CRASH_LOOP
        assert workload.ready < workload.desired
    assert len(ready_values) > 1  # oscillates


def test_fault_flags_and_namespace_conservation():
    c = cluster()
    event = c.inject_fault(KillRa())
    assert not c.ra_alive and event.kind == "fault-killra"
    c.inject_fault(NodePressure("edge-perf-worker-1"))
    assert c._node("edge-perf-worker-1").pressured

    c.ensure_namespace("a")
    c.ensure_namespace("b")
    c.apply_objects("a", [deployment("wa")], ())
    c.apply_objects("b", [deployment("wb")], ())
    c.inject_fault(DeleteNamespace("a"))
    assert not c.namespace_exists("a")
    assert c.object_exists("b", "Deployment/wb")  # untouched
    with pytest.raises(SimClusterError):
        c.inject_fault(DeleteNamespace("missing"))


def test_identical_inputs_replay_identical_event_logs():
    def run() -> list:
        c = cluster()
        c.ensure_namespace("app")
        c.apply_objects("app", [deployment(replicas=3)], ())
        events = []
        for i in range(8):
            if i == 4:
                c.inject_fault(CrashLoop("app", "web"))
            events += c.step(0.7)
        return [(e.at, e.kind, tuple(sorted(e.detail.items()))) for e in events]

    assert run() == run()
