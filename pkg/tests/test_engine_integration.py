"""Cross-component invariants checked on whole-engine runs."""

from __future__ import annotations

from qonnect.harness.bookinfo import bookinfo_bundle
from qonnect.harness.engine import Deployment
from qonnect.harness.scenarios import run_all, run_scenario

# Legal component status transitions (None = first appearance).
ALLOWED_TRANSITIONS = {
    (None, "Pending"),
    ("Pending", "Scheduled"),
    ("Scheduled", "Healthy"),
    ("Scheduled", "Progressing"),
    ("Scheduled", "Failed"),
    ("Healthy", "Progressing"),
    ("Healthy", "Failed"),
    ("Progressing", "Healthy"),
    ("Progressing", "Failed"),
    ("Failed", "Healthy"),
    ("Failed", "Progressing"),
    # Requeue (stall or QoS bump) returns active components to Pending.
    ("Scheduled", "Pending"),
    ("Healthy", "Pending"),
    ("Progressing", "Pending"),
    ("Failed", "Pending"),
    # Withdrawal is terminal and allowed from anywhere.
    ("Pending", "Withdrawn"),
    ("Scheduled", "Withdrawn"),
    ("Healthy", "Withdrawn"),
    ("Progressing", "Withdrawn"),
    ("Failed", "Withdrawn"),
}


def test_all_four_scenarios_pass_back_to_back_on_one_deployment():
    dep = Deployment(seed=20)
    reports = run_all(dep)
    assert [r.verdict for r in reports] == ["pass"] * 4


def test_component_status_transitions_follow_the_machine():
    # Replay every effect log transition from a full back-to-back run.
    dep = Deployment(seed=21)
    run_all(dep)
    observed = set()
    for event in dep.events.events:
        if not event.kind.startswith("kb-"):
            continue
        for transition in event.detail.get("transitions", []):
            observed.add((transition["from"], transition["to"]))
    assert observed, "expected transitions to be recorded"
    assert observed <= ALLOWED_TRANSITIONS, observed - ALLOWED_TRANSITIONS


def test_replicas_converge_to_identical_kb_state():
    dep = Deployment(seed=22)
    run_scenario(dep, 1)

    def caught_up() -> bool:
        nodes = [n for i, n in dep.group.nodes.items() if i not in dep.group.stopped]
        applied = {n.last_applied for n in nodes}
        commits = {n.commit_index for n in nodes}
        return len(applied) == 1 and applied == commits

    assert dep.run_until(caught_up, timeout=10.0)
    blobs = {
        i: service.kb.snapshot_state()
        for i, service in dep.services.items()
        if i not in dep.group.stopped
    }
    assert len(set(blobs.values())) == 1, "replica KBs diverged"


def test_empty_kb_serves_empty_cluster_config():
    dep = Deployment(seed=23)  # not booted; nothing registered anywhere
    status, body = dep.apis["rla-0"].dispatch("GET", "/clusters/config")
    assert status == 200 and body["clusters"] == {}


def test_log_compaction_keeps_the_control_plane_running():
    dep = Deployment(seed=24)
    for service in dep.services.values():
        service.config.compact_every = 40  # force frequent snapshots
    run_scenario(dep, 1)
    assert any(e.kind == "log-compacted" for e in dep.events.events)
    # Still serving and consistent after compaction.
    dep.client().submit_application(bookinfo_bundle("post-compact", {"energy": 1.0}))
    assert dep.run_until(
        lambda: (app := dep.kb().live_application("post-compact")) is not None
        and all(c.decision is not None for c in app.components),
        60.0,
    )
