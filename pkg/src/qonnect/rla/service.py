"""RLA request handling and the leader-side control loops.

One service instance wraps a Raft node plus its KB replica. Control writes
(registrations, submissions, QoS changes, deletions, placement decisions)
commit through Raft before the request is answered. High-volume telemetry
(node snapshots, heartbeats) is acknowledged from applied state and flushed
through the log in small batches.

The scheduler pass and telemetry flush only run while this node is leader;
a deposed leader's in-flight proposals fail at commit and are harmless.
"""

from __future__ import annotations

import ipaddress
import json
import re
import time
import uuid
from typing import Callable

from qonnect.events import EventLog
from qonnect.kb.commands import (
    DeleteApplication,
    KBCommand,
    PutNodeSnapshot,
    RecordHeartbeat,
    RegisterCluster,
    SubmitApplication,
    UpdateQoS,
    decode_command,
)
from qonnect.kb.model import ComponentStatus, Domain
from qonnect.kb.store import Effect, KnowledgeBase
from qonnect.raft.node import NotLeaderError, RaftNode, Role
from qonnect.rla.config import RlaConfig
from qonnect.rla.validation import HEARTBEAT_STATUSES, parse_qos, validate_bundle
from qonnect.scheduler.loop import SchedulerConfig, scheduler_tick


class ValidationFailed(Exception):
    def __init__(self, errors: list[dict]) -> None:
        super().__init__(f"{len(errors)} validation error(s)")
        self.errors = errors


class NotFoundError(Exception):
    pass


class ConflictError(Exception):
    pass


class UnavailableError(Exception):
    pass


def _default_id_factory() -> str:
    return str(uuid.uuid4())


_PLACEHOLDER_RE = re.compile(r"\{\{QONNECT_([A-Z]+)_IP\}\}")


def _placeholder_domains(manifest: dict) -> set[str]:
    return {m.lower() for m in _PLACEHOLDER_RE.findall(json.dumps(manifest))}


class RlaService:
    def __init__(
        self,
        config: RlaConfig,
        node: RaftNode,
        kb: KnowledgeBase | None = None,
        clock: Callable[[], float] = time.time,
        id_factory: Callable[[], str] = _default_id_factory,
        events: EventLog | None = None,
    ) -> None:
        self.config = config
        self.node = node
        self.kb = kb if kb is not None else KnowledgeBase()
        self.clock = clock
        self.id_factory = id_factory
        self.events = events if events is not None else EventLog()
        # Installed by the hosting runtime: propose a command, wait for its
        # commit, and return the apply effect.  Engine and live runtimes
        # provide different implementations.
        self.proposer: Callable[[KBCommand], Effect] | None = None

        self._source = f"rla-{config.rla_id}"
        self._telemetry: list[KBCommand] = []
        self._effects_by_index: dict[int, Effect] = {}
        self._applied_since_compact = 0
        self._next_scheduler_pass = 0.0
        self._next_flush = 0.0
        self._scheduler_config = SchedulerConfig(
            tick_period=config.tick_period,
            grace_period=config.grace_period,
            snapshot_staleness=config.snapshot_staleness,
        )

    # ------------------------------------------------------------------
    # Raft integration
    # ------------------------------------------------------------------

    @property
    def is_leader(self) -> bool:
        return self.node.role == Role.LEADER

    def apply_committed(self, index: int, raw_command: str) -> Effect:
        """Apply one committed log entry to the KB replica."""
        effect = self.kb.apply(decode_command(raw_command))
        self._effects_by_index[index] = effect
        if len(self._effects_by_index) > 1024:
            # Effects are only consumed by the proposing leader; keep
            # followers from accumulating them forever.
            for key in list(self._effects_by_index)[:512]:
                del self._effects_by_index[key]
        self.events.append(
            self.clock(),
            self._source,
            f"kb-{effect.kind}",
            {**effect.detail, "transitions": effect.transitions},
        )
        self._applied_since_compact += 1
        if self._applied_since_compact >= self.config.compact_every:
            self.node.compact(self.node.last_applied, self.kb.snapshot_state())
            self._applied_since_compact = 0
            self.events.append(self.clock(), self._source, "log-compacted", {})
        return effect

    def restore_from_snapshot(self, blob: str) -> None:
        self.kb = KnowledgeBase.restore(blob)
        self._effects_by_index.clear()
        self._applied_since_compact = 0

    def take_effect(self, index: int) -> Effect | None:
        return self._effects_by_index.pop(index, None)

    def _require_leader(self) -> None:
        # Writes validate against local KB state, which is authoritative only
        # on the leader; followers redirect before consulting it.
        if self.node.role != Role.LEADER:
            raise NotLeaderError(self.node.leader_id)

    def _propose(self, command: KBCommand) -> Effect:
        if self.proposer is None:
            raise UnavailableError("no proposer wired to this service")
        self._require_leader()
        return self.proposer(command)

    def leader_address(self) -> str | None:
        return self.config.peer_address(self.node.leader_id)

    # ------------------------------------------------------------------
    # Control API
    # ------------------------------------------------------------------

    def register_cluster(self, external_ip: str, domain_raw: str) -> str:
        try:
            ipaddress.ip_address(external_ip)
        except ValueError:
            raise ValidationFailed(
                [{"field": "external_ip", "error": f"malformed ip: {external_ip!r}"}]
            ) from None
        if domain_raw not in {d.value for d in Domain}:
            raise ValidationFailed(
                [{"field": "domain", "error": f"unknown domain: {domain_raw!r}"}]
            )
        effect = self._propose(
            RegisterCluster(
                external_ip=external_ip,
                domain=Domain(domain_raw),
                registered_at=self.clock(),
            )
        )
        return effect.detail["cluster_id"]

    def cluster_config(self) -> dict[str, str]:
        return self.kb.cluster_config()

    def put_node_snapshot(self, cluster_id: str, nodes: list[dict]) -> dict:
        self._require_leader()
        if cluster_id not in self.kb.clusters:
            raise NotFoundError(f"unknown cluster: {cluster_id}")
        self._telemetry.append(
            PutNodeSnapshot(
                cluster_id=cluster_id, nodes=tuple(nodes), taken_at=self.clock()
            )
        )
        flags = [
            f"control-plane-node-reported:{n.get('node_name')}"
            for n in nodes
            if n.get("role") == "control-plane"
        ]
        return {"accepted": len(nodes), "flags": flags}

    def submit_application(self, bundle: dict) -> str:
        parsed, errors = validate_bundle(bundle)
        if parsed is None:
            raise ValidationFailed(errors)
        self._require_leader()
        if self.kb.live_application(parsed.name) is not None:
            raise ConflictError(f"application name in use: {parsed.name}")
        app_id = self.id_factory()
        effect = self._propose(
            SubmitApplication(
                app_id=app_id,
                name=parsed.name,
                labels=parsed.labels,
                qos=parsed.qos,
                components=parsed.components,
                submitted_at=self.clock(),
            )
        )
        if effect.is_noop:  # lost a submit race on the same name
            raise ConflictError(f"application name in use: {parsed.name}")
        return app_id

    def update_qos(self, name: str, qos_raw: object) -> dict:
        try:
            qos = parse_qos(qos_raw)
        except ValueError as exc:
            raise ValidationFailed([{"field": "qos", "error": str(exc)}]) from None
        self._require_leader()
        if self.kb.live_application(name) is None:
            raise NotFoundError(f"unknown application: {name}")
        effect = self._propose(UpdateQoS(name=name, qos=qos, updated_at=self.clock()))
        if effect.is_noop:
            raise NotFoundError(f"unknown application: {name}")
        return {"name": name, "version": effect.detail["version"]}

    def delete_application(self, name: str) -> dict:
        self._require_leader()
        if self.kb.live_application(name) is None:
            raise NotFoundError(f"unknown application: {name}")
        effect = self._propose(DeleteApplication(name=name))
        if effect.is_noop:
            raise NotFoundError(f"unknown application: {name}")
        return {"name": name, "status": "withdrawn"}

    def poll_applications(self, cluster_id: str) -> list[dict]:
        """Scheduled-but-unacknowledged components assigned to this cluster.

        Acknowledgment is implicit: the first heartbeat at the decision's
        version moves the component out of Scheduled, so it stops appearing.
        A payload is withheld while a sibling decision its manifest's
        placeholders depend on is still pending, so every delivered placement
        map is complete enough to resolve the manifest.
        """
        if cluster_id not in self.kb.clusters:
            raise NotFoundError(f"unknown cluster: {cluster_id}")
        payloads: list[dict] = []
        for app in sorted(self.kb.applications.values(), key=lambda a: (a.submitted_at, a.name)):
            if app.withdrawn:
                continue
            app_domains = {c.target_domain.value for c in app.components}
            placement: dict[str, str] = {}
            for comp in app.components:
                if comp.decision is not None:
                    placement.setdefault(comp.target_domain.value, comp.decision.cluster_id)
            for comp in app.components:
                if comp.status != ComponentStatus.SCHEDULED or comp.decision is None:
                    continue
                if comp.decision.cluster_id != cluster_id:
                    continue
                needed = _placeholder_domains(comp.manifest) & app_domains
                if not needed <= placement.keys():
                    continue
                payloads.append(
                    {
                        "app_id": app.app_id,
                        "name": app.name,
                        "version": app.version,
                        "component": comp.name,
                        "manifest": comp.manifest,
                        "target_nodes": list(comp.decision.node_names),
                        "placement": placement,
                    }
                )
        return payloads

    def heartbeat(
        self, app_id: str, component: str, cluster_id: str, version: int, status: str
    ) -> bool:
        """True = recorded; False = unknown/withdrawn/reassigned (drives cleanup)."""
        if status not in HEARTBEAT_STATUSES:
            raise ValidationFailed(
                [{"field": "status", "error": f"unknown status: {status!r}"}]
            )
        self._require_leader()
        app = self.kb.applications.get(app_id)
        if app is None or app.withdrawn:
            return False
        comp = app.component(component)
        if comp is None or version != app.version:
            return False
        if comp.decision is None or comp.decision.cluster_id != cluster_id:
            return False
        self._telemetry.append(
            RecordHeartbeat(
                app_id=app_id,
                component=component,
                cluster_id=cluster_id,
                version=version,
                status=status,
                at=self.clock(),
            )
        )
        return True

    def status(self) -> dict:
        return {
            "node_id": self.config.rla_id,
            "role": self.node.role.value,
            "term": self.node.current_term,
            "leader": self.node.leader_id,
            "leader_address": self.leader_address(),
            "applied_index": self.node.last_applied,
            "clusters": len(self.kb.clusters),
        }

    # ------------------------------------------------------------------
    # Leader loops
    # ------------------------------------------------------------------

    def pump(self, now: float) -> None:
        """Run due leader work: telemetry flush and the scheduler pass."""
        if not self.is_leader:
            self._telemetry.clear()
            return
        if now >= self._next_flush:
            self._next_flush = now + self.config.telemetry_flush
            self._flush_telemetry()
        if now >= self._next_scheduler_pass:
            self._next_scheduler_pass = now + self.config.tick_period
            self._scheduler_pass(now)

    def _flush_telemetry(self) -> None:
        pending, self._telemetry = self._telemetry, []
        for command in pending:
            try:
                self._propose(command)
            except (NotLeaderError, UnavailableError):
                return  # deposed mid-flush; agents re-report next period

    def _scheduler_pass(self, now: float) -> None:
        commands = scheduler_tick(
            self.kb, now=now, term=self.node.current_term, config=self._scheduler_config
        )
        for command in commands:
            try:
                effect = self._propose(command)
            except (NotLeaderError, UnavailableError):
                return
            self.events.append(
                now,
                self._source,
                f"scheduler-{effect.kind}",
                dict(effect.detail),
            )
