"""A simulated cluster: the actuation target for resource agents.

Holds namespaces of applied objects, Deployment-like workloads with replica
rollout dynamics, a node set with status flags, and persisted key/value
config stores (the moral equivalent of ConfigMaps, which is what keeps the
agents stateless). All mutations are serialized through this object; time
advances only via ``step``, so identical inputs replay identically.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from enum import Enum
from typing import Union

from qonnect.kb.model import Domain
from qonnect.sim.profiles import PROFILES


class WorkloadPhase(str, Enum):
    ROLLING = "Rolling"
    READY = "Ready"
    CRASH_LOOP = "CrashLoop"


@dataclass(frozen=True)
class SimEvent:
    at: float
    cluster: str
    kind: str
    detail: dict


@dataclass
class SimNode:
    name: str
    role: str  # control-plane | worker
    ready: bool = True
    schedulable: bool = True
    pressured: bool = False
    energy: float = 0.0
    pricing: float = 0.0
    cpu: float = 0.0
    memory: float = 0.0
    bandwidth: float = 0.0
    storage: float = 0.0


@dataclass
class SimWorkload:
    namespace: str
    name: str
    desired: int
    ready: int = 0
    pinned_nodes: tuple[str, ...] = ()
    phase: WorkloadPhase = WorkloadPhase.ROLLING
    created_at: float = 0.0
    rollout_started: float = 0.0
    labels: dict[str, str] = field(default_factory=dict)
    env: dict[str, str] = field(default_factory=dict)


@dataclass(frozen=True)
class KillRa:
    pass


@dataclass(frozen=True)
class KillRla:
    pass


@dataclass(frozen=True)
class NodeNotReady:
    node_name: str


@dataclass(frozen=True)
class NodePressure:
    node_name: str


@dataclass(frozen=True)
class DeleteNamespace:
    namespace: str


@dataclass(frozen=True)
class CrashLoop:
    namespace: str
    workload: str


Fault = Union[KillRa, KillRla, NodeNotReady, NodePressure, DeleteNamespace, CrashLoop]


class SimClusterError(Exception):
    pass


class SimCluster:
    def __init__(
        self,
        name: str,
        domain: Domain,
        profile: str,
        ingress_ip: str,
        nodes: list[SimNode],
        seed: int = 0,
        rollout_latency: float = 2.0,
    ) -> None:
        if sum(1 for n in nodes if n.role == "control-plane") != 1:
            raise SimClusterError("a cluster has exactly one control-plane node")
        self.name = name
        self.domain = domain
        self.profile = profile
        self.ingress_ip = ingress_ip
        self.nodes = nodes
        self.rollout_latency = rollout_latency
        self.now = 0.0
        self.ra_alive = True
        self.rla_alive = True
        self.namespaces: dict[str, dict[str, dict]] = {}
        self.workloads: dict[str, dict[str, SimWorkload]] = {}
        self.config_stores: dict[str, dict] = {}
        self._rng = random.Random(seed)
        self._crash_state: dict[tuple[str, str], int] = {}

    # ------------------------------------------------------------------
    # Node and store access (the agent-facing backend surface)
    # ------------------------------------------------------------------

    def external_ip(self) -> str:
        return self.ingress_ip

    def list_nodes(self) -> list[SimNode]:
        return list(self.nodes)

    def _node(self, name: str) -> SimNode:
        for node in self.nodes:
            if node.name == name:
                return node
        raise SimClusterError(f"unknown node: {name}")

    def read_store(self, store: str) -> dict | None:
        value = self.config_stores.get(store)
        return dict(value) if value is not None else None

    def write_store(self, store: str, data: dict) -> None:
        self.config_stores[store] = dict(data)

    # ------------------------------------------------------------------
    # Namespaces and objects
    # ------------------------------------------------------------------

    def ensure_namespace(self, namespace: str) -> None:
        self.namespaces.setdefault(namespace, {})
        self.workloads.setdefault(namespace, {})

    def namespace_exists(self, namespace: str) -> bool:
        return namespace in self.namespaces

    def delete_namespace(self, namespace: str) -> None:
        """Remove exactly this namespace's objects; absent is a no-op."""
        self.namespaces.pop(namespace, None)
        self.workloads.pop(namespace, None)

    def apply_objects(
        self, namespace: str, objects: list[dict], pinned_nodes: tuple[str, ...]
    ) -> list[str]:
        if namespace not in self.namespaces:
            raise SimClusterError(f"namespace does not exist: {namespace}")
        workers = {n.name for n in self.nodes if n.role == "worker" and n.schedulable}
        for pin in pinned_nodes:
            if pin not in workers:
                raise SimClusterError(f"cannot pin to unknown or unschedulable node: {pin}")
        applied: list[str] = []
        for obj in objects:
            kind = obj.get("kind")
            name = obj.get("name")
            if not kind or not name:
                raise SimClusterError(f"object needs kind and name: {obj!r}")
            obj_id = f"{kind}/{name}"
            existing = self.namespaces[namespace].get(obj_id)
            merged_labels = dict(existing.get("labels", {})) if existing else {}
            merged_labels.update(obj.get("labels", {}))
            stored = dict(obj)
            stored["labels"] = merged_labels
            self.namespaces[namespace][obj_id] = stored
            if kind == "Deployment":
                self._apply_workload(namespace, name, stored, pinned_nodes)
            applied.append(obj_id)
        return applied

    def _apply_workload(
        self, namespace: str, name: str, obj: dict, pinned_nodes: tuple[str, ...]
    ) -> None:
        desired = int(obj.get("replicas", 1))
        env = dict(obj.get("env", {}))
        labels = dict(obj.get("labels", {}))
        current = self.workloads[namespace].get(name)
        if (
            current is not None
            and current.desired == desired
            and current.env == env
            and current.labels == labels
            and current.pinned_nodes == tuple(pinned_nodes)
            and current.phase != WorkloadPhase.CRASH_LOOP
        ):
            return  # unchanged spec: no second rollout
        self.workloads[namespace][name] = SimWorkload(
            namespace=namespace,
            name=name,
            desired=desired,
            ready=0,
            pinned_nodes=tuple(pinned_nodes),
            phase=WorkloadPhase.ROLLING,
            created_at=current.created_at if current else self.now,
            rollout_started=self.now,
            labels=labels,
            env=env,
        )

    def delete_objects(self, namespace: str, object_ids: list[str]) -> None:
        ns = self.namespaces.get(namespace)
        if ns is None:
            return
        for obj_id in object_ids:
            ns.pop(obj_id, None)
            kind, _, name = obj_id.partition("/")
            if kind == "Deployment":
                self.workloads.get(namespace, {}).pop(name, None)

    def object_exists(self, namespace: str, object_id: str) -> bool:
        return object_id in self.namespaces.get(namespace, {})

    def workload_state(self, namespace: str, name: str) -> SimWorkload | None:
        return self.workloads.get(namespace, {}).get(name)

    # ------------------------------------------------------------------
    # Dynamics and faults
    # ------------------------------------------------------------------

    def step(self, dt: float) -> list[SimEvent]:
        if dt <= 0:
            raise SimClusterError("step requires dt > 0")
        self.now += dt
        events: list[SimEvent] = []
        for namespace, workloads in self.workloads.items():
            for workload in workloads.values():
                if workload.phase == WorkloadPhase.ROLLING:
                    elapsed = self.now - workload.rollout_started
                    if elapsed >= self.rollout_latency:
                        workload.ready = workload.desired
                        workload.phase = WorkloadPhase.READY
                        events.append(
                            SimEvent(
                                at=self.now,
                                cluster=self.name,
                                kind="workload-ready",
                                detail={"namespace": namespace, "workload": workload.name},
                            )
                        )
                    else:
                        fraction = elapsed / self.rollout_latency
                        workload.ready = min(
                            workload.desired, int(workload.desired * fraction)
                        )
                elif workload.phase == WorkloadPhase.CRASH_LOOP:
                    # Replicas flap between 0 and desired-1; never all ready.
                    flap = int(self.now) % 2
                    new_ready = 0 if flap == 0 else max(0, workload.desired - 1)
                    key = (namespace, workload.name)
                    if self._crash_state.get(key) != flap:
                        self._crash_state[key] = flap
                        events.append(
                            SimEvent(
                                at=self.now,
                                cluster=self.name,
                                kind="crashloop-restart",
                                detail={"namespace": namespace, "workload": workload.name},
                            )
                        )
                    workload.ready = new_ready
        return events

    def inject_fault(self, fault: Fault) -> SimEvent:
        if isinstance(fault, KillRa):
            self.ra_alive = False
            detail = {}
        elif isinstance(fault, KillRla):
            self.rla_alive = False
            detail = {}
        elif isinstance(fault, NodeNotReady):
            self._node(fault.node_name).ready = False
            detail = {"node": fault.node_name}
        elif isinstance(fault, NodePressure):
            self._node(fault.node_name).pressured = True
            detail = {"node": fault.node_name}
        elif isinstance(fault, DeleteNamespace):
            if fault.namespace not in self.namespaces:
                raise SimClusterError(f"unknown namespace: {fault.namespace}")
            self.delete_namespace(fault.namespace)
            detail = {"namespace": fault.namespace}
        elif isinstance(fault, CrashLoop):
            workload = self.workload_state(fault.namespace, fault.workload)
            if workload is None:
                raise SimClusterError(
                    f"unknown workload: {fault.namespace}/{fault.workload}"
                )
            workload.phase = WorkloadPhase.CRASH_LOOP
            detail = {"namespace": fault.namespace, "workload": fault.workload}
        else:
            raise SimClusterError(f"unknown fault: {fault!r}")
        return SimEvent(
            at=self.now,
            cluster=self.name,
            kind=f"fault-{type(fault).__name__.lower()}",
            detail=detail,
        )


def make_cluster(
    name: str,
    domain: Domain,
    profile: str,
    ingress_ip: str,
    workers: int = 2,
    seed: int = 0,
    rollout_latency: float = 2.0,
) -> SimCluster:
    """Build a cluster whose workers carry the profile's parameter row."""
    spec = PROFILES[profile]
    nodes = [SimNode(name=f"{name}-control-plane", role="control-plane")]
    for i in range(workers):
        nodes.append(
            SimNode(
                name=f"{name}-worker-{i}",
                role="worker",
                energy=spec.energy,
                pricing=spec.pricing,
                cpu=spec.cpu,
                memory=spec.memory,
                bandwidth=spec.bandwidth,
                storage=spec.storage,
            )
        )
    return SimCluster(
        name=name,
        domain=domain,
        profile=profile,
        ingress_ip=ingress_ip,
        nodes=nodes,
        seed=seed,
        rollout_latency=rollout_latency,
    )
