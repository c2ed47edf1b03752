"""REST route table over the RLA service.

``dispatch`` is transport-neutral: the HTTP server and the in-process
client both funnel through it, so route behavior is identical in live and
simulated deployments. Write endpoints answer 307 with a leader hint when
this replica is not the leader; config reads are served from local applied
state on any replica.
"""

from __future__ import annotations

from typing import Callable

from qonnect.raft.node import NotLeaderError
from qonnect.rla.service import (
    ConflictError,
    NotFoundError,
    RlaService,
    UnavailableError,
    ValidationFailed,
)


class RestApi:
    def __init__(self, service: RlaService) -> None:
        self.service = service
        self._routes: list[tuple[str, list[str], Callable[..., tuple[int, dict]]]] = [
            ("POST", ["clusters", "register"], self._register),
            ("GET", ["clusters", "config"], self._config),
            ("POST", ["clusters", "{cluster_id}", "nodes"], self._nodes),
            ("GET", ["clusters", "{cluster_id}", "applications"], self._poll),
            ("POST", ["applications"], self._submit),
            ("PUT", ["applications", "{name}", "qos"], self._qos),
            ("DELETE", ["applications", "{name}"], self._delete),
            (
                "POST",
                ["applications", "{app_id}", "components", "{component}", "heartbeat"],
                self._heartbeat,
            ),
            ("GET", ["status"], self._status),
        ]

    # -- handlers --------------------------------------------------------

    def _register(self, params: dict, body: dict) -> tuple[int, dict]:
        cluster_id = self.service.register_cluster(
            str(body.get("external_ip", "")), str(body.get("domain", ""))
        )
        return 200, {"cluster_id": cluster_id}

    def _config(self, params: dict, body: dict) -> tuple[int, dict]:
        return 200, {"clusters": self.service.cluster_config()}

    def _nodes(self, params: dict, body: dict) -> tuple[int, dict]:
        nodes = body.get("nodes")
        if not isinstance(nodes, list):
            raise ValidationFailed([{"field": "nodes", "error": "nodes list is required"}])
        ack = self.service.put_node_snapshot(params["cluster_id"], nodes)
        return 200, ack

    def _poll(self, params: dict, body: dict) -> tuple[int, dict]:
        return 200, {"applications": self.service.poll_applications(params["cluster_id"])}

    def _submit(self, params: dict, body: dict) -> tuple[int, dict]:
        app_id = self.service.submit_application(body)
        return 201, {"app_id": app_id}

    def _qos(self, params: dict, body: dict) -> tuple[int, dict]:
        return 200, self.service.update_qos(params["name"], body.get("qos"))

    def _delete(self, params: dict, body: dict) -> tuple[int, dict]:
        return 200, self.service.delete_application(params["name"])

    def _heartbeat(self, params: dict, body: dict) -> tuple[int, dict]:
        ok = self.service.heartbeat(
            app_id=params["app_id"],
            component=params["component"],
            cluster_id=str(body.get("cluster_id", "")),
            version=int(body.get("version", 0)),
            status=str(body.get("status", "")),
        )
        if not ok:
            return 404, {"error": "not-found"}
        return 200, {"status": "ok"}

    def _status(self, params: dict, body: dict) -> tuple[int, dict]:
        return 200, self.service.status()

    # -- dispatch ---------------------------------------------------------

    def dispatch(self, method: str, path: str, body: dict | None = None) -> tuple[int, dict]:
        segments = [s for s in path.split("/") if s]
        for route_method, pattern, handler in self._routes:
            if route_method != method.upper() or len(pattern) != len(segments):
                continue
            params: dict[str, str] = {}
            for expected, actual in zip(pattern, segments):
                if expected.startswith("{") and expected.endswith("}"):
                    params[expected[1:-1]] = actual
                elif expected != actual:
                    break
            else:
                return self._invoke(handler, params, body or {})
        return 404, {"error": "no-such-route", "path": path}

    def _invoke(self, handler, params: dict, body: dict) -> tuple[int, dict]:
        try:
            return handler(params, body)
        except ValidationFailed as exc:
            return 400, {"errors": exc.errors}
        except NotFoundError as exc:
            return 404, {"error": str(exc)}
        except ConflictError as exc:
            return 409, {"error": str(exc)}
        except NotLeaderError as exc:
            if exc.leader_id is None:
                return 503, {"error": "no-leader"}
            return 307, {
                "error": "not-leader",
                "leader": exc.leader_id,
                "leader_address": self.service.config.peer_address(exc.leader_id),
            }
        except UnavailableError as exc:
            return 503, {"error": str(exc)}
