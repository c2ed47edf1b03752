"""Client-side access to the RLA REST API.

Both implementations speak the same route table: ``InProcessRlaClient``
dispatches straight into ``RestApi`` instances (deterministic testbeds),
``HttpRlaClient`` (in ``qonnect.harness.live``) goes over real HTTP.
Writes follow not-leader redirects; reads are served by any replica.
"""

from __future__ import annotations

from typing import Protocol

from qonnect.rla.rest import RestApi


class RlaClientError(Exception):
    """Transport failure, no leader, or an unexpected API response."""


class RlaClient(Protocol):
    def register(self, external_ip: str, domain: str) -> str: ...

    def cluster_config(self) -> dict[str, str]: ...

    def put_nodes(self, cluster_id: str, nodes: list[dict]) -> dict: ...

    def poll_applications(self, cluster_id: str) -> list[dict]: ...

    def heartbeat(
        self, app_id: str, component: str, cluster_id: str, version: int, status: str
    ) -> bool: ...


class _RestClientBase:
    """Shared redirect-following request logic over an abstract dispatcher."""

    _MAX_HOPS = 4

    def _dispatch(self, target: str, method: str, path: str, body: dict | None):
        raise NotImplementedError

    def _targets(self) -> list[str]:
        raise NotImplementedError

    def _request(self, method: str, path: str, body: dict | None = None) -> tuple[int, dict]:
        last_error: str | None = None
        tried: set[str] = set()
        queue = list(self._targets())
        hops = 0
        while queue and hops < self._MAX_HOPS + len(queue):
            target = queue.pop(0)
            if target in tried:
                continue
            tried.add(target)
            hops += 1
            try:
                status, payload = self._dispatch(target, method, path, body)
            except RlaClientError as exc:
                last_error = str(exc)
                continue
            if status == 307:
                hint = payload.get("leader_address")
                if hint and hint not in tried:
                    queue.insert(0, hint)
                last_error = "redirected to leader"
                continue
            if status == 503:
                last_error = payload.get("error", "unavailable")
                continue
            self._remember_leader(target)
            return status, payload
        raise RlaClientError(last_error or "no reachable RLA")

    def _remember_leader(self, target: str) -> None:
        pass

    # -- API methods ------------------------------------------------------

    def register(self, external_ip: str, domain: str) -> str:
        status, payload = self._request(
            "POST", "/clusters/register", {"external_ip": external_ip, "domain": domain}
        )
        if status != 200:
            raise RlaClientError(f"registration failed ({status}): {payload}")
        return payload["cluster_id"]

    def cluster_config(self) -> dict[str, str]:
        status, payload = self._request("GET", "/clusters/config")
        if status != 200:
            raise RlaClientError(f"config fetch failed ({status}): {payload}")
        return payload["clusters"]

    def put_nodes(self, cluster_id: str, nodes: list[dict]) -> dict:
        status, payload = self._request(
            "POST", f"/clusters/{cluster_id}/nodes", {"nodes": nodes}
        )
        if status != 200:
            raise RlaClientError(f"node snapshot rejected ({status}): {payload}")
        return payload

    def poll_applications(self, cluster_id: str) -> list[dict]:
        status, payload = self._request("GET", f"/clusters/{cluster_id}/applications")
        if status != 200:
            raise RlaClientError(f"application poll failed ({status}): {payload}")
        return payload["applications"]

    def heartbeat(
        self, app_id: str, component: str, cluster_id: str, version: int, status: str
    ) -> bool:
        code, payload = self._request(
            "POST",
            f"/applications/{app_id}/components/{component}/heartbeat",
            {"cluster_id": cluster_id, "version": version, "status": status},
        )
        if code == 404:
            return False
        if code != 200:
            raise RlaClientError(f"heartbeat failed ({code}): {payload}")
        return True

    def submit_application(self, bundle: dict) -> str:
        status, payload = self._request("POST", "/applications", bundle)
        if status != 201:
            raise RlaClientError(f"submit failed ({status}): {payload}")
        return payload["app_id"]

    def update_qos(self, name: str, qos: dict) -> dict:
        status, payload = self._request("PUT", f"/applications/{name}/qos", {"qos": qos})
        if status != 200:
            raise RlaClientError(f"qos update failed ({status}): {payload}")
        return payload

    def delete_application(self, name: str) -> dict:
        status, payload = self._request("DELETE", f"/applications/{name}")
        if status != 200:
            raise RlaClientError(f"delete failed ({status}): {payload}")
        return payload


class InProcessRlaClient(_RestClientBase):
    """Dispatches directly into RestApi instances keyed by logical address."""

    def __init__(self, apis: dict[str, RestApi]) -> None:
        self._apis = dict(apis)
        self._preferred: str | None = None

    def _targets(self) -> list[str]:
        targets = list(self._apis)
        if self._preferred in self._apis:
            targets.remove(self._preferred)
            targets.insert(0, self._preferred)
        return targets

    def _remember_leader(self, target: str) -> None:
        self._preferred = target

    def _dispatch(self, target: str, method: str, path: str, body: dict | None):
        api = self._apis.get(target)
        if api is None:
            raise RlaClientError(f"unknown RLA address: {target}")
        return api.dispatch(method, path, body)
