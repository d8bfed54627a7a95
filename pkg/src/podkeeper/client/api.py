"""Thin HTTP client for the gateway wire protocol."""

from __future__ import annotations

import base64
from pathlib import Path
from urllib.parse import urlparse

import httpx


class ClientError(Exception):
    pass


class ConnectionFailed(ClientError):
    pass


class ApiError(ClientError):
    def __init__(self, status: int, code: str, message: str, position: dict | None = None):
        super().__init__(f"{code}: {message}")
        self.status = status
        self.code = code
        self.message = message
        self.position = position


def pod_host_from_url(url: str) -> str:
    """``kg://kgpod.pods.localhost:8443`` -> ``kgpod.pods.localhost``."""
    return urlparse(url).hostname


class GatewayClient:
    def __init__(self, host: str, port: int, token: str | None = None, timeout: float = 10.0,
                 transport: httpx.BaseTransport | None = None):
        self.host = host
        self.port = port
        self.token = token
        self._http = httpx.Client(base_url=f"http://{host}:{port}", timeout=timeout, transport=transport)
        self._pod_hosts: dict[str, str] = {}

    def close(self) -> None:
        self._http.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def request(self, method: str, path: str, *, json=None, headers=None, auth: bool = True):
        headers = dict(headers or {})
        if auth and self.token and "Authorization" not in headers:
            headers["Authorization"] = f"Bearer {self.token}"
        try:
            resp = self._http.request(method, path, json=json, headers=headers)
        except httpx.TransportError as exc:
            raise ConnectionFailed(f"connection failed: {exc}") from None
        try:
            body = resp.json()
        except ValueError:
            raise ApiError(resp.status_code, "BAD_RESPONSE", resp.text[:200]) from None
        if resp.status_code >= 400 or "error" in body:
            err = body.get("error", {})
            raise ApiError(resp.status_code, err.get("code", "UNKNOWN"), err.get("message", ""), err.get("position"))
        return body

    # control plane

    def login(self, username: str, password: str) -> dict:
        result = self.request("POST", "/v1/tokens", json={"username": username, "password": password}, auth=False)
        self.token = result["result"]["access_token"]
        return result

    def userinfo(self) -> dict:
        return self.request("GET", "/v1/userinfo")

    def create_pod(self, pod_id: str, template: str = "neo4j", description: str = "") -> dict:
        body = {"pod_id": pod_id, "pod_template": template, "description": description}
        return self._remember(self.request("POST", "/v1/pods", json=body))

    def list_pods(self) -> dict:
        body = self.request("GET", "/v1/pods")
        for pod in body["result"]:
            self._pod_hosts[pod["pod_id"]] = pod_host_from_url(pod["url"])
        return body

    def get_pod(self, pod_id: str) -> dict:
        return self._remember(self.request("GET", f"/v1/pods/{pod_id}"))

    def delete_pod(self, pod_id: str) -> dict:
        return self.request("DELETE", f"/v1/pods/{pod_id}")

    def credentials(self, pod_id: str) -> dict:
        return self.request("GET", f"/v1/pods/{pod_id}/credentials")

    def set_permission(self, pod_id: str, username: str, level: str) -> dict:
        return self.request("POST", f"/v1/pods/{pod_id}/permissions", json={"username": username, "level": level})

    def upload(self, pod_id: str, path: str | Path, name: str | None = None) -> dict:
        path = Path(path)
        content = base64.b64encode(path.read_bytes()).decode("ascii")
        return self.request("POST", f"/v1/pods/{pod_id}/files", json={"name": name or path.name, "content_base64": content})

    def _remember(self, body: dict) -> dict:
        pod = body["result"]
        self._pod_hosts[pod["pod_id"]] = pod_host_from_url(pod["url"])
        return body

    # pod query plane

    def pod_host(self, pod_id: str) -> str:
        if pod_id not in self._pod_hosts:
            self.get_pod(pod_id)
        return self._pod_hosts[pod_id]

    def query(self, pod_id: str, statement: str, credentials: dict, mode: str | None = None) -> dict:
        pair = f"{credentials['user_username']}:{credentials['user_password']}".encode()
        headers = {"Host": self.pod_host(pod_id), "Authorization": "Basic " + base64.b64encode(pair).decode("ascii")}
        body = {"statement": statement}
        if mode:
            body["mode"] = mode
        return self.request("POST", "/", json=body, headers=headers, auth=False)
