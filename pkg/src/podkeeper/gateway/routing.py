"""Host-based dispatch between the control plane and per-pod query endpoints."""

from __future__ import annotations

from dataclasses import dataclass

from podkeeper.podman import POD_ID_RE

CONTROL = "control"
POD = "pod"
UNKNOWN_HOST = "unknown-host"

POD_PATH_PREFIX = "/_pods/"


@dataclass(frozen=True)
class Dispatch:
    target: str  # CONTROL, POD or UNKNOWN_HOST
    pod_id: str | None = None


def strip_port(host: str) -> str:
    host = host.strip().lower()
    if host.startswith("["):
        return host  # IPv6 literals never match a pod host
    return host.rsplit(":", 1)[0] if ":" in host else host


def route(host: str | None, base_host: str) -> Dispatch:
    """Classify a request by its Host header.

    ``{pod_id}.pods.{base_host}`` goes to that pod's query handler,
    ``{base_host}`` to the control plane, anything else is unknown.
    """
    if not host:
        return Dispatch(UNKNOWN_HOST)
    name = strip_port(host).rstrip(".")
    base_host = base_host.lower().rstrip(".")
    if name == base_host:
        return Dispatch(CONTROL)
    suffix = ".pods." + base_host
    if name.endswith(suffix):
        pod_id = name[: -len(suffix)]
        if POD_ID_RE.fullmatch(pod_id):
            return Dispatch(POD, pod_id)
    return Dispatch(UNKNOWN_HOST)


def pod_host(pod_id: str, base_host: str) -> str:
    return f"{pod_id}.pods.{base_host}"
