"""Pod registry and lifecycle state machine.

A pod owns exactly one graph database instance.  The registry tracks each
pod's state, its generated query credentials and a per-user permission map,
and persists all of it to a JSON file (``registry.json``)::

    {"format_version": 1,
     "pods": [{"pod_id": ..., "pod_template": "neo4j", "description": ...,
               "owner": ..., "state": "AVAILABLE", "created_at": ...,
               "credentials": {"user_username": ..., "user_password": ...},
               "permissions": {"<username>": "ADMIN", ...}}, ...]}

Provisioning and teardown of the graph instance are delegated to a
``Provisioner`` so the registry itself stays free of storage concerns.
"""

from __future__ import annotations

import enum
import json
import logging
import os
import re
import secrets
import string
import threading
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Callable, Protocol

from podkeeper.authsvc import format_ts, parse_ts, utcnow
from podkeeper.errors import (
    CannotDowngradeOwner,
    DuplicatePodId,
    Forbidden,
    IllegalTransition,
    InvalidPodId,
    PodDeleted,
    PodNotFound,
    PodNotReady,
    UnknownTemplate,
    UnknownUser,
)

log = logging.getLogger(__name__)

POD_ID_RE = re.compile(r"[a-z0-9-]{1,40}")
TEMPLATES = ("neo4j",)
PASSWORD_ALPHABET = string.ascii_letters + string.digits
PASSWORD_LENGTH = 24


class PodState(str, enum.Enum):
    REQUESTED = "REQUESTED"
    CREATING = "CREATING"
    AVAILABLE = "AVAILABLE"
    ERROR = "ERROR"
    STOPPED = "STOPPED"
    DELETED = "DELETED"


TRANSITIONS: frozenset[tuple[PodState, PodState]] = frozenset(
    {
        (PodState.REQUESTED, PodState.CREATING),
        (PodState.CREATING, PodState.AVAILABLE),
        (PodState.CREATING, PodState.ERROR),
        (PodState.AVAILABLE, PodState.STOPPED),
        (PodState.STOPPED, PodState.AVAILABLE),
        (PodState.AVAILABLE, PodState.DELETED),
        (PodState.STOPPED, PodState.DELETED),
        (PodState.ERROR, PodState.DELETED),
    }
)


@enum.unique
class PermissionLevel(enum.IntEnum):
    READ = 1
    USER = 2
    ADMIN = 3

    @classmethod
    def parse(cls, value: "str | PermissionLevel") -> "PermissionLevel":
        if isinstance(value, PermissionLevel):
            return value
        try:
            return cls[str(value).upper()]
        except KeyError:
            raise ValueError(f"unknown permission level {value!r}") from None


@dataclass
class PodCredentials:
    user_username: str
    user_password: str

    def __repr__(self) -> str:
        return f"PodCredentials(user_username={self.user_username!r}, user_password=***)"

    def to_dict(self) -> dict:
        return {"user_username": self.user_username, "user_password": self.user_password}


@dataclass
class Pod:
    pod_id: str
    pod_template: str
    description: str
    owner: str
    state: PodState
    credentials: PodCredentials
    permissions: dict[str, PermissionLevel]
    created_at: datetime
    history: list[tuple[PodState, PodState]] = field(default_factory=list, repr=False, compare=False)

    def level_of(self, username: str) -> PermissionLevel | None:
        return self.permissions.get(username)

    def summary(self) -> dict:
        """Public view of the pod; never includes credentials."""
        return {
            "pod_id": self.pod_id,
            "pod_template": self.pod_template,
            "description": self.description,
            "owner": self.owner,
            "state": self.state.value,
            "created_at": format_ts(self.created_at),
            "permissions": {u: lvl.name for u, lvl in sorted(self.permissions.items())},
        }

    def to_record(self) -> dict:
        rec = self.summary()
        rec["credentials"] = self.credentials.to_dict()
        return rec

    @classmethod
    def from_record(cls, rec: dict) -> "Pod":
        return cls(
            pod_id=rec["pod_id"],
            pod_template=rec["pod_template"],
            description=rec["description"],
            owner=rec["owner"],
            state=PodState(rec["state"]),
            credentials=PodCredentials(**rec["credentials"]),
            permissions={u: PermissionLevel[lvl] for u, lvl in rec["permissions"].items()},
            created_at=parse_ts(rec["created_at"]),
        )


class Provisioner(Protocol):
    def provision(self, pod: Pod) -> None: ...

    def detach(self, pod: Pod) -> None: ...


class NullProvisioner:
    def provision(self, pod: Pod) -> None:
        pass

    def detach(self, pod: Pod) -> None:
        pass


def validate_pod_id(pod_id: str) -> str:
    if not isinstance(pod_id, str) or not POD_ID_RE.fullmatch(pod_id):
        raise InvalidPodId(f"pod_id must match [a-z0-9-]{{1,40}}: {pod_id!r}")
    return pod_id


def build_pod_url(pod_id: str, base_host: str, port: int = 443, scheme: str = "kg") -> str:
    validate_pod_id(pod_id)
    return f"{scheme}://{pod_id}.pods.{base_host}:{port}"


def generate_credentials(pod_id: str) -> PodCredentials:
    password = "".join(secrets.choice(PASSWORD_ALPHABET) for _ in range(PASSWORD_LENGTH))
    return PodCredentials(f"{pod_id}_user", password)


class PodRegistry:
    def __init__(
        self,
        path: str | os.PathLike | None = None,
        provisioner: Provisioner | None = None,
        user_exists: Callable[[str], bool] | None = None,
    ):
        self.path = Path(path) if path is not None else None
        self.provisioner = provisioner or NullProvisioner()
        self.user_exists = user_exists or (lambda _u: True)
        self._lock = threading.RLock()
        self._pods: dict[str, Pod] = {}
        if self.path is not None and self.path.exists():
            data = json.loads(self.path.read_text())
            for rec in data["pods"]:
                pod = Pod.from_record(rec)
                self._pods[pod.pod_id] = pod

    # persistence

    def dumps(self) -> str:
        with self._lock:
            pods = [self._pods[k].to_record() for k in sorted(self._pods)]
        return json.dumps({"format_version": 1, "pods": pods}, indent=2, sort_keys=True) + "\n"

    def flush(self) -> None:
        if self.path is None:
            return
        with self._lock:
            text = self.dumps()
            self.path.parent.mkdir(parents=True, exist_ok=True)
            tmp = self.path.with_suffix(".tmp")
            tmp.write_text(text)
            os.chmod(tmp, 0o600)
            os.replace(tmp, self.path)

    # state machine

    def _transition(self, pod: Pod, new: PodState) -> None:
        if (pod.state, new) not in TRANSITIONS:
            raise IllegalTransition(f"{pod.pod_id}: {pod.state.value} -> {new.value}")
        pod.history.append((pod.state, new))
        log.info("pod %s: %s -> %s", pod.pod_id, pod.state.value, new.value)
        pod.state = new

    def require(self, pod_id: str, requester: str, level: PermissionLevel) -> Pod:
        pod = self._pods.get(pod_id)
        if pod is None:
            raise PodNotFound(f"no pod {pod_id!r}")
        have = pod.level_of(requester)
        if have is None or have < level:
            raise Forbidden(f"{level.name} permission required on {pod_id!r}")
        return pod

    # operations

    def create_pod(self, requester: str, pod_id: str, pod_template: str, description: str = "") -> Pod:
        validate_pod_id(pod_id)
        if pod_template not in TEMPLATES:
            raise UnknownTemplate(f"unknown pod template {pod_template!r}; known: {', '.join(TEMPLATES)}")
        with self._lock:
            if pod_id in self._pods:
                raise DuplicatePodId(f"pod {pod_id!r} already exists")
            pod = Pod(
                pod_id=pod_id,
                pod_template=pod_template,
                description=description,
                owner=requester,
                state=PodState.REQUESTED,
                credentials=generate_credentials(pod_id),
                permissions={requester: PermissionLevel.ADMIN},
                created_at=utcnow(),
            )
            self._pods[pod_id] = pod
            self._transition(pod, PodState.CREATING)
            try:
                self.provisioner.provision(pod)
            except Exception:
                log.exception("pod %s: provisioning failed", pod_id)
                self._transition(pod, PodState.ERROR)
            else:
                self._transition(pod, PodState.AVAILABLE)
            self.flush()
            return pod

    def list_pods(self, requester: str) -> list[Pod]:
        with self._lock:
            return [self._pods[k] for k in sorted(self._pods) if requester in self._pods[k].permissions]

    def get_pod(self, requester: str, pod_id: str) -> Pod:
        with self._lock:
            return self.require(pod_id, requester, PermissionLevel.READ)

    def lookup(self, pod_id: str) -> Pod | None:
        """Unchecked lookup for trusted callers (routing, query auth)."""
        return self._pods.get(pod_id)

    def delete_pod(self, requester: str, pod_id: str) -> Pod:
        with self._lock:
            pod = self.require(pod_id, requester, PermissionLevel.ADMIN)
            if pod.state is PodState.DELETED:
                raise PodDeleted(f"pod {pod_id!r} is already deleted")
            self._transition(pod, PodState.DELETED)
            self.provisioner.detach(pod)
            self.flush()
            return pod

    def stop_pod(self, requester: str, pod_id: str) -> Pod:
        with self._lock:
            pod = self.require(pod_id, requester, PermissionLevel.ADMIN)
            self._transition(pod, PodState.STOPPED)
            self.flush()
            return pod

    def start_pod(self, requester: str, pod_id: str) -> Pod:
        with self._lock:
            pod = self.require(pod_id, requester, PermissionLevel.ADMIN)
            self._transition(pod, PodState.AVAILABLE)
            self.flush()
            return pod

    def get_pod_credentials(self, requester: str, pod_id: str) -> PodCredentials:
        with self._lock:
            pod = self.require(pod_id, requester, PermissionLevel.USER)
            if pod.state is not PodState.AVAILABLE:
                raise PodNotReady(f"pod {pod_id!r} is {pod.state.value}")
            return PodCredentials(pod.credentials.user_username, pod.credentials.user_password)

    def set_permission(
        self, requester: str, pod_id: str, grantee: str, level: "PermissionLevel | str"
    ) -> dict[str, PermissionLevel]:
        level = PermissionLevel.parse(level)
        with self._lock:
            pod = self.require(pod_id, requester, PermissionLevel.ADMIN)
            if not self.user_exists(grantee):
                raise UnknownUser(f"unknown user {grantee!r}")
            if grantee == pod.owner and level is not PermissionLevel.ADMIN:
                raise CannotDowngradeOwner("the pod owner always keeps ADMIN")
            pod.permissions[grantee] = level
            self.flush()
            return dict(pod.permissions)

    def all_pods(self) -> list[Pod]:
        with self._lock:
            return [self._pods[k] for k in sorted(self._pods)]
