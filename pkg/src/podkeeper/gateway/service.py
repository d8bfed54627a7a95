"""Service core shared by the HTTP layer: accounts, tokens, pods and graphs.

On-disk layout under ``data_dir``::

    accounts.json             account store
    signing.key               token signing key (hex), created on first start
    registry.json             pod registry
    pods/{pod_id}/graph.json  graph snapshot
    pods/{pod_id}/files/      uploads addressable as upload://{name}
"""

from __future__ import annotations

import base64
import binascii
import hmac
import logging
import threading
from contextlib import contextmanager
from pathlib import Path

from podkeeper.authsvc import AccountStore, TokenService, load_or_create_key
from podkeeper.cypher import ast, parse
from podkeeper.errors import BadCredentials, PodkeeperError, PodNotReady, TokenMissing
from podkeeper.gateway.config import GatewayConfig
from podkeeper.graphstore import Graph, execute, load_snapshot, make_resolver, save_snapshot
from podkeeper.graphstore.csvload import UPLOAD_NAME_RE
from podkeeper.podman import PermissionLevel, Pod, PodRegistry, PodState, build_pod_url

log = logging.getLogger(__name__)

MAX_UPLOAD_BYTES = 16 * 1024 * 1024


class UnknownPod(PodkeeperError):
    code = "UNKNOWN_POD"


class PodCredentialsInvalid(PodkeeperError):
    code = "POD_CREDENTIALS_INVALID"


class PayloadTooLarge(PodkeeperError):
    code = "PAYLOAD_TOO_LARGE"


class InvalidUpload(PodkeeperError):
    code = "VALIDATION_ERROR"


class RWLock:
    """Many readers or one writer."""

    def __init__(self):
        self._cond = threading.Condition()
        self._readers = 0
        self._writer = False

    @contextmanager
    def read(self):
        with self._cond:
            while self._writer:
                self._cond.wait()
            self._readers += 1
        try:
            yield
        finally:
            with self._cond:
                self._readers -= 1
                if not self._readers:
                    self._cond.notify_all()

    @contextmanager
    def write(self):
        with self._cond:
            while self._writer or self._readers:
                self._cond.wait()
            self._writer = True
        try:
            yield
        finally:
            with self._cond:
                self._writer = False
                self._cond.notify_all()


class GraphHost:
    """Keeps each pod's graph in memory and mirrors it to its snapshot file."""

    def __init__(self, pods_dir: Path):
        self.pods_dir = pods_dir
        self.graphs: dict[str, Graph] = {}
        self.locks: dict[str, RWLock] = {}
        self._guard = threading.Lock()

    def pod_dir(self, pod_id: str) -> Path:
        return self.pods_dir / pod_id

    def snapshot_path(self, pod_id: str) -> Path:
        return self.pod_dir(pod_id) / "graph.json"

    def upload_dir(self, pod_id: str) -> Path:
        return self.pod_dir(pod_id) / "files"

    def lock(self, pod_id: str) -> RWLock:
        with self._guard:
            return self.locks.setdefault(pod_id, RWLock())

    # Provisioner protocol

    def provision(self, pod: Pod) -> None:
        graph = Graph()
        self.upload_dir(pod.pod_id).mkdir(parents=True, exist_ok=True)
        save_snapshot(graph, self.snapshot_path(pod.pod_id))
        with self._guard:
            self.graphs[pod.pod_id] = graph

    def detach(self, pod: Pod) -> None:
        with self.lock(pod.pod_id).write():
            graph = self.graphs.pop(pod.pod_id, None)
            if graph is not None:
                save_snapshot(graph, self.snapshot_path(pod.pod_id))

    def attach(self, pod_id: str) -> None:
        self.graphs[pod_id] = load_snapshot(self.snapshot_path(pod_id))

    def flush(self) -> None:
        for pod_id, graph in sorted(self.graphs.items()):
            with self.lock(pod_id).read():
                save_snapshot(graph, self.snapshot_path(pod_id))


def parse_basic_auth(header: str | None) -> tuple[str, str] | None:
    if not header or not header[:6].lower() == "basic ":
        return None
    try:
        decoded = base64.b64decode(header[6:].strip(), validate=True).decode("utf-8")
    except (binascii.Error, UnicodeDecodeError):
        return None
    if ":" not in decoded:
        return None
    user, _, password = decoded.partition(":")
    return user, password


class Platform:
    def __init__(self, config: GatewayConfig):
        self.config = config
        data_dir = Path(config.data_dir)
        data_dir.mkdir(parents=True, exist_ok=True)
        self.data_dir = data_dir
        self.accounts = AccountStore(data_dir / "accounts.json", scrypt_n=config.scrypt_n)
        key = bytes.fromhex(config.signing_key) if config.signing_key else load_or_create_key(data_dir / "signing.key")
        self.tokens = TokenService(self.accounts, key, config.token_ttl)
        self.graphs = GraphHost(data_dir / "pods")
        self.registry = PodRegistry(data_dir / "registry.json", self.graphs, self.accounts.exists)
        for pod in self.registry.all_pods():
            if pod.state in (PodState.AVAILABLE, PodState.STOPPED):
                self.graphs.attach(pod.pod_id)

    def pod_url(self, pod_id: str) -> str:
        return build_pod_url(pod_id, self.config.base_host, self.config.port)

    def pod_summary(self, pod: Pod) -> dict:
        summary = pod.summary()
        summary["url"] = self.pod_url(pod.pod_id)
        return summary

    def flush(self) -> None:
        self.registry.flush()
        self.graphs.flush()

    def authenticate_bearer(self, header: str | None) -> str:
        if not header or header[:7].lower() != "bearer ":
            raise TokenMissing("bearer token required")
        subject = self.tokens.verify_token(header[7:].strip())
        if not self.accounts.exists(subject):
            raise BadCredentials("token subject no longer exists")
        return subject

    def check_pod_credentials(self, pod_id: str, header: str | None) -> Pod:
        pod = self.registry.lookup(pod_id)
        if pod is None:
            raise UnknownPod(f"no pod {pod_id!r}")
        given = parse_basic_auth(header)
        expected = pod.credentials
        if given is None:
            raise PodCredentialsInvalid("pod credentials required")
        user_ok = hmac.compare_digest(given[0].encode(), expected.user_username.encode())
        pass_ok = hmac.compare_digest(given[1].encode(), expected.user_password.encode())
        if not (user_ok and pass_ok):
            raise PodCredentialsInvalid("invalid pod credentials")
        return pod

    def run_query(self, pod_id: str, auth_header: str | None, statement: str, mode: str | None):
        pod = self.check_pod_credentials(pod_id, auth_header)
        if pod.state is not PodState.AVAILABLE:
            raise PodNotReady(f"pod {pod_id!r} is {pod.state.value}")
        stmt = parse(statement)
        writes = ast.is_write(stmt)
        resolver = make_resolver(self.graphs.upload_dir(pod_id), allow_file=self.config.allow_file_urls)
        lock = self.graphs.lock(pod_id)
        with (lock.write() if writes else lock.read()):
            graph = self.graphs.graphs.get(pod_id)
            if graph is None:
                raise PodNotReady(f"pod {pod_id!r} has no attached graph")
            result = execute(graph, stmt, mode or "read-write", resolver)
            if writes:
                save_snapshot(graph, self.graphs.snapshot_path(pod_id))
        return result

    def store_upload(self, requester: str, pod_id: str, name: str, content_b64: str) -> dict:
        pod = self.registry.require(pod_id, requester, PermissionLevel.USER)
        if pod.state is not PodState.AVAILABLE:
            raise PodNotReady(f"pod {pod_id!r} is {pod.state.value}")
        if not UPLOAD_NAME_RE.fullmatch(name) or ".." in name:
            raise InvalidUpload(f"invalid file name {name!r}")
        # base64 inflates by 4/3; reject obviously oversized payloads before decoding
        if len(content_b64) > (MAX_UPLOAD_BYTES * 4) // 3 + 4:
            raise PayloadTooLarge("upload exceeds 16 MiB")
        try:
            content = base64.b64decode(content_b64, validate=True)
        except binascii.Error:
            raise InvalidUpload("content is not valid base64") from None
        if len(content) > MAX_UPLOAD_BYTES:
            raise PayloadTooLarge("upload exceeds 16 MiB")
        target_dir = self.graphs.upload_dir(pod_id)
        target_dir.mkdir(parents=True, exist_ok=True)
        tmp = target_dir / (name + ".part")
        tmp.write_bytes(content)
        tmp.replace(target_dir / name)
        return {"upload_url": f"upload://{name}", "size": len(content)}
