from __future__ import annotations

import socket
import threading
import time

import uvicorn

from podkeeper.errors import PodkeeperError
from podkeeper.gateway.app import create_app
from podkeeper.gateway.config import GatewayConfig
from podkeeper.gateway.service import Platform


class BindError(PodkeeperError):
    code = "BIND_ERROR"


class DataDirError(PodkeeperError):
    code = "DATA_DIR_ERROR"


def _bind(host: str, port: int) -> socket.socket:
    sock = socket.socket(socket.AF_INET6 if ":" in host else socket.AF_INET, socket.SOCK_STREAM)
    sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    try:
        sock.bind((host, port))
    except OSError as exc:
        sock.close()
        raise BindError(f"cannot bind {host}:{port}: {exc.strerror}") from None
    sock.listen(128)
    sock.set_inheritable(True)
    return sock


def _platform(config: GatewayConfig) -> Platform:
    try:
        return Platform(config)
    except OSError as exc:
        raise DataDirError(f"data directory {config.data_dir} is unusable: {exc}") from None


def _server(config: GatewayConfig, platform: Platform) -> uvicorn.Server:
    app = create_app(config, platform)
    return uvicorn.Server(uvicorn.Config(app, lifespan="on", log_level="warning", access_log=False))


class ServiceHandle:
    """A gateway running on a background thread; ``stop()`` shuts it down gracefully."""

    def __init__(self, config: GatewayConfig):
        self.config = config
        self.platform = _platform(config)
        self._sock = _bind(config.bind, config.port)
        self._server = _server(config, self.platform)
        self._thread = threading.Thread(target=self._server.run, kwargs={"sockets": [self._sock]}, daemon=True)

    @property
    def port(self) -> int:
        return self._sock.getsockname()[1]

    @property
    def url(self) -> str:
        return f"http://{self.config.bind}:{self.port}"

    def start(self, timeout: float = 10.0) -> "ServiceHandle":
        self._thread.start()
        deadline = time.monotonic() + timeout
        while not self._server.started:
            if not self._thread.is_alive() or time.monotonic() > deadline:
                raise BindError("gateway failed to start")
            time.sleep(0.01)
        return self

    def stop(self, timeout: float = 10.0) -> None:
        self._server.should_exit = True
        self._thread.join(timeout)
        self._sock.close()

    def __enter__(self):
        return self.start()

    def __exit__(self, *exc):
        self.stop()


def serve(config: GatewayConfig) -> ServiceHandle:
    """Start the gateway in the background and return its handle."""
    return ServiceHandle(config).start()


def run_forever(config: GatewayConfig) -> None:
    """Serve in the foreground until interrupted (SIGINT/SIGTERM)."""
    platform = _platform(config)
    sock = _bind(config.bind, config.port)
    try:
        _server(config, platform).run(sockets=[sock])
    finally:
        sock.close()
