from __future__ import annotations

import socket

import pytest

from podkeeper.gateway import GatewayConfig, create_app
from podkeeper.gateway.server import serve

CHEAP_SCRYPT = 16
PASSWORDS = {"jsmith": "jsmith-pass-1", "mia": "mia-pass-22", "rex": "rex-pass-333", "zoe": "zoe-pass-4444"}


def free_port() -> int:
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


def make_config(data_dir, **overrides) -> GatewayConfig:
    values = {"data_dir": data_dir, "port": 8443, "scrypt_n": CHEAP_SCRYPT, "base_host": "localhost"}
    values.update(overrides)
    return GatewayConfig(**values)


def add_users(platform, names=PASSWORDS) -> None:
    for name in names:
        if not platform.accounts.exists(name):
            platform.accounts.create_user(name, PASSWORDS[name])


@pytest.fixture
def config(tmp_path):
    return make_config(tmp_path / "data")


@pytest.fixture
def app(config):
    app = create_app(config)
    add_users(app.platform)
    return app


@pytest.fixture
def http(app):
    from fastapi.testclient import TestClient

    with TestClient(app, base_url="http://localhost:8443") as client:
        yield client


def token_for(http, user: str) -> str:
    resp = http.post("/v1/tokens", json={"username": user, "password": PASSWORDS[user]})
    assert resp.status_code == 200, resp.text
    return resp.json()["result"]["access_token"]


def bearer(token: str) -> dict:
    return {"Authorization": f"Bearer {token}"}


@pytest.fixture
def live(tmp_path):
    """A gateway served over real TCP on a free port."""
    cfg = make_config(tmp_path / "live-data", port=free_port())
    handle = serve(cfg)
    add_users(handle.platform)
    yield handle
    handle.stop()


def pytest_terminal_summary(terminalreporter):
    module = __import__("sys").modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for line in sorted(results, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
