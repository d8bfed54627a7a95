"""Client library, admin CLI and interactive console."""

from podkeeper.client.api import ApiError, ClientError, ConnectionFailed, GatewayClient
from podkeeper.client.console import Console
from podkeeper.client.demo import demo_arch
from podkeeper.client.session import Session, default_session_path

__all__ = [
    "ApiError",
    "ClientError",
    "ConnectionFailed",
    "Console",
    "GatewayClient",
    "Session",
    "default_session_path",
    "demo_arch",
]
