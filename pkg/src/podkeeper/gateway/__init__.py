"""HTTP gateway: token auth, pod control plane and host-routed pod queries."""

from podkeeper.gateway.app import ERROR_STATUS, create_app
from podkeeper.gateway.config import GatewayConfig, load_config
from podkeeper.gateway.routing import Dispatch, route
from podkeeper.gateway.service import Platform

__all__ = ["ERROR_STATUS", "Dispatch", "GatewayConfig", "Platform", "create_app", "load_config", "route"]
