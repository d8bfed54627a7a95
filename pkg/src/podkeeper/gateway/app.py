"""FastAPI application: control plane under ``/v1`` plus host-routed pod queries.

Every response body is either ``{"result": ...}`` or
``{"error": {"code": ..., "message": ...}}``; ``ERROR_STATUS`` is the
complete code -> HTTP status table.
"""

from __future__ import annotations

import json
import logging
from contextlib import asynccontextmanager

from fastapi import Depends, FastAPI, Header, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from starlette.exceptions import HTTPException as StarletteHTTPException

from podkeeper.authsvc import format_ts
from podkeeper.cypher import CypherError
from podkeeper.errors import PodkeeperError
from podkeeper.gateway import routing
from podkeeper.gateway.config import GatewayConfig
from podkeeper.gateway.schemas import (
    Credentials,
    Envelope,
    PermissionRequest,
    PermissionResponse,
    PodCreate,
    PodDeleted,
    PodSummary,
    QueryRequest,
    QueryResponse,
    TokenRequest,
    TokenResponse,
    UploadRequest,
    UploadResponse,
    UserInfoResponse,
)
from podkeeper.gateway.service import Platform

log = logging.getLogger(__name__)

ERROR_STATUS = {
    "VALIDATION_ERROR": 400,
    "INVALID_POD_ID": 400,
    "UNKNOWN_TEMPLATE": 400,
    "LEX_ERROR": 400,
    "PARSE_ERROR": 400,
    "UNBOUND_VARIABLE": 400,
    "EXEC_ERROR": 400,
    "WRITE_IN_READ_ONLY": 400,
    "DELETE_WITH_RELATIONSHIPS": 400,
    "SOURCE_UNAVAILABLE": 400,
    "CSV_MALFORMED": 400,
    "UNKNOWN_COLUMN": 400,
    "PAYLOAD_TOO_LARGE": 400,
    "BAD_CREDENTIALS": 401,
    "TOKEN_MISSING": 401,
    "TOKEN_MALFORMED": 401,
    "TOKEN_TAMPERED": 401,
    "TOKEN_EXPIRED": 401,
    "UNAUTHENTICATED": 401,
    "POD_CREDENTIALS_INVALID": 401,
    "FORBIDDEN": 403,
    "NOT_FOUND": 404,
    "UNKNOWN_HOST": 404,
    "UNKNOWN_POD": 404,
    "POD_NOT_FOUND": 404,
    "UNKNOWN_USER": 404,
    "METHOD_NOT_ALLOWED": 405,
    "DUPLICATE_POD_ID": 409,
    "POD_DELETED": 409,
    "CANNOT_DOWNGRADE_OWNER": 409,
    "POD_NOT_READY": 503,
    "INTERNAL": 500,
}


def error_response(code: str, message: str, status: int | None = None, position: dict | None = None) -> JSONResponse:
    body = {"code": code, "message": message}
    if position is not None:
        body["position"] = position
    status = status or ERROR_STATUS.get(code, 500)
    headers = {"WWW-Authenticate": "Bearer"} if status == 401 else None
    return JSONResponse({"error": body}, status_code=status, headers=headers)


class HostRouter:
    """ASGI middleware that dispatches on the Host header.

    Pod hosts are rewritten onto the internal ``/_pods/{pod_id}`` prefix,
    which is unreachable from the control-plane host.
    """

    def __init__(self, app, platform: Platform):
        self.app = app
        self.platform = platform

    async def __call__(self, scope, receive, send):
        if scope["type"] != "http":
            return await self.app(scope, receive, send)
        host = None
        for name, value in scope.get("headers", []):
            if name == b"host":
                host = value.decode("latin-1")
                break
        dispatch = routing.route(host, self.platform.config.base_host)
        path = scope.get("path", "/")
        if dispatch.target == routing.UNKNOWN_HOST:
            response = error_response("UNKNOWN_HOST", "no service at this host")
        elif dispatch.target == routing.CONTROL:
            if path.startswith(routing.POD_PATH_PREFIX) or path == routing.POD_PATH_PREFIX.rstrip("/"):
                response = error_response("NOT_FOUND", "no such endpoint")
            else:
                return await self.app(scope, receive, send)
        elif self.platform.registry.lookup(dispatch.pod_id) is None:
            response = error_response("UNKNOWN_POD", f"no pod {dispatch.pod_id!r}")
        else:
            scope = dict(scope)
            scope["path"] = f"{routing.POD_PATH_PREFIX}{dispatch.pod_id}{path}"
            scope["raw_path"] = scope["path"].encode()
            return await self.app(scope, receive, send)
        await response(scope, receive, send)


def create_app(config: GatewayConfig, platform: Platform | None = None) -> FastAPI:
    platform = platform or Platform(config)

    @asynccontextmanager
    async def lifespan(app):
        yield
        platform.flush()
        log.info("gateway stopped; registry and snapshots flushed")

    app = FastAPI(title="podkeeper gateway", version="1", lifespan=lifespan)
    app.state.platform = platform

    @app.exception_handler(PodkeeperError)
    async def _domain_error(request: Request, exc: PodkeeperError):
        position = exc.to_dict() if isinstance(exc, CypherError) else None
        message = exc.detail if isinstance(exc, CypherError) else exc.message
        return error_response(exc.code, message, position=position)

    @app.exception_handler(RequestValidationError)
    async def _validation_error(request: Request, exc: RequestValidationError):
        problems = "; ".join(
            f"{'.'.join(str(p) for p in err.get('loc', ()))}: {err.get('msg')}" for err in exc.errors()
        )
        return error_response("VALIDATION_ERROR", problems or "invalid request")

    @app.exception_handler(StarletteHTTPException)
    async def _http_error(request: Request, exc: StarletteHTTPException):
        if exc.status_code == 405:
            return error_response("METHOD_NOT_ALLOWED", "method not allowed")
        if exc.status_code == 404:
            return error_response("NOT_FOUND", "no such endpoint")
        return error_response("VALIDATION_ERROR", str(exc.detail), status=exc.status_code)

    @app.exception_handler(json.JSONDecodeError)
    async def _json_error(request: Request, exc):
        return error_response("VALIDATION_ERROR", "request body is not valid JSON")

    def subject(authorization: str | None = Header(default=None)) -> str:
        return platform.authenticate_bearer(authorization)

    # control plane

    @app.post("/v1/tokens", response_model=Envelope[TokenResponse])
    def issue_token(body: TokenRequest):
        token = platform.tokens.issue_token(body.username, body.password)
        return {"result": {"access_token": token.serialized, "expires_at": format_ts(token.expires_at)}}

    @app.get("/v1/userinfo", response_model=Envelope[UserInfoResponse])
    def userinfo(user: str = Depends(subject)):
        return {"result": platform.tokens.get_userinfo(user).to_dict()}

    @app.post("/v1/pods", status_code=201, response_model=Envelope[PodSummary])
    def create_pod(body: PodCreate, user: str = Depends(subject)):
        pod = platform.registry.create_pod(user, body.pod_id, body.pod_template, body.description)
        return {"result": platform.pod_summary(pod)}

    @app.get("/v1/pods", response_model=Envelope[list[PodSummary]])
    def list_pods(user: str = Depends(subject)):
        return {"result": [platform.pod_summary(p) for p in platform.registry.list_pods(user)]}

    @app.get("/v1/pods/{pod_id}", response_model=Envelope[PodSummary])
    def get_pod(pod_id: str, user: str = Depends(subject)):
        return {"result": platform.pod_summary(platform.registry.get_pod(user, pod_id))}

    @app.delete("/v1/pods/{pod_id}", response_model=Envelope[PodDeleted])
    def delete_pod(pod_id: str, user: str = Depends(subject)):
        pod = platform.registry.delete_pod(user, pod_id)
        return {"result": {"pod_id": pod.pod_id, "state": pod.state.value}}

    @app.get("/v1/pods/{pod_id}/credentials", response_model=Envelope[Credentials])
    def pod_credentials(pod_id: str, user: str = Depends(subject)):
        return {"result": platform.registry.get_pod_credentials(user, pod_id).to_dict()}

    @app.post("/v1/pods/{pod_id}/permissions", response_model=Envelope[PermissionResponse])
    def set_permission(pod_id: str, body: PermissionRequest, user: str = Depends(subject)):
        perms = platform.registry.set_permission(user, pod_id, body.username, body.level)
        return {"result": {"pod_id": pod_id, "permissions": {u: lvl.name for u, lvl in sorted(perms.items())}}}

    @app.post("/v1/pods/{pod_id}/files", response_model=Envelope[UploadResponse])
    def upload(pod_id: str, body: UploadRequest, user: str = Depends(subject)):
        return {"result": platform.store_upload(user, pod_id, body.name, body.content_base64)}

    # pod query plane (reached only through HostRouter)

    @app.post(routing.POD_PATH_PREFIX + "{pod_id}/", response_model=Envelope[QueryResponse], include_in_schema=False)
    def query(pod_id: str, request: Request, body: QueryRequest):
        result = platform.run_query(pod_id, request.headers.get("authorization"), body.statement, body.mode)
        return {"result": result.to_json()}

    return HostRouter(app, platform)
