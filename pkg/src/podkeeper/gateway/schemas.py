from __future__ import annotations

from typing import Any, Generic, Literal, TypeVar

from pydantic import AliasChoices, BaseModel, ConfigDict, Field


T = TypeVar("T")


class Envelope(BaseModel, Generic[T]):
    result: T


class Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class TokenRequest(Strict):
    username: str
    password: str


class TokenResponse(BaseModel):
    access_token: str
    token_type: str = "bearer"
    expires_at: str


class UserInfoResponse(BaseModel):
    username: str
    created_at: str


class PodCreate(Strict):
    pod_id: str
    pod_template: str = "neo4j"
    description: str = ""


class PodSummary(BaseModel):
    pod_id: str
    pod_template: str
    description: str
    owner: str
    state: str
    created_at: str
    permissions: dict[str, str]
    url: str


class PodDeleted(BaseModel):
    pod_id: str
    state: str


class Credentials(BaseModel):
    user_username: str
    user_password: str


class PermissionRequest(Strict):
    username: str
    level: Literal["READ", "USER", "ADMIN"]


class PermissionResponse(BaseModel):
    pod_id: str
    permissions: dict[str, str]


class UploadRequest(Strict):
    name: str
    content_base64: str = Field(validation_alias=AliasChoices("content_base64", "content-base64"))


class UploadResponse(BaseModel):
    upload_url: str
    size: int


class QueryRequest(Strict):
    statement: str
    mode: Literal["read-only", "read-write"] | None = None


class QueryResponse(BaseModel):
    columns: list[str]
    rows: list[list[Any]]
    counters: dict[str, int]


class ErrorDetail(BaseModel):
    code: str
    message: str
    position: dict[str, Any] | None = None


class ErrorBody(BaseModel):
    error: ErrorDetail
