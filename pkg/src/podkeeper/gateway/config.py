"""Gateway configuration.

Settings come from, in increasing priority: defaults, a TOML file, and
``PODKEEPER_*`` environment variables (``PODKEEPER_BASE_HOST``,
``PODKEEPER_PORT``, ``PODKEEPER_DATA_DIR``, ``PODKEEPER_TOKEN_TTL``, ...).
``token_ttl`` accepts seconds or a duration such as ``"4h"`` or ``"90m"``.
"""

from __future__ import annotations

import os
import re
from datetime import timedelta
from pathlib import Path

from pydantic import BaseModel, ConfigDict, Field, field_validator

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

ENV_PREFIX = "PODKEEPER_"
_DURATION_RE = re.compile(r"(\d+)\s*([smhd]?)")
_UNITS = {"": 1, "s": 1, "m": 60, "h": 3600, "d": 86400}


def parse_duration(value) -> timedelta:
    if isinstance(value, timedelta):
        return value
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return timedelta(seconds=value)
    match = _DURATION_RE.fullmatch(str(value).strip().lower())
    if not match:
        raise ValueError(f"invalid duration {value!r}")
    return timedelta(seconds=int(match.group(1)) * _UNITS[match.group(2)])


class GatewayConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    base_host: str = "localhost"
    port: int = Field(8443, ge=1, le=65535)
    data_dir: Path = Path("podkeeper-data")
    token_ttl: timedelta = timedelta(hours=4)
    bind: str = "127.0.0.1"
    signing_key: str | None = None  # hex; generated and stored in data_dir when unset
    allow_file_urls: bool = False
    scrypt_n: int = 2**14

    @field_validator("base_host")
    @classmethod
    def _host(cls, v: str) -> str:
        v = v.strip().lower()
        if not v:
            raise ValueError("base_host must be non-empty")
        return v

    @field_validator("token_ttl", mode="before")
    @classmethod
    def _ttl(cls, v):
        ttl = parse_duration(v)
        if ttl <= timedelta(0):
            raise ValueError("token_ttl must be positive")
        return ttl

    @field_validator("signing_key")
    @classmethod
    def _key(cls, v):
        if v is not None and len(bytes.fromhex(v)) < 16:
            raise ValueError("signing_key must be at least 16 bytes of hex")
        return v


KEYS = tuple(GatewayConfig.model_fields)


def load_config(path: str | os.PathLike | None = None, env=None, **overrides) -> GatewayConfig:
    env = os.environ if env is None else env
    values: dict = {}
    if path is not None:
        with open(path, "rb") as fh:
            values.update(tomllib.load(fh))
    for key in KEYS:
        raw = env.get(ENV_PREFIX + key.upper())
        if raw is not None:
            values[key] = raw
    values.update({k: v for k, v in overrides.items() if v is not None})
    return GatewayConfig(**values)
