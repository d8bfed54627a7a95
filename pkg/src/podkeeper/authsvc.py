"""User accounts and signed bearer tokens.

Tokens have the familiar three-segment ``header.payload.signature`` shape.
The header and payload are compact JSON objects, base64url-encoded without
padding, so every serialized token starts with ``ey``.  The signature is an
HMAC-SHA256 over ``header_b64 + "." + payload_b64``.

The account store is a JSON file::

    {
      "format_version": 1,
      "users": {
        "<username>": {"password_digest": "scrypt$<n>$<r>$<p>$<salt>$<hash>",
                       "created_at": "2026-01-01T00:00:00Z"}
      }
    }
"""

from __future__ import annotations

import base64
import binascii
import hashlib
import hmac
import json
import os
import re
import secrets
import threading
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from pathlib import Path

from podkeeper.errors import (
    BadCredentials,
    DuplicateUser,
    InvalidUsername,
    TokenExpired,
    TokenMalformed,
    TokenTampered,
    UnknownUser,
)

USERNAME_RE = re.compile(r"[a-z0-9_]{1,64}")
_SEGMENT_RE = re.compile(r"[A-Za-z0-9_-]+")

TOKEN_HEADER = {"alg": "HS256-like", "typ": "TOK"}
DEFAULT_TOKEN_TTL = timedelta(hours=4)

# scrypt cost; tests that create thousands of accounts pass a cheaper one.
DEFAULT_SCRYPT_N = 2**14
SCRYPT_R = 8
SCRYPT_P = 1


def utcnow() -> datetime:
    return datetime.now(timezone.utc).replace(microsecond=0)


def format_ts(ts: datetime) -> str:
    return ts.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def parse_ts(text: str) -> datetime:
    return datetime.strptime(text, "%Y-%m-%dT%H:%M:%SZ").replace(tzinfo=timezone.utc)


def b64url_encode(raw: bytes) -> str:
    return base64.urlsafe_b64encode(raw).rstrip(b"=").decode("ascii")


def b64url_decode(text: str) -> bytes:
    if not _SEGMENT_RE.fullmatch(text):
        raise ValueError("not base64url")
    return base64.urlsafe_b64decode(text + "=" * (-len(text) % 4))


def hash_password(password: str, n: int = DEFAULT_SCRYPT_N) -> str:
    salt = secrets.token_bytes(16)
    digest = hashlib.scrypt(password.encode(), salt=salt, n=n, r=SCRYPT_R, p=SCRYPT_P, dklen=32)
    return f"scrypt${n}${SCRYPT_R}${SCRYPT_P}${salt.hex()}${digest.hex()}"


def check_password(password: str, stored: str) -> bool:
    try:
        algo, n, r, p, salt, digest = stored.split("$")
    except ValueError:
        return False
    if algo != "scrypt":
        return False
    candidate = hashlib.scrypt(
        password.encode(), salt=bytes.fromhex(salt), n=int(n), r=int(r), p=int(p), dklen=32
    )
    return hmac.compare_digest(candidate.hex(), digest)


@dataclass(frozen=True)
class UserAccount:
    username: str
    password_digest: str
    created_at: datetime

    def __repr__(self) -> str:
        return f"UserAccount(username={self.username!r}, created_at={format_ts(self.created_at)})"


@dataclass(frozen=True)
class UserInfo:
    username: str
    created_at: datetime

    def to_dict(self) -> dict:
        return {"username": self.username, "created_at": format_ts(self.created_at)}


@dataclass(frozen=True)
class AuthToken:
    subject: str
    issued_at: datetime
    expires_at: datetime
    serialized: str

    @property
    def signature(self) -> str:
        return self.serialized.rsplit(".", 1)[1]

    def __str__(self) -> str:
        return self.serialized


class AccountStore:
    """Username -> account map, optionally backed by a JSON file.

    Writes are serialized under a lock and rewrite the whole file atomically.
    Reads pick up changes made by other processes (e.g. ``podkeeper admin
    add-user`` against a running gateway) by watching the file's mtime.
    """

    def __init__(self, path: str | os.PathLike | None = None, scrypt_n: int = DEFAULT_SCRYPT_N):
        self.path = Path(path) if path is not None else None
        self.scrypt_n = scrypt_n
        self._lock = threading.RLock()
        self._users: dict[str, UserAccount] = {}
        self._stamp = None
        self._reload()

    def _file_stamp(self):
        try:
            st = self.path.stat()
        except FileNotFoundError:
            return None
        return (st.st_mtime_ns, st.st_size)

    def _reload(self) -> None:
        if self.path is None:
            return
        with self._lock:
            stamp = self._file_stamp()
            if stamp == self._stamp:
                return
            users = {}
            if stamp is not None:
                data = json.loads(self.path.read_text())
                for name, rec in data.get("users", {}).items():
                    users[name] = UserAccount(name, rec["password_digest"], parse_ts(rec["created_at"]))
            self._users = users
            self._stamp = stamp

    def _save(self) -> None:
        if self.path is None:
            return
        data = {
            "format_version": 1,
            "users": {
                name: {"password_digest": acct.password_digest, "created_at": format_ts(acct.created_at)}
                for name, acct in sorted(self._users.items())
            },
        }
        self.path.parent.mkdir(parents=True, exist_ok=True)
        tmp = self.path.with_suffix(".tmp")
        tmp.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")
        os.chmod(tmp, 0o600)
        os.replace(tmp, self.path)
        self._stamp = self._file_stamp()

    def create_user(self, username: str, password: str, now: datetime | None = None) -> UserAccount:
        if not isinstance(username, str) or not USERNAME_RE.fullmatch(username):
            raise InvalidUsername(f"username must match [a-z0-9_]{{1,64}}: {username!r}")
        if not password:
            raise ValueError("password must be non-empty")
        with self._lock:
            self._reload()
            if username in self._users:
                raise DuplicateUser(f"user {username!r} already exists")
            acct = UserAccount(username, hash_password(password, self.scrypt_n), now or utcnow())
            self._users[username] = acct
            self._save()
        return acct

    def get(self, username: str) -> UserAccount | None:
        self._reload()
        return self._users.get(username)

    def exists(self, username: str) -> bool:
        return self.get(username) is not None

    def usernames(self) -> list[str]:
        self._reload()
        return sorted(self._users)


class TokenService:
    def __init__(self, accounts: AccountStore, key: bytes, ttl: timedelta = DEFAULT_TOKEN_TTL):
        if len(key) < 16:
            raise ValueError("signing key must be at least 16 bytes")
        self.accounts = accounts
        self.key = key
        self.ttl = ttl

    def _mac(self, signing_input: str) -> str:
        return b64url_encode(hmac.new(self.key, signing_input.encode("ascii"), hashlib.sha256).digest())

    def issue_token(self, username: str, password: str, now: datetime | None = None) -> AuthToken:
        acct = self.accounts.get(username) if isinstance(username, str) else None
        if acct is None:
            # Burn comparable time so unknown users are not distinguishable by latency.
            check_password(password, hash_password("", self.accounts.scrypt_n))
            raise BadCredentials("authentication failed")
        if not check_password(password, acct.password_digest):
            raise BadCredentials("authentication failed")
        return self.mint(username, now)

    def mint(self, subject: str, now: datetime | None = None) -> AuthToken:
        """Sign a token for ``subject`` without checking a password."""
        now = (now or utcnow()).replace(microsecond=0)
        expires = now + self.ttl
        header = b64url_encode(json.dumps(TOKEN_HEADER, separators=(",", ":")).encode())
        payload = b64url_encode(
            json.dumps(
                {"sub": subject, "iat": int(now.timestamp()), "exp": int(expires.timestamp())},
                separators=(",", ":"),
            ).encode()
        )
        signing_input = f"{header}.{payload}"
        return AuthToken(subject, now, expires, f"{signing_input}.{self._mac(signing_input)}")

    def verify_token(self, serialized: str, now: datetime | None = None) -> str:
        if not isinstance(serialized, str):
            raise TokenMalformed("token must be a string")
        parts = serialized.split(".")
        if len(parts) != 3 or not all(_SEGMENT_RE.fullmatch(p) for p in parts):
            raise TokenMalformed("token must be three base64url segments")
        try:
            header = json.loads(b64url_decode(parts[0]))
            payload = json.loads(b64url_decode(parts[1]))
        except (ValueError, binascii.Error, UnicodeDecodeError):
            raise TokenMalformed("token segments are not base64url JSON") from None
        if not isinstance(header, dict) or not isinstance(payload, dict):
            raise TokenMalformed("token segments must be JSON objects")
        # Compare the encoded form: non-canonical trailing bits would otherwise decode equal.
        if not hmac.compare_digest(parts[2], self._mac(f"{parts[0]}.{parts[1]}")):
            raise TokenTampered("token signature mismatch")
        if header != TOKEN_HEADER:
            raise TokenMalformed("unsupported token header")
        sub, exp = payload.get("sub"), payload.get("exp")
        if not isinstance(sub, str) or not isinstance(exp, int) or isinstance(exp, bool):
            raise TokenMalformed("token payload lacks sub/exp")
        now = now or utcnow()
        if now.timestamp() >= exp:
            raise TokenExpired("token expired")
        return sub

    def get_userinfo(self, subject: str) -> UserInfo:
        acct = self.accounts.get(subject)
        if acct is None:
            raise UnknownUser(f"unknown user {subject!r}")
        return UserInfo(acct.username, acct.created_at)


def load_or_create_key(path: str | os.PathLike) -> bytes:
    """Return the 32-byte signing key stored at ``path``, creating it on first use."""
    path = Path(path)
    if path.exists():
        return bytes.fromhex(path.read_text().strip())
    key = secrets.token_bytes(32)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd = os.open(path, os.O_WRONLY | os.O_CREAT | os.O_EXCL, 0o600)
    with os.fdopen(fd, "w") as fh:
        fh.write(key.hex() + "\n")
    return key
