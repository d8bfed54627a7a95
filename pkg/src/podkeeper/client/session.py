from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path


def default_session_path() -> Path:
    base = os.environ.get("XDG_CONFIG_HOME") or Path.home() / ".config"
    return Path(base) / "podkeeper" / "session.json"


@dataclass
class Session:
    gateway_host: str
    port: int
    username: str
    token: str
    token_expiry: str
    current_pod: str | None = None
    # held in memory only; never serialized
    pod_credentials: dict | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        data = asdict(self)
        data.pop("pod_credentials")
        return data

    def save(self, path: str | Path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        fd = os.open(path.with_suffix(".tmp"), os.O_WRONLY | os.O_CREAT | os.O_TRUNC, 0o600)
        with os.fdopen(fd, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")
        os.chmod(path.with_suffix(".tmp"), 0o600)
        os.replace(path.with_suffix(".tmp"), path)

    @classmethod
    def load(cls, path: str | Path) -> "Session | None":
        try:
            data = json.loads(Path(path).read_text())
        except FileNotFoundError:
            return None
        data.pop("pod_credentials", None)
        return cls(**data)
