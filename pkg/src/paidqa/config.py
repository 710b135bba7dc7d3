"""Service configuration: file-based with environment overrides.

The config file is JSON. Every scalar can be overridden by a PAIDQA_*
environment variable, which wins over the file. Tokens (bearer credentials
issued out-of-band) map to identities and roles; they only ever come from
the file, never the environment.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path


@dataclass(frozen=True)
class Identity:
    """A real party known to the broker; never shown to counterparties."""

    id: str
    role: str  # asker | answerer | broker
    contact_handle: str = ""
    payment_handle: str = ""


@dataclass
class ServiceConfig:
    listen_host: str = "127.0.0.1"
    listen_port: int = 8642
    log_path: str = "exchange-events.log"
    sweep_interval_s: float = 1.0
    hash_name: str = "sha256"
    fsync: bool = True
    tokens: dict[str, Identity] = field(default_factory=dict)

    @classmethod
    def from_dict(cls, raw: dict) -> "ServiceConfig":
        tokens = {
            token: Identity(
                id=entry["id"],
                role=entry["role"],
                contact_handle=entry.get("contact_handle", ""),
                payment_handle=entry.get("payment_handle", ""),
            )
            for token, entry in raw.get("tokens", {}).items()
        }
        cfg = cls(tokens=tokens)
        for name in ("listen_host", "log_path", "hash_name"):
            if name in raw:
                setattr(cfg, name, str(raw[name]))
        if "listen_port" in raw:
            cfg.listen_port = int(raw["listen_port"])
        if "sweep_interval_s" in raw:
            cfg.sweep_interval_s = float(raw["sweep_interval_s"])
        if "fsync" in raw:
            cfg.fsync = bool(raw["fsync"])
        return cfg


_ENV_OVERRIDES = {
    "PAIDQA_LISTEN_HOST": ("listen_host", str),
    "PAIDQA_LISTEN_PORT": ("listen_port", int),
    "PAIDQA_LOG_PATH": ("log_path", str),
    "PAIDQA_SWEEP_INTERVAL": ("sweep_interval_s", float),
    "PAIDQA_HASH": ("hash_name", str),
    "PAIDQA_FSYNC": ("fsync", lambda v: v.lower() in ("1", "true", "yes")),
}


def load_config(path: str | Path | None = None,
                env: dict[str, str] | None = None) -> ServiceConfig:
    env = os.environ if env is None else env
    raw = {}
    if path is not None:
        raw = json.loads(Path(path).read_text())
    cfg = ServiceConfig.from_dict(raw)
    for var, (attr, convert) in _ENV_OVERRIDES.items():
        if var in env:
            setattr(cfg, attr, convert(env[var]))
    return cfg
