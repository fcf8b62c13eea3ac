"""Service configuration with documented defaults.

Every knob lives in one JSON file (see docs/SCHEMAS.md); the storage path
may be overridden with the PLAZA_STORAGE environment variable.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Mapping

from ..lifecycle import (
    DEFAULT_UPVOTE_THRESHOLD,
    DEFAULT_UPVOTE_WINDOW_MS,
    DeliberationConfig,
)

STORAGE_ENV_VAR = "PLAZA_STORAGE"
DEFAULT_PORT = 8400
DEFAULT_STORAGE_DIR = "./plaza-data"


@dataclass(frozen=True)
class ServiceConfig:
    port: int = DEFAULT_PORT
    storage_dir: str = DEFAULT_STORAGE_DIR
    upvote_threshold: int = DEFAULT_UPVOTE_THRESHOLD
    upvote_window_ms: int = DEFAULT_UPVOTE_WINDOW_MS
    deliberation: DeliberationConfig = field(default_factory=DeliberationConfig)

    def resolved_storage_dir(self) -> str:
        return os.environ.get(STORAGE_ENV_VAR, self.storage_dir)

    def to_dict(self) -> dict:
        return {
            "port": self.port,
            "storage_dir": self.storage_dir,
            "upvote_threshold": self.upvote_threshold,
            "upvote_window_ms": self.upvote_window_ms,
            "deliberation": self.deliberation.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "ServiceConfig":
        kwargs = {k: data[k] for k in cls().to_dict() if k in data}
        if "deliberation" in kwargs:
            kwargs["deliberation"] = DeliberationConfig.from_dict(kwargs["deliberation"])
        return cls(**kwargs)


def load_config(path: str | None = None) -> ServiceConfig:
    if path is None:
        return ServiceConfig()
    with open(path, encoding="utf-8") as fh:
        return ServiceConfig.from_dict(json.load(fh))
