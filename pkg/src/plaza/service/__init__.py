"""Persistence, HTTP API, and operator CLI around the deliberation core."""

from .config import ServiceConfig, load_config
from .events import EventKind, EventLog, EventRecord, ServiceRecord, fold_event
from .store import DeliberationStore

__all__ = [
    "ServiceConfig",
    "load_config",
    "EventKind",
    "EventLog",
    "EventRecord",
    "ServiceRecord",
    "fold_event",
    "DeliberationStore",
]
