"""Access events and the composable filter shared by queries and live feeds."""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime
from typing import Any, Optional

from .policy import AccessDecision, ensure_utc


class BadTimeRange(ValueError):
    """time_from is after time_to."""


def parse_utc(text: str) -> datetime:
    """Parse an ISO-8601 timestamp; accepts a trailing Z; result is UTC."""
    cleaned = text.strip()
    if cleaned.endswith(("Z", "z")):
        cleaned = cleaned[:-1] + "+00:00"
    return ensure_utc(datetime.fromisoformat(cleaned))


def iso_utc(dt: datetime) -> str:
    return ensure_utc(dt).isoformat()


@dataclass(frozen=True)
class AccessEvent:
    """One check-in attempt, granted or denied; the audit-log unit.

    Names and the registration photo are snapshotted at event time so the
    log renders faithfully after later edits. gate_name is None when the
    claimed gate id did not resolve; photo references are content hashes
    and may be None when no usable picture accompanied the attempt.
    """

    event_seq: int
    user_id: str
    user_name: str
    gate_id: int
    gate_name: Optional[str]
    timestamp: datetime
    decision: AccessDecision
    gate_photo: Optional[str]
    registration_photo: Optional[str]
    client_time: Optional[str] = None  # untrusted device clock, recorded verbatim

    def to_json_dict(self) -> dict[str, Any]:
        return {
            "seq": self.event_seq,
            "user_id": self.user_id,
            "user_name": self.user_name,
            "gate_id": self.gate_id,
            "gate_name": self.gate_name,
            "timestamp": iso_utc(self.timestamp),
            "outcome": self.decision.outcome,
            "reason": self.decision.reason.value if self.decision.reason else None,
            "gate_photo": self.gate_photo,
            "registration_photo": self.registration_photo,
            "client_time": self.client_time,
        }

    @classmethod
    def from_json_dict(cls, doc: dict[str, Any]) -> AccessEvent:
        if doc["outcome"] == "granted":
            decision = AccessDecision.grant()
        else:
            decision = AccessDecision.deny(doc["reason"])
        return cls(
            event_seq=doc["seq"],
            user_id=doc["user_id"],
            user_name=doc["user_name"],
            gate_id=doc["gate_id"],
            gate_name=doc.get("gate_name"),
            timestamp=parse_utc(doc["timestamp"]),
            decision=decision,
            gate_photo=doc.get("gate_photo"),
            registration_photo=doc.get("registration_photo"),
            client_time=doc.get("client_time"),
        )


@dataclass(frozen=True)
class EventFilter:
    """Conjunction of optional constraints; empty fields match everything.

    The time window is half-open: [time_from, time_to). Live feeds ignore
    the time fields.
    """

    time_from: Optional[datetime] = None
    time_to: Optional[datetime] = None
    gate_id: Optional[int] = None
    user_id: Optional[str] = None
    denied_only: bool = False

    def __post_init__(self) -> None:
        if self.time_from is not None:
            object.__setattr__(self, "time_from", ensure_utc(self.time_from))
        if self.time_to is not None:
            object.__setattr__(self, "time_to", ensure_utc(self.time_to))
        if (
            self.time_from is not None
            and self.time_to is not None
            and self.time_from > self.time_to
        ):
            raise BadTimeRange(f"time_from {self.time_from} is after time_to {self.time_to}")

    def matches(self, event: AccessEvent, *, ignore_time: bool = False) -> bool:
        if not ignore_time:
            if self.time_from is not None and event.timestamp < self.time_from:
                return False
            if self.time_to is not None and event.timestamp >= self.time_to:
                return False
        if self.gate_id is not None and event.gate_id != self.gate_id:
            return False
        if self.user_id is not None and event.user_id != self.user_id:
            return False
        if self.denied_only and event.decision.outcome != "denied":
            return False
        return True
