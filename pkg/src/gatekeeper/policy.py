"""Access decisions for (user, gate, time) from configured per-pair policies.

A policy grants while it is enabled and strictly before its expiration:
the boundary is half-open, so an attempt exactly at the expiration instant
is denied. Expiry is evaluated lazily at decision time; the stored enabled
flag changes only when an administrator edits it. All timestamps are UTC.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Literal, Mapping, Optional


class PolicyError(Exception):
    """Base for registry and policy failures."""


class UnknownUser(PolicyError):
    pass


class UnknownGate(PolicyError):
    pass


class DuplicateName(PolicyError):
    pass


class MissingExpiration(PolicyError):
    pass


class DenyReason(str, enum.Enum):
    """Closed enumeration of denial causes."""

    UNKNOWN_ORG = "unknown_org"
    UNKNOWN_GATE = "unknown_gate"
    UNKNOWN_USER = "unknown_user"
    NO_POLICY = "no_policy"
    POLICY_DISABLED = "policy_disabled"
    POLICY_EXPIRED = "policy_expired"
    MISSING_PHOTO = "missing_photo"


def ensure_utc(dt: datetime) -> datetime:
    """Normalize to timezone-aware UTC; naive input is taken as UTC."""
    if dt.tzinfo is None:
        return dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc)


@dataclass(frozen=True)
class User:
    user_id: str
    first_name: str
    last_name: str
    registration_photo: str  # content hash of the registration picture

    @property
    def full_name(self) -> str:
        return f"{self.first_name} {self.last_name}"


@dataclass(frozen=True)
class Gate:
    gate_id: int
    name: str
    location: str


@dataclass(frozen=True)
class AccessPolicy:
    user_id: str
    gate_id: int
    enabled: bool
    expires_at: datetime


@dataclass(frozen=True)
class AccessDecision:
    """Outcome of one decision; a reason accompanies exactly the denials."""

    outcome: Literal["granted", "denied"]
    reason: Optional[DenyReason] = None

    def __post_init__(self) -> None:
        if (self.outcome == "denied") != (self.reason is not None):
            raise ValueError("a reason must be present exactly when denied")

    @property
    def granted(self) -> bool:
        return self.outcome == "granted"

    @classmethod
    def grant(cls) -> AccessDecision:
        return cls("granted")

    @classmethod
    def deny(cls, reason: DenyReason | str) -> AccessDecision:
        return cls("denied", DenyReason(reason))


def decide_access(
    policies: Mapping[tuple[str, int], AccessPolicy],
    user_id: str,
    gate_id: int,
    now: datetime,
) -> AccessDecision:
    """Pure decision for an existing (user, gate) pair at ``now``.

    The caller resolves unknown organizations, gates and users before this
    call; everything here maps to no_policy / policy_disabled /
    policy_expired or a grant.
    """
    policy = policies.get((user_id, gate_id))
    if policy is None:
        return AccessDecision.deny(DenyReason.NO_POLICY)
    if not policy.enabled:
        return AccessDecision.deny(DenyReason.POLICY_DISABLED)
    if ensure_utc(now) >= ensure_utc(policy.expires_at):
        return AccessDecision.deny(DenyReason.POLICY_EXPIRED)
    return AccessDecision.grant()


class PolicyTable:
    """In-memory organization registry: users, gates, per-pair policies.

    Gate ids are allocated monotonically from 1 and never reused; at most
    one policy exists per (user, gate) pair. Not thread-safe on its own;
    the storage layer serializes mutations.
    """

    def __init__(self) -> None:
        self.users: dict[str, User] = {}
        self.gates: dict[int, Gate] = {}
        self.policies: dict[tuple[str, int], AccessPolicy] = {}
        self.next_gate_id = 1
        self.next_user_num = 1

    def add_user(self, first_name: str, last_name: str, registration_photo: str) -> User:
        user = User(f"u{self.next_user_num}", first_name, last_name, registration_photo)
        self.next_user_num += 1
        self.users[user.user_id] = user
        return user

    def replace_user(self, user: User) -> None:
        if user.user_id not in self.users:
            raise UnknownUser(user.user_id)
        self.users[user.user_id] = user

    def add_gate(self, name: str, location: str) -> Gate:
        if any(g.name == name for g in self.gates.values()):
            raise DuplicateName(f"gate name {name!r} is already registered")
        gate = Gate(self.next_gate_id, name, location)
        self.next_gate_id += 1
        self.gates[gate.gate_id] = gate
        return gate

    def upsert_policy(
        self,
        user_id: str,
        gate_id: int,
        enabled: bool,
        expires_at: Optional[datetime],
    ) -> AccessPolicy:
        if user_id not in self.users:
            raise UnknownUser(user_id)
        if gate_id not in self.gates:
            raise UnknownGate(str(gate_id))
        if expires_at is None:
            raise MissingExpiration("every policy needs an expiration date")
        policy = AccessPolicy(user_id, gate_id, bool(enabled), ensure_utc(expires_at))
        self.policies[(user_id, gate_id)] = policy
        return policy

    def list_policies_for_gate(self, gate_id: int) -> list[tuple[User, AccessPolicy]]:
        """All users that have or had access, expired and disabled included."""
        if gate_id not in self.gates:
            raise UnknownGate(str(gate_id))
        rows = [
            (self.users[user_id], policy)
            for (user_id, gid), policy in self.policies.items()
            if gid == gate_id
        ]
        rows.sort(key=lambda row: (row[0].last_name, row[0].first_name, row[0].user_id))
        return rows

    def decide(self, user_id: str, gate_id: int, now: datetime) -> AccessDecision:
        return decide_access(self.policies, user_id, gate_id, now)
