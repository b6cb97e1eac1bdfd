"""Durable organization state under one data directory.

Layout:

    credentials.json    server GUID, tag password, admin token (created once)
    org.json            users, gates, policies, device tokens, id counters
    events.log          append-only JSON lines, one access event per line
    blobs/ab/<hash>.png|.jpg   content-addressed photos (sha256)

org.json is rewritten atomically (temp file + rename) after each mutation;
event appends are flushed and fsynced before returning. Reads are safe from
any thread; writes serialize on per-concern locks. The event log has no
update or delete operation.
"""

from __future__ import annotations

import io
import json
import os
import secrets
import threading
from dataclasses import dataclass
from datetime import datetime
from hashlib import sha256
from pathlib import Path
from typing import Optional

from PIL import Image

from .events import AccessEvent, EventFilter, iso_utc, parse_utc
from .policy import AccessPolicy, DenyReason, Gate, PolicyTable, User

MAX_PHOTO_BYTES = 5 * 1024 * 1024

PNG_MAGIC = b"\x89PNG\r\n\x1a\n"
JPEG_MAGIC = b"\xff\xd8\xff"

_EXTENSIONS = {"png": ".png", "jpeg": ".jpg"}


class StorageError(Exception):
    """Base for storage failures."""


class TooLarge(StorageError):
    """Photo exceeds the 5 MB bound."""


class UndecodableImage(StorageError):
    """Bytes are empty or do not decode as the claimed image type."""


class DanglingReference(StorageError):
    """Event references a user, gate or photo that does not exist."""


def detect_media_type(data: bytes) -> Optional[str]:
    """Sniff png/jpeg from magic bytes; None for anything else."""
    if data.startswith(PNG_MAGIC):
        return "png"
    if data.startswith(JPEG_MAGIC):
        return "jpeg"
    return None


def _atomic_write(path: Path, data: bytes) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)


class PhotoStore:
    """Content-addressed blob store for registration and gate photos."""

    def __init__(self, root: Path) -> None:
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def _path(self, digest: str, media_type: str) -> Path:
        return self.root / digest[:2] / (digest + _EXTENSIONS[media_type])

    def put(self, data: bytes, media_type: str) -> str:
        """Store once, keyed by sha256; returns the hex digest."""
        if not data:
            raise UndecodableImage("photo is empty")
        if len(data) > MAX_PHOTO_BYTES:
            raise TooLarge(f"photo of {len(data)} bytes exceeds the {MAX_PHOTO_BYTES}-byte bound")
        if media_type not in _EXTENSIONS:
            raise UndecodableImage(f"unsupported media type {media_type!r}")
        if detect_media_type(data) != media_type:
            raise UndecodableImage(f"bytes do not look like {media_type}")
        try:
            Image.open(io.BytesIO(data)).verify()
        except Exception as exc:
            raise UndecodableImage(f"photo does not decode: {exc}") from exc
        digest = sha256(data).hexdigest()
        path = self._path(digest, media_type)
        if not path.exists():
            path.parent.mkdir(parents=True, exist_ok=True)
            _atomic_write(path, data)
        return digest

    def _find(self, digest: str) -> Optional[tuple[Path, str]]:
        for media_type in _EXTENSIONS:
            path = self._path(digest, media_type)
            if path.is_file():
                return path, media_type
        return None

    def exists(self, digest: str) -> bool:
        return self._find(digest) is not None

    def get(self, digest: str) -> tuple[bytes, str]:
        """Return (bytes, media_type); KeyError when the digest is unknown."""
        found = self._find(digest)
        if found is None:
            raise KeyError(digest)
        path, media_type = found
        return path.read_bytes(), media_type


@dataclass(frozen=True)
class OrgCredentials:
    """Secrets fixed for the lifetime of one deployment."""

    server_guid: bytes  # 16 random bytes, never regenerated
    tag_password: bytes  # 4-byte chip write password, shared org-wide
    admin_token: str


class Store:
    """All durable state of one organization."""

    def __init__(self, data_dir: str | Path, admin_token: Optional[str] = None) -> None:
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self.photos = PhotoStore(self.data_dir / "blobs")
        self._org_lock = threading.RLock()
        self._event_lock = threading.Lock()
        self.credentials = self._load_or_create_credentials(admin_token)
        self.table = PolicyTable()
        self._device_tokens: dict[str, str] = {}
        self._load_org()
        self._events: list[AccessEvent] = []
        self._next_seq = 1
        self._load_events()
        self._event_file = open(self.data_dir / "events.log", "a", encoding="utf-8")

    def close(self) -> None:
        self._event_file.close()

    def __enter__(self) -> Store:
        return self

    def __exit__(self, *exc_info: object) -> None:
        self.close()

    # -- credentials --------------------------------------------------

    def _load_or_create_credentials(self, admin_token: Optional[str]) -> OrgCredentials:
        path = self.data_dir / "credentials.json"
        if path.exists():
            doc = json.loads(path.read_text(encoding="utf-8"))
            stored_token = doc["admin_token"]
            if admin_token is not None and admin_token != stored_token:
                doc["admin_token"] = admin_token
                _atomic_write(path, json.dumps(doc, indent=2).encode())
                stored_token = admin_token
            return OrgCredentials(
                server_guid=bytes.fromhex(doc["server_guid"]),
                tag_password=bytes.fromhex(doc["tag_password"]),
                admin_token=stored_token,
            )
        creds = OrgCredentials(
            server_guid=secrets.token_bytes(16),
            tag_password=secrets.token_bytes(4),
            admin_token=admin_token or secrets.token_urlsafe(24),
        )
        doc = {
            "server_guid": creds.server_guid.hex(),
            "tag_password": creds.tag_password.hex(),
            "admin_token": creds.admin_token,
        }
        _atomic_write(path, json.dumps(doc, indent=2).encode())
        return creds

    # -- organization registry ----------------------------------------

    def _org_path(self) -> Path:
        return self.data_dir / "org.json"

    def _save_org(self) -> None:
        table = self.table
        doc = {
            "next_gate_id": table.next_gate_id,
            "next_user_num": table.next_user_num,
            "users": [
                {
                    "user_id": u.user_id,
                    "first_name": u.first_name,
                    "last_name": u.last_name,
                    "registration_photo": u.registration_photo,
                }
                for u in table.users.values()
            ],
            "gates": [
                {"gate_id": g.gate_id, "name": g.name, "location": g.location}
                for g in table.gates.values()
            ],
            "policies": [
                {
                    "user_id": p.user_id,
                    "gate_id": p.gate_id,
                    "enabled": p.enabled,
                    "expires_at": iso_utc(p.expires_at),
                }
                for p in table.policies.values()
            ],
            "device_tokens": self._device_tokens,
        }
        _atomic_write(self._org_path(), json.dumps(doc, indent=2).encode())

    def _load_org(self) -> None:
        path = self._org_path()
        if not path.exists():
            return
        doc = json.loads(path.read_text(encoding="utf-8"))
        table = self.table
        table.next_gate_id = doc["next_gate_id"]
        table.next_user_num = doc["next_user_num"]
        for u in doc["users"]:
            table.users[u["user_id"]] = User(
                u["user_id"], u["first_name"], u["last_name"], u["registration_photo"]
            )
        for g in doc["gates"]:
            table.gates[g["gate_id"]] = Gate(g["gate_id"], g["name"], g["location"])
        for p in doc["policies"]:
            table.policies[(p["user_id"], p["gate_id"])] = AccessPolicy(
                p["user_id"], p["gate_id"], p["enabled"], parse_utc(p["expires_at"])
            )
        self._device_tokens = dict(doc["device_tokens"])

    def add_user(
        self, first_name: str, last_name: str, registration_photo: str, device_token: str
    ) -> User:
        with self._org_lock:
            if not self.photos.exists(registration_photo):
                raise DanglingReference(f"photo {registration_photo} is not stored")
            user = self.table.add_user(first_name, last_name, registration_photo)
            self._device_tokens[device_token] = user.user_id
            self._save_org()
            return user

    def update_user(
        self,
        user_id: str,
        first_name: Optional[str] = None,
        last_name: Optional[str] = None,
        registration_photo: Optional[str] = None,
    ) -> User:
        """Replace the given fields; everything else is untouched."""
        with self._org_lock:
            current = self.table.users.get(user_id)
            if current is None:
                raise KeyError(user_id)
            if registration_photo is not None and not self.photos.exists(registration_photo):
                raise DanglingReference(f"photo {registration_photo} is not stored")
            updated = User(
                user_id,
                first_name if first_name is not None else current.first_name,
                last_name if last_name is not None else current.last_name,
                registration_photo
                if registration_photo is not None
                else current.registration_photo,
            )
            self.table.replace_user(updated)
            self._save_org()
            return updated

    def add_gate(self, name: str, location: str) -> Gate:
        with self._org_lock:
            gate = self.table.add_gate(name, location)
            self._save_org()
            return gate

    def upsert_policy(
        self, user_id: str, gate_id: int, enabled: bool, expires_at: Optional[datetime]
    ) -> AccessPolicy:
        with self._org_lock:
            policy = self.table.upsert_policy(user_id, gate_id, enabled, expires_at)
            self._save_org()
            return policy

    def list_policies_for_gate(self, gate_id: int) -> list[tuple[User, AccessPolicy]]:
        with self._org_lock:
            return self.table.list_policies_for_gate(gate_id)

    def user_for_device_token(self, token: str) -> Optional[User]:
        user_id = self._device_tokens.get(token)
        return self.table.users.get(user_id) if user_id else None

    # -- event log -----------------------------------------------------

    def _load_events(self) -> None:
        path = self.data_dir / "events.log"
        if not path.exists():
            return
        lines = path.read_text(encoding="utf-8").splitlines()
        for index, line in enumerate(lines):
            if not line.strip():
                continue
            try:
                event = AccessEvent.from_json_dict(json.loads(line))
            except (json.JSONDecodeError, KeyError, ValueError):
                if index == len(lines) - 1:
                    break  # torn final line from a crash mid-append
                raise StorageError(f"corrupt event log at line {index + 1}")
            self._events.append(event)
        if self._events:
            self._next_seq = self._events[-1].event_seq + 1

    def _validate_event_refs(self, event: AccessEvent) -> None:
        if event.user_id not in self.table.users:
            raise DanglingReference(f"user {event.user_id} does not exist")
        for digest in (event.gate_photo, event.registration_photo):
            if digest is not None and not self.photos.exists(digest):
                raise DanglingReference(f"photo {digest} is not stored")
        # A claimed-but-unresolvable gate id is legitimate exactly for the
        # denials that report it; anything else must reference a real gate.
        unresolved_ok = event.decision.reason in (DenyReason.UNKNOWN_GATE, DenyReason.UNKNOWN_ORG)
        if not unresolved_ok and event.gate_id not in self.table.gates:
            raise DanglingReference(f"gate {event.gate_id} does not exist")

    def append_event(self, event: AccessEvent) -> AccessEvent:
        """Assign the next sequence number and persist; durable on return.

        The event_seq on the input is ignored; the log owns numbering.
        """
        with self._event_lock:
            self._validate_event_refs(event)
            stored = AccessEvent(
                event_seq=self._next_seq,
                user_id=event.user_id,
                user_name=event.user_name,
                gate_id=event.gate_id,
                gate_name=event.gate_name,
                timestamp=event.timestamp,
                decision=event.decision,
                gate_photo=event.gate_photo,
                registration_photo=event.registration_photo,
                client_time=event.client_time,
            )
            line = json.dumps(stored.to_json_dict(), separators=(",", ":"))
            self._event_file.write(line + "\n")
            self._event_file.flush()
            os.fsync(self._event_file.fileno())
            self._next_seq += 1
            self._events.append(stored)
            return stored

    def scan_events(self, flt: EventFilter, *, newest_first: bool = True) -> list[AccessEvent]:
        with self._event_lock:
            snapshot = list(self._events)
        matched = [e for e in snapshot if flt.matches(e)]
        if newest_first:
            matched.reverse()
        return matched

    def event_count(self) -> int:
        with self._event_lock:
            return len(self._events)
