"""Organization server: gate registration, user enrollment, check-in,
audit queries, photo blobs and the live event feed.

Bodies are JSON except the two uploads (user registration and check-in are
multipart forms) and the newline-delimited JSON feed stream. Two bearer
token classes exist: the admin token guards everything except check-in,
which authenticates with a per-user device token issued at registration.

Decisions use the server clock. When the server runs in test mode, the
``X-Test-Time`` request header overrides that clock so expiry boundaries
can be exercised in milliseconds; outside test mode the header is refused.
"""

from __future__ import annotations

import json
import os
import queue
import secrets
import threading
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterator, Optional

from fastapi import FastAPI, File, Form, Request, UploadFile
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, Response, StreamingResponse
from pydantic import BaseModel

from .events import AccessEvent, BadTimeRange, EventFilter, iso_utc, parse_utc
from .feed import EventFeed
from .ndef import GateTagPayload
from .policy import (
    AccessDecision,
    AccessPolicy,
    DenyReason,
    DuplicateName,
    Gate,
    MissingExpiration,
    UnknownGate,
    UnknownUser,
    User,
)
from .storage import MAX_PHOTO_BYTES, Store, TooLarge, UndecodableImage, detect_media_type

DEFAULT_ANDROID_APP_ID = "com.gatekeeper.accessctl"
DEFAULT_UNIVERSAL_LINK = "https://app.gatekeeper.example.com/gate/entry?src=tag&ver=1.0"


@dataclass
class ServerConfig:
    data_dir: Path
    host: str = "127.0.0.1"
    port: int = 8000
    admin_token: Optional[str] = None  # generated and persisted when absent
    android_app_id: str = DEFAULT_ANDROID_APP_ID
    universal_link: str = DEFAULT_UNIVERSAL_LINK
    test_mode: bool = False
    heartbeat_seconds: float = 15.0
    feed_buffer: int = 1024
    page_size: int = 50
    ui_dir: Optional[Path] = None

    @classmethod
    def from_env(cls, **overrides: object) -> "ServerConfig":
        env = os.environ
        values: dict[str, object] = {}
        if "GATEKEEPER_DATA_DIR" in env:
            values["data_dir"] = Path(env["GATEKEEPER_DATA_DIR"])
        if "GATEKEEPER_HOST" in env:
            values["host"] = env["GATEKEEPER_HOST"]
        if "GATEKEEPER_PORT" in env:
            values["port"] = int(env["GATEKEEPER_PORT"])
        if "GATEKEEPER_ADMIN_TOKEN" in env:
            values["admin_token"] = env["GATEKEEPER_ADMIN_TOKEN"]
        if "GATEKEEPER_APP_ID" in env:
            values["android_app_id"] = env["GATEKEEPER_APP_ID"]
        if "GATEKEEPER_UNIVERSAL_LINK" in env:
            values["universal_link"] = env["GATEKEEPER_UNIVERSAL_LINK"]
        if "GATEKEEPER_TEST_MODE" in env:
            values["test_mode"] = env["GATEKEEPER_TEST_MODE"] not in ("", "0", "false")
        if "GATEKEEPER_UI_DIR" in env:
            values["ui_dir"] = Path(env["GATEKEEPER_UI_DIR"])
        values.update({k: v for k, v in overrides.items() if v is not None})
        if "data_dir" not in values:
            raise ValueError("data_dir is required (flag --data-dir or GATEKEEPER_DATA_DIR)")
        return cls(**values)  # type: ignore[arg-type]


class ApiError(Exception):
    def __init__(self, status: int, code: str, detail: str = "") -> None:
        super().__init__(detail or code)
        self.status = status
        self.code = code
        self.detail = detail


class GateCreate(BaseModel):
    name: str
    location: str = ""


class PolicyPut(BaseModel):
    enabled: bool = True
    expires_at: Optional[str] = None


def _user_json(user: User) -> dict:
    return {
        "user_id": user.user_id,
        "first_name": user.first_name,
        "last_name": user.last_name,
        "registration_photo": user.registration_photo,
    }


def _gate_json(gate: Gate) -> dict:
    return {"gate_id": gate.gate_id, "name": gate.name, "location": gate.location}


def _policy_json(user: User, policy: AccessPolicy) -> dict:
    return {
        "user": _user_json(user),
        "gate_id": policy.gate_id,
        "enabled": policy.enabled,
        "expires_at": iso_utc(policy.expires_at),
    }


def create_app(config: ServerConfig) -> FastAPI:
    store = Store(config.data_dir, admin_token=config.admin_token)
    feed = EventFeed()
    pipeline_lock = threading.Lock()  # keeps publish order identical to seq order

    app = FastAPI(title="gatekeeper", docs_url=None, redoc_url=None)
    app.state.store = store
    app.state.feed = feed
    app.state.config = config
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )

    @app.exception_handler(ApiError)
    async def _api_error(request: Request, exc: ApiError) -> JSONResponse:
        return JSONResponse({"error": exc.code, "detail": exc.detail}, status_code=exc.status)

    def bearer_token(request: Request) -> Optional[str]:
        header = request.headers.get("authorization", "")
        if header.lower().startswith("bearer "):
            return header[7:].strip()
        return None

    def require_admin(request: Request) -> None:
        if bearer_token(request) != store.credentials.admin_token:
            raise ApiError(401, "unauthorized", "admin token required")

    def require_device(request: Request) -> User:
        token = bearer_token(request)
        user = store.user_for_device_token(token) if token else None
        if user is None:
            raise ApiError(401, "unauthorized", "unknown device token")
        return user

    def request_time(request: Request) -> datetime:
        header = request.headers.get("x-test-time")
        if header is None:
            return datetime.now(timezone.utc)
        if not config.test_mode:
            raise ApiError(400, "time_override_refused", "server is not running in test mode")
        try:
            return parse_utc(header)
        except ValueError:
            raise ApiError(400, "bad_time", f"cannot parse timestamp {header!r}") from None

    def read_upload(upload: Optional[UploadFile]) -> bytes:
        if upload is None:
            return b""
        return upload.file.read(MAX_PHOTO_BYTES + 1)

    def store_photo_strict(data: bytes) -> str:
        """Store a required photo; any problem is a 4xx for the caller."""
        if not data:
            raise ApiError(400, "invalid_photo", "photograph is required")
        if len(data) > MAX_PHOTO_BYTES:
            raise ApiError(413, "too_large", "photo exceeds the 5 MB bound")
        media_type = detect_media_type(data)
        if media_type is None:
            raise ApiError(400, "invalid_photo", "photo must be PNG or JPEG")
        try:
            return store.photos.put(data, media_type)
        except TooLarge as exc:
            raise ApiError(413, "too_large", str(exc)) from exc
        except UndecodableImage as exc:
            raise ApiError(400, "invalid_photo", str(exc)) from exc

    def store_photo_lenient(data: bytes) -> Optional[str]:
        """Store a check-in photo if usable; unusable means no reference."""
        media_type = detect_media_type(data) if 0 < len(data) <= MAX_PHOTO_BYTES else None
        if media_type is None:
            return None
        try:
            return store.photos.put(data, media_type)
        except (TooLarge, UndecodableImage):
            return None

    @app.get("/api/health")
    def health() -> dict:
        return {"status": "ok", "test_mode": config.test_mode}

    # -- gates ----------------------------------------------------------

    @app.post("/api/gates", status_code=201)
    def register_gate(request: Request, body: GateCreate) -> dict:
        require_admin(request)
        name = body.name.strip()
        if not name:
            raise ApiError(400, "missing_name", "gate name is required")
        try:
            gate = store.add_gate(name, body.location.strip())
        except DuplicateName as exc:
            raise ApiError(409, "duplicate_name", str(exc)) from exc
        tag = GateTagPayload(
            server_guid=store.credentials.server_guid,
            gate_id=gate.gate_id,
            android_app_id=config.android_app_id,
            universal_link=config.universal_link,
        )
        return {
            "gate": _gate_json(gate),
            "tag": {
                "server_guid": tag.server_guid.hex(),
                "gate_id": tag.gate_id,
                "android_app_id": tag.android_app_id,
                "universal_link": tag.universal_link,
            },
            "tag_password": store.credentials.tag_password.hex(),
        }

    @app.get("/api/gates")
    def list_gates(request: Request) -> dict:
        require_admin(request)
        gates = sorted(store.table.gates.values(), key=lambda g: g.gate_id)
        return {"gates": [_gate_json(g) for g in gates]}

    # -- users ------------------------------------------------------------

    @app.post("/api/users", status_code=201)
    def register_user(
        request: Request,
        first_name: str = Form(""),
        last_name: str = Form(""),
        photo: Optional[UploadFile] = File(None),
    ) -> dict:
        require_admin(request)
        first, last = first_name.strip(), last_name.strip()
        if not first or not last:
            raise ApiError(400, "missing_name", "first and last names are required")
        digest = store_photo_strict(read_upload(photo))
        device_token = secrets.token_urlsafe(24)
        user = store.add_user(first, last, digest, device_token)
        return {"user": _user_json(user), "device_token": device_token}

    @app.get("/api/users")
    def list_users(request: Request) -> dict:
        require_admin(request)
        users = sorted(
            store.table.users.values(),
            key=lambda u: (u.last_name, u.first_name, u.user_id),
        )
        return {"users": [_user_json(u) for u in users]}

    @app.put("/api/users/{user_id}")
    def update_user(
        request: Request,
        user_id: str,
        first_name: Optional[str] = Form(None),
        last_name: Optional[str] = Form(None),
        photo: Optional[UploadFile] = File(None),
    ) -> dict:
        require_admin(request)
        digest = None
        data = read_upload(photo)
        if data:
            digest = store_photo_strict(data)
        try:
            user = store.update_user(
                user_id, first_name=first_name, last_name=last_name, registration_photo=digest
            )
        except KeyError:
            raise ApiError(404, "unknown_user", f"no user {user_id}") from None
        return {"user": _user_json(user)}

    # -- policies ---------------------------------------------------------

    @app.get("/api/gates/{gate_id}/policies")
    def gate_policies(request: Request, gate_id: int) -> dict:
        require_admin(request)
        try:
            rows = store.list_policies_for_gate(gate_id)
        except UnknownGate:
            raise ApiError(404, "unknown_gate", f"no gate {gate_id}") from None
        return {
            "gate": _gate_json(store.table.gates[gate_id]),
            "policies": [_policy_json(user, policy) for user, policy in rows],
        }

    @app.put("/api/gates/{gate_id}/policies/{user_id}")
    def put_policy(request: Request, gate_id: int, user_id: str, body: PolicyPut) -> dict:
        require_admin(request)
        if body.expires_at is None or not body.expires_at.strip():
            raise ApiError(400, "missing_expiration", "expires_at is required")
        try:
            expires = parse_utc(body.expires_at)
        except ValueError:
            raise ApiError(400, "bad_time", f"cannot parse {body.expires_at!r}") from None
        try:
            policy = store.upsert_policy(user_id, gate_id, body.enabled, expires)
        except UnknownUser:
            raise ApiError(404, "unknown_user", f"no user {user_id}") from None
        except UnknownGate:
            raise ApiError(404, "unknown_gate", f"no gate {gate_id}") from None
        except MissingExpiration as exc:
            raise ApiError(400, "missing_expiration", str(exc)) from exc
        return {"policy": _policy_json(store.table.users[user_id], policy)}

    # -- check-in ----------------------------------------------------------

    @app.post("/api/checkin")
    def check_in(
        request: Request,
        server_guid: str = Form(""),
        gate_id: int = Form(...),
        client_time: Optional[str] = Form(None),
        photo: Optional[UploadFile] = File(None),
    ) -> dict:
        user = require_device(request)
        now = request_time(request)
        # The photo is stored whenever usable so even foreign-tag attempts
        # keep their picture for the audit trail.
        photo_hash = store_photo_lenient(read_upload(photo))

        try:
            guid_ok = bytes.fromhex(server_guid.strip()) == store.credentials.server_guid
        except ValueError:
            guid_ok = False
        gate = store.table.gates.get(gate_id)

        if not guid_ok:
            decision = AccessDecision.deny(DenyReason.UNKNOWN_ORG)
        elif gate is None:
            decision = AccessDecision.deny(DenyReason.UNKNOWN_GATE)
        elif photo_hash is None:
            decision = AccessDecision.deny(DenyReason.MISSING_PHOTO)
        else:
            decision = store.table.decide(user.user_id, gate_id, now)

        event = AccessEvent(
            event_seq=0,  # the log assigns the real number
            user_id=user.user_id,
            user_name=user.full_name,
            gate_id=gate_id,
            gate_name=gate.name if gate else None,
            timestamp=now,
            decision=decision,
            gate_photo=photo_hash,
            registration_photo=user.registration_photo,
            client_time=client_time,
        )
        with pipeline_lock:
            stored = store.append_event(event)
            feed.publish(stored)
        return {
            "outcome": decision.outcome,
            "reason": decision.reason.value if decision.reason else None,
            "event_seq": stored.event_seq,
            "timestamp": iso_utc(now),
        }

    # -- audit queries ------------------------------------------------------

    def parse_query_time(raw: Optional[str], name: str) -> Optional[datetime]:
        if raw is None or not raw.strip():
            return None
        try:
            return parse_utc(raw)
        except ValueError:
            raise ApiError(400, "bad_time", f"cannot parse {name}={raw!r}") from None

    @app.get("/api/events")
    def query_events(
        request: Request,
        gate: Optional[int] = None,
        user: Optional[str] = None,
        denied_only: bool = False,
        page: int = 1,
        page_size: Optional[int] = None,
    ) -> dict:
        require_admin(request)
        time_from = parse_query_time(request.query_params.get("from"), "from")
        time_to = parse_query_time(request.query_params.get("to"), "to")
        try:
            flt = EventFilter(
                time_from=time_from,
                time_to=time_to,
                gate_id=gate,
                user_id=user,
                denied_only=denied_only,
            )
        except BadTimeRange as exc:
            raise ApiError(400, "bad_time_range", str(exc)) from exc
        if page < 1:
            raise ApiError(400, "bad_page", "page starts at 1")
        size = page_size if page_size is not None else config.page_size
        size = max(1, min(size, 500))
        matched = store.scan_events(flt)  # newest first
        start = (page - 1) * size
        return {
            "events": [e.to_json_dict() for e in matched[start : start + size]],
            "page": page,
            "page_size": size,
            "total": len(matched),
        }

    @app.get("/api/photos/{content_hash}")
    def get_photo(request: Request, content_hash: str) -> Response:
        require_admin(request)
        try:
            data, media_type = store.photos.get(content_hash)
        except KeyError:
            raise ApiError(404, "unknown_photo", f"no photo {content_hash}") from None
        return Response(content=data, media_type=f"image/{media_type}")

    # -- live feed -----------------------------------------------------------

    def frame(doc: dict) -> str:
        return json.dumps(doc, separators=(",", ":")) + "\n"

    @app.get("/api/feed")
    def feed_stream(
        request: Request,
        denied_only: bool = False,
        gate: Optional[int] = None,
        user: Optional[str] = None,
    ) -> StreamingResponse:
        require_admin(request)
        flt = EventFilter(gate_id=gate, user_id=user, denied_only=denied_only)
        sub = feed.subscribe(flt, buffer_size=config.feed_buffer)

        def frames() -> Iterator[str]:
            try:
                # immediate first frame: lets clients detect the live subscription
                yield frame({"type": "heartbeat"})
                while True:
                    try:
                        event = sub.queue.get(timeout=config.heartbeat_seconds)
                    except queue.Empty:
                        if sub.overflowed.is_set():
                            yield frame({"type": "error", "reason": "overflow"})
                            return
                        yield frame({"type": "heartbeat"})
                        continue
                    yield frame({"type": "event", **event.to_json_dict()})
                    if sub.overflowed.is_set() and sub.queue.empty():
                        yield frame({"type": "error", "reason": "overflow"})
                        return
            finally:
                feed.unsubscribe(sub.subscriber_id)

        return StreamingResponse(frames(), media_type="application/x-ndjson")

    if config.ui_dir is not None and Path(config.ui_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=config.ui_dir, html=True), name="ui")

    return app


def run_server(config: ServerConfig) -> None:
    import uvicorn

    app = create_app(config)
    store: Store = app.state.store
    print(f"data directory: {config.data_dir}")
    print(f"admin token:    {store.credentials.admin_token}")
    print(f"server guid:    {store.credentials.server_guid.hex()}")
    if config.test_mode:
        print("TEST MODE: X-Test-Time header is honored")
    uvicorn.run(app, host=config.host, port=config.port, log_level="warning")
