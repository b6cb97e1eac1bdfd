"""Device-side simulation: what the admin phone and the user phone do.

Provisioning stands in for holding the admin device against a blank chip:
it registers the gate, writes the returned identifiers as a tag message and
installs the organization's write password. A check-in reads a chip image
the way the phone app would read a physical tag, then posts the gate
identifiers with a photo.
"""

from __future__ import annotations

from typing import Optional

import httpx

from .ndef import (
    GateTagPayload,
    build_gate_tag_message,
    decode_message,
    encode_message,
    parse_gate_tag_message,
)
from .tag import TagChip, TagStandard, new_tag


def admin_headers(admin_token: str) -> dict[str, str]:
    return {"Authorization": f"Bearer {admin_token}"}


def provision_tag(
    client: httpx.Client,
    server_url: str,
    admin_token: str,
    name: str,
    location: str,
    standard: TagStandard = TagStandard.NTAG213,
    *,
    seed: Optional[int] = None,
    lock: bool = False,
) -> tuple[TagChip, dict]:
    """Register a gate and program a fresh chip with its tag message.

    Returns (chip, server response). The chip ends up password-protected
    with the organization's tag password; ``lock`` additionally flips the
    irreversible read-only switch.
    """
    resp = client.post(
        f"{server_url}/api/gates",
        json={"name": name, "location": location},
        headers=admin_headers(admin_token),
    )
    resp.raise_for_status()
    body = resp.json()
    tag_fields = body["tag"]
    payload = GateTagPayload(
        server_guid=bytes.fromhex(tag_fields["server_guid"]),
        gate_id=tag_fields["gate_id"],
        android_app_id=tag_fields["android_app_id"],
        universal_link=tag_fields["universal_link"],
    )
    password = bytes.fromhex(body["tag_password"])
    chip = new_tag(standard, seed)
    chip = chip.write_ndef(encode_message(build_gate_tag_message(payload)))
    chip = chip.set_password(password)
    if lock:
        chip = chip.lock_readonly(password)
    return chip, body


def forge_tag(
    payload: GateTagPayload,
    standard: TagStandard = TagStandard.NTAG213,
    *,
    seed: Optional[int] = None,
) -> TagChip:
    """Program a chip with arbitrary identifiers, no server involved."""
    chip = new_tag(standard, seed)
    return chip.write_ndef(encode_message(build_gate_tag_message(payload)))


def read_gate_payload(chip: TagChip) -> GateTagPayload:
    """Read a chip the way the phone app does; no password needed."""
    return parse_gate_tag_message(decode_message(chip.read_ndef()))


def perform_checkin(
    client: httpx.Client,
    server_url: str,
    device_token: str,
    chip: TagChip,
    photo_bytes: bytes,
    photo_name: str = "gate-photo.png",
    *,
    client_time: Optional[str] = None,
    test_time: Optional[str] = None,
) -> dict:
    """Read the tag, post the check-in, return the decision JSON."""
    payload = read_gate_payload(chip)
    headers = {"Authorization": f"Bearer {device_token}"}
    if test_time is not None:
        headers["X-Test-Time"] = test_time
    data = {
        "server_guid": payload.server_guid.hex(),
        "gate_id": str(payload.gate_id),
    }
    if client_time is not None:
        data["client_time"] = client_time
    resp = client.post(
        f"{server_url}/api/checkin",
        data=data,
        files={"photo": (photo_name, photo_bytes, "application/octet-stream")},
        headers=headers,
    )
    resp.raise_for_status()
    return resp.json()
