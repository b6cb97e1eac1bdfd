"""Smartphone-centric gate access control at desk scale.

Subpackages cover the binary tag codec (:mod:`.ndef`), the chip simulator
(:mod:`.tag`), access policies (:mod:`.policy`), durable state
(:mod:`.storage`), the live event feed (:mod:`.feed`), the REST server
(:mod:`.server`) and the device simulator (:mod:`.sim`, :mod:`.scenario`,
:mod:`.cli`).
"""

from .ndef import (
    GateTagPayload,
    NdefMessage,
    NdefRecord,
    build_gate_tag_message,
    decode_message,
    encode_message,
    parse_gate_tag_message,
    payload_accounting,
)
from .policy import AccessDecision, AccessPolicy, DenyReason, Gate, User, decide_access
from .tag import TagChip, TagStandard, load_tag_image, new_tag, save_tag_image

__all__ = [
    "AccessDecision",
    "AccessPolicy",
    "DenyReason",
    "Gate",
    "GateTagPayload",
    "NdefMessage",
    "NdefRecord",
    "TagChip",
    "TagStandard",
    "User",
    "build_gate_tag_message",
    "decide_access",
    "decode_message",
    "encode_message",
    "load_tag_image",
    "new_tag",
    "parse_gate_tag_message",
    "payload_accounting",
    "save_tag_image",
]

__version__ = "0.1.0"
