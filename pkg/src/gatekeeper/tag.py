"""NTAG213/NTAG216 chip simulator.

Models the parts of the chip the access system relies on: bounded user
memory, a 7-byte serial number, a 4-byte write password and the
irreversible read-only switch. Chips are immutable values; every mutation
returns a new chip, so distinct tags are independent and a single tag has
single-writer semantics.

Messages sit in memory inside a fixed 4-byte frame that counts against
capacity:

    0x03, big-endian u16 message length, message bytes, terminator 0xFE

Tag image file format ``GKTAG1``:

    Offset  Size  Field
    0       6     magic b"GKTAG1"
    6       1     standard code (0x13 = NTAG213, 0x16 = NTAG216)
    7       7     uid
    14      1     flags: bit0 read-only, bit1 password present
    15      0|4   password (present per flag bit1)
    .       2     memory length, big-endian
    .       n     memory bytes
"""

from __future__ import annotations

import enum
import secrets
import struct
from dataclasses import dataclass, replace
from random import Random
from typing import Optional


class TagError(Exception):
    """Base for chip and image failures."""


class ReadOnly(TagError):
    """Mutation attempted on a locked tag."""


class AuthFailed(TagError):
    """Password missing or mismatched."""


class CapacityExceeded(TagError):
    """Framed message does not fit user memory."""


class NoMessage(TagError):
    """Memory holds no well-formed message."""


class BadMagic(TagError):
    """Input is not a GKTAG1 image."""


class CorruptImage(TagError):
    """GKTAG1 image structure is damaged."""


TLV_NDEF = 0x03
TLV_TERMINATOR = 0xFE
TLV_OVERHEAD = 4  # type byte + u16 length + terminator

IMAGE_MAGIC = b"GKTAG1"
_FLAG_READ_ONLY = 0x01
_FLAG_HAS_PASSWORD = 0x02


class TagStandard(enum.Enum):
    """Supported chip models; the enum value doubles as the image code."""

    NTAG213 = 0x13
    NTAG216 = 0x16

    @property
    def capacity_bytes(self) -> int:
        return _CAPACITY[self]


_CAPACITY = {TagStandard.NTAG213: 144, TagStandard.NTAG216: 888}


@dataclass(frozen=True)
class TagChip:
    """One simulated chip; state changes produce new values."""

    uid: bytes
    standard: TagStandard
    memory: bytes = b""
    password: Optional[bytes] = None
    read_only: bool = False

    def __post_init__(self) -> None:
        if len(self.uid) != 7:
            raise ValueError("uid must be exactly 7 bytes")
        if self.password is not None and len(self.password) != 4:
            raise ValueError("password must be exactly 4 bytes")
        if len(self.memory) > self.standard.capacity_bytes:
            raise CapacityExceeded(
                f"{len(self.memory)} bytes exceed the {self.standard.capacity_bytes}-byte capacity"
            )

    def _check_password(self, password: Optional[bytes]) -> None:
        if self.password is not None and password != self.password:
            raise AuthFailed("tag password required")

    def write_ndef(self, msg_bytes: bytes, password: Optional[bytes] = None) -> TagChip:
        """Replace memory with the framed message; needs the password if set."""
        if self.read_only:
            raise ReadOnly("tag is locked read-only")
        self._check_password(password)
        if len(msg_bytes) > 0xFFFF:
            raise CapacityExceeded("message length exceeds the 16-bit framing field")
        framed = (
            bytes([TLV_NDEF])
            + struct.pack(">H", len(msg_bytes))
            + bytes(msg_bytes)
            + bytes([TLV_TERMINATOR])
        )
        if len(framed) > self.standard.capacity_bytes:
            raise CapacityExceeded(
                f"{len(framed)} bytes exceed the {self.standard.capacity_bytes}-byte capacity"
            )
        return replace(self, memory=framed)

    def read_ndef(self) -> bytes:
        """Return the framed message bytes; never requires the password."""
        mem = self.memory
        if len(mem) < TLV_OVERHEAD or mem[0] != TLV_NDEF:
            raise NoMessage("no message framing in memory")
        length = struct.unpack_from(">H", mem, 1)[0]
        if len(mem) != 3 + length + 1 or mem[3 + length] != TLV_TERMINATOR:
            raise NoMessage("message framing is damaged")
        return mem[3 : 3 + length]

    def set_password(self, new_password: bytes, old_password: Optional[bytes] = None) -> TagChip:
        """Install or change the 4-byte write password."""
        if self.read_only:
            raise ReadOnly("tag is locked read-only")
        if len(new_password) != 4:
            raise ValueError("password must be exactly 4 bytes")
        if self.password is not None and old_password != self.password:
            raise AuthFailed("old password mismatch")
        return replace(self, password=bytes(new_password))

    def lock_readonly(self, password: Optional[bytes] = None) -> TagChip:
        """Flip the irreversible read-only switch; a second lock is a no-op."""
        if self.read_only:
            return self
        self._check_password(password)
        return replace(self, read_only=True)


def new_tag(standard: TagStandard, seed: Optional[int] = None) -> TagChip:
    """Fresh empty chip; uid starts with the NXP manufacturer byte 0x04."""
    body = Random(seed).randbytes(6) if seed is not None else secrets.token_bytes(6)
    return TagChip(uid=b"\x04" + body, standard=standard)


def save_tag_image(tag: TagChip) -> bytes:
    """Serialize a chip to the self-describing GKTAG1 image."""
    flags = 0
    if tag.read_only:
        flags |= _FLAG_READ_ONLY
    if tag.password is not None:
        flags |= _FLAG_HAS_PASSWORD
    out = bytearray(IMAGE_MAGIC)
    out.append(tag.standard.value)
    out += tag.uid
    out.append(flags)
    if tag.password is not None:
        out += tag.password
    out += struct.pack(">H", len(tag.memory))
    out += tag.memory
    return bytes(out)


def load_tag_image(data: bytes) -> TagChip:
    """Parse a GKTAG1 image; exact inverse of :func:`save_tag_image`."""
    if not data.startswith(IMAGE_MAGIC):
        raise BadMagic("not a GKTAG1 image")
    pos = len(IMAGE_MAGIC)

    def take(count: int, what: str) -> bytes:
        nonlocal pos
        if pos + count > len(data):
            raise CorruptImage(f"image ends inside {what}")
        chunk = bytes(data[pos : pos + count])
        pos += count
        return chunk

    code = take(1, "standard code")[0]
    try:
        standard = TagStandard(code)
    except ValueError:
        raise CorruptImage(f"unknown standard code {code:#04x}") from None
    uid = take(7, "uid")
    flags = take(1, "flags")[0]
    if flags & ~(_FLAG_READ_ONLY | _FLAG_HAS_PASSWORD):
        raise CorruptImage(f"unknown flag bits {flags:#04x}")
    password = take(4, "password") if flags & _FLAG_HAS_PASSWORD else None
    mem_len = struct.unpack(">H", take(2, "memory length"))[0]
    memory = take(mem_len, "memory")
    if pos != len(data):
        raise CorruptImage(f"{len(data) - pos} trailing bytes after memory")
    if mem_len > standard.capacity_bytes:
        raise CorruptImage("memory exceeds the standard's capacity")
    return TagChip(
        uid=uid,
        standard=standard,
        memory=memory,
        password=password,
        read_only=bool(flags & _FLAG_READ_ONLY),
    )
