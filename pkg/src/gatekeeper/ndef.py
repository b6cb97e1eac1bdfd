"""NDEF message codec and the three-record gate-tag layout.

One record on the wire (short form, no id field):

    Offset  Size  Field
    0       1     header: MB(0x80) ME(0x40) CF(0x20) SR(0x10) IL(0x08) | TNF(0x07)
    1       1     type length
    2       1|4   payload length (one byte if SR, else big-endian u32)
    3       0|1   id length (present only if IL)
    .       n     type bytes, then id bytes (if IL), then payload bytes

Records are concatenated back to back; exactly the first carries the
message-begin flag and exactly the last the message-end flag. The canonical
encoder emits the short form whenever the payload is under 256 bytes and an
id-length field only for records that actually carry an id. The decoder also
accepts the long form for small payloads. Chunked records (CF) are rejected
in both directions.

A provisioned gate tag holds exactly three records, in this order:

    1. well-known ``U`` record: one URI-prefix code byte followed by the
       rest of the universal link
    2. external ``gk:acl`` record: 16-byte server GUID + big-endian u32
       gate id (20 bytes total)
    3. external ``android.com:pkg`` record (Android Application Record):
       the ASCII application package name
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Iterable, Optional

FLAG_MB = 0x80  # message begin
FLAG_ME = 0x40  # message end
FLAG_CF = 0x20  # chunk flag (rejected)
FLAG_SR = 0x10  # short record
FLAG_IL = 0x08  # id length present
TNF_MASK = 0x07

TNF_EMPTY = 0
TNF_WELL_KNOWN = 1
TNF_MIME = 2
TNF_ABSOLUTE_URI = 3
TNF_EXTERNAL = 4
TNF_UNKNOWN = 5
TNF_UNCHANGED = 6

URI_RECORD_TYPE = b"U"
ACL_RECORD_TYPE = b"gk:acl"
AAR_RECORD_TYPE = b"android.com:pkg"

#: Standard URI abbreviation table; the first payload byte of a ``U`` record
#: selects a prefix by index. Index 0 means "no abbreviation" and is never
#: emitted by the canonical encoder.
URI_PREFIXES = (
    "",
    "http://www.",
    "https://www.",
    "http://",
    "https://",
    "tel:",
    "mailto:",
    "ftp://anonymous:anonymous@",
    "ftp://ftp.",
    "ftps://",
    "sftp://",
    "smb://",
    "nfs://",
    "ftp://",
    "dav://",
    "news:",
    "telnet://",
    "imap:",
    "rtsp://",
    "urn:",
    "pop:",
    "sip:",
    "sips:",
    "tftp:",
    "btspp://",
    "btl2cap://",
    "btgoep://",
    "tcpobex://",
    "irdaobex://",
    "file://",
    "urn:epc:id:",
    "urn:epc:tag:",
    "urn:epc:pat:",
    "urn:epc:raw:",
    "urn:epc:",
    "urn:nfc:",
)


class NdefError(ValueError):
    """Base for every codec violation."""


class EmptyMessage(NdefError):
    """Encoding a message with zero records."""


class OversizePayload(NdefError):
    """Record payload does not fit the 32-bit length field."""


class Truncated(NdefError):
    """Input ends before the message completes."""


class FlagViolation(NdefError):
    """Header flags inconsistent with record position or content."""


class TrailingBytes(NdefError):
    """Data continues after the end record."""


class InvalidPayload(NdefError):
    """A gate-tag field breaks an invariant."""


class MissingRecord(NdefError):
    """A required gate-tag record is absent."""


class BadLength(NdefError):
    """A gate-tag record payload has the wrong size."""


@dataclass(frozen=True)
class NdefRecord:
    """A single record: 3-bit TNF, type, payload and optional id.

    Position flags (begin/end) and the short-record / id-length flags are
    derived at encode time, never stored.
    """

    tnf: int
    type_bytes: bytes = b""
    payload: bytes = b""
    id_bytes: Optional[bytes] = None

    def __post_init__(self) -> None:
        if not 0 <= self.tnf <= 6:
            raise FlagViolation(f"tnf must be in 0..6, got {self.tnf}")
        if self.tnf == TNF_EMPTY and (self.type_bytes or self.payload or self.id_bytes):
            raise FlagViolation("an empty record (tnf=0) must have no type, id or payload")
        if len(self.type_bytes) > 255:
            raise InvalidPayload("record type longer than 255 bytes")
        if self.id_bytes is not None and len(self.id_bytes) > 255:
            raise InvalidPayload("record id longer than 255 bytes")

    @property
    def short_record(self) -> bool:
        """True when the canonical encoding uses the one-byte length form."""
        return len(self.payload) < 256

    @property
    def id_length_present(self) -> bool:
        return self.id_bytes is not None

    @property
    def encoded_size(self) -> int:
        """Canonical on-wire size of this record including its header."""
        size = 2 + (1 if self.short_record else 4)
        size += len(self.type_bytes) + len(self.payload)
        if self.id_bytes is not None:
            size += 1 + len(self.id_bytes)
        return size


@dataclass(frozen=True, init=False)
class NdefMessage:
    """An ordered sequence of records; must be non-empty to encode."""

    records: tuple[NdefRecord, ...]

    def __init__(self, records: Iterable[NdefRecord]) -> None:
        object.__setattr__(self, "records", tuple(records))


def encode_message(msg: NdefMessage) -> bytes:
    """Serialize to canonical bytes; equal inputs give identical output."""
    records = msg.records
    if not records:
        raise EmptyMessage("a message must contain at least one record")
    out = bytearray()
    last = len(records) - 1
    for index, rec in enumerate(records):
        payload_len = len(rec.payload)
        if payload_len >= 2**32:
            raise OversizePayload(f"payload of {payload_len} bytes does not fit u32")
        header = rec.tnf
        if index == 0:
            header |= FLAG_MB
        if index == last:
            header |= FLAG_ME
        if payload_len < 256:
            header |= FLAG_SR
        if rec.id_bytes is not None:
            header |= FLAG_IL
        out.append(header)
        out.append(len(rec.type_bytes))
        if payload_len < 256:
            out.append(payload_len)
        else:
            out += struct.pack(">I", payload_len)
        if rec.id_bytes is not None:
            out.append(len(rec.id_bytes))
        out += rec.type_bytes
        if rec.id_bytes is not None:
            out += rec.id_bytes
        out += rec.payload
    return bytes(out)


def decode_message(data: bytes) -> NdefMessage:
    """Parse bytes back into records; inverse of :func:`encode_message`.

    Accepts the long length form for small payloads. Raises Truncated when
    the input ends early (including at a record boundary with no end flag),
    FlagViolation for misplaced begin/end flags, chunked or reserved
    headers, and TrailingBytes for data after the end record.
    """
    records: list[NdefRecord] = []
    pos, end = 0, len(data)
    while True:
        if pos >= end:
            raise Truncated("input ends before a record carrying the end flag")
        header = data[pos]
        pos += 1
        tnf = header & TNF_MASK
        if header & FLAG_CF:
            raise FlagViolation("chunked records are not supported")
        if tnf == 7:
            raise FlagViolation("tnf 7 is reserved")
        if bool(header & FLAG_MB) != (not records):
            raise FlagViolation("message-begin flag must be set exactly on the first record")
        if pos >= end:
            raise Truncated("input ends inside a record header")
        type_len = data[pos]
        pos += 1
        if header & FLAG_SR:
            if pos >= end:
                raise Truncated("input ends inside a record header")
            payload_len = data[pos]
            pos += 1
        else:
            if pos + 4 > end:
                raise Truncated("input ends inside a record header")
            payload_len = struct.unpack_from(">I", data, pos)[0]
            pos += 4
        id_len = 0
        if header & FLAG_IL:
            if pos >= end:
                raise Truncated("input ends inside a record header")
            id_len = data[pos]
            pos += 1
        if pos + type_len + id_len + payload_len > end:
            raise Truncated("record body exceeds the available bytes")
        type_bytes = bytes(data[pos : pos + type_len])
        pos += type_len
        id_bytes = bytes(data[pos : pos + id_len]) if header & FLAG_IL else None
        pos += id_len
        payload = bytes(data[pos : pos + payload_len])
        pos += payload_len
        records.append(NdefRecord(tnf, type_bytes, payload, id_bytes))
        if header & FLAG_ME:
            if pos != end:
                raise TrailingBytes(f"{end - pos} bytes after the end record")
            return NdefMessage(records)


def abbreviate_uri(uri: str) -> tuple[int, str]:
    """Split a URI into (prefix code, remainder), longest prefix wins.

    Raises InvalidPayload when no non-empty table prefix matches.
    """
    best = 0
    for code, prefix in enumerate(URI_PREFIXES):
        if code and uri.startswith(prefix) and len(prefix) > len(URI_PREFIXES[best]):
            best = code
    if best == 0:
        raise InvalidPayload(f"no standard URI prefix matches {uri!r}")
    return best, uri[len(URI_PREFIXES[best]) :]


def expand_uri(payload: bytes) -> str:
    """Rebuild the full URI from a ``U`` record payload."""
    if not payload:
        raise BadLength("uri record payload is empty")
    code = payload[0]
    if code >= len(URI_PREFIXES):
        raise InvalidPayload(f"unknown uri prefix code {code:#04x}")
    try:
        remainder = payload[1:].decode("utf-8")
    except UnicodeDecodeError:
        raise InvalidPayload("uri remainder is not valid UTF-8") from None
    return URI_PREFIXES[code] + remainder


@dataclass(frozen=True)
class GateTagPayload:
    """The four logical fields written to a gate tag."""

    server_guid: bytes
    gate_id: int
    android_app_id: str
    universal_link: str

    def validate(self) -> None:
        if len(self.server_guid) != 16:
            raise InvalidPayload(f"server guid must be exactly 16 bytes, got {len(self.server_guid)}")
        if not 0 <= self.gate_id < 2**32:
            raise InvalidPayload(f"gate id {self.gate_id} does not fit an unsigned 32-bit integer")
        if not self.android_app_id:
            raise InvalidPayload("android app id must be non-empty")
        try:
            app_bytes = self.android_app_id.encode("ascii")
        except UnicodeEncodeError:
            raise InvalidPayload("android app id must be ASCII") from None
        if len(app_bytes) > 255:
            raise InvalidPayload("android app id longer than 255 bytes")
        abbreviate_uri(self.universal_link)


def build_gate_tag_message(payload: GateTagPayload) -> NdefMessage:
    """Produce the canonical three-record tag message for one gate."""
    payload.validate()
    code, remainder = abbreviate_uri(payload.universal_link)
    uri = NdefRecord(
        TNF_WELL_KNOWN, URI_RECORD_TYPE, bytes([code]) + remainder.encode("utf-8")
    )
    acl = NdefRecord(
        TNF_EXTERNAL,
        ACL_RECORD_TYPE,
        payload.server_guid + struct.pack(">I", payload.gate_id),
    )
    aar = NdefRecord(TNF_EXTERNAL, AAR_RECORD_TYPE, payload.android_app_id.encode("ascii"))
    return NdefMessage([uri, acl, aar])


def parse_gate_tag_message(msg: NdefMessage) -> GateTagPayload:
    """Inverse of :func:`build_gate_tag_message`; record order does not matter."""

    def first(tnf: int, record_type: bytes) -> Optional[NdefRecord]:
        for rec in msg.records:
            if rec.tnf == tnf and rec.type_bytes == record_type:
                return rec
        return None

    acl = first(TNF_EXTERNAL, ACL_RECORD_TYPE)
    if acl is None:
        raise MissingRecord("no gk:acl record in message")
    if len(acl.payload) != 20:
        raise BadLength(f"gk:acl payload must be 20 bytes, got {len(acl.payload)}")
    uri = first(TNF_WELL_KNOWN, URI_RECORD_TYPE)
    if uri is None:
        raise MissingRecord("no uri record in message")
    aar = first(TNF_EXTERNAL, AAR_RECORD_TYPE)
    if aar is None:
        raise MissingRecord("no android application record in message")
    server_guid = acl.payload[:16]
    gate_id = struct.unpack(">I", acl.payload[16:])[0]
    try:
        app_id = aar.payload.decode("ascii")
    except UnicodeDecodeError:
        raise InvalidPayload("android app id is not ASCII") from None
    return GateTagPayload(server_guid, gate_id, app_id, expand_uri(uri.payload))


@dataclass(frozen=True)
class PayloadAccounting:
    """Logical byte accounting for one gate tag.

    The identity fields count raw (16-byte GUID, 4-byte gate id); the two
    launch records count fully encoded, header included. The physical
    message is larger because the identity fields travel inside the encoded
    ``gk:acl`` record.
    """

    server_id_bytes: int
    gate_id_bytes: int
    aar_bytes: int
    universal_link_bytes: int
    total_bytes: int


def payload_accounting(payload: GateTagPayload) -> PayloadAccounting:
    """Compute the logical per-field byte budget of a gate tag."""
    msg = build_gate_tag_message(payload)
    uri, _acl, aar = msg.records
    return PayloadAccounting(
        server_id_bytes=16,
        gate_id_bytes=4,
        aar_bytes=aar.encoded_size,
        universal_link_bytes=uri.encoded_size,
        total_bytes=16 + 4 + aar.encoded_size + uri.encoded_size,
    )


def hexdump(data: bytes, width: int = 16) -> str:
    """xxd-style dump: offset column, two-byte hex groups, ASCII gutter."""
    lines = []
    group_width = width // 2 * 5 - 1
    for offset in range(0, len(data), width):
        chunk = data[offset : offset + width]
        pairs = " ".join(chunk[i : i + 2].hex() for i in range(0, len(chunk), 2))
        text = "".join(chr(b) if 0x20 <= b < 0x7F else "." for b in chunk)
        lines.append(f"{offset:08x}: {pairs.ljust(group_width)}  {text}")
    return "\n".join(lines)
