"""Length-delimited record files with checksummed framing and a tag-value
payload codec for labeled example tensors.

Framing per record: an 8-byte little-endian payload length, the masked
CRC-32C of those 8 length bytes, the payload, and the masked CRC-32C of the
payload. Both checksums are validated on read.

A payload is a sequence of entries (field 1, length-delimited). Each entry
carries a key string (field 1) and exactly one data field: packed float32
little-endian (field 2), packed varint int64 (field 3), or raw bytes treated
as a uint8 list (field 4). Unknown keys round-trip unchanged because the
value encoding is self-describing; unknown entry fields are preserved as raw
bytes. Encoding is canonical (key, then data, then preserved extras), so a
given logical record always serializes to the same bytes.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import BinaryIO, Iterable, Iterator

import numpy as np

CRC_MASK_DELTA = 0xA282EAD8
_MASK32 = 0xFFFFFFFF
_MASK64 = 0xFFFFFFFFFFFFFFFF

CHANNEL_KEY_PREFIX = "brightness_temperature_"
KEY_INDIVIDUAL_MASKS = "human_individual_masks"
KEY_PIXEL_MASKS = "human_pixel_masks"
KEY_TIMESTAMP = "timestamp"
KEY_CENTER_LAT = "center_lat"
KEY_CENTER_LON = "center_lon"
KEY_FRAME_TIMESTAMPS = "frame_timestamps"

MASK_SIZE = 256


class RecordStreamError(Exception):
    """Base class for record-file errors."""


class CorruptRecordError(RecordStreamError):
    """A checksum failed. Carries the stream byte offset of the bad record
    and its zero-based index."""

    def __init__(self, message: str, offset: int, record_index: int) -> None:
        super().__init__(f"{message} (record {record_index} at byte offset {offset})")
        self.offset = offset
        self.record_index = record_index


class TruncatedRecordError(RecordStreamError):
    """The stream ended inside a record."""

    def __init__(self, message: str, offset: int, record_index: int) -> None:
        super().__init__(f"{message} (record {record_index} at byte offset {offset})")
        self.offset = offset
        self.record_index = record_index


class MalformedPayloadError(RecordStreamError):
    """A payload does not follow the tag-value wire format."""


def _make_crc32c_table() -> tuple[int, ...]:
    poly = 0x82F63B78  # Castagnoli, reflected
    table = []
    for i in range(256):
        c = i
        for _ in range(8):
            c = (c >> 1) ^ poly if c & 1 else c >> 1
        table.append(c)
    return tuple(table)


_CRC_TABLE = _make_crc32c_table()


def crc32c(data: bytes, crc: int = 0) -> int:
    """CRC-32C (Castagnoli) over data, optionally continuing a running crc."""
    table = _CRC_TABLE
    c = crc ^ _MASK32
    for b in data:
        c = (c >> 8) ^ table[(c ^ b) & 0xFF]
    return c ^ _MASK32


def masked_crc32c(data: bytes) -> int:
    """Rotated-and-offset CRC used in the framing, so that checksums of data
    that itself contains checksums stay well distributed."""
    c = crc32c(data)
    return (((c >> 15) | (c << 17)) + CRC_MASK_DELTA) & _MASK32


def write_framed(fh: BinaryIO, payloads: Iterable[bytes]) -> int:
    """Append framed records; returns the number written."""
    count = 0
    for payload in payloads:
        length = struct.pack("<Q", len(payload))
        fh.write(length)
        fh.write(struct.pack("<I", masked_crc32c(length)))
        fh.write(payload)
        fh.write(struct.pack("<I", masked_crc32c(payload)))
        count += 1
    return count


def read_framed(fh: BinaryIO) -> Iterator[bytes]:
    """Yield payloads from a framed stream, validating both checksums."""
    index = 0
    offset = 0
    while True:
        head = fh.read(12)
        if not head:
            return
        if len(head) < 12:
            raise TruncatedRecordError("stream ended inside record header", offset, index)
        length_bytes = head[:8]
        (length_crc,) = struct.unpack("<I", head[8:12])
        if masked_crc32c(length_bytes) != length_crc:
            raise CorruptRecordError("length checksum mismatch", offset, index)
        (length,) = struct.unpack("<Q", length_bytes)
        body = fh.read(length + 4)
        if len(body) < length + 4:
            raise TruncatedRecordError("stream ended inside record body", offset, index)
        payload = body[:length]
        (payload_crc,) = struct.unpack("<I", body[length:])
        if masked_crc32c(payload) != payload_crc:
            raise CorruptRecordError("payload checksum mismatch", offset, index)
        yield payload
        offset += 12 + length + 4
        index += 1


def _encode_varint(value: int) -> bytes:
    if value < 0:
        raise ValueError("varint encodes unsigned values")
    out = bytearray()
    while True:
        bits = value & 0x7F
        value >>= 7
        if value:
            out.append(bits | 0x80)
        else:
            out.append(bits)
            return bytes(out)


def _decode_varint(buf: bytes, pos: int) -> tuple[int, int]:
    result = 0
    shift = 0
    while True:
        if pos >= len(buf):
            raise MalformedPayloadError("varint runs past end of buffer")
        b = buf[pos]
        pos += 1
        result |= (b & 0x7F) << shift
        if not b & 0x80:
            if result > _MASK64:
                raise MalformedPayloadError("varint exceeds 64 bits")
            return result, pos
        shift += 7
        if shift >= 64:
            raise MalformedPayloadError("varint exceeds 64 bits")


def _encode_int64_list(values: np.ndarray) -> bytes:
    out = bytearray()
    for v in values.tolist():
        out += _encode_varint(int(v) & _MASK64)
    return bytes(out)


def _decode_int64_list(buf: bytes) -> np.ndarray:
    values = []
    pos = 0
    while pos < len(buf):
        raw, pos = _decode_varint(buf, pos)
        values.append(raw - (1 << 64) if raw >= (1 << 63) else raw)
    return np.array(values, dtype=np.int64)


def _tag(field_number: int, wire_type: int) -> bytes:
    return _encode_varint((field_number << 3) | wire_type)


_WIRE_LEN = 2
_WIRE_VARINT = 0
_WIRE_I64 = 1
_WIRE_I32 = 5


def _length_delimited(field_number: int, body: bytes) -> bytes:
    return _tag(field_number, _WIRE_LEN) + _encode_varint(len(body)) + body


def encode_entry(key: str, value: np.ndarray, extras: bytes = b"") -> bytes:
    key_bytes = key.encode("utf-8")
    body = _length_delimited(1, key_bytes)
    value = np.asarray(value)
    if value.ndim != 1:
        raise ValueError(f"entry values must be 1-D, got shape {value.shape}")
    if value.dtype.kind == "f":
        body += _length_delimited(2, value.astype("<f4").tobytes())
    elif value.dtype == np.uint8:
        body += _length_delimited(4, value.tobytes())
    elif value.dtype.kind in "iu":
        body += _length_delimited(3, _encode_int64_list(value.astype(np.int64)))
    else:
        raise ValueError(f"unsupported entry dtype {value.dtype}")
    body += extras
    return _length_delimited(1, body)


def encode_payload(
    entries: dict[str, np.ndarray], extras: dict[str, bytes] | None = None
) -> bytes:
    """Serialize an ordered mapping of key -> 1-D array to payload bytes."""
    out = bytearray()
    for key, value in entries.items():
        out += encode_entry(key, value, (extras or {}).get(key, b""))
    return bytes(out)


def _decode_entry(buf: bytes) -> tuple[str, np.ndarray, bytes]:
    pos = 0
    key: str | None = None
    value: np.ndarray | None = None
    extras = bytearray()
    while pos < len(buf):
        start = pos
        tag, pos = _decode_varint(buf, pos)
        field_number = tag >> 3
        wire_type = tag & 7
        if wire_type == _WIRE_LEN:
            size, pos = _decode_varint(buf, pos)
            if pos + size > len(buf):
                raise MalformedPayloadError("entry field runs past end of entry")
            body = buf[pos : pos + size]
            pos += size
        elif wire_type == _WIRE_VARINT:
            _, pos = _decode_varint(buf, pos)
            body = None
        elif wire_type == _WIRE_I64:
            if pos + 8 > len(buf):
                raise MalformedPayloadError("entry field runs past end of entry")
            body = None
            pos += 8
        elif wire_type == _WIRE_I32:
            if pos + 4 > len(buf):
                raise MalformedPayloadError("entry field runs past end of entry")
            body = None
            pos += 4
        else:
            raise MalformedPayloadError(f"unsupported wire type {wire_type}")

        if field_number == 1 and wire_type == _WIRE_LEN:
            if key is not None:
                raise MalformedPayloadError("entry has multiple keys")
            try:
                key = body.decode("utf-8")  # type: ignore[union-attr]
            except UnicodeDecodeError as exc:
                raise MalformedPayloadError("entry key is not valid UTF-8") from exc
        elif field_number == 2 and wire_type == _WIRE_LEN:
            if value is not None:
                raise MalformedPayloadError("entry has multiple data fields")
            if len(body) % 4:  # type: ignore[arg-type]
                raise MalformedPayloadError("float list length not a multiple of 4")
            value = np.frombuffer(body, dtype="<f4").copy()
        elif field_number == 3 and wire_type == _WIRE_LEN:
            if value is not None:
                raise MalformedPayloadError("entry has multiple data fields")
            value = _decode_int64_list(body)  # type: ignore[arg-type]
        elif field_number == 4 and wire_type == _WIRE_LEN:
            if value is not None:
                raise MalformedPayloadError("entry has multiple data fields")
            value = np.frombuffer(body, dtype=np.uint8).copy()
        else:
            extras += buf[start:pos]
    if key is None:
        raise MalformedPayloadError("entry has no key")
    if value is None:
        raise MalformedPayloadError(f"entry {key!r} has no data field")
    return key, value, bytes(extras)


def decode_payload(buf: bytes) -> tuple[dict[str, np.ndarray], dict[str, bytes]]:
    """Parse payload bytes to (ordered key -> array mapping, key -> raw
    preserved extras)."""
    entries: dict[str, np.ndarray] = {}
    extras: dict[str, bytes] = {}
    pos = 0
    while pos < len(buf):
        tag, pos = _decode_varint(buf, pos)
        if tag != (1 << 3 | _WIRE_LEN):
            raise MalformedPayloadError(
                f"expected an entry field at byte {pos}, got tag {tag}"
            )
        size, pos = _decode_varint(buf, pos)
        if pos + size > len(buf):
            raise MalformedPayloadError("entry runs past end of payload")
        key, value, extra = _decode_entry(buf[pos : pos + size])
        pos += size
        if key in entries:
            raise MalformedPayloadError(f"duplicate entry key {key!r}")
        entries[key] = value
        if extra:
            extras[key] = extra
    return entries, extras


@dataclass
class ExampleRecord:
    """One labeled example: per-band imagery, per-labeler masks, the
    aggregated mask, and scene metadata."""

    channels: dict[str, np.ndarray]
    labeler_masks: np.ndarray
    aggregated_mask: np.ndarray
    timestamp: int
    center_lat: float
    center_lon: float
    frame_timestamps: tuple[int, ...] | None = None
    extras: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for key, arr in self.channels.items():
            if not key.startswith(CHANNEL_KEY_PREFIX):
                raise ValueError(f"channel key {key!r} must start with {CHANNEL_KEY_PREFIX!r}")
            arr = np.asarray(arr, dtype=np.float32)
            if arr.shape != (MASK_SIZE, MASK_SIZE):
                raise ValueError(f"channel {key!r} must be {MASK_SIZE}x{MASK_SIZE}")
            self.channels[key] = arr
        self.labeler_masks = np.asarray(self.labeler_masks, dtype=np.uint8)
        if self.labeler_masks.ndim != 3 or self.labeler_masks.shape[1:] != (MASK_SIZE, MASK_SIZE):
            raise ValueError(
                f"labeler masks must be (n, {MASK_SIZE}, {MASK_SIZE}), "
                f"got {self.labeler_masks.shape}"
            )
        self.aggregated_mask = np.asarray(self.aggregated_mask, dtype=np.uint8)
        if self.aggregated_mask.shape != (MASK_SIZE, MASK_SIZE):
            raise ValueError(f"aggregated mask must be {MASK_SIZE}x{MASK_SIZE}")
        if self.aggregated_mask.max(initial=0) > 1 or self.labeler_masks.max(initial=0) > 1:
            raise ValueError("masks must be binary (values 0 or 1)")

    def to_payload(self) -> bytes:
        entries: dict[str, np.ndarray] = {}
        for key, arr in self.channels.items():
            entries[key] = arr.astype("<f4").ravel()
        entries[KEY_INDIVIDUAL_MASKS] = self.labeler_masks.ravel()
        entries[KEY_PIXEL_MASKS] = self.aggregated_mask.ravel()
        entries[KEY_TIMESTAMP] = np.array([self.timestamp], dtype=np.int64)
        entries[KEY_CENTER_LAT] = np.array([self.center_lat], dtype=np.float32)
        entries[KEY_CENTER_LON] = np.array([self.center_lon], dtype=np.float32)
        if self.frame_timestamps is not None:
            entries[KEY_FRAME_TIMESTAMPS] = np.array(self.frame_timestamps, dtype=np.int64)
        for key, arr in self.extras.items():
            entries[key] = np.asarray(arr)
        return encode_payload(entries)

    @classmethod
    def from_payload(cls, payload: bytes) -> "ExampleRecord":
        entries, _ = decode_payload(payload)
        required = [KEY_INDIVIDUAL_MASKS, KEY_PIXEL_MASKS, KEY_TIMESTAMP,
                    KEY_CENTER_LAT, KEY_CENTER_LON]
        missing = [k for k in required if k not in entries]
        if missing:
            raise MalformedPayloadError(f"record payload missing keys: {missing}")
        channels: dict[str, np.ndarray] = {}
        extras: dict[str, np.ndarray] = {}
        px = MASK_SIZE * MASK_SIZE
        for key, value in entries.items():
            if key.startswith(CHANNEL_KEY_PREFIX):
                if value.size != px:
                    raise MalformedPayloadError(
                        f"channel {key!r} has {value.size} values, expected {px}"
                    )
                channels[key] = value.reshape(MASK_SIZE, MASK_SIZE)
            elif key not in required and key != KEY_FRAME_TIMESTAMPS:
                extras[key] = value
        individual = entries[KEY_INDIVIDUAL_MASKS]
        if individual.size % px:
            raise MalformedPayloadError(
                f"individual masks size {individual.size} is not a multiple of {px}"
            )
        frame_ts = entries.get(KEY_FRAME_TIMESTAMPS)
        return cls(
            channels=channels,
            labeler_masks=individual.reshape(-1, MASK_SIZE, MASK_SIZE),
            aggregated_mask=entries[KEY_PIXEL_MASKS].reshape(MASK_SIZE, MASK_SIZE),
            timestamp=int(entries[KEY_TIMESTAMP][0]),
            center_lat=float(entries[KEY_CENTER_LAT][0]),
            center_lon=float(entries[KEY_CENTER_LON][0]),
            frame_timestamps=None if frame_ts is None else tuple(int(t) for t in frame_ts),
            extras=extras,
        )


def write_records(path: str | Path | BinaryIO, records: Iterable[ExampleRecord]) -> int:
    if hasattr(path, "write"):
        return write_framed(path, (r.to_payload() for r in records))  # type: ignore[arg-type]
    with open(path, "wb") as fh:
        return write_framed(fh, (r.to_payload() for r in records))


def read_records(path: str | Path | BinaryIO) -> Iterator[ExampleRecord]:
    if hasattr(path, "read"):
        yield from (ExampleRecord.from_payload(p) for p in read_framed(path))  # type: ignore[arg-type]
        return
    with open(path, "rb") as fh:
        yield from (ExampleRecord.from_payload(p) for p in read_framed(fh))
