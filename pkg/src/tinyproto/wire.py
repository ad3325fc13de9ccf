"""Binary frame encoding for every server/client exchange.

Layout (all integers little-endian):

    frame_type  u8      1=MASKS 2=UPLOAD 3=GLOBALS
    round       u32
    n_records   u32
    records     n_records x [class_id u32][count u32][count x f64]
    crc32       u32     over every preceding byte

Mask records carry the d bits as 0.0/1.0 values; prototype records carry the
payload vector.  decode(encode(frame)) is bit-exact, and decoding rejects
truncation, trailing bytes, unknown frame types, and checksum mismatches.
Parameter counts for traffic accounting are simply the summed record counts.
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

__all__ = [
    "FrameError",
    "FrameType",
    "Record",
    "Frame",
    "encode_frame",
    "decode_frame",
    "frame_param_count",
]

_HEADER = struct.Struct("<BII")
_RECORD_HEADER = struct.Struct("<II")
_CRC = struct.Struct("<I")
_U32_MAX = 0xFFFFFFFF


class FrameError(ValueError):
    """Malformed frame bytes or an unencodable frame."""


class FrameType(IntEnum):
    MASKS = 1
    UPLOAD = 2
    GLOBALS = 3


@dataclass(frozen=True)
class Record:
    """One class's vector inside a frame."""

    class_id: int
    values: np.ndarray

    def __post_init__(self):
        arr = np.ascontiguousarray(self.values, dtype=np.float64)
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)
        if self.class_id < 0 or self.class_id > _U32_MAX:
            raise FrameError(f"class_id {self.class_id} does not fit u32")


@dataclass(frozen=True)
class Frame:
    frame_type: FrameType
    round: int
    records: tuple[Record, ...]


def encode_frame(frame: Frame) -> bytes:
    if frame.round < 0 or frame.round > _U32_MAX:
        raise FrameError(f"round {frame.round} does not fit u32")
    parts = [_HEADER.pack(int(frame.frame_type), frame.round, len(frame.records))]
    for rec in frame.records:
        count = rec.values.shape[0]
        if count > _U32_MAX:
            raise FrameError("record too long for u32 count")
        parts.append(_RECORD_HEADER.pack(rec.class_id, count))
        parts.append(rec.values.astype("<f8", copy=False).tobytes())
    body = b"".join(parts)
    return body + _CRC.pack(zlib.crc32(body))


def decode_frame(data: bytes) -> Frame:
    if len(data) < _HEADER.size + _CRC.size:
        raise FrameError("frame truncated: shorter than header plus checksum")
    body, (crc,) = data[: -_CRC.size], _CRC.unpack(data[-_CRC.size :])
    if zlib.crc32(body) != crc:
        raise FrameError("crc mismatch")
    raw_type, round_no, n_records = _HEADER.unpack_from(body, 0)
    try:
        frame_type = FrameType(raw_type)
    except ValueError:
        raise FrameError(f"unknown frame type {raw_type}") from None
    offset = _HEADER.size
    records = []
    for _ in range(n_records):
        if offset + _RECORD_HEADER.size > len(body):
            raise FrameError("frame truncated inside a record header")
        class_id, count = _RECORD_HEADER.unpack_from(body, offset)
        offset += _RECORD_HEADER.size
        nbytes = count * 8
        if offset + nbytes > len(body):
            raise FrameError("frame truncated inside record values")
        values = np.frombuffer(body, dtype="<f8", count=count, offset=offset).copy()
        offset += nbytes
        records.append(Record(class_id, values))
    if offset != len(body):
        raise FrameError(f"{len(body) - offset} unexpected trailing bytes")
    return Frame(frame_type, round_no, tuple(records))


def frame_param_count(frame: Frame) -> int:
    """Number of transmitted values, the unit of all traffic accounting."""
    return sum(rec.values.shape[0] for rec in frame.records)
