#!/usr/bin/env python3
"""Poke at the binary frame format used for every exchange.

Frames carry length-prefixed per-class records (u32 class id, u32 count,
count float64 values) behind a 9-byte header, with a crc32 trailer.  The
simulator encodes and decodes real bytes on every exchange, so its traffic
numbers are measurements, not estimates.
"""
import numpy as np

from tinyproto import Frame, FrameError, FrameType, Record, decode_frame, encode_frame, frame_param_count

frame = Frame(
    frame_type=FrameType.UPLOAD,
    round=3,
    records=(
        Record(class_id=0, values=np.array([4.0, 6.0])),
        Record(class_id=2, values=np.array([1.5, -0.5])),
    ),
)
data = encode_frame(frame)
print(f"encoded {frame_param_count(frame)} values into {len(data)} bytes:")
print(" ", data.hex(" "))

back = decode_frame(data)
print("decoded:", back.frame_type.name, "round", back.round)
for rec in back.records:
    print(f"  class {rec.class_id}: {rec.values}")

# flip one payload byte: the crc catches it
corrupt = bytearray(data)
corrupt[12] ^= 0x01
try:
    decode_frame(bytes(corrupt))
except FrameError as exc:
    print("corrupted frame rejected:", exc)

# chop the tail off: length checks catch it
try:
    decode_frame(data[: len(data) // 2])
except FrameError as exc:
    print("truncated frame rejected:", exc)
