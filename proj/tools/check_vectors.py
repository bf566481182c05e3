#!/usr/bin/env python3
"""Decode the protocol test vectors with a decoder written from protocol.md.

usage: check_vectors.py docs/test-vectors.json
"""
import json
import struct
import sys


def crc16(data: bytes) -> int:
    crc = 0xFFFF
    for b in data:
        crc ^= b << 8
        for _ in range(8):
            crc = ((crc << 1) ^ 0x1021) & 0xFFFF if crc & 0x8000 else (crc << 1) & 0xFFFF
    return crc


LAYOUTS = {
    0x00: ("HEARTBEAT", "<BBB", ["mode", "armed", "health"]),
    0x01: ("STATE", "<IiiHhhhhh", ["t_ms", "x_mm", "y_mm", "psi_cdeg", "u_mms", "v_mms",
                                   "r_cdps", "thr_l_permille", "thr_r_permille"]),
    0x02: ("OBSTACLE", "<I72H", None),
    0x10: ("SET_THRUST", "<hh", ["left", "right"]),
    0x11: ("SET_VEL_HEAD", "<HH", ["speed_mms", "heading_cdeg"]),
    0x12: ("SET_WAYPOINT", "<iiH", ["x_mm", "y_mm", "accept_radius_cm"]),
    0x13: ("SET_MODE", "<B", ["mode"]),
    0x14: ("ARM", "<B", ["flag"]),
    0x7F: ("ACK", "<BB", ["acked_id", "result"]),
}


def decode(frame: bytes):
    if not frame or frame[0] != 0xFA:
        return "bad magic"
    if len(frame) < 6:
        return "bad length"
    n = frame[1]
    if n > 250 or len(frame) != 6 + n:
        return "bad length"
    if crc16(frame[1:4 + n]) != struct.unpack_from("<H", frame, 4 + n)[0]:
        return "bad crc"
    seq, mid, payload = frame[2], frame[3], frame[4:4 + n]
    if mid not in LAYOUTS:
        return seq, {"type": "OPAQUE", "id": mid, "payload_hex": payload.hex()}
    name, fmt, fields = LAYOUTS[mid]
    if struct.calcsize(fmt) != n:
        return "bad length"
    values = struct.unpack(fmt, payload)
    if fields is None:
        return seq, {"type": name, "t_ms": values[0], "distances_cm": list(values[1:])}
    return seq, {"type": name, **dict(zip(fields, values))}


def main() -> int:
    vectors = json.load(open(sys.argv[1]))
    assert crc16(b"123456789") == 0x29B1
    assert crc16(b"") == 0xFFFF
    failures = 0
    for v in vectors:
        got = decode(bytes.fromhex(v["hex"]))
        want = v["error"] if "error" in v else (v["seq"], v["message"])
        if got != want:
            failures += 1
            print(f"FAIL {v['name']}: got {got}, want {want}")
    print(f"{len(vectors) - failures}/{len(vectors)} vectors agree")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
