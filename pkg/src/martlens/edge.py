"""Edge capture pipeline: camera frames to feature rows on the wire.

Frames travel as binary PGM (P5) with the frame id and timestamp in the
header comment. Packets are length-prefixed JSON envelopes with a CRC32 of
the payload, so a receiver can ack, reject, or deduplicate each one
independently. Delivery is at-least-once: the sender retries anything not
acked, the receiver drops repeats by (stream_id, seq).
"""

from __future__ import annotations

import base64
import json
import struct
import time
import zlib
from dataclasses import dataclass
from typing import Protocol, Sequence

import numpy as np
import requests

from . import kernels
from .errors import (
    DimensionMismatch,
    EndpointUnreachable,
    InvalidStride,
    MalformedPacket,
    ParseError,
)
from .persist import canonical_dumps

PACKET_KINDS = ("frame", "features")
_LEN = struct.Struct(">I")
MAX_PACKET_BYTES = 16 * 1024 * 1024


@dataclass(frozen=True)
class Frame:
    frame_id: str
    ts: float
    pixels: np.ndarray  # uint8, shape (height, width)

    def __post_init__(self):
        px = self.pixels
        if px.dtype != np.uint8 or px.ndim != 2:
            raise ValueError("pixels must be a 2-d uint8 array")


def to_pgm(frame: Frame) -> bytes:
    h, w = frame.pixels.shape
    header = f"P5\n# id {frame.frame_id} ts {frame.ts!r}\n{w} {h}\n255\n"
    return header.encode("ascii") + frame.pixels.tobytes()


def parse_pgm(data: bytes) -> Frame:
    try:
        magic_end = data.index(b"\n")
        comment_end = data.index(b"\n", magic_end + 1)
        dims_end = data.index(b"\n", comment_end + 1)
        maxval_end = data.index(b"\n", dims_end + 1)
    except ValueError:
        raise ParseError("truncated PGM header") from None
    if data[:magic_end] != b"P5":
        raise ParseError("not a P5 PGM")
    comment = data[magic_end + 1 : comment_end].decode("ascii", "replace")
    parts = comment.split()
    if len(parts) != 5 or parts[0] != "#" or parts[1] != "id" or parts[3] != "ts":
        raise ParseError(f"bad id/ts comment: {comment!r}")
    frame_id = parts[2]
    try:
        ts = float(parts[4])
        w, h = (int(v) for v in data[comment_end + 1 : dims_end].split())
        maxval = int(data[dims_end + 1 : maxval_end])
    except ValueError as exc:
        raise ParseError(f"bad PGM header field: {exc}") from None
    if maxval != 255:
        raise ParseError(f"unsupported maxval {maxval}")
    if w < 1 or h < 1:
        raise ParseError(f"bad dimensions {w}x{h}")
    body = data[maxval_end + 1 :]
    if len(body) != w * h:
        raise ParseError(f"expected {w * h} pixel bytes, got {len(body)}")
    pixels = np.frombuffer(body, dtype=np.uint8).reshape(h, w).copy()
    return Frame(frame_id=frame_id, ts=ts, pixels=pixels)


# ---------------------------------------------------------------------------
# stream thinning

def sample_stride(frames: Sequence[Frame], stride: int) -> list[Frame]:
    """Every stride-th frame, starting with the first."""
    if stride < 1:
        raise InvalidStride(f"stride must be >= 1, got {stride}")
    return list(frames[::stride])


def mean_abs_diff(a: Frame, b: Frame) -> float:
    if a.pixels.shape != b.pixels.shape:
        raise DimensionMismatch(
            f"frame shapes differ: {a.pixels.shape} vs {b.pixels.shape}"
        )
    return kernels.frame_mad(a.pixels, b.pixels)


def dedupe_stream(frames: Sequence[Frame], threshold: float) -> list[Frame]:
    """Drop frames whose mean absolute pixel difference from the last kept
    frame is <= threshold. The first frame is always kept."""
    if threshold < 0:
        raise ValueError("threshold must be >= 0")
    kept: list[Frame] = []
    for frame in frames:
        if not kept or mean_abs_diff(frame, kept[-1]) > threshold:
            kept.append(frame)
    return kept


# ---------------------------------------------------------------------------
# feature extraction

class FeatureExtractor(Protocol):
    def extract(self, frame: Frame) -> dict[str, float]: ...


class SyntheticExtractor:
    """Stand-in for a real vision model: affine maps from cheap pixel
    statistics to the traded features, so end-to-end tests have a
    deterministic, documented frame -> features relationship.

        WT         = 50 + mean(pixels) / 255 * 950
        height_cm  = 90 + fraction(pixels > 128) * 70
        age_months = 3 + 117 * min(std(pixels) / 128, 1)
    """

    def extract(self, frame: Frame) -> dict[str, float]:
        px = frame.pixels.astype(np.float64)
        mean = float(px.mean())
        frac_bright = float((frame.pixels > 128).mean())
        spread = min(float(px.std()) / 128.0, 1.0)
        return {
            "WT": 50.0 + mean / 255.0 * 950.0,
            "height_cm": 90.0 + frac_bright * 70.0,
            "age_months": 3.0 + 117.0 * spread,
        }


# ---------------------------------------------------------------------------
# wire protocol: 4-byte big-endian length + JSON envelope

@dataclass(frozen=True)
class FramePacket:
    stream_id: str
    seq: int
    kind: str
    payload: bytes

    def __post_init__(self):
        if self.kind not in PACKET_KINDS:
            raise ValueError(f"kind must be one of {PACKET_KINDS}")
        if self.seq < 0:
            raise ValueError("seq must be >= 0")


def packet_crc(payload: bytes) -> int:
    return zlib.crc32(payload) & 0xFFFFFFFF


def encode_packet(packet: FramePacket, *, crc_override: int | None = None) -> bytes:
    """Length-prefixed envelope. crc_override exists so tests and fault
    injection can produce packets with a wrong checksum."""
    crc = packet_crc(packet.payload) if crc_override is None else crc_override
    body = canonical_dumps(
        {
            "stream_id": packet.stream_id,
            "seq": packet.seq,
            "kind": packet.kind,
            "payload_base64": base64.b64encode(packet.payload).decode("ascii"),
            "crc32": crc,
        }
    ).encode("utf-8")
    return _LEN.pack(len(body)) + body


def decode_packets(data: bytes) -> list[tuple[FramePacket, int]]:
    """Split a buffer into (packet, declared crc) pairs.

    Truncated prefixes, oversized lengths, bad JSON, and missing fields all
    raise MalformedPacket. A wrong checksum does not: the packet still
    decodes so the receiver can reject just that one.
    """
    out: list[tuple[FramePacket, int]] = []
    offset = 0
    total = len(data)
    while offset < total:
        if total - offset < _LEN.size:
            raise MalformedPacket(f"truncated length prefix at byte {offset}")
        (length,) = _LEN.unpack_from(data, offset)
        offset += _LEN.size
        if length > MAX_PACKET_BYTES:
            raise MalformedPacket(f"declared length {length} exceeds limit")
        if total - offset < length:
            raise MalformedPacket(
                f"body truncated: declared {length}, only {total - offset} left"
            )
        body = data[offset : offset + length]
        offset += length
        try:
            doc = json.loads(body.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise MalformedPacket(f"bad packet body: {exc}") from None
        if not isinstance(doc, dict):
            raise MalformedPacket("packet body is not an object")
        try:
            payload = base64.b64decode(doc["payload_base64"], validate=True)
            packet = FramePacket(
                stream_id=str(doc["stream_id"]),
                seq=int(doc["seq"]),
                kind=str(doc["kind"]),
                payload=payload,
            )
            crc = int(doc["crc32"])
        except (KeyError, ValueError, TypeError) as exc:
            raise MalformedPacket(f"bad packet field: {exc}") from None
        out.append((packet, crc))
    return out


def packet_checksum_ok(packet: FramePacket, declared_crc: int) -> bool:
    return packet_crc(packet.payload) == declared_crc


def frames_to_packets(stream_id: str, frames: Sequence[Frame], start_seq: int = 0) -> list[FramePacket]:
    return [
        FramePacket(stream_id=stream_id, seq=start_seq + i, kind="frame", payload=to_pgm(f))
        for i, f in enumerate(frames)
    ]


def features_packet(stream_id: str, seq: int, features: dict[str, float]) -> FramePacket:
    payload = canonical_dumps(features).encode("utf-8")
    return FramePacket(stream_id=stream_id, seq=seq, kind="features", payload=payload)


# ---------------------------------------------------------------------------
# delivery

@dataclass(frozen=True)
class DeliveryReport:
    sent: int
    acked: int
    failed: tuple[tuple[str, int, str], ...]  # (stream_id, seq, reason)


def transmit(
    packets: Sequence[FramePacket],
    endpoint: str,
    *,
    max_retries: int = 3,
    backoff_s: float = 0.2,
    session: requests.Session | None = None,
) -> DeliveryReport:
    """POST packets to {endpoint}/ingest/frames, resending anything the
    receiver did not ack. At-least-once: a retried packet the receiver
    already applied is deduplicated there, not here."""
    sess = session or requests.Session()
    url = endpoint.rstrip("/") + "/ingest/frames"
    pending = list(packets)
    sent = 0
    acked: set[tuple[str, int]] = set()
    failures: dict[tuple[str, int], str] = {}

    for attempt in range(max_retries + 1):
        if not pending:
            break
        body = b"".join(encode_packet(p) for p in pending)
        sent += len(pending)
        try:
            resp = sess.post(
                url, data=body, headers={"Content-Type": "application/octet-stream"},
                timeout=30,
            )
        except requests.RequestException as exc:
            if attempt == max_retries:
                raise EndpointUnreachable(f"{url}: {exc}") from None
            time.sleep(backoff_s * (2 ** attempt))
            continue
        if resp.status_code >= 500:
            if attempt == max_retries:
                raise EndpointUnreachable(f"{url}: HTTP {resp.status_code}")
            time.sleep(backoff_s * (2 ** attempt))
            continue
        if resp.status_code != 200:
            raise EndpointUnreachable(f"{url}: HTTP {resp.status_code}: {resp.text}")
        results = resp.json().get("results", [])
        status_by_key = {
            (r["stream_id"], r["seq"]): (r["status"], r.get("reason", ""))
            for r in results
        }
        still = []
        for p in pending:
            status, reason = status_by_key.get((p.stream_id, p.seq), ("missing", "no ack"))
            if status == "acked":
                acked.add((p.stream_id, p.seq))
                failures.pop((p.stream_id, p.seq), None)
            else:
                failures[(p.stream_id, p.seq)] = reason or status
                still.append(p)
        pending = still
        if pending and attempt < max_retries:
            time.sleep(backoff_s * (2 ** attempt))

    failed = tuple((sid, seq, failures[(sid, seq)]) for sid, seq in sorted(failures))
    return DeliveryReport(sent=sent, acked=len(acked), failed=failed)


# ---------------------------------------------------------------------------
# synthetic capture stream

def gen_synthetic_stream(
    stream_id: str,
    n_frames: int,
    seed: int,
    *,
    width: int = 64,
    height: int = 48,
    drift_per_frame: float = 2.0,
) -> list[Frame]:
    """Frames of a bright blob drifting across a fixed gradient background.

    Consecutive frames differ by a small, roughly constant amount set by
    drift_per_frame, so stride sampling and near-duplicate dropping have
    something realistic to chew on. Pure function of its arguments.
    """
    if n_frames < 1:
        raise ValueError("n_frames must be >= 1")
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:height, 0:width]
    background = ((xx + yy) * 255.0 / (width + height - 2) * 0.35).astype(np.float64)
    cy = height / 2.0 + float(rng.uniform(-height / 8, height / 8))
    x0 = width * 0.15
    radius = min(width, height) / 5.0
    brightness = float(rng.uniform(150.0, 220.0))

    frames = []
    for i in range(n_frames):
        cx = x0 + i * drift_per_frame
        blob = ((xx - cx) ** 2 + (yy - cy) ** 2) <= radius ** 2
        img = background + blob * brightness
        pixels = np.clip(img, 0, 255).astype(np.uint8)
        frames.append(Frame(frame_id=f"{stream_id}-{i:06d}", ts=float(i) / 10.0, pixels=pixels))
    return frames
