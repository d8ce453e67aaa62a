"""Binary frame protocol and the log-writing gateway.

Frame layout (little-endian): magic "MAIC", version u8, device_id u64,
timestamp_us u64, f_start f64, f_stop f64, n_points u32, then n_points
float32 reflection magnitudes, then CRC-32 over everything before it.
Total size 45 + 4*n_points bytes.

The decoder verifies the checksum before interpreting any field, so any
single corrupted bit in a frame surfaces as ChecksumMismatch rather than a
misleading semantic error. BadMagic and the other structural errors are
reserved for internally consistent but foreign or malformed buffers.
"""

from __future__ import annotations

import hashlib
import io
import json
import math
import os
import re
import socket
import socketserver
import struct
import threading
import time
import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .calibration import CalibrationModel, invert
from .dsp import extract_resonance
from .errors import (BadMagic, ChecksumMismatch, DomainError, FrameError,
                     GridTooCoarse, InvalidGrid, MalformedLength, NoResonance,
                     UnsupportedVersion)
from .readout import S11Sweep

MAGIC = b"MAIC"
PROTOCOL_VERSION = 1
_HEADER = struct.Struct("<4sBQQddI")
HEADER_SIZE = _HEADER.size  # 41
_CRC = struct.Struct("<I")
_N_POINTS_OFFSET = HEADER_SIZE - 4

DEFAULT_PORT = 47917
PORT_ENV_VAR = "MAICAS_PORT"

# refuse to buffer absurd frames when framing off a live stream
MAX_STREAM_POINTS = 1 << 24

LOG_SCHEMA = "maicas-log/1"


def default_port() -> int:
    """Port from the environment override, else the fixed default."""
    raw = os.environ.get(PORT_ENV_VAR)
    if raw is None:
        return DEFAULT_PORT
    try:
        port = int(raw)
    except ValueError:
        raise DomainError(f"{PORT_ENV_VAR}={raw!r} is not an integer")
    if not 1 <= port <= 65535:
        raise DomainError(f"{PORT_ENV_VAR}={port} outside 1..65535")
    return port


@dataclass(frozen=True, eq=False)
class TelemetryFrame:
    device_id: int
    timestamp_us: int
    f_start: float
    f_stop: float
    n_points: int
    magnitude_db: np.ndarray  # float32 values widened to float64

    @property
    def sweep(self) -> S11Sweep:
        return S11Sweep(self.f_start, self.f_stop, self.n_points,
                        self.magnitude_db)


def encode_frame(device_id: int, timestamp_us: int, sweep: S11Sweep) -> bytes:
    """Serialize one sweep. Magnitudes are quantized to float32."""
    if not 0 <= device_id < 2 ** 64:
        raise DomainError(f"device_id {device_id} outside u64 range")
    if not 0 <= timestamp_us < 2 ** 64:
        raise DomainError(f"timestamp_us {timestamp_us} outside u64 range")
    if sweep.n_points >= 2 ** 32:
        raise DomainError("n_points outside u32 range")
    header = _HEADER.pack(MAGIC, PROTOCOL_VERSION, device_id, timestamp_us,
                          sweep.f_start, sweep.f_stop, sweep.n_points)
    payload = np.asarray(sweep.magnitude_db, dtype="<f4").tobytes()
    body = header + payload
    return body + _CRC.pack(zlib.crc32(body))


def decode_frame(buf: bytes) -> TelemetryFrame:
    """Parse and validate one complete frame buffer.

    Validation order: structural length, checksum, magic, version, declared
    point count against the buffer, grid sanity.
    """
    if len(buf) < HEADER_SIZE + 4:
        raise MalformedLength(
            f"frame of {len(buf)} bytes is shorter than the minimum "
            f"{HEADER_SIZE + 4}")
    stored = _CRC.unpack_from(buf, len(buf) - 4)[0]
    actual = zlib.crc32(buf[:-4])
    if stored != actual:
        raise ChecksumMismatch(
            f"CRC stored {stored:#010x} != computed {actual:#010x}")
    magic, version, device_id, timestamp_us, f_start, f_stop, n_points = \
        _HEADER.unpack_from(buf, 0)
    if magic != MAGIC:
        raise BadMagic(f"bad magic {magic!r}")
    if version != PROTOCOL_VERSION:
        raise UnsupportedVersion(f"version {version} not supported")
    expected = HEADER_SIZE + 4 * n_points + 4
    if len(buf) != expected:
        raise MalformedLength(
            f"frame of {len(buf)} bytes does not match declared "
            f"n_points {n_points} ({expected} bytes)")
    if n_points < 2:
        raise InvalidGrid(f"n_points must be >= 2, got {n_points}")
    if not (f_start > 0 and math.isfinite(f_start) and f_stop > f_start
            and math.isfinite(f_stop)):
        raise InvalidGrid(f"bad frequency grid [{f_start}, {f_stop}]")
    mags = np.frombuffer(buf, dtype="<f4", count=n_points,
                         offset=HEADER_SIZE).astype(np.float64)
    return TelemetryFrame(device_id, timestamp_us, f_start, f_stop,
                          int(n_points), mags)


def read_frame(stream) -> bytes | None:
    """Pull one raw frame off a binary stream using the declared length.
    Returns None at a clean end of stream; raises MalformedLength on
    truncation. Content validation is decode_frame's job."""
    header = stream.read(HEADER_SIZE)
    if len(header) == 0:
        return None
    if len(header) < HEADER_SIZE:
        raise MalformedLength(
            f"stream ended inside a frame header ({len(header)} bytes)")
    n_points = struct.unpack_from("<I", header, _N_POINTS_OFFSET)[0]
    if n_points > MAX_STREAM_POINTS:
        raise MalformedLength(
            f"declared n_points {n_points} exceeds the stream cap")
    rest_size = 4 * n_points + 4
    rest = stream.read(rest_size)
    if len(rest) < rest_size:
        raise MalformedLength(
            f"stream ended inside a frame body ({len(rest)}/{rest_size} bytes)")
    return header + rest


def frames_from_sweeps(sweeps, device_id: int = 1,
                       start_timestamp_us: int = 0,
                       interval_us: int = 1000) -> list[bytes]:
    return [encode_frame(device_id, start_timestamp_us + i * interval_us, sw)
            for i, sw in enumerate(sweeps)]


def frames_from_result(result, device_id: int = 1,
                       start_timestamp_us: int = 0,
                       interval_us: int = 1000) -> list[bytes]:
    """Flatten an ExperimentResult's noisy sweeps in grid-then-repeat
    order."""
    sweeps = [sweep for point in result.points for sweep in point.sweeps]
    return frames_from_sweeps(sweeps, device_id, start_timestamp_us,
                              interval_us)


class _FrameServer(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, address, frames: list[bytes], frame_interval_s: float):
        self.frames = frames
        self.frame_interval_s = frame_interval_s
        super().__init__(address, _FrameHandler)


class _FrameHandler(socketserver.BaseRequestHandler):
    def handle(self):
        try:
            for frame in self.server.frames:
                self.request.sendall(frame)
                if self.server.frame_interval_s > 0:
                    time.sleep(self.server.frame_interval_s)
        except OSError:
            pass  # client went away; other sessions are unaffected


def start_server(frames: list[bytes], host: str = "127.0.0.1",
                 port: int | None = None,
                 frame_interval_s: float = 0.0) -> tuple[socketserver.TCPServer, threading.Thread]:
    """Bind and serve the frame list on a background thread. Every client
    connection replays the full list. Returns (server, thread); call
    server.shutdown() then server.server_close() to stop."""
    if port is None:
        port = default_port()
    server = _FrameServer((host, port), list(frames), frame_interval_s)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    return server, thread


def serve(frames: list[bytes], host: str = "127.0.0.1",
          port: int | None = None, frame_interval_s: float = 0.0) -> None:
    """Blocking variant of start_server."""
    if port is None:
        port = default_port()
    with _FrameServer((host, port), list(frames), frame_interval_s) as server:
        server.serve_forever()


@dataclass(frozen=True)
class MeasurandRecord:
    device_id: int
    timestamp_us: int
    f0_hat_hz: float | None
    measurand_value: float | None
    measurand_unit: str
    calibration_id: str
    quality: str  # ok | extrapolated | no_resonance
    error: str | None = None


def calibration_id_of(model: CalibrationModel) -> str:
    """Short stable content hash naming the calibration used."""
    digest = hashlib.sha256(model.to_json().encode()).hexdigest()
    return digest[:12]


def _snake_case(name: str) -> str:
    return re.sub(r"(?<!^)(?=[A-Z])", "_", name).lower()


def _record_to_json(record: MeasurandRecord) -> str:
    obj = {
        "device_id": record.device_id,
        "timestamp_us": record.timestamp_us,
        "f0_hat_hz": record.f0_hat_hz,
        "measurand_value": record.measurand_value,
        "measurand_unit": record.measurand_unit,
        "calibration_id": record.calibration_id,
        "quality": record.quality,
    }
    if record.error is not None:
        obj["error"] = record.error
    return json.dumps(obj)


def record_from_frame(raw: bytes, model: CalibrationModel) -> MeasurandRecord:
    """Decode, extract and invert one frame into a log record. Decode and
    extraction failures become no_resonance records instead of raising."""
    cal_id = calibration_id_of(model)
    try:
        frame = decode_frame(raw)
    except FrameError as exc:
        return MeasurandRecord(
            device_id=0, timestamp_us=0, f0_hat_hz=None,
            measurand_value=None, measurand_unit=model.measurand_unit,
            calibration_id=cal_id, quality="no_resonance",
            error=_snake_case(type(exc).__name__))
    try:
        estimate = extract_resonance(frame.sweep)
    except (NoResonance, GridTooCoarse, DomainError) as exc:
        return MeasurandRecord(
            device_id=frame.device_id, timestamp_us=frame.timestamp_us,
            f0_hat_hz=None, measurand_value=None,
            measurand_unit=model.measurand_unit, calibration_id=cal_id,
            quality="no_resonance", error=_snake_case(type(exc).__name__))
    inversion = invert(model, estimate.f0_hat)
    return MeasurandRecord(
        device_id=frame.device_id, timestamp_us=frame.timestamp_us,
        f0_hat_hz=estimate.f0_hat, measurand_value=inversion.value,
        measurand_unit=model.measurand_unit, calibration_id=cal_id,
        quality="extrapolated" if inversion.extrapolated else "ok")


@dataclass(frozen=True)
class GatewayStats:
    frames_seen: int
    records_ok: int
    records_extrapolated: int
    records_error: int
    reconnects: int


class _LogWriter:
    """Append-only NDJSON log. The first line of a fresh file names the
    schema."""

    def __init__(self, path):
        self.path = Path(path)
        fresh = not self.path.exists() or self.path.stat().st_size == 0
        self._fh = open(self.path, "a", encoding="utf-8")
        if fresh:
            self._write_line(json.dumps({"schema": LOG_SCHEMA}))

    def _write_line(self, line: str) -> None:
        self._fh.write(line + "\n")
        self._fh.flush()

    def append(self, record: MeasurandRecord) -> None:
        self._write_line(_record_to_json(record))

    def close(self) -> None:
        self._fh.close()


def read_log(path) -> list[dict]:
    """Parse an NDJSON log, checking the schema line."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines:
        raise DomainError(f"{path}: empty log")
    head = json.loads(lines[0])
    if head.get("schema") != LOG_SCHEMA:
        raise DomainError(f"{path}: unknown log schema {head!r}")
    return [json.loads(line) for line in lines[1:]]


def process_frames(frames, model: CalibrationModel, log_path) -> dict[str, int]:
    """Offline equivalent of the gateway: append one record per frame from
    an in-memory list. Returns quality counts."""
    writer = _LogWriter(log_path)
    counts = {"ok": 0, "extrapolated": 0, "no_resonance": 0}
    try:
        for raw in frames:
            record = record_from_frame(raw, model)
            writer.append(record)
            counts[record.quality] += 1
    finally:
        writer.close()
    return counts


def split_dump(data: bytes) -> list[bytes]:
    """Split a concatenated frame dump back into frames."""
    frames = []
    stream = io.BytesIO(data)
    while True:
        raw = read_frame(stream)
        if raw is None:
            break
        frames.append(raw)
    return frames


def gateway(host: str, port: int | None, model: CalibrationModel, log_path,
            *, max_frames: int | None = None, reconnect: bool = True,
            backoff_initial_s: float = 0.5, backoff_factor: float = 2.0,
            backoff_cap_s: float = 30.0, max_connect_attempts: int | None = None,
            connect_timeout_s: float = 5.0, stop: threading.Event | None = None,
            _sleep=time.sleep) -> GatewayStats:
    """Consume frames from a server and append one record per frame.

    Each received frame is logged exactly once, in arrival order. Connection
    loss triggers exponential-backoff reconnection (0.5 s doubling, capped
    at 30 s) until max_frames records are written or stop is set; with
    reconnect=False a clean end of stream finishes the run.
    """
    if port is None:
        port = default_port()
    writer = _LogWriter(log_path)
    frames_seen = ok = extrapolated = errors = reconnects = 0
    backoff = backoff_initial_s
    attempts = 0
    try:
        while True:
            if stop is not None and stop.is_set():
                break
            if max_frames is not None and frames_seen >= max_frames:
                break
            try:
                attempts += 1
                sock = socket.create_connection((host, port),
                                                timeout=connect_timeout_s)
            except OSError:
                if max_connect_attempts is not None and attempts >= max_connect_attempts:
                    break
                if not reconnect:
                    break
                _sleep(backoff)
                backoff = min(backoff * backoff_factor, backoff_cap_s)
                continue
            if attempts > 1:
                reconnects += 1
            backoff = backoff_initial_s
            clean_eof = False
            with sock:
                stream = sock.makefile("rb")
                while max_frames is None or frames_seen < max_frames:
                    if stop is not None and stop.is_set():
                        break
                    try:
                        raw = read_frame(stream)
                    except (FrameError, OSError):
                        break  # framing lost; reconnect for a fresh stream
                    if raw is None:
                        clean_eof = True
                        break
                    frames_seen += 1
                    record = record_from_frame(raw, model)
                    writer.append(record)
                    if record.quality == "ok":
                        ok += 1
                    elif record.quality == "extrapolated":
                        extrapolated += 1
                    else:
                        errors += 1
            if stop is not None and stop.is_set():
                break
            if max_frames is not None and frames_seen >= max_frames:
                break
            if clean_eof and not reconnect:
                break
            _sleep(backoff)
            backoff = min(backoff * backoff_factor, backoff_cap_s)
    finally:
        writer.close()
    return GatewayStats(frames_seen, ok, extrapolated, errors, reconnects)
