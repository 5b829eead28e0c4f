"""RIFF/WAVE reading and 24-bit PCM writing.

Work recordings are written as canonical 44-byte-header RIFF PCM, mono,
24-bit little-endian.  Reading accepts integer PCM (8/16/24/32 bit) and
IEEE float (32/64 bit) in plain or EXTENSIBLE containers, any channel
count (averaged to mono) and any sample rate (callers resample).
Float conversion maps the MSB amplitude to 1.0, so integer samples round
trip exactly through write/read.
"""
from __future__ import annotations

import struct

import numpy as np
from scipy.signal import resample_poly

from .errors import FormatError

WORK_SAMPLE_RATE = 44100
_FULL_SCALE_24 = float(2 ** 23)


def write_wav_24(path, samples: np.ndarray, f_s: int = WORK_SAMPLE_RATE) -> int:
    """Write mono 24-bit PCM with a canonical 44-byte header; returns bytes written."""
    x = np.asarray(samples, dtype=float)
    if x.ndim != 1:
        raise ValueError("expected a mono buffer")
    ints = np.clip(np.rint(x * _FULL_SCALE_24), -_FULL_SCALE_24,
                   _FULL_SCALE_24 - 1).astype(np.int32)
    raw = ints.astype("<i4").tobytes()
    # drop the high byte of each little-endian int32 to get int24
    data = np.frombuffer(raw, dtype=np.uint8).reshape(-1, 4)[:, :3].tobytes()
    header = _canonical_header(len(data), int(f_s), bits=24, channels=1)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(data)
    return len(header) + len(data)


def _canonical_header(data_bytes: int, f_s: int, bits: int, channels: int) -> bytes:
    block_align = channels * bits // 8
    return b"".join([
        b"RIFF", struct.pack("<I", 36 + data_bytes), b"WAVE",
        b"fmt ", struct.pack("<IHHIIHH", 16, 1, channels, f_s,
                             f_s * block_align, block_align, bits),
        b"data", struct.pack("<I", data_bytes),
    ])


def read_wav(path) -> tuple[np.ndarray, int]:
    """Read any supported PCM/float WAV; returns (mono float64, sample_rate)."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 12 or blob[:4] != b"RIFF" or blob[8:12] != b"WAVE":
        raise FormatError(f"{path}: not a RIFF/WAVE file")
    fmt = None
    data = None
    pos = 12
    while pos + 8 <= len(blob):
        cid = blob[pos:pos + 4]
        size = struct.unpack("<I", blob[pos + 4:pos + 8])[0]
        body = blob[pos + 8:pos + 8 + size]
        if cid == b"fmt ":
            if len(body) < 16:
                raise FormatError(f"{path}: truncated fmt chunk")
            fmt = struct.unpack("<HHIIHH", body[:16])
            if fmt[0] == 0xFFFE and len(body) >= 40:  # EXTENSIBLE
                sub = struct.unpack("<H", body[24:26])[0]
                fmt = (sub,) + fmt[1:]
        elif cid == b"data":
            if len(body) < size:
                raise FormatError(f"{path}: data chunk shorter than declared")
            data = body
        pos += 8 + size + (size & 1)  # chunks are word-aligned
    if fmt is None or data is None:
        raise FormatError(f"{path}: missing fmt or data chunk")
    audio_format, channels, f_s, _, block_align, bits = fmt
    if channels < 1:
        raise FormatError(f"{path}: invalid channel count {channels}")
    if audio_format == 1:
        x = _decode_pcm(data, bits, path)
    elif audio_format == 3:
        if bits == 32:
            x = np.frombuffer(data, dtype="<f4").astype(float)
        elif bits == 64:
            x = np.frombuffer(data, dtype="<f8").astype(float)
        else:
            raise FormatError(f"{path}: unsupported float width {bits}")
    else:
        raise FormatError(f"{path}: unsupported audio format {audio_format}")
    if channels > 1:
        x = x[:len(x) - len(x) % channels].reshape(-1, channels).mean(axis=1)
    return x, int(f_s)


def _decode_pcm(data: bytes, bits: int, path) -> np.ndarray:
    if bits == 8:
        return (np.frombuffer(data, dtype=np.uint8).astype(float) - 128.0) / 128.0
    if bits == 16:
        return np.frombuffer(data, dtype="<i2").astype(float) / 2.0 ** 15
    if bits == 24:
        data = data[:len(data) - len(data) % 3]
        b = np.frombuffer(data, dtype=np.uint8).reshape(-1, 3)
        padded = np.zeros((len(b), 4), dtype=np.uint8)
        padded[:, 1:] = b  # shift into the top 3 bytes, then scale back
        ints = padded.view("<i4")[:, 0] >> 8
        return ints.astype(float) / _FULL_SCALE_24
    if bits == 32:
        return np.frombuffer(data, dtype="<i4").astype(float) / 2.0 ** 31
    raise FormatError(f"{path}: unsupported PCM width {bits}")


def ensure_rate(samples: np.ndarray, f_s: int, target: int = WORK_SAMPLE_RATE,
                ) -> np.ndarray:
    """Resample to the target rate with a rational polyphase filter."""
    if f_s == target:
        return np.asarray(samples, dtype=float)
    g = np.gcd(int(target), int(f_s))
    return resample_poly(np.asarray(samples, dtype=float), target // g, f_s // g)
