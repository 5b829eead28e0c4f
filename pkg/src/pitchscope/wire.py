"""Length-prefixed JSON records: the frame/control wire format.

Every message is one text record: the decimal byte length of the JSON body,
a newline, the body, a newline.  The same encoding is used over the socket,
in frame-log files, and in tests, so anything that can split on a newline
and count bytes can parse the stream.  Records are self-describing objects
multiplexed by a ``type`` field ("hello", "frame", "control", "ack",
"error", "state").
"""
from __future__ import annotations

import json
import math

import numpy as np

from .pipeline import AnalysisFrame

SCHEMA_VERSION = 1

#: Rounding applied to bulky display-only fields to keep frames compact.
_LEVEL_DECIMALS = 2
_SPECTRUM_DECIMALS = 2
_WAVE_DECIMALS = 4
_MAP_DECIMALS = 4
_SNIPPET_MAX_POINTS = 240


def encode_record(obj: dict) -> bytes:
    body = json.dumps(_jsonsafe(obj), separators=(",", ":"), allow_nan=False)
    raw = body.encode()
    return b"%d\n%s\n" % (len(raw), raw)


def decode_records(data: bytes) -> tuple[list[dict], bytes]:
    """Parse complete records from a byte buffer; returns (records, leftover)."""
    out = []
    pos = 0
    while True:
        nl = data.find(b"\n", pos)
        if nl < 0:
            break
        try:
            length = int(data[pos:nl])
        except ValueError as exc:
            raise ValueError(f"bad record length prefix at byte {pos}") from exc
        end = nl + 1 + length
        if end + 1 > len(data):
            break
        out.append(json.loads(data[nl + 1:end].decode()))
        pos = end + 1  # trailing newline
    return out, data[pos:]


def decode_record(data: bytes | str) -> dict:
    if isinstance(data, str):
        data = data.encode()
    records, rest = decode_records(data)
    if len(records) != 1 or rest:
        raise ValueError("expected exactly one record")
    return records[0]


def _jsonsafe(obj):
    if isinstance(obj, dict):
        return {k: _jsonsafe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonsafe(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonsafe(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def _round_list(values, decimals) -> list:
    return [None if v is None or not math.isfinite(v) else round(float(v), decimals)
            for v in np.asarray(values, dtype=float).tolist()]


def frame_record(frame: AnalysisFrame, phase_maps: bool = False) -> dict:
    """Serialize one AnalysisFrame.

    Candidate and salience numbers keep full precision (they are the
    analysis contract); display-only vectors are rounded and the aligned
    waveform is decimated to at most ``_SNIPPET_MAX_POINTS`` points.
    """
    rec = {
        "type": "frame",
        "t_ms": frame.t_ms,
        "warm_up": frame.warm_up,
        "candidates": [[c.freq_hz, _finite_or_none(c.snr_db)]
                       for c in frame.candidates],
        "salience_db": frame.salience_db,
        "best": None,
        "level": None,
        "spectrum_db": None,
        "aligned_waveform": _snippet_points(frame.aligned_waveform),
    }
    if frame.best is not None:
        b = frame.best
        rec["best"] = {
            "freq_hz": b.freq_hz,
            "snr_db": b.snr_db,
            "midi_float": b.midi_float,
            "note_name": b.note_name,
            "cents_offset": b.cents_offset,
        }
    if frame.level is not None:
        lv = frame.level
        rec["level"] = {
            "dbfs_peak": round(lv.dbfs_peak, _LEVEL_DECIMALS),
            "dbfs_rms": round(lv.dbfs_rms, _LEVEL_DECIMALS),
            "dbfs_rms_smoothed": round(lv.dbfs_rms_smoothed, _LEVEL_DECIMALS),
            "cweight_fast_dbfs": round(lv.cweight_fast_dbfs, _LEVEL_DECIMALS),
            "cweight_slow_dbfs": round(lv.cweight_slow_dbfs, _LEVEL_DECIMALS),
            "spl_fast_db": None if lv.spl_fast_db is None
            else round(lv.spl_fast_db, _LEVEL_DECIMALS),
            "spl_slow_db": None if lv.spl_slow_db is None
            else round(lv.spl_slow_db, _LEVEL_DECIMALS),
            "calibrated": lv.calibrated,
        }
    if frame.spectrum_db is not None:
        rec["spectrum_db"] = _round_list(frame.spectrum_db, _SPECTRUM_DECIMALS)
    if phase_maps:
        at = frame.attributes
        rec["phase_maps"] = {
            "phase": _round_list(at.phase, _MAP_DECIMALS),
            "norm_if": _round_list(at.norm_inst_freq, _MAP_DECIMALS),
            "norm_gd": _round_list(at.norm_group_delay, _MAP_DECIMALS),
            "magnitude_db": _round_list(
                20.0 * np.log10(np.maximum(at.magnitude, 1e-7)), _MAP_DECIMALS),
        }
    return rec


def _finite_or_none(v: float):
    return float(v) if math.isfinite(v) else None


def _snippet_points(wave: np.ndarray) -> list:
    if len(wave) == 0:
        return []
    stride = max(1, int(np.ceil(len(wave) / _SNIPPET_MAX_POINTS)))
    return _round_list(wave[::stride], _WAVE_DECIMALS)


def hello_record(schema_extras: dict) -> dict:
    rec = {"type": "hello", "schema_version": SCHEMA_VERSION}
    rec.update(schema_extras)
    return rec


def write_frame_log(path, records) -> int:
    """Append-encode records into a log file; returns count written."""
    n = 0
    with open(path, "wb") as fh:
        for rec in records:
            fh.write(encode_record(rec))
            n += 1
    return n


def read_frame_log(path) -> list[dict]:
    with open(path, "rb") as fh:
        records, rest = decode_records(fh.read())
    if rest:
        raise ValueError(f"{path}: trailing partial record ({len(rest)} bytes)")
    return records
