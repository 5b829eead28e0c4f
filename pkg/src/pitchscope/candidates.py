"""Fundamental-frequency candidates as fixed points of the channel-to-IF map.

A dominant sinusoid makes every nearby channel report its frequency, so the
deviation ``d[m] = inst_freq[m] - center[m]`` falls through zero going up
the bank.  Downward zero crossings of d are stable fixed points and become
candidates; the crossing is interpolated in log2 frequency because channels
are geometrically spaced.  Candidates are ranked by their interpolated SNR
and the best one maps to musical notation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .attributes import AttributeFrame
from .filterbank import ChannelBank

MAX_CANDIDATES = 4
DEFAULT_SALIENCE_THRESHOLD_DB = 15.0
SALIENCE_FLOOR_DB = -10.0

_NOTE_NAMES = ("C", "C#", "D", "D#", "E", "F", "F#", "G", "G#", "A", "A#", "B")


@dataclass(frozen=True)
class F0Candidate:
    freq_hz: float
    snr_db: float
    lower_channel_index: int
    interpolation_fraction: float


@dataclass(frozen=True)
class NoteReading:
    midi_float: float
    midi_nearest: int
    note_name: str
    cents_offset: float


def freq_to_midi(freq_hz: float) -> float:
    return 69.0 + 12.0 * math.log2(freq_hz / 440.0)


def midi_to_freq(midi: float) -> float:
    return 440.0 * 2.0 ** ((midi - 69.0) / 12.0)


def note_reading(freq_hz: float) -> NoteReading:
    """Map a frequency to note name and cents offset in [-50, 50)."""
    midi = freq_to_midi(freq_hz)
    nearest = math.floor(midi + 0.5)
    name = _NOTE_NAMES[nearest % 12] + str(nearest // 12 - 1)
    return NoteReading(midi, nearest, name, 100.0 * (midi - nearest))


def find_fixed_points(frame: AttributeFrame, bank: ChannelBank) -> list[F0Candidate]:
    """Candidates from downward zero crossings of IF minus channel center.

    Uses the trailing-mean IF when the frame carries one (it is immune to
    beating between concurrent components), otherwise the two-sample
    estimate.  Channels with invalid attributes break crossings.  Candidate
    SNR is linearly interpolated between the two crossing channels.
    """
    iff = frame.mean_inst_freq_hz
    if iff is None:
        iff = frame.inst_freq_hz
    centers = bank.centers_hz
    d = iff - centers
    delta_log2 = bank.delta_log2
    out = []
    for m in range(len(centers) - 1):
        if not (frame.valid[m] and frame.valid[m + 1]):
            continue
        if not (np.isfinite(d[m]) and np.isfinite(d[m + 1])):
            continue
        if d[m] >= 0.0 > d[m + 1]:
            frac = float(d[m] / (d[m] - d[m + 1]))
            freq = float(centers[m] * 2.0 ** (frac * delta_log2))
            snr = float((1.0 - frac) * frame.snr_db[m] + frac * frame.snr_db[m + 1])
            out.append(F0Candidate(freq, snr, m, frac))
    return out


def select_candidates(candidates, max_count: int = MAX_CANDIDATES) -> list[F0Candidate]:
    """Order by SNR descending, ties to the lower frequency, keep max_count."""
    def key(c: F0Candidate):
        snr = c.snr_db if math.isfinite(c.snr_db) else float("-inf")
        return (-snr, c.freq_hz)
    return sorted(candidates, key=key)[:max_count]


def best_candidate(selected, salience_threshold_db: float = DEFAULT_SALIENCE_THRESHOLD_DB,
                   ) -> tuple[F0Candidate, NoteReading] | None:
    """Top candidate with its note mapping, if salient enough."""
    if not selected:
        return None
    top = selected[0]
    if not math.isfinite(top.snr_db) or top.snr_db < salience_threshold_db:
        return None
    return top, note_reading(top.freq_hz)


def salience(selected) -> float:
    """SNR of the best candidate; floor value when there is none."""
    if not selected:
        return SALIENCE_FLOOR_DB
    top = selected[0]
    if not math.isfinite(top.snr_db):
        return SALIENCE_FLOOR_DB
    return max(top.snr_db, SALIENCE_FLOOR_DB)
