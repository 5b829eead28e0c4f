"""C-weighted sound level metering with fast/slow ballistics and calibration.

The C-weighting follows the analog prototype (double poles at 20.598997 Hz
and 12194.217 Hz, double zero at DC, 0 dB at 1 kHz).  A bilinear transform
pre-warped at 1 kHz lands the low-frequency structure correctly but
compresses the top octaves, so a short linear-phase FIR corrector flattens
the digital magnitude onto the analog curve up to 16 kHz; the combined
response stays within a few hundredths of a dB of the prototype.

Levels use exponential integrators: 125 ms (fast) and 1 s (slow) on the
C-weighted power for SPL, 500 ms on unweighted power for the smoothed RMS
cursor.  0 dBFS corresponds to the MSB amplitude (|x| = 1), so a full-scale
sine reads -3.01 dBFS RMS.
"""
from __future__ import annotations

import datetime as _dt
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.signal import bilinear, firwin2, freqz, lfilter

from .errors import CalibrationRejected

C_POLE_LOW_HZ = 20.598997
C_POLE_HIGH_HZ = 12194.217
MIN_SAMPLE_RATE = 32000.0

FAST_TAU_S = 0.125
SLOW_TAU_S = 1.0
SMOOTHED_RMS_TAU_S = 0.5
DISPLAY_FLOOR_DB = -100.0

DEFAULT_REFERENCE_SPL_CHOICES = (60.0, 65.0, 70.0, 75.0, 80.0)
STABILITY_WINDOW_S = 2.0
STABILITY_SPREAD_DB = 1.0

_CORRECTOR_TAPS = 257
_CORRECTOR_KNEE_HZ = 16500.0


def c_weighting_analog_gain(freq_hz) -> np.ndarray:
    """Magnitude of the analog C-weighting prototype, normalized at 1 kHz."""
    f2 = np.square(np.asarray(freq_hz, dtype=float))
    f1sq = C_POLE_LOW_HZ ** 2
    f4sq = C_POLE_HIGH_HZ ** 2

    def raw(fsq):
        return f4sq * fsq / ((fsq + f1sq) * (fsq + f4sq))

    return raw(f2) / raw(1000.0 ** 2)


@lru_cache(maxsize=8)
def c_weighting_design(f_s: float):
    """(b, a, fir) digital realization of the C-weighting at one sample rate."""
    if f_s < MIN_SAMPLE_RATE:
        raise ValueError(f"sample rate {f_s} Hz below supported minimum "
                         f"{MIN_SAMPLE_RATE} Hz")
    w1 = 2.0 * np.pi * C_POLE_LOW_HZ
    w4 = 2.0 * np.pi * C_POLE_HIGH_HZ
    b_analog = np.array([w4 ** 2, 0.0, 0.0])
    a_analog = np.convolve([1.0, 2.0 * w1, w1 ** 2], [1.0, 2.0 * w4, w4 ** 2])
    # choose the bilinear rate so 1 kHz maps onto itself
    w0 = 2.0 * np.pi * 1000.0
    fs_bilinear = w0 / (2.0 * np.tan(w0 / (2.0 * f_s)))
    b, a = bilinear(b_analog, a_analog, fs=fs_bilinear)

    grid = np.linspace(0.0, np.pi, 4097)
    freqs = grid * f_s / (2.0 * np.pi)
    _, h_iir = freqz(b, a, worN=grid)
    target = c_weighting_analog_gain(freqs)
    mag = np.abs(h_iir)
    ratio = np.ones_like(freqs)
    nz = mag > 1e-12
    ratio[nz] = target[nz] / mag[nz]
    ratio[0] = ratio[1]
    # beyond the knee the warp error diverges; hold the correction flat there
    knee = freqs <= _CORRECTOR_KNEE_HZ
    ratio[~knee] = ratio[knee][-1]
    fir = firwin2(_CORRECTOR_TAPS, freqs / (f_s / 2.0), ratio, fs=2.0)

    w1k = np.array([2.0 * np.pi * 1000.0 / f_s])
    _, h1 = freqz(b, a, worN=w1k)
    _, h2 = freqz(fir, [1.0], worN=w1k)
    fir = fir / abs(h1[0] * h2[0]) * abs(h1[0])
    b = b / abs(h1[0])
    return b, a, fir


def c_weight(samples, f_s: float) -> np.ndarray:
    """Apply the digital C-weighting to a buffer (causal, stateless)."""
    b, a, fir = c_weighting_design(f_s)
    return lfilter(fir, [1.0], lfilter(b, a, np.asarray(samples, dtype=float)))


class CWeightingFilter:
    """Streaming C-weighting with filter state across blocks."""

    def __init__(self, f_s: float):
        self.b, self.a, self.fir = c_weighting_design(f_s)
        self._zi_iir = np.zeros(max(len(self.a), len(self.b)) - 1)
        self._zi_fir = np.zeros(len(self.fir) - 1)

    def process(self, samples: np.ndarray) -> np.ndarray:
        y, self._zi_iir = lfilter(self.b, self.a, samples, zi=self._zi_iir)
        y, self._zi_fir = lfilter(self.fir, [1.0], y, zi=self._zi_fir)
        return y


@dataclass(frozen=True)
class CalibrationState:
    """SPL offset so that SPL = C-weighted slow dBFS + offset."""

    offset_db: float
    reference_spl_db: float
    timestamp: str

    def __post_init__(self):
        if not math.isfinite(self.offset_db):
            raise ValueError("calibration offset must be finite")


def calibrate_spl(measured_dbfs_c_slow: float, reference_spl_db: float,
                  choices=DEFAULT_REFERENCE_SPL_CHOICES) -> CalibrationState:
    """Offset from a measured C-weighted slow level and the popup reference."""
    if choices and reference_spl_db not in choices:
        raise ValueError(f"reference {reference_spl_db} dB not in {choices}")
    return CalibrationState(
        offset_db=reference_spl_db - measured_dbfs_c_slow,
        reference_spl_db=reference_spl_db,
        timestamp=_dt.datetime.now().isoformat(timespec="seconds"))


@dataclass(frozen=True)
class LevelFrame:
    """Level readings for one block; SPL fields are None until calibrated."""

    dbfs_peak: float
    dbfs_rms: float
    dbfs_rms_smoothed: float
    cweight_fast_dbfs: float
    cweight_slow_dbfs: float
    spl_fast_db: float | None
    spl_slow_db: float | None
    calibrated: bool


class _PowerIntegrator:
    """Single-pole exponential integrator over per-sample power."""

    def __init__(self, tau_s: float, f_s: float):
        alpha = math.exp(-1.0 / (tau_s * f_s))
        self._b = np.array([1.0 - alpha])
        self._a = np.array([1.0, -alpha])
        self._zi = np.zeros(1)
        self.value = 0.0

    def process(self, power: np.ndarray) -> float:
        y, self._zi = lfilter(self._b, self._a, power, zi=self._zi)
        self.value = float(y[-1])
        return self.value


def _db(power_or_amp: float, amplitude: bool = False) -> float:
    if power_or_amp <= 0.0:
        return DISPLAY_FLOOR_DB
    db = (20.0 if amplitude else 10.0) * math.log10(power_or_amp)
    return max(db, DISPLAY_FLOOR_DB)


class LevelMeter:
    """Stateful per-stream level meter; one block in, one LevelFrame out."""

    def __init__(self, f_s: float, calibration: CalibrationState | None = None):
        self.f_s = f_s
        self.calibration = calibration
        self._cweight = CWeightingFilter(f_s)
        self._fast = _PowerIntegrator(FAST_TAU_S, f_s)
        self._slow = _PowerIntegrator(SLOW_TAU_S, f_s)
        self._smooth = _PowerIntegrator(SMOOTHED_RMS_TAU_S, f_s)
        self._history: list[tuple[float, float]] = []  # (time_s, slow C dBFS)
        self._t = 0.0
        self.last: LevelFrame | None = None

    def process_block(self, samples: np.ndarray) -> LevelFrame:
        x = np.asarray(samples, dtype=float)
        if len(x) < 1:
            raise ValueError("block must contain at least one sample")
        peak = _db(float(np.max(np.abs(x))), amplitude=True)
        rms = _db(float(np.mean(x ** 2)))
        smoothed = _db(self._smooth.process(x ** 2))
        xw = self._cweight.process(x)
        fast = _db(self._fast.process(xw ** 2))
        slow = _db(self._slow.process(xw ** 2))
        self._t += len(x) / self.f_s
        self._record_history(self._t, slow)
        cal = self.calibration
        frame = LevelFrame(
            dbfs_peak=peak, dbfs_rms=rms, dbfs_rms_smoothed=smoothed,
            cweight_fast_dbfs=fast, cweight_slow_dbfs=slow,
            spl_fast_db=fast + cal.offset_db if cal else None,
            spl_slow_db=slow + cal.offset_db if cal else None,
            calibrated=cal is not None)
        self.last = frame
        return frame

    def _record_history(self, t: float, slow_db: float):
        self._history.append((t, slow_db))
        cutoff = t - STABILITY_WINDOW_S
        while self._history and self._history[0][0] < cutoff:
            self._history.pop(0)

    def stability_spread_db(self) -> float | None:
        """Peak-to-peak spread of the slow C level over the trailing window."""
        if not self._history:
            return None
        if self._history[-1][0] - self._history[0][0] < STABILITY_WINDOW_S * 0.9:
            return None
        vals = [v for _, v in self._history]
        return max(vals) - min(vals)

    def calibrate(self, reference_spl_db: float,
                  choices=DEFAULT_REFERENCE_SPL_CHOICES) -> CalibrationState:
        """Calibrate against the current signal; requires a stable slow level."""
        spread = self.stability_spread_db()
        if spread is None:
            raise CalibrationRejected(
                "need at least 2 s of signal before calibrating", spread_db=None)
        if spread >= STABILITY_SPREAD_DB:
            raise CalibrationRejected(
                f"slow level spread {spread:.2f} dB over the last "
                f"{STABILITY_WINDOW_S:.0f} s exceeds {STABILITY_SPREAD_DB} dB",
                spread_db=spread)
        state = calibrate_spl(self._history[-1][1], reference_spl_db, choices)
        self.calibration = state
        return state
