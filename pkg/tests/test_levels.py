import math

import numpy as np
import pytest
from scipy.signal import freqz

from pitchscope.errors import CalibrationRejected
from pitchscope.levels import (
    DISPLAY_FLOOR_DB,
    LevelMeter,
    c_weight,
    c_weighting_analog_gain,
    c_weighting_design,
    calibrate_spl,
)

FS = 44100.0


def tone_gain_db(freq_hz, f_s=FS, duration=1.0):
    t = np.arange(int(f_s * duration)) / f_s
    x = np.sin(2 * np.pi * freq_hz * t)
    y = c_weight(x, f_s)
    seg = slice(len(x) // 4, 3 * len(x) // 4)
    return 20 * np.log10(np.sqrt(np.mean(y[seg] ** 2) / np.mean(x[seg] ** 2)))


class TestCWeighting:
    def test_unity_at_1khz(self):
        assert tone_gain_db(1000.0) == pytest.approx(0.0, abs=0.1)

    def test_minus_3db_points(self):
        # IEC 61672 table values, from the analog prototype
        assert tone_gain_db(31.5) == pytest.approx(-3.0, abs=0.3)
        assert tone_gain_db(8000.0) == pytest.approx(-3.0, abs=0.3)

    def test_matches_analog_curve_20hz_to_16khz(self):
        b, a, fir = c_weighting_design(FS)
        f = np.linspace(20.0, 16000.0, 1200)
        w = 2 * np.pi * f / FS
        _, h1 = freqz(b, a, worN=w)
        _, h2 = freqz(fir, [1.0], worN=w)
        dev = 20 * np.log10(np.abs(h1 * h2)) - 20 * np.log10(
            c_weighting_analog_gain(f))
        assert np.abs(dev).max() <= 0.3

    def test_rejects_low_sample_rate(self):
        with pytest.raises(ValueError):
            c_weight(np.zeros(100), 16000.0)


class TestLevelFrame:
    def test_full_scale_square(self):
        meter = LevelMeter(FS)
        x = np.sign(np.sin(2 * np.pi * 500.0 * np.arange(8820) / FS))
        x[x == 0] = 1.0
        frame = meter.process_block(x)
        assert frame.dbfs_peak == pytest.approx(0.0, abs=1e-9)
        assert frame.dbfs_rms == pytest.approx(0.0, abs=1e-3)

    def test_full_scale_sine_rms(self, make_tone):
        meter = LevelMeter(FS)
        frame = meter.process_block(make_tone(997.0, 0.5))
        assert frame.dbfs_rms == pytest.approx(-3.01, abs=0.01)

    def test_silence_floors(self):
        meter = LevelMeter(FS)
        frame = meter.process_block(np.zeros(4410))
        assert frame.dbfs_peak == DISPLAY_FLOOR_DB
        assert frame.dbfs_rms == DISPLAY_FLOOR_DB
        assert frame.spl_fast_db is None and frame.spl_slow_db is None
        assert not frame.calibrated

    def test_gain_shifts_every_reading(self, make_tone):
        readings = []
        for gain in (1.0, 0.25):
            meter = LevelMeter(FS)
            x = make_tone(440.0, 2.0, amplitude=gain)
            for i in range(0, len(x), 2205):
                frame = meter.process_block(x[i:i + 2205])
            readings.append(frame)
        shift = 20 * math.log10(0.25)
        a, b = readings
        assert b.dbfs_peak - a.dbfs_peak == pytest.approx(shift, abs=0.01)
        assert b.dbfs_rms - a.dbfs_rms == pytest.approx(shift, abs=0.01)
        assert b.dbfs_rms_smoothed - a.dbfs_rms_smoothed == pytest.approx(shift, abs=0.01)
        assert b.cweight_fast_dbfs - a.cweight_fast_dbfs == pytest.approx(shift, abs=0.01)
        assert b.cweight_slow_dbfs - a.cweight_slow_dbfs == pytest.approx(shift, abs=0.01)

    @pytest.mark.parametrize("which,tau", [("fast", 0.125), ("slow", 1.0)])
    def test_ballistics_time_constant(self, make_tone, which, tau):
        meter = LevelMeter(FS)
        x = make_tone(1000.0, 4.0)
        block = 441  # 10 ms resolution
        levels = []
        for i in range(0, len(x), block):
            frame = meter.process_block(x[i:i + block])
            levels.append(frame.cweight_fast_dbfs if which == "fast"
                          else frame.cweight_slow_dbfs)
        final_power = 10 ** (levels[-1] / 10.0)
        target = (1.0 - math.exp(-1.0)) * final_power
        crossed = next(i for i, db in enumerate(levels)
                       if 10 ** (db / 10.0) >= target)
        t_crossed = (crossed + 1) * block / FS
        assert t_crossed == pytest.approx(tau, rel=0.10)


class TestCalibration:
    def test_offset_arithmetic(self):
        state = calibrate_spl(-30.0, 70.0)
        assert state.offset_db == pytest.approx(100.0)
        assert calibrate_spl(0.0, 70.0).offset_db == pytest.approx(70.0)

    def test_reference_must_be_allowed(self):
        with pytest.raises(ValueError):
            calibrate_spl(-30.0, 72.0)

    def test_spl_readings_after_calibration(self, make_tone):
        meter = LevelMeter(FS)
        x = make_tone(1000.0, 6.0, amplitude=0.1)
        for i in range(0, len(x), 4410):
            meter.process_block(x[i:i + 4410])
        state = meter.calibrate(70.0)
        frame = meter.process_block(x[:4410])
        assert frame.calibrated
        assert frame.spl_slow_db == pytest.approx(
            frame.cweight_slow_dbfs + state.offset_db)
        # 5 dB more input level reads 5 dB more SPL
        meter2 = LevelMeter(FS, calibration=state)
        y = make_tone(1000.0, 6.0, amplitude=0.1 * 10 ** (5 / 20.0))
        for i in range(0, len(y), 4410):
            frame2 = meter2.process_block(y[i:i + 4410])
        assert frame2.spl_slow_db - frame.spl_slow_db == pytest.approx(5.0, abs=0.2)

    def test_unstable_signal_rejected(self, make_tone):
        meter = LevelMeter(FS)
        x = make_tone(1000.0, 6.0)
        ramp = np.linspace(0.02, 1.0, len(x))  # sweeping level
        for i in range(0, len(x), 4410):
            meter.process_block((x * ramp)[i:i + 4410])
        with pytest.raises(CalibrationRejected) as exc:
            meter.calibrate(70.0)
        assert exc.value.spread_db is not None and exc.value.spread_db > 1.0

    def test_too_little_history_rejected(self, make_tone):
        meter = LevelMeter(FS)
        meter.process_block(make_tone(1000.0, 0.5))
        with pytest.raises(CalibrationRejected):
            meter.calibrate(70.0)
