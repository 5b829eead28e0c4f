"""Acceptance suite: one test per release criterion, one PASS line each.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines and timings.  Every tolerance is asserted exactly as released; the
suite needs no UI and no audio hardware.
"""
import struct
import sys
import time

import numpy as np
import pytest

from pitchscope.attributes import group_delay
from pitchscope.filterbank import process_hops
from pitchscope.levels import c_weight
from pitchscope.pipeline import analyze_buffer
from pitchscope.snr import calibrate, self_check
from pitchscope.wavio import read_wav, write_wav_24
from pitchscope.windows import SIXTERM_COEFFICIENTS, analytic_impulse_response

FS = 44100.0


def report(number: int, title: str, started: float, detail: str = ""):
    elapsed = time.perf_counter() - started
    line = f"ACCEPTANCE {number}: PASS  {title}  [{elapsed:.1f}s]"
    if detail:
        line += f"  ({detail})"
    print(line, file=sys.stderr)


def tone(freq, duration=1.0, amplitude=1.0):
    t = np.arange(int(round(duration * FS))) / FS
    return amplitude * np.sin(2.0 * np.pi * freq * t)


def post_warm(frames):
    return [f for f in frames if not f.warm_up]


def test_criterion_1_envelope_identities():
    started = time.perf_counter()
    assert abs(sum(SIXTERM_COEFFICIENTS) - 1.0) < 1e-9
    alt = sum((-1) ** k * a for k, a in enumerate(SIXTERM_COEFFICIENTS))
    assert abs(alt) < 1e-9
    resp = analytic_impulse_response(441.0, 1.05, FS)
    assert resp.samples[resp.center_index] == pytest.approx(1.0 + 0.0j, abs=1e-9)
    t = resp.times_s
    mag_pos = abs(np.sum(resp.samples * np.exp(-2j * np.pi * 441.0 * t)))
    mag_neg = abs(np.sum(resp.samples * np.exp(+2j * np.pi * 441.0 * t)))
    rejection_db = 20.0 * np.log10(mag_pos / mag_neg)
    assert rejection_db >= 80.0
    report(1, "envelope identities + analyticity", started,
           f"rejection {rejection_db:.0f} dB")


def test_criterion_2_snr_calibration_reproduction():
    started = time.perf_counter()
    grid = list(range(10, 81, 5))
    six = calibrate("sixterm", 1.05, FS, snr_grid=grid)
    six_rows = self_check(six, snr_grid=grid)
    six_errs = {true: err for true, _, err in six_rows}
    assert all(abs(err) <= 3.0 for err in six_errs.values()), six_errs

    hann = calibrate("hann", 1.05, FS, snr_grid=grid)
    hann_rows = self_check(hann, snr_grid=grid)
    hann_worst = max(abs(err) for _, _, err in hann_rows)
    assert hann_worst > 3.0, hann_rows
    report(2, "SNR estimates 10..80 dB within +-3 dB (six-term), Hann fails",
           started, f"six-term worst {max(abs(e) for e in six_errs.values()):.2f} dB, "
                    f"hann worst {hann_worst:.1f} dB")


def test_criterion_3_pitch_accuracy():
    started = time.perf_counter()
    for f0 in (110.0, 220.0, 440.0, 880.0):
        frames = post_warm(analyze_buffer(tone(f0)))
        assert len(frames) > 100
        good = sum(1 for f in frames if f.best is not None
                   and abs(f.best.freq_hz - f0) / f0 < 0.005)
        assert good / len(frames) >= 0.95, f"{f0} Hz: {good}/{len(frames)}"
    base = {f.hop_index: f.best.freq_hz
            for f in post_warm(analyze_buffer(tone(220.0, 0.6))) if f.best}
    for gain in (0.1, 10.0):
        scaled = {f.hop_index: f.best.freq_hz
                  for f in post_warm(analyze_buffer(tone(220.0, 0.6, gain)))
                  if f.best}
        common = sorted(set(base) & set(scaled))
        assert common
        worst = max(abs(scaled[n] - base[n]) / base[n] for n in common)
        assert worst < 1e-4, f"gain {gain}: {worst}"
    report(3, "pure tones 110..880 Hz within 0.5%, amplitude-invariant", started)


def test_criterion_4_fixed_point_contract():
    started = time.perf_counter()
    frames = post_warm(analyze_buffer(tone(200.0) + tone(320.0)))
    assert frames
    ok200 = ok320 = 0
    for f in frames:
        assert len(f.candidates) <= 4
        if f.candidates:
            near200 = min(f.candidates, key=lambda c: abs(np.log2(c.freq_hz / 200.0)))
            near320 = min(f.candidates, key=lambda c: abs(np.log2(c.freq_hz / 320.0)))
            ok200 += abs(near200.freq_hz - 200.0) / 200.0 < 0.01
            ok320 += abs(near320.freq_hz - 320.0) / 320.0 < 0.01
    assert ok200 / len(frames) >= 0.95
    assert ok320 / len(frames) >= 0.95

    silent = analyze_buffer(np.zeros(int(0.5 * FS)))
    assert all(len(f.candidates) == 0 for f in silent)
    assert all(len(f.candidates) <= 4 for f in silent)
    report(4, "two-tone 200+320 Hz within 1%, <=4 candidates, silence empty",
           started, f"hit rates {ok200 / len(frames):.2f}/{ok320 / len(frames):.2f}")


def test_criterion_5_group_delay_properties(bank):
    started = time.perf_counter()
    n0 = 9000
    x = np.zeros(14000)
    x[n0] = 1.0
    hops = process_hops(bank, x, 32)
    for m in (6, 12, 18):
        ch = bank.channels[m]
        period = 1.0 / ch.center_hz
        support = 2 * ch.response.half_length / FS
        checked = 0
        for i, n in enumerate(hops.hop_indices):
            t_rel = (n - n0) / FS
            if abs(t_rel) > 0.3 * support:
                continue
            tau = group_delay(hops.y0[i, m], hops.y0[i, m + 1],
                              bank.delta_omega[m])
            assert abs(tau - (-t_rel)) <= 0.05 * period
            checked += 1
        assert checked >= 3

    m = 12  # 320 Hz channel
    hops = process_hops(bank, tone(bank.channels[m].center_hz, 0.8), 220)
    keep = ~hops.warm_up
    keep &= hops.hop_indices <= hops.hop_indices[keep][0] + int(0.5 * FS)
    tau = group_delay(hops.y0[keep, m], hops.y0[keep, m + 1], bank.delta_omega[m])
    period = 1.0 / bank.channels[m].center_hz
    std_frac = np.std(tau) / period
    assert std_frac < 0.02
    report(5, "group delay points at the impulse, constant for a tone",
           started, f"tone gd std {std_frac:.2e} periods")


def test_criterion_6_throughput(bank):
    started = time.perf_counter()
    from pitchscope.cli import bench_full_bank, bench_single_estimator
    from pitchscope.pipeline import AnalyzerSettings

    single = bench_single_estimator(5.0, AnalyzerSettings())
    assert single >= 50.0, f"single-estimator {single:.1f}x < 50x"
    full = bench_full_bank(5.0, AnalyzerSettings())
    assert full >= 1.0, f"full bank {full:.1f}x < 1x"
    report(6, "throughput floors met", started,
           f"single {single:.0f}x, full bank {full:.1f}x")


def test_criterion_7_wav_contract(tmp_path):
    started = time.perf_counter()
    path = tmp_path / "work.wav"
    x = np.clip(np.rint(0.8 * tone(220.0, 10.0) * 2 ** 23), -2 ** 23,
                2 ** 23 - 1) / 2 ** 23
    nbytes = write_wav_24(path, x, int(FS))
    assert nbytes == 44 + 441000 * 3
    assert path.stat().st_size == nbytes
    blob = path.read_bytes()
    assert blob[:4] == b"RIFF" and blob[8:12] == b"WAVE"
    fmt = struct.unpack("<IHHIIHH", blob[16:36])
    assert fmt == (16, 1, 1, 44100, 44100 * 3, 3, 24)
    back, fs = read_wav(path)
    assert fs == 44100
    np.testing.assert_array_equal(back, x)
    report(7, "24-bit/44.1 kHz WAV, sample-exact round trip, exact size", started)


def test_criterion_8_c_weighting():
    started = time.perf_counter()
    gains = {}
    for freq, expect, tol in ((1000.0, 0.0, 0.1), (31.5, -3.0, 0.3),
                              (8000.0, -3.0, 0.3)):
        x = tone(freq)
        y = c_weight(x, FS)
        seg = slice(len(x) // 4, 3 * len(x) // 4)
        gain = 20 * np.log10(np.sqrt(np.mean(y[seg] ** 2) / np.mean(x[seg] ** 2)))
        assert gain == pytest.approx(expect, abs=tol), f"{freq} Hz: {gain:.2f} dB"
        gains[freq] = gain
    report(8, "C-weighting 0 dB at 1 kHz, -3 dB at 31.5 Hz and 8 kHz", started,
           ", ".join(f"{f:g} Hz: {g:+.2f}" for f, g in gains.items()))


def test_criterion_9_cli_service_equivalence(tmp_path):
    started = time.perf_counter()
    from pitchscope.cli import main
    from pitchscope.service import StreamService
    from pitchscope.wire import decode_records

    wav = tmp_path / "in.wav"
    write_wav_24(wav, 0.5 * tone(220.0, 1.0), int(FS))

    out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["analyze", str(wav), "-o", str(out1)]) == 0
    assert main(["analyze", str(wav), "-o", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()  # bit-identical reruns

    svc = StreamService()
    sub = svc.subscribe(depth=4096)
    svc.run_wav(str(wav))
    frames = []
    while True:
        payload = sub.get(timeout=0.05)
        if payload is None:
            break
        recs, _ = decode_records(payload)
        frames += [r for r in recs if r["type"] == "frame"]

    rows = out1.read_text().strip().splitlines()[1:]
    assert len(rows) == len(frames)
    worst = 0.0
    for row, rec in zip(rows, frames):
        cells = row.split(",")
        assert float(cells[0]) == pytest.approx(rec["t_ms"] / 1000.0, abs=1e-9)
        for i in range(4):
            f_cell, snr_cell = cells[1 + 2 * i], cells[2 + 2 * i]
            if i < len(rec["candidates"]):
                cf, csnr = rec["candidates"][i]
                worst = max(worst, abs(float(f_cell) - cf))
                if snr_cell and csnr is not None:
                    worst = max(worst, abs(float(snr_cell) - csnr))
            else:
                assert f_cell == ""
        assert float(cells[9]) == pytest.approx(rec["salience_db"], abs=1e-9)
        best_cell = cells[10]
        if rec["best"] is None:
            assert best_cell == ""
        else:
            worst = max(worst, abs(float(best_cell) - rec["best"]["freq_hz"]))
    assert worst <= 1e-9
    report(9, "CLI analyze equals published service frames", started,
           f"{len(frames)} frames, worst diff {worst:.1e}")
