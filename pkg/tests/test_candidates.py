import numpy as np
import pytest
from hypothesis import given, strategies as st

from pitchscope.attributes import AttributeFrame
from pitchscope.candidates import (
    MAX_CANDIDATES,
    SALIENCE_FLOOR_DB,
    F0Candidate,
    best_candidate,
    find_fixed_points,
    freq_to_midi,
    midi_to_freq,
    note_reading,
    salience,
    select_candidates,
)

FS = 44100.0


def make_frame(bank, inst_freq, valid=None, snr=None):
    n = len(bank)
    inst = np.asarray(inst_freq, dtype=float)
    valid = np.ones(n, dtype=bool) if valid is None else np.asarray(valid)
    snr = np.full(n, 30.0) if snr is None else np.asarray(snr, dtype=float)
    nanmask = np.where(valid, 1.0, np.nan)
    return AttributeFrame(
        hop_index=0, hop_time_s=0.0,
        phase=np.zeros(n) * nanmask,
        magnitude=np.where(valid, 1.0, 0.0),
        inst_freq_hz=inst * nanmask,
        norm_inst_freq=inst / bank.centers_hz * nanmask,
        group_delay_s=np.zeros(n) * nanmask,
        norm_group_delay=np.zeros(n) * nanmask,
        valid=valid,
        gd_valid=valid.copy(),
        snr_db=snr,
    )


class TestNotes:
    def test_a4(self):
        r = note_reading(440.0)
        assert r.midi_nearest == 69
        assert r.note_name == "A4"
        assert r.cents_offset == pytest.approx(0.0, abs=1e-9)

    def test_middle_c(self):
        r = note_reading(261.626)
        assert r.midi_float == pytest.approx(60.0, abs=1e-3)
        assert r.note_name == "C4"

    def test_cents_range_at_quarter_tone(self):
        r = note_reading(440.0 * 2 ** (0.5 / 12.0))
        assert -50.0 <= r.cents_offset < 50.0
        r2 = note_reading(440.0 * 2 ** (0.49 / 12.0))
        assert r2.midi_nearest == 69
        assert r2.cents_offset == pytest.approx(49.0, abs=0.01)

    def test_accidentals(self):
        assert note_reading(466.164).note_name == "A#4"
        assert note_reading(92.499).note_name == "F#2"

    @given(st.floats(min_value=80.0, max_value=5120.0))
    def test_round_trip(self, f):
        assert midi_to_freq(freq_to_midi(f)) == pytest.approx(f, rel=1e-9)


class TestFindFixedPoints:
    def test_single_tone_crossing(self, bank):
        frame = make_frame(bank, np.full(len(bank), 220.0))
        cands = find_fixed_points(frame, bank)
        assert len(cands) == 1
        assert cands[0].freq_hz == pytest.approx(220.0, rel=2e-3)
        assert 0.0 <= cands[0].interpolation_fraction < 1.0
        lower = bank.centers_hz[cands[0].lower_channel_index]
        assert lower <= cands[0].freq_hz

    def test_exact_center_gives_exact_candidate(self, bank):
        f0 = bank.channels[12].center_hz
        frame = make_frame(bank, np.full(len(bank), f0))
        cands = find_fixed_points(frame, bank)
        assert len(cands) == 1
        assert cands[0].freq_hz == pytest.approx(f0, rel=1e-12)

    def test_invalid_channel_breaks_crossing(self, bank):
        inst = np.full(len(bank), 220.0)
        frame = make_frame(bank, inst)
        m = find_fixed_points(frame, bank)[0].lower_channel_index
        valid = np.ones(len(bank), dtype=bool)
        valid[m + 1] = False
        frame2 = make_frame(bank, inst, valid=valid)
        assert find_fixed_points(frame2, bank) == []

    def test_upward_crossing_ignored(self, bank):
        # deviation rising through zero marks no component
        inst = bank.centers_hz * 0.9
        inst[20:] = bank.centers_hz[20:] * 1.1
        frame = make_frame(bank, inst)
        assert find_fixed_points(frame, bank) == []

    def test_snr_interpolated(self, bank):
        snr = np.linspace(10.0, 46.0, len(bank))
        frame = make_frame(bank, np.full(len(bank), 220.0), snr=snr)
        c = find_fixed_points(frame, bank)[0]
        m, frac = c.lower_channel_index, c.interpolation_fraction
        assert c.snr_db == pytest.approx((1 - frac) * snr[m] + frac * snr[m + 1])

    def test_silence_empty(self, bank):
        frame = make_frame(bank, np.zeros(len(bank)),
                           valid=np.zeros(len(bank), dtype=bool))
        assert find_fixed_points(frame, bank) == []


class TestSelection:
    def test_top_four_by_snr(self):
        cands = [F0Candidate(100.0 * (i + 1), 10.0 + i, i, 0.0) for i in range(6)]
        sel = select_candidates(cands)
        assert len(sel) == MAX_CANDIDATES
        assert [c.snr_db for c in sel] == [15.0, 14.0, 13.0, 12.0]

    def test_two_stay_two(self):
        cands = [F0Candidate(200.0, 20.0, 0, 0.0), F0Candidate(400.0, 30.0, 5, 0.0)]
        sel = select_candidates(cands)
        assert [c.freq_hz for c in sel] == [400.0, 200.0]

    def test_tie_breaks_to_lower_frequency(self):
        cands = [F0Candidate(400.0, 20.0, 5, 0.0), F0Candidate(200.0, 20.0, 0, 0.0)]
        sel = select_candidates(cands)
        assert [c.freq_hz for c in sel] == [200.0, 400.0]

    def test_nan_snr_sorts_last(self):
        cands = [F0Candidate(200.0, float("nan"), 0, 0.0),
                 F0Candidate(400.0, 12.0, 5, 0.0)]
        sel = select_candidates(cands)
        assert sel[0].freq_hz == 400.0


class TestBestAndSalience:
    def test_best_above_threshold(self):
        sel = [F0Candidate(440.0, 40.0, 15, 0.5)]
        got = best_candidate(sel, 15.0)
        assert got is not None
        cand, note = got
        assert note.note_name == "A4"
        assert note.cents_offset == pytest.approx(0.0, abs=1e-9)

    def test_best_below_threshold_absent(self):
        sel = [F0Candidate(440.0, 10.0, 15, 0.5)]
        assert best_candidate(sel, 15.0) is None

    def test_salience_values(self):
        assert salience([]) == SALIENCE_FLOOR_DB
        assert salience([F0Candidate(200.0, 33.0, 0, 0.0)]) == 33.0
        assert salience([F0Candidate(200.0, float("nan"), 0, 0.0)]) == SALIENCE_FLOOR_DB
