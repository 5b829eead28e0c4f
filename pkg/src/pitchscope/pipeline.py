"""Per-hop analysis pipeline shared by the offline CLI and the live service.

The analyzer consumes raw samples in arbitrary chunks and emits one
:class:`AnalysisFrame` per hop instant.  Internally the filterbank runs at
full rate; per-sample phase increments are accumulated so that candidate
extraction can use a trailing winding mean of the instantaneous frequency,
which is immune to beating between concurrent components.  Hop-pair
attributes (the two-sample IF, cross-channel group delay) feed the SNR
estimator unchanged.

Internal block sizes are fixed, so the emitted frames are bit-identical for
any chunking of the same input.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .attributes import AttributeFrame, assemble_attribute_frame
from .candidates import (
    DEFAULT_SALIENCE_THRESHOLD_DB,
    F0Candidate,
    best_candidate,
    find_fixed_points,
    salience,
    select_candidates,
)
from .filterbank import (
    DEFAULT_C_MAG,
    DEFAULT_F_HI,
    DEFAULT_F_LO,
    DEFAULT_HOP,
    DEFAULT_PER_OCTAVE,
    DEFAULT_SAMPLE_RATE,
    ChannelBank,
    StreamingFilterbank,
    design_bank,
)
from .levels import LevelFrame, LevelMeter
from .snr import (
    DEFAULT_DURATION_S,
    DEFAULT_GRID_DB,
    DEFAULT_SEED,
    DEFAULT_TEST_FREQ_HZ,
    DEFAULT_WINDOW_FRAMES,
    CalibrationTable,
    default_contour_table,
    finish_table,
    synthesize_mixture,
    validate_grid,
)

#: Minimum increment span before the winding mean replaces the raw estimate.
_MIN_MEAN_SPAN = 32


@dataclass(frozen=True)
class AnalyzerSettings:
    sample_rate_hz: float = DEFAULT_SAMPLE_RATE
    hop_samples: int = DEFAULT_HOP
    f_lo: float = DEFAULT_F_LO
    f_hi: float = DEFAULT_F_HI
    per_octave: int = DEFAULT_PER_OCTAVE
    c_mag: float = DEFAULT_C_MAG
    envelope: str = "sixterm"
    window_frames: int = DEFAULT_WINDOW_FRAMES
    contour_window_frames: int = 8
    if_mean_window_s: float = 0.05
    salience_threshold_db: float = DEFAULT_SALIENCE_THRESHOLD_DB
    snippet_periods: float = 4.0
    spectrum_window: int = 2048
    spectrum_f_lo: float = 50.0
    spectrum_f_hi: float = 8000.0
    spectrum_bins_per_octave: int = 24
    compute_levels: bool = True
    compute_spectrum: bool = True
    compute_snippet: bool = True


@dataclass(frozen=True)
class BestReading:
    freq_hz: float
    snr_db: float
    midi_float: float
    note_name: str
    cents_offset: float


@dataclass
class AnalysisFrame:
    """Wire unit: everything a display needs for one hop instant."""

    t_ms: float
    hop_index: int
    warm_up: bool
    candidates: list[F0Candidate]
    best: BestReading | None
    salience_db: float
    level: LevelFrame | None
    spectrum_db: np.ndarray | None
    aligned_waveform: np.ndarray
    attributes: AttributeFrame


def spectrum_bin_centers(settings: AnalyzerSettings) -> np.ndarray:
    per = settings.spectrum_bins_per_octave
    lo, hi = settings.spectrum_f_lo, settings.spectrum_f_hi
    count = int(np.floor(per * np.log2(hi / lo))) + 1
    return lo * 2.0 ** (np.arange(count) / per)


class _SpectrumAnalyzer:
    """Short-window power spectrum aggregated to fractional-octave bins."""

    def __init__(self, settings: AnalyzerSettings):
        self.window = settings.spectrum_window
        self.fs = settings.sample_rate_hz
        self.centers = spectrum_bin_centers(settings)
        self._hann = np.hanning(self.window)
        self._amp_scale = 2.0 / self._hann.sum()
        freqs = np.fft.rfftfreq(self.window, 1.0 / self.fs)
        per = settings.spectrum_bins_per_octave
        pos = np.maximum(freqs, 1e-6)
        j = np.rint(per * np.log2(pos / settings.spectrum_f_lo)).astype(int)
        j[freqs <= 0] = -1
        j[(j < 0) | (j >= len(self.centers))] = -1
        self._bin_of = j
        self._freqs = freqs

    def compute(self, block: np.ndarray) -> np.ndarray:
        """dB power per fractional-octave bin for one trailing window."""
        spec = np.fft.rfft(block * self._hann)
        power = np.abs(spec) ** 2 * (self._amp_scale ** 2 / 2.0)  # component RMS^2
        ok = self._bin_of >= 0
        sums = np.bincount(self._bin_of[ok], weights=power[ok],
                           minlength=len(self.centers))
        counts = np.bincount(self._bin_of[ok], minlength=len(self.centers))
        out = np.empty(len(self.centers))
        filled = counts > 0
        out[filled] = sums[filled] / counts[filled]
        if not filled.all():
            out[~filled] = np.interp(self.centers[~filled], self._freqs, power)
        return 10.0 * np.log10(np.maximum(out, 1e-14))


class Analyzer:
    """Streaming hop analyzer over one channel bank.

    feed() accepts any chunking; finish() flushes the file tail in offline
    use.  Frames appear once the filterbank has enough lookahead, which is
    ``max_half_length + block + 1`` samples past the hop instant.
    """

    def __init__(self, settings: AnalyzerSettings | None = None,
                 bank: ChannelBank | None = None,
                 table: CalibrationTable | None = None,
                 meter: LevelMeter | None = None,
                 _measurement_mode: bool = False):
        self.settings = settings or AnalyzerSettings()
        s = self.settings
        self.bank = bank or design_bank(s.f_lo, s.f_hi, s.per_octave, s.c_mag,
                                        s.sample_rate_hz, s.envelope)
        if _measurement_mode:
            self.table = None
        else:
            self.table = table or default_contour_table()
            if self.table.measure != "contour":
                raise ValueError(
                    "the analyzer ranks candidates with a contour-measure "
                    f"table; got measure={self.table.measure!r}")
            self.table.check_bank(self.bank.envelope, self.bank.c_mag,
                                  self.bank.sample_rate_hz)
        self.meter = meter if meter is not None else (
            LevelMeter(s.sample_rate_hz) if s.compute_levels else None)
        self._fb = StreamingFilterbank(self.bank)
        self._spectrum = _SpectrumAnalyzer(s) if s.compute_spectrum else None

        nch = len(self.bank)
        fs = s.sample_rate_hz
        self._nch = nch
        self._fs = fs
        self._cmax = self.bank.max_half_length
        self._mean_span = int(round(s.if_mean_window_s * fs))
        self._clean_start = np.array(
            [ch.response.half_length + 1 for ch in self.bank.channels])
        self._centers = self.bank.centers_hz

        npair = max(nch - 1, 1)
        self._y = np.zeros((nch, 0), dtype=complex)
        self._ybase = 0                       # absolute index of self._y[:, 0]
        self._cs = np.zeros((nch, 1))         # cumulative increments, cs[0] abs idx -1
        self._gcs = np.zeros((npair, 1), dtype=complex)
        self._csbase = -1                     # shared base for both cumsums
        self._prev_y = np.zeros(nch, dtype=complex)
        k = self.settings.contour_window_frames - 1
        idx = np.arange(k) - (k - 1) / 2.0
        basis = np.stack([idx ** p for p in range(3)], axis=1)
        self._contour_proj = basis @ np.linalg.pinv(basis)
        self._nu_rows: list[np.ndarray] = []

        self._xneed = max(s.spectrum_window,
                          int(np.ceil((s.snippet_periods + 1.5) * fs / (s.f_lo * 0.9)))
                          ) + s.hop_samples + 8
        self._x = np.zeros(0)
        self._xbase = 0
        self._fed = 0

        self._next_hop = 0
        self._last_level_end = -1

    @property
    def lookahead_samples(self) -> int:
        return self._fb.lookahead_samples + 1

    def feed(self, samples: np.ndarray) -> list[AnalysisFrame]:
        samples = np.asarray(samples, dtype=float)
        self._append_x(samples)
        self._fed += len(samples)
        frames: list[AnalysisFrame] = []
        for start, block in self._fb.feed(samples):
            frames.extend(self._consume(start, block))
        return frames

    def finish(self) -> list[AnalysisFrame]:
        """Flush the stream end; emits hops fully covered by real input."""
        last_hop = self._fed - 2 - self._cmax
        if last_hop < 0:
            return []
        frames = []
        for start, block in self._fb.flush(last_hop + 1):
            frames.extend(self._consume(start, block, hop_limit=last_hop))
        return frames

    # -- internals ---------------------------------------------------------

    def _append_x(self, samples):
        self._x = np.concatenate([self._x, samples])

    def _xspan(self, lo: int, hi: int) -> np.ndarray:
        """Input samples for absolute [lo, hi); zero-padded below index 0."""
        if lo >= hi:
            return np.zeros(0)
        pad = -min(lo, 0)
        lo = max(lo, 0)
        return np.concatenate([np.zeros(pad), self._x[lo - self._xbase:hi - self._xbase]])

    def _consume(self, start: int, block: np.ndarray, hop_limit=None):
        prev = self._prev_y
        inc = np.angle(block * np.conj(np.concatenate([prev[:, None],
                                                       block[:, :-1]], axis=1)))
        self._prev_y = block[:, -1].copy()
        csnew = self._cs[:, -1][:, None] + np.cumsum(inc, axis=1)
        self._cs = np.concatenate([self._cs, csnew], axis=1)
        if self._nch > 1:
            cross = block[1:] * np.conj(block[:-1])
            gnew = self._gcs[:, -1][:, None] + np.cumsum(cross, axis=1)
            self._gcs = np.concatenate([self._gcs, gnew], axis=1)
        self._y = np.concatenate([self._y, block], axis=1) if self._y.size else block
        if self._y.shape[1] != start + block.shape[1] - self._ybase:
            raise AssertionError("filterbank emitted a non-contiguous block")

        frames = []
        end = start + block.shape[1] - 1
        while self._next_hop + 1 <= end:
            if hop_limit is not None and self._next_hop > hop_limit:
                break
            frames.append(self._process_hop(self._next_hop))
            self._next_hop += self.settings.hop_samples

        # trim rolling state relative to the hop cursor, not the feed cursor
        keep_from = self._next_hop - self._mean_span - 4
        if keep_from > self._ybase:
            cut = keep_from - self._ybase
            self._y = self._y[:, cut:]
            self._ybase = keep_from
        if keep_from > self._csbase:
            cut = keep_from - self._csbase
            if cut < self._cs.shape[1]:
                self._cs = self._cs[:, cut:]
                self._gcs = self._gcs[:, cut:]
                self._csbase = keep_from
        keep_x = self._next_hop - self._xneed
        if keep_x > self._xbase:
            self._x = self._x[keep_x - self._xbase:]
            self._xbase = keep_x
        return frames

    def _cs_at(self, idx: np.ndarray | int) -> np.ndarray:
        return np.take(self._cs, np.asarray(idx) - self._csbase, axis=1) \
            if np.ndim(idx) else self._cs[:, idx - self._csbase]

    def _process_hop(self, n: int) -> AnalysisFrame:
        s = self.settings
        y0 = self._y[:, n - self._ybase]
        y1 = self._y[:, n + 1 - self._ybase]
        warm = n < self._cmax
        frame = assemble_attribute_frame(self.bank, (y0, y1), hop_index=n,
                                         warm_up=warm)

        # trailing winding mean of the per-sample phase increments; gather
        # indices are clamped because channels still warming up have their
        # clean-start beyond the consumed span (they are masked out)
        starts = np.maximum(n - self._mean_span, self._clean_start)
        span = n - starts
        usable = span >= _MIN_MEAN_SPAN
        idx = np.clip(starts - self._csbase, 0, self._cs.shape[1] - 1)
        mean_if = np.array(frame.inst_freq_hz)
        if usable.any():
            cs_n = self._cs[:, n - self._csbase]
            cs_s = np.take_along_axis(self._cs, idx[:, None], axis=1)[:, 0]
            wind = (cs_n - cs_s) / np.maximum(span, 1) * self._fs / (2 * np.pi)
            mean_if[usable] = wind[usable]
        frame.mean_inst_freq_hz = np.where(frame.valid, mean_if, np.nan)

        # coherent trailing mean of the adjacent-channel cross products
        mean_gd = np.array(frame.group_delay_s)
        if self._nch > 1:
            g_usable = usable[:-1]
            if g_usable.any():
                g_n = self._gcs[:, n - self._csbase]
                g_s = np.take_along_axis(self._gcs, idx[:-1, None], axis=1)[:, 0]
                tau = -np.angle(g_n - g_s) / self.bank.delta_omega
                mean_gd[:-1][g_usable] = tau[g_usable]
                mean_gd[-1] = mean_gd[-2]
            mean_gd = np.where(frame.gd_valid, mean_gd, np.nan)
        frame.mean_norm_group_delay = mean_gd * self._centers

        self._fill_snr(frame)

        cands = select_candidates(find_fixed_points(frame, self.bank))
        best = best_candidate(cands, s.salience_threshold_db)
        best_reading = None
        if best is not None:
            cand, note = best
            best_reading = BestReading(cand.freq_hz, cand.snr_db, note.midi_float,
                                       note.note_name, note.cents_offset)

        level = None
        if self.meter is not None:
            block = self._xspan(self._last_level_end + 1, n + 1)
            self._last_level_end = n
            if len(block):
                level = self.meter.process_block(block)
            else:
                level = self.meter.last

        spectrum = None
        if self._spectrum is not None:
            xwin = self._xspan(n - s.spectrum_window + 1, n + 1)
            spectrum = self._spectrum.compute(xwin)

        snippet = np.zeros(0)
        if s.compute_snippet and best_reading is not None:
            snippet = self._aligned_snippet(n, best_reading.freq_hz, frame)

        return AnalysisFrame(
            t_ms=n / self._fs * 1000.0,
            hop_index=n,
            warm_up=warm,
            candidates=cands,
            best=best_reading,
            salience_db=salience(cands),
            level=level,
            spectrum_db=spectrum,
            aligned_waveform=snippet,
            attributes=frame,
        )

    def _fill_snr(self, frame: AttributeFrame):
        # Candidate ranking scores the stability of the smoothed pitch
        # contour: the RMS residual after removing a cubic trend from each
        # channel's trailing mean-IF window.  Smooth musical motion (glides,
        # vibrato) fits the polynomial and scores clean; noise does not.
        # The hop-pair estimator stays available through the snr module,
        # where the calibration experiment validates it.
        w = self.settings.contour_window_frames
        self._nu_rows.append(frame.mean_inst_freq_hz / self._centers)
        if len(self._nu_rows) > w:
            self._nu_rows.pop(0)
        if len(self._nu_rows) < w:
            return
        diffs = np.diff(np.stack(self._nu_rows), axis=0)
        resid = diffs - self._contour_proj @ diffs
        value = np.sqrt(np.mean(resid ** 2, axis=0))
        value = np.where(frame.valid, value, np.nan)
        frame.snr_variation = value
        if self.table is not None:
            frame.snr_db = self.table.estimate_many(value)

    def _aligned_snippet(self, n: int, f0: float, frame: AttributeFrame) -> np.ndarray:
        s = self.settings
        period = self._fs / f0
        total = int(round(s.snippet_periods * period))
        if total < 4:
            return np.zeros(0)
        m = int(np.argmin(np.abs(np.log2(self._centers / f0))))
        phi = frame.phase[m]
        if not np.isfinite(phi):
            return np.zeros(0)
        s0 = n - total + 1
        # phase at s0 in periods, then shift the start back onto a zero crossing
        psi = (phi / (2.0 * np.pi) + (s0 - n) * f0 / self._fs) % 1.0
        start = int(round(s0 - psi * period))
        if start < 0:
            return np.zeros(0)
        return self._xspan(start, start + total)


def analyze_buffer(samples: np.ndarray, settings: AnalyzerSettings | None = None,
                   table: CalibrationTable | None = None,
                   bank: ChannelBank | None = None) -> list[AnalysisFrame]:
    """Run a whole buffer through a fresh analyzer, flushing the tail."""
    analyzer = Analyzer(settings=settings, bank=bank, table=table)
    frames = analyzer.feed(samples)
    frames.extend(analyzer.finish())
    return frames


def measure_contour_variation(envelope: str, c_mag: float, f_s: float, snr_db,
                              test_freq_hz: float = DEFAULT_TEST_FREQ_HZ,
                              hop_samples: int = DEFAULT_HOP,
                              window_frames: int = 8,
                              duration_s: float = DEFAULT_DURATION_S,
                              seed: int = DEFAULT_SEED) -> float:
    """Median on-center contour variation for one synthetic mixture."""
    point = 0 if snr_db is None else int(round(snr_db * 1000))
    rng = np.random.default_rng([seed, point])
    x = synthesize_mixture(snr_db, test_freq_hz, f_s, duration_s, rng)
    bank = design_bank(test_freq_hz, test_freq_hz * 2 ** (1 / 6.0), 6,
                       c_mag, f_s, envelope)
    settings = AnalyzerSettings(
        sample_rate_hz=f_s, hop_samples=hop_samples,
        contour_window_frames=window_frames, c_mag=c_mag, envelope=envelope,
        compute_levels=False, compute_spectrum=False, compute_snippet=False)
    analyzer = Analyzer(settings=settings, bank=bank, _measurement_mode=True)
    frames = analyzer.feed(x)
    frames.extend(analyzer.finish())
    values = np.array([f.attributes.snr_variation[0]
                       for f in frames
                       if not f.warm_up and f.attributes.snr_variation is not None])
    return float(np.nanmedian(values))


def calibrate_contour(envelope: str, c_mag: float, f_s: float,
                      snr_grid=DEFAULT_GRID_DB,
                      test_freq_hz: float = DEFAULT_TEST_FREQ_HZ,
                      hop_samples: int = DEFAULT_HOP,
                      window_frames: int = 8,
                      duration_s: float = DEFAULT_DURATION_S,
                      seed: int = DEFAULT_SEED) -> CalibrationTable:
    """Build the contour table that the analyzer ranks candidates with."""
    grid = validate_grid(snr_grid)
    raw = [(measure_contour_variation(envelope, c_mag, f_s, s, test_freq_hz,
                                      hop_samples, window_frames, duration_s,
                                      seed), s)
           for s in grid]
    return finish_table(raw, envelope=envelope, c_mag=c_mag, sample_rate_hz=f_s,
                        test_freq_hz=test_freq_hz, hop_samples=hop_samples,
                        window_frames=window_frames, seed=seed,
                        duration_s=duration_s, measure="contour")
