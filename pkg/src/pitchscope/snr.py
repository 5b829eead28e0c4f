"""Per-channel SNR estimation from phase-attribute stability.

A sinusoid that dominates a channel makes both the instantaneous frequency
and the cross-channel group delay of that channel temporally constant, so
the RMS of their hop-to-hop variations measures how much the channel output
deviates from a clean sinusoid.  The raw measure is mapped to dB through a
calibration table built from synthetic sinusoid-plus-noise mixtures at
known SNRs; the table absorbs hop size, smoothing span and envelope shape.
"""
from __future__ import annotations

import datetime as _dt
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .attributes import assemble_attribute_frame
from .errors import CalibrationError, CalibrationMismatch
from .filterbank import DEFAULT_HOP, design_bank, process_hops

DEFAULT_WINDOW_FRAMES = 4          # 20 ms of hops at the default hop size
DEFAULT_TEST_FREQ_HZ = 120.0
DEFAULT_GRID_DB = tuple(range(10, 81, 5))
DEFAULT_DURATION_S = 1.5
DEFAULT_SEED = 20260808
SNR_CEILING_DB = 80.0

#: Raw-curve increases beyond this factor between adjacent grid points are
#: treated as calibration failure rather than measurement jitter.
_MONOTONE_SLACK = 1.25

_FORMAT_TAG = "pitchscope snr calibration v1"


@dataclass(frozen=True)
class VariationMeasure:
    """RMS mixed deviation of normalized IF and GD over one window."""

    channel_index: int
    value: float
    window_frames: int


def mix_variation(norm_if_series, norm_gd_series, window_frames: int,
                  channel_index: int = 0) -> VariationMeasure:
    """Mix hop-to-hop variations of the two normalized attributes.

    ``value = sqrt(mean((d_nu**2 + d_tau**2) / 2))`` over the window's first
    differences, where the series are one channel's normalized attributes at
    consecutive hops.
    """
    nu = np.asarray(norm_if_series, dtype=float)
    tau = np.asarray(norm_gd_series, dtype=float)
    if window_frames < 2:
        raise ValueError(f"window_frames must be >= 2, got {window_frames}")
    if len(nu) < window_frames or len(tau) < window_frames:
        raise ValueError(
            f"need at least {window_frames} frames, got {len(nu)}/{len(tau)}")
    nu = nu[-window_frames:]
    tau = tau[-window_frames:]
    d2 = (np.diff(nu) ** 2 + np.diff(tau) ** 2) / 2.0
    return VariationMeasure(channel_index, float(np.sqrt(np.mean(d2))), window_frames)


def variation_series(norm_if_series, norm_gd_series, window_frames: int) -> np.ndarray:
    """Trailing-window variation at every hop; NaN before the window fills.

    Entry i uses frames ``i - window_frames + 1 .. i``, matching what a live
    estimator sees at hop i.
    """
    nu = np.asarray(norm_if_series, dtype=float)
    tau = np.asarray(norm_gd_series, dtype=float)
    if window_frames < 2:
        raise ValueError(f"window_frames must be >= 2, got {window_frames}")
    n = len(nu)
    out = np.full(n, np.nan)
    if n < window_frames:
        return out
    d2 = (np.diff(nu) ** 2 + np.diff(tau) ** 2) / 2.0
    w = window_frames - 1
    csum = np.concatenate([[0.0], np.cumsum(d2)])
    out[window_frames - 1:] = np.sqrt((csum[w:] - csum[:-w]) / w)
    return out


@dataclass
class CalibrationTable:
    """Monotone mapping from variation values to SNR in dB.

    ``knots`` pair strictly decreasing variation values with increasing dB.
    Estimates clamp to ``[min_snr_db, SNR_CEILING_DB]``: variations below
    the quietest knot read the ceiling, variations above the noisiest knot
    read the table minimum.  ``measure`` names the variation statistic the
    table was built from: "pair" for hop-pair attribute differences,
    "contour" for the cubic-detrended stability of the smoothed pitch
    contour used in candidate ranking.
    """

    envelope: str
    c_mag: float
    sample_rate_hz: float
    test_freq_hz: float
    hop_samples: int
    window_frames: int
    knots: list[tuple[float, float]]           # (variation, snr_db), snr ascending
    raw_points: list[tuple[float, float]] = field(default_factory=list)
    created: str = ""
    seed: int = DEFAULT_SEED
    duration_s: float = DEFAULT_DURATION_S
    measure: str = "pair"

    def __post_init__(self):
        if len(self.knots) < 2:
            raise ValueError("calibration table needs at least two knots")
        snrs = [s for _, s in self.knots]
        vals = [v for v, _ in self.knots]
        if any(b <= a for a, b in zip(snrs, snrs[1:])):
            raise ValueError("knot SNRs must be strictly increasing")
        if any(b >= a for a, b in zip(vals, vals[1:])):
            raise ValueError("knot variations must be strictly decreasing")

    @property
    def min_snr_db(self) -> float:
        return self.knots[0][1]

    @property
    def max_snr_db(self) -> float:
        return self.knots[-1][1]

    def estimate(self, variation: float) -> float:
        return float(self.estimate_many(np.array([variation]))[0])

    def estimate_many(self, variations: np.ndarray) -> np.ndarray:
        """Vectorized monotone interpolation in log-variation space."""
        v = np.asarray(variations, dtype=float)
        vals = np.array([k[0] for k in self.knots])
        snrs = np.array([k[1] for k in self.knots])
        out = np.full(v.shape, np.nan)
        finite = np.isfinite(v)
        vv = np.clip(v[finite], vals[-1], vals[0])  # clamp into knot range
        logv = np.log10(np.maximum(vv, 1e-300))
        est = np.interp(logv, np.log10(vals[::-1]), snrs[::-1])
        # below-range variation means cleaner than the quietest knot
        est = np.where(v[finite] < vals[-1], SNR_CEILING_DB, est)
        est = np.minimum(est, SNR_CEILING_DB)
        out[finite] = est
        return out

    def check_bank(self, envelope: str, c_mag: float, sample_rate_hz: float):
        if (envelope != self.envelope or abs(c_mag - self.c_mag) > 1e-9
                or abs(sample_rate_hz - self.sample_rate_hz) > 1e-6):
            raise CalibrationMismatch(
                f"table is for {self.envelope}/c_mag={self.c_mag}/fs={self.sample_rate_hz}, "
                f"bank is {envelope}/c_mag={c_mag}/fs={sample_rate_hz}")

    def save(self, path):
        lines = [f"# {_FORMAT_TAG}"]
        for key, val in (("envelope", self.envelope), ("c_mag", repr(self.c_mag)),
                         ("sample_rate_hz", repr(self.sample_rate_hz)),
                         ("test_freq_hz", repr(self.test_freq_hz)),
                         ("hop_samples", self.hop_samples),
                         ("window_frames", self.window_frames),
                         ("duration_s", repr(self.duration_s)),
                         ("seed", self.seed), ("created", self.created),
                         ("measure", self.measure),
                         ("knots", len(self.knots))):
            lines.append(f"{key}={val}")
        for v, s in self.knots:
            lines.append(f"{v!r}\t{s!r}")
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")

    @classmethod
    def load(cls, path) -> "CalibrationTable":
        with open(path) as fh:
            lines = [ln.strip() for ln in fh if ln.strip()]
        if not lines or _FORMAT_TAG not in lines[0]:
            raise ValueError(f"not a calibration table: {path}")
        meta = {}
        knots = []
        for ln in lines[1:]:
            if ln.startswith("#"):
                continue
            if "=" in ln and "\t" not in ln:
                key, _, val = ln.partition("=")
                meta[key] = val
            else:
                v, s = ln.split("\t")
                knots.append((float(v), float(s)))
        return cls(
            envelope=meta["envelope"],
            c_mag=float(meta["c_mag"]),
            sample_rate_hz=float(meta["sample_rate_hz"]),
            test_freq_hz=float(meta["test_freq_hz"]),
            hop_samples=int(meta["hop_samples"]),
            window_frames=int(meta["window_frames"]),
            knots=knots,
            created=meta.get("created", ""),
            seed=int(meta.get("seed", DEFAULT_SEED)),
            duration_s=float(meta.get("duration_s", DEFAULT_DURATION_S)),
            measure=meta.get("measure", "pair"),
        )


def estimate_snr(variation: VariationMeasure, table: CalibrationTable) -> float:
    """Map one variation measure to dB through the table."""
    if variation.window_frames != table.window_frames:
        raise CalibrationMismatch(
            f"measure uses {variation.window_frames} frames, "
            f"table was built with {table.window_frames}")
    return table.estimate(variation.value)


def snr_series(bank, audio, table: CalibrationTable, channel_index: int = 0,
               hop_samples: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Per-hop SNR stream for one channel over a whole buffer.

    The single-estimator pipeline in batch form: channel output pairs at
    hop instants, instantaneous frequency and cross-channel group delay,
    trailing-window variation, table lookup.  Returns (hop_times_s, snr_db)
    with NaN during warm-up and window fill.
    """
    from .attributes import group_delay, instantaneous_frequency

    if channel_index >= len(bank) - 1:
        raise ValueError("channel needs an upper neighbor for group delay")
    table.check_bank(bank.envelope, bank.c_mag, bank.sample_rate_hz)
    hop = hop_samples or table.hop_samples
    hops = process_hops(bank, audio, hop)
    k = channel_index
    center = bank.channels[k].center_hz
    nu = instantaneous_frequency(hops.y0[:, k], hops.y1[:, k],
                                 bank.sample_rate_hz) / center
    tau = group_delay(hops.y0[:, k], hops.y0[:, k + 1],
                      bank.delta_omega[k]) * center
    series = variation_series(nu, tau, table.window_frames)
    snr = table.estimate_many(series)
    snr[hops.warm_up] = np.nan
    return hops.times_s, snr


def synthesize_mixture(snr_db, f0: float, f_s: float, duration_s: float,
                       rng: np.random.Generator) -> np.ndarray:
    """Unit sinusoid plus white Gaussian noise at a full-band power ratio.

    ``snr_db=None`` returns the noiseless sinusoid.
    """
    n = int(round(duration_s * f_s))
    t = np.arange(n) / f_s
    x = np.sin(2.0 * np.pi * f0 * t)
    if snr_db is not None:
        sigma = np.sqrt(0.5 * 10.0 ** (-snr_db / 10.0))
        x = x + sigma * rng.standard_normal(n)
    return x


def measure_variation(envelope: str, c_mag: float, f_s: float, snr_db,
                      test_freq_hz: float = DEFAULT_TEST_FREQ_HZ,
                      hop_samples: int = DEFAULT_HOP,
                      window_frames: int = DEFAULT_WINDOW_FRAMES,
                      duration_s: float = DEFAULT_DURATION_S,
                      seed: int = DEFAULT_SEED) -> float:
    """Median on-center variation for one synthetic mixture."""
    point = 0 if snr_db is None else int(round(snr_db * 1000))
    rng = np.random.default_rng([seed, point])
    x = synthesize_mixture(snr_db, test_freq_hz, f_s, duration_s, rng)
    bank = design_bank(test_freq_hz, test_freq_hz * 2 ** (1 / 6.0), 6,
                       c_mag, f_s, envelope)
    hops = process_hops(bank, x, hop_samples)
    nu = np.empty(len(hops.hop_indices))
    tau = np.empty_like(nu)
    for i in range(len(hops.hop_indices)):
        frame = assemble_attribute_frame(bank, (hops.y0[i], hops.y1[i]),
                                         hop_index=int(hops.hop_indices[i]),
                                         warm_up=bool(hops.warm_up[i]))
        nu[i] = frame.norm_inst_freq[0]
        tau[i] = frame.norm_group_delay[0]
    keep = ~hops.warm_up
    series = variation_series(nu[keep], tau[keep], window_frames)
    med = np.nanmedian(series)
    if not np.isfinite(med):
        raise CalibrationError("no valid variation windows in calibration run")
    return float(med)


def calibrate(envelope: str, c_mag: float, f_s: float,
              snr_grid=DEFAULT_GRID_DB,
              test_freq_hz: float = DEFAULT_TEST_FREQ_HZ,
              hop_samples: int = DEFAULT_HOP,
              window_frames: int = DEFAULT_WINDOW_FRAMES,
              duration_s: float = DEFAULT_DURATION_S,
              seed: int = DEFAULT_SEED) -> CalibrationTable:
    """Measure the variation-vs-SNR curve and fit a monotone table.

    The grid must cover 10..80 dB in steps of at most 5 dB.  Mild jitter in
    a saturated region is flattened by a decreasing isotonic fit; raw
    increases beyond 25% between adjacent grid points raise
    :class:`CalibrationError` with the offending pairs.
    """
    grid = validate_grid(snr_grid)
    raw = [(measure_variation(envelope, c_mag, f_s, s, test_freq_hz, hop_samples,
                              window_frames, duration_s, seed), s)
           for s in grid]
    return finish_table(raw, envelope=envelope, c_mag=c_mag, sample_rate_hz=f_s,
                        test_freq_hz=test_freq_hz, hop_samples=hop_samples,
                        window_frames=window_frames, seed=seed,
                        duration_s=duration_s, measure="pair")


def validate_grid(snr_grid) -> list[float]:
    grid = sorted(float(s) for s in snr_grid)
    if not grid or grid[0] > 10.0 or grid[-1] < 80.0:
        raise ValueError(f"snr_grid must cover [10, 80] dB, got {grid}")
    if any(b - a > 5.0 + 1e-9 for a, b in zip(grid, grid[1:])):
        raise ValueError("snr_grid steps must be <= 5 dB")
    return grid


def finish_table(raw_points, **meta) -> CalibrationTable:
    """Monotone-check measured (variation, snr) points and fit the knots."""
    values = np.array([v for v, _ in raw_points])
    grid = np.array([s for _, s in raw_points])
    offending = [((grid[i], values[i]), (grid[i + 1], values[i + 1]))
                 for i in range(len(grid) - 1)
                 if values[i + 1] > values[i] * _MONOTONE_SLACK]
    if offending:
        raise CalibrationError(
            f"variation curve rises with SNR at {len(offending)} grid step(s)",
            offending=offending)
    knots = _fit_decreasing(values, grid)
    return CalibrationTable(knots=knots, raw_points=list(raw_points),
                            created=_dt.date.today().isoformat(), **meta)


def _fit_decreasing(values: np.ndarray, snrs: np.ndarray) -> list[tuple[float, float]]:
    """Pool-adjacent-violators fit, then merge flats into single knots."""
    blocks = [[v, s, 1] for v, s in zip(values, snrs)]  # mean value, mean snr, count
    i = 0
    while i < len(blocks) - 1:
        if blocks[i + 1][0] > blocks[i][0] - 1e-300:  # must strictly decrease
            v = (blocks[i][0] * blocks[i][2] + blocks[i + 1][0] * blocks[i + 1][2])
            s = (blocks[i][1] * blocks[i][2] + blocks[i + 1][1] * blocks[i + 1][2])
            c = blocks[i][2] + blocks[i + 1][2]
            blocks[i] = [v / c, s / c, c]
            del blocks[i + 1]
            if i > 0:
                i -= 1
        else:
            i += 1
    return [(float(v), float(s)) for v, s, _ in blocks]


def self_check(table: CalibrationTable, snr_grid=None, seed: int = 7_7000,
               ) -> list[tuple[float, float, float]]:
    """Fresh-seed mixtures through the table: (true, estimated, error) rows."""
    if table.measure == "contour":
        from .pipeline import measure_contour_variation as measure_fn
    else:
        measure_fn = measure_variation
    grid = [s for _, s in table.knots] if snr_grid is None else list(snr_grid)
    rows = []
    for s in grid:
        v = measure_fn(table.envelope, table.c_mag, table.sample_rate_hz,
                       s, table.test_freq_hz, table.hop_samples,
                       table.window_frames, table.duration_s,
                       seed=seed)
        est = table.estimate(v)
        rows.append((float(s), est, est - float(s)))
    return rows


def default_table() -> CalibrationTable:
    """The shipped pair-measure table (six-term, 44.1 kHz, c_mag 1.05)."""
    return _load_shipped("data/snr-sixterm-44100.cal")


def default_contour_table() -> CalibrationTable:
    """The shipped contour-measure table used for candidate ranking."""
    return _load_shipped("data/snr-contour-sixterm-44100.cal")


def _load_shipped(name: str) -> CalibrationTable:
    path = resources.files("pitchscope").joinpath(name)
    with resources.as_file(path) as p:
        return CalibrationTable.load(p)
