"""Cosine-series envelopes and analytic band-pass impulse responses.

The band-pass filters used throughout the package are built by multiplying
an even time envelope with a complex carrier.  The default envelope is a
six-term cosine series whose coefficients sum to one (unit peak) and
telescope to zero under alternating signs, so the envelope vanishes at the
ends of its support together with several of its derivatives.  Standard
windows (Hann, Blackman, Nuttall, Kaiser) are available on the same support
for side-by-side comparisons.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

#: Optimized six-term cosine series coefficients (a_0..a_5).
SIXTERM_COEFFICIENTS = (
    0.2624710164,
    0.4265335164,
    0.2250165621,
    0.0726831633,
    0.0125124215,
    0.0007833203,
)

#: Minimum four-term Nuttall coefficients.
NUTTALL_COEFFICIENTS = (0.3635819, 0.4891775, 0.1365995, 0.0106411)
BLACKMAN_COEFFICIENTS = (0.42, 0.5, 0.08)
HANN_COEFFICIENTS = (0.5, 0.5)

ENVELOPE_KINDS = ("sixterm", "hann", "blackman", "nuttall", "kaiser")

#: Default Kaiser shape parameter for comparison runs.
DEFAULT_KAISER_BETA = 12.0


@dataclass(frozen=True)
class CosineSeriesEnvelope:
    """Even cosine-series envelope tied to a carrier frequency.

    The term count K is ``len(coefficients) - 1`` and the support is
    ``K * stretch / carrier_hz`` seconds, the full period of the k=1 term,
    so the series vanishes exactly at +-support/2.
    """

    coefficients: tuple[float, ...] = SIXTERM_COEFFICIENTS
    carrier_hz: float = 440.0
    stretch: float = 1.05

    def __post_init__(self):
        if len(self.coefficients) < 2:
            raise ValueError("need at least two cosine terms")
        if self.carrier_hz <= 0:
            raise ValueError(f"carrier must be positive, got {self.carrier_hz}")
        if self.stretch <= 0:
            raise ValueError(f"stretch must be positive, got {self.stretch}")

    @property
    def terms(self) -> int:
        return len(self.coefficients) - 1

    @property
    def support_s(self) -> float:
        return self.terms * self.stretch / self.carrier_hz

    def value(self, t):
        return envelope_value(t, self)


def envelope_value(t, env: CosineSeriesEnvelope):
    """Evaluate the cosine series at time ``t`` (seconds, scalar or array).

    Defined for all t; callers truncate to |t| <= support/2.
    """
    t = np.asarray(t, dtype=float)
    w = np.zeros_like(t)
    for k, a in enumerate(env.coefficients):
        w += a * np.cos(2.0 * np.pi * k * t / env.support_s)
    return w if w.ndim else float(w)


@dataclass(frozen=True)
class ComparisonWindow:
    """Standard window evaluated on the cosine-series support grid."""

    kind: str
    carrier_hz: float
    stretch: float = 1.05
    kaiser_beta: float = DEFAULT_KAISER_BETA

    def __post_init__(self):
        if self.kind not in ("hann", "blackman", "nuttall", "kaiser"):
            raise ValueError(f"unknown window kind: {self.kind!r}")

    @property
    def support_s(self) -> float:
        # Same support as the six-term envelope so comparisons are
        # bandwidth-matched.
        return len(SIXTERM_COEFFICIENTS[1:]) * self.stretch / self.carrier_hz

    def value(self, t):
        t = np.asarray(t, dtype=float)
        T = self.support_s
        if self.kind == "kaiser":
            arg = 1.0 - np.clip(2.0 * t / T, -1.0, 1.0) ** 2
            w = np.i0(self.kaiser_beta * np.sqrt(arg)) / np.i0(self.kaiser_beta)
        else:
            coeffs = {
                "hann": HANN_COEFFICIENTS,
                "blackman": BLACKMAN_COEFFICIENTS,
                "nuttall": NUTTALL_COEFFICIENTS,
            }[self.kind]
            w = np.zeros_like(t)
            for k, a in enumerate(coeffs):
                w += a * np.cos(2.0 * np.pi * k * t / T)
        return w if w.ndim else float(w)


def comparison_window(kind: str, f_c: float, c_mag: float, f_s: float,
                      kaiser_beta: float = DEFAULT_KAISER_BETA) -> np.ndarray:
    """Sample a standard window on the shared symmetric support grid."""
    win = ComparisonWindow(kind, f_c, c_mag, kaiser_beta)
    t = _support_grid(win.support_s, f_s)
    return win.value(t)


@dataclass(frozen=True)
class AnalyticImpulseResponse:
    """Complex band-pass impulse response, centered at t=0 (odd length)."""

    samples: np.ndarray
    sample_rate_hz: float
    center_hz: float
    envelope: str = "sixterm"

    def __len__(self):
        return len(self.samples)

    @property
    def half_length(self) -> int:
        return len(self.samples) // 2

    @property
    def center_index(self) -> int:
        return len(self.samples) // 2

    @property
    def times_s(self) -> np.ndarray:
        half = self.half_length
        return np.arange(-half, half + 1) / self.sample_rate_hz


def analytic_impulse_response(f_c: float, c_mag: float, f_s: float,
                              envelope: str = "sixterm",
                              kaiser_beta: float = DEFAULT_KAISER_BETA,
                              ) -> AnalyticImpulseResponse:
    """Build ``w_e(t) * exp(j 2 pi f_c t)`` on a symmetric sample grid.

    Args:
        f_c: carrier / center frequency in Hz, ``0 < f_c < f_s / 2``
        c_mag: stretch factor controlling bandwidth relative to f_c
        f_s: sample rate in Hz
        envelope: one of ``ENVELOPE_KINDS``

    Returns:
        AnalyticImpulseResponse of odd length ``2*floor(T*f_s/2) + 1`` with
        a unit center tap, where ``T = K * c_mag / f_c``.
    """
    if not 0.0 < f_c < f_s / 2.0:
        raise ValueError(f"carrier {f_c} Hz outside (0, {f_s / 2}) Hz")
    if c_mag <= 0:
        raise ValueError(f"c_mag must be positive, got {c_mag}")
    if envelope == "sixterm":
        env = CosineSeriesEnvelope(SIXTERM_COEFFICIENTS, f_c, c_mag)
        T = env.support_s
        t = _support_grid(T, f_s)
        w = envelope_value(t, env)
    elif envelope in ("hann", "blackman", "nuttall", "kaiser"):
        win = ComparisonWindow(envelope, f_c, c_mag, kaiser_beta)
        T = win.support_s
        t = _support_grid(T, f_s)
        w = win.value(t)
    else:
        raise ValueError(f"unknown envelope kind: {envelope!r}")
    samples = w * np.exp(2j * np.pi * f_c * t)
    return AnalyticImpulseResponse(samples, f_s, f_c, envelope)


def _support_grid(T: float, f_s: float) -> np.ndarray:
    half = int(np.floor(T * f_s / 2.0))
    return np.arange(-half, half + 1) / f_s
