"""Phase-derived channel attributes: instantaneous frequency and group delay.

Both estimators work on angles of complex ratios and never unwrap phase.
Instantaneous frequency comes from the rotation between two consecutive
output samples of one channel; group delay comes from the phase difference
between adjacent channels at one instant, scaled by the channel spacing.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .filterbank import ChannelBank

#: Channel outputs below this fraction of full scale carry no usable phase.
MAGNITUDE_FLOOR = 1e-12


def instantaneous_frequency(y_n, y_np1, f_s: float):
    """Frequency in Hz from the angle of ``y[n+1] / y[n]``; range (-f_s/2, f_s/2].

    Implemented as ``angle(y_np1 * conj(y_n))`` which has the same angle as
    the ratio without risking overflow for tiny denominators.  Accepts
    scalars or arrays.
    """
    ang = np.angle(np.asarray(y_np1) * np.conj(np.asarray(y_n)))
    out = ang * (f_s / (2.0 * np.pi))
    return out if np.ndim(out) else float(out)


def group_delay(y_k, y_kp1, delta_omega: float):
    """Group delay in seconds from adjacent channel outputs at one instant."""
    ang = np.angle(np.asarray(y_kp1) * np.conj(np.asarray(y_k)))
    out = -ang / delta_omega
    return out if np.ndim(out) else float(out)


@dataclass
class AttributeFrame:
    """Per-channel phase attributes at one hop instant.

    ``inst_freq_hz`` is the two-sample estimator evaluated at the hop;
    ``mean_inst_freq_hz`` (when the producer computes it) is the trailing
    mean of per-sample phase increments, which settles onto the dominant
    in-band component of multi-component input.  ``snr_db`` is NaN until an
    SNR estimator fills it.  ``valid`` masks channels whose magnitude is
    above the floor; ``gd_valid`` additionally requires a valid upper
    neighbor.
    """

    hop_index: int
    hop_time_s: float
    phase: np.ndarray
    magnitude: np.ndarray
    inst_freq_hz: np.ndarray
    norm_inst_freq: np.ndarray
    group_delay_s: np.ndarray
    norm_group_delay: np.ndarray
    valid: np.ndarray
    gd_valid: np.ndarray
    snr_db: np.ndarray
    warm_up: bool = False
    mean_inst_freq_hz: np.ndarray | None = None
    mean_norm_group_delay: np.ndarray | None = None
    snr_variation: np.ndarray | None = None

    @property
    def n_channels(self) -> int:
        return len(self.phase)


def assemble_attribute_frame(bank: ChannelBank, pairs, hop_index: int = 0,
                             warm_up: bool = False) -> AttributeFrame:
    """Build an AttributeFrame from one hop's channel output pairs.

    ``pairs`` is either a sequence of :class:`ChannelOutputPair` covering
    all channels or a ``(y0_row, y1_row)`` tuple of complex vectors.
    The last channel has no upper neighbor and copies its lower neighbor's
    group delay.
    """
    if isinstance(pairs, tuple) and len(pairs) == 2:
        y0 = np.asarray(pairs[0], dtype=complex)
        y1 = np.asarray(pairs[1], dtype=complex)
    else:
        pairs = sorted(pairs, key=lambda p: p.channel_index)
        if [p.channel_index for p in pairs] != list(range(len(bank))):
            raise ValueError("pairs must cover every channel exactly once")
        y0 = np.array([p.y_n for p in pairs], dtype=complex)
        y1 = np.array([p.y_np1 for p in pairs], dtype=complex)
    if len(y0) != len(bank):
        raise ValueError(f"expected {len(bank)} channels, got {len(y0)}")
    fs = bank.sample_rate_hz
    centers = bank.centers_hz
    magnitude = np.abs(y0)
    valid = magnitude > MAGNITUDE_FLOOR
    phase = np.angle(y0)
    inst = instantaneous_frequency(y0, y1, fs)
    norm_if = np.where(valid, inst / centers, np.nan)
    inst = np.where(valid, inst, np.nan)
    phase = np.where(valid, phase, np.nan)

    gd = np.full(len(bank), np.nan)
    gd_valid = np.zeros(len(bank), dtype=bool)
    if len(bank) > 1:
        both = valid[:-1] & valid[1:]
        pair_gd = group_delay(y0[:-1], y0[1:], bank.delta_omega)
        gd[:-1] = np.where(both, pair_gd, np.nan)
        gd_valid[:-1] = both
        # last channel copies its lower neighbor
        gd[-1] = gd[-2]
        gd_valid[-1] = gd_valid[-2]
    norm_gd = gd * centers
    return AttributeFrame(
        hop_index=hop_index,
        hop_time_s=hop_index / fs,
        phase=phase,
        magnitude=magnitude,
        inst_freq_hz=inst,
        norm_inst_freq=norm_if,
        group_delay_s=gd,
        norm_group_delay=norm_gd,
        valid=valid,
        gd_valid=gd_valid,
        snr_db=np.full(len(bank), np.nan),
        warm_up=warm_up,
    )
