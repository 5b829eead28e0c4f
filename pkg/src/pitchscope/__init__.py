"""Real-time fundamental-frequency-candidate analysis for vocal training."""

__version__ = "0.1.0"

from .attributes import (
    AttributeFrame,
    assemble_attribute_frame,
    group_delay,
    instantaneous_frequency,
)
from .candidates import (
    F0Candidate,
    NoteReading,
    best_candidate,
    find_fixed_points,
    note_reading,
    salience,
    select_candidates,
)
from .errors import (
    CalibrationError,
    CalibrationMismatch,
    CalibrationRejected,
    ControlRejected,
    FormatError,
    PitchscopeError,
)
from .filterbank import ChannelBank, StreamingFilterbank, design_bank, process_hops
from .levels import CalibrationState, LevelFrame, LevelMeter, c_weight, calibrate_spl
from .pipeline import (
    AnalysisFrame,
    Analyzer,
    AnalyzerSettings,
    analyze_buffer,
    calibrate_contour,
)
from .snr import (
    CalibrationTable,
    VariationMeasure,
    calibrate,
    default_contour_table,
    default_table,
    estimate_snr,
    mix_variation,
    snr_series,
)
from .wavio import read_wav, write_wav_24
from .windows import (
    SIXTERM_COEFFICIENTS,
    AnalyticImpulseResponse,
    ComparisonWindow,
    CosineSeriesEnvelope,
    analytic_impulse_response,
    comparison_window,
    envelope_value,
)

__all__ = [name for name in dir() if not name.startswith("_")]
