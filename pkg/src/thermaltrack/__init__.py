"""People counting and walking-direction estimation from 8x8 thermal-array frames."""

from .blobs import FeatureVector, detect_peaks, extract_features, label_components
from .frames import (
    BackgroundModel,
    ForegroundFrame,
    SceneSequence,
    ThermalFrame,
    build_background,
    parse_sequence,
    subtract_background,
)
from .motion import (
    MotionEstimate,
    delay_analysis,
    gated_series,
    infer_direction,
    normalized_xcorr,
    pixel_series,
)

__version__ = "0.1.0"
