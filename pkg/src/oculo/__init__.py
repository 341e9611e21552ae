"""Eye-movement biomarker toolkit for Mixed-Reality gaze recordings.

Parses binary gaze sessions and stimulus logs, detects saccades, extracts
the eleven clinical oculomotor parameters, aggregates cohorts into boxplot
statistics, and synthesizes ground-truth sessions for verification.
"""

from . import errors
from .cohort import (
    BoxplotStats,
    CohortRow,
    CohortTable,
    Group,
    boxplot_stats,
    normalize_cohort,
)
from .features import (
    AnalysisConfig,
    FixationConfig,
    anti_incorrect_ratio,
    anti_latency,
    extract_features,
    fixation_times,
    memory_incorrect_ratio,
    pursuit_features,
    reflex_amplitudes,
    reflex_latency,
    reflex_speed,
)
from .saccade import DetectionConfig, SaccadeMatch, detect_saccades, signal_std
from .session_io import (
    FeatureSet,
    GazeSample,
    RawSession,
    StimulusEvent,
    StimulusTrack,
    Task,
    parse_binary_session,
    parse_stimulus_log,
    read_feature_report,
    serialize_session,
    serialize_stimulus_log,
    write_feature_report,
)
from .signal_prep import (
    FilterConfig,
    GazeTrace,
    gaze_position,
    gradient,
    horizontal_trace,
    resample_stimuli,
    savgol_filter,
    savgol_kernel,
)
from .synth import (
    GroundTruth,
    ProtocolConfig,
    SubjectModel,
    generate_protocol,
    synthesize_gaze,
)

__version__ = "0.1.0"
