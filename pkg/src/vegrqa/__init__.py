"""Recurrence plots and recurrence quantification analysis for index time series."""

__version__ = "0.1.0"

from .embedding import EmbeddingConfig, PhaseTrajectory, embed, select_delay, select_dimension
from .recurrence import (
    RecurrenceMatrix,
    ThresholdConfig,
    build_matrix,
    epsilon_for_target_rr,
    joint_matrix,
    render_plot,
)
from .rqa import (
    LineHistograms,
    RqaMeasures,
    WindowedMeasures,
    disruption_profile,
    line_histograms,
    measures,
    series_measures,
    windowed_joint_measures,
    windowed_measures,
)
from .signal import (
    BandSample,
    PixelStack,
    SplitSpec,
    TimeSeries,
    compute_evi,
    generate,
    load_series,
    split_series,
)
from .stats import TTestResult, pooled_t_test, welch_t_test
from .study import GroupSummary, StudyParams, StudyReport, group_summary, per_pixel_measures, run_pipeline
