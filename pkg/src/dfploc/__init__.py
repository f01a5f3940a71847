"""Device-free passive localization from RSS histograms."""

from .core import (
    Location,
    PassiveRadioMap,
    RssiHistogram,
    RssiSample,
    SignalWindow,
    SmoothingConfig,
    StreamId,
    euclidean_distance,
)
from .estimators import (
    EstimatorConfig,
    PosteriorVector,
    deterministic_estimate,
    discrete_estimate,
    log_likelihood,
    random_estimate,
)
from .evaluation import (
    ErrorSummary,
    SweepResult,
    evaluate,
    percentile,
    sweep_k,
    sweep_m,
    sweep_streams,
    sweep_w,
)
from .models import HistogramBayesLocalizer, SignalSpaceNNLocalizer, TimeAverager
from .postprocess import (
    ContinuousConfig,
    EstimatePoint,
    continuous_estimate,
    spatial_average,
    time_average,
)
from .radiomap import TrainingTrace, build_radio_map, histogram_probability
from .simulator import GridSpec, SyntheticEnvironment, generate_environment, sample_trace, simulate_traces

__version__ = "0.1.0"
