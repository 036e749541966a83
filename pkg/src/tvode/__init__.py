"""Discovery and forecasting of ODE models with mixed fixed and
time-varying coefficients from uniformly sampled time series."""

__version__ = "0.1.0"

from .preprocess import (
    TimeSeriesTable,
    ScalingSpec,
    ingest_csv,
    rolling_smooth,
    minmax_fit,
    minmax_apply,
    estimate_derivatives,
)
from .library import TermDescriptor, CandidateLibrary, build_library, evaluate_library
from .strr import StrrConfig, SparseFit, ridge_solve, threshold, strr_fit
from .discovery import (
    DiscoveryConfig,
    SplitModel,
    CoefficientTrack,
    fit_global,
    select_top_n,
    fit_windows,
    reconstruct,
)
from .predictor import ForestConfig, ParameterPredictor, build_training_set, train_forest
from .forecast import ForecastRun, forecast_states
from .simulate import (
    SirParams,
    CrParams,
    OuParams,
    WeatherParams,
    beta_of_t,
    simulate_sir,
    simulate_cr,
    simulate_weather,
)
from .evaluation import SplitPlan, make_split_plan, mae, cv_select, optimal_sweep, compare_baseline
from .bounds import (
    gronwall_bound,
    split_bound,
    best_constant_error,
    best_piecewise_error,
    empirical_bound_check,
)
