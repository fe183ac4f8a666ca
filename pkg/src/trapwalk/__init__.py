"""Survival of coined quantum and classical walkers on a randomly trapped ring."""

__version__ = "0.1.0"

from .analysis import (
    AnalyticPrediction,
    PiecewiseFit,
    classical_references,
    detect_crossover,
    fit_stretch_exponent,
    jackknife,
    predict,
)
from .classical import crw_step, crw_survival_aggregate, crw_survival_per_walker
from .ensemble import (
    EnsembleSpec,
    SurvivalSeries,
    TrapConfiguration,
    ensemble_average,
    run_configuration,
    sample_traps,
)
from .errors import ConfigurationError, FitError, WindowOverflowError
from .measurement import DensityOperator, MeasurementSchedule, measurement_step, spread_exponent
from .walk import (
    HADAMARD,
    ChiralAmplitudeField,
    Chirality,
    CoinSpec,
    InitialCondition,
    absorb,
    coin_step,
    evolve_survival,
    shift_step,
)
