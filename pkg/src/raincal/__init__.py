"""Calibrated probabilistic rainfall forecasts from ensemble output.

The package turns a raw ensemble of 6-hourly precipitation forecasts
into full predictive distributions and verifies them:

* ``distributions``: censored rainfall families (extended GP, shifted
  gamma, censored GEV), closed-form and numeric CRPS, probability
  weighted moments.
* ``ecdf``: weighted empirical CDFs with exact kernel CRPS.
* ``forests``: quantile regression forests with a variance split or a
  quantile-loss split, predicting weighted ECDFs.
* ``tail``: extended GP tails fitted to forest ECDFs by weighted
  moments.
* ``emos``: minimum-CRPS coefficient fits of the censored families.
* ``analogs``: nearest-forecast ensembles with several predictor
  weightings.
* ``selection``: forest permutation importance and greedy predictor
  subsets.
* ``verification``: fair CRPS, rank histograms and their flatness
  decomposition, ROC summaries, score reports.
* ``simulate``: synthetic scenarios with a known generative truth.
* ``cli``: the ``raincal`` command.
"""

from .data import (
    Dataset,
    PredictorSet,
    SchemaError,
    SplitPlan,
    available_predictors,
    load_dataset,
    make_cv_plan,
    set_a,
    set_c,
)
from .distributions import (
    CgevParams,
    CsgParams,
    EgpParams,
    PwmInfeasibleError,
    PwmTriple,
    cgev_cdf,
    cgev_quantile,
    crps_numeric,
    csg_cdf,
    csg_quantile,
    egp_cdf,
    egp_crps,
    egp_fit_pwm,
    egp_quantile,
    pwm_weighted,
)
from .ecdf import WeightedEcdf, ecdf_crps
from .emos import EmosConfig, EmosModel, apply_links, emos_fit, station_xi_climatology
from .analogs import AnalogConfig, analog_predict, find_analogs, make_weighting
from .forests import Forest, ForestHyper, forest_weights, grow_forest, load_forest
from .prediction import (
    EcdfPrediction,
    EnsemblePrediction,
    ParametricPrediction,
    prediction_from_dict,
)
from .selection import predictor_frequency, select_predictors
from .simulate import ScenarioSpec, mc_crps, simulate_scenario
from .tail import HybridPrediction, fit_egp_tail
from .verification import (
    RankHistogram,
    ScoreReport,
    build_report,
    crps_of_predictive,
    crpss,
    fair_crps,
    flatness_test,
    histogram_stats,
    pit_value,
    rank_of_obs,
    roc_curve,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "AnalogConfig",
    "CgevParams",
    "CsgParams",
    "Dataset",
    "EcdfPrediction",
    "EgpParams",
    "EmosConfig",
    "EmosModel",
    "EnsemblePrediction",
    "Forest",
    "ForestHyper",
    "HybridPrediction",
    "ParametricPrediction",
    "PredictorSet",
    "PwmInfeasibleError",
    "PwmTriple",
    "RankHistogram",
    "ScenarioSpec",
    "SchemaError",
    "ScoreReport",
    "SplitPlan",
    "WeightedEcdf",
    "analog_predict",
    "apply_links",
    "available_predictors",
    "build_report",
    "cgev_cdf",
    "cgev_quantile",
    "crps_numeric",
    "crps_of_predictive",
    "crpss",
    "csg_cdf",
    "csg_quantile",
    "ecdf_crps",
    "egp_cdf",
    "egp_crps",
    "egp_fit_pwm",
    "egp_quantile",
    "emos_fit",
    "fair_crps",
    "find_analogs",
    "fit_egp_tail",
    "flatness_test",
    "forest_weights",
    "grow_forest",
    "histogram_stats",
    "load_dataset",
    "load_forest",
    "make_cv_plan",
    "make_weighting",
    "mc_crps",
    "pit_value",
    "prediction_from_dict",
    "predictor_frequency",
    "pwm_weighted",
    "rank_of_obs",
    "roc_curve",
    "select_predictors",
    "set_a",
    "set_c",
    "simulate_scenario",
    "station_xi_climatology",
]
