"""Parametric tail extension of forest predictions.

A forest predicts a weighted empirical CDF, so its quantiles can never
leave the range of the training responses.  ``fit_egp_tail`` replaces the
ECDF by an extended-GP fit estimated from it: the dry atom from the weight
below the trace threshold, the positive part by probability weighted
moments.  The fitted law extrapolates beyond the largest training value
while staying close to the ECDF in the bulk.  When the moment system has
no solution (or the positive support is too thin to estimate three
moments) the original ECDF is kept and the prediction is flagged.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .distributions import EgpParams, PwmInfeasibleError, PwmTriple, egp_fit_pwm
from .ecdf import WeightedEcdf
from .prediction import EcdfPrediction, ParametricPrediction

__all__ = ["HybridPrediction", "fit_egp_tail", "DRY_THRESHOLD"]

# accumulations below this are treated as dry (trace convention, mm/6h)
DRY_THRESHOLD = 0.05


@dataclass(frozen=True)
class HybridPrediction:
    """EGP fit of a forest ECDF, or the ECDF itself when flagged as fallback."""

    prediction: object
    fallback_used: bool

    @property
    def family(self) -> str:
        return self.prediction.family

    def cdf(self, y):
        return self.prediction.cdf(y)

    def cdf_left(self, y):
        return self.prediction.cdf_left(y)

    def quantile(self, prob):
        return self.prediction.quantile(prob)

    def crps(self, y: float) -> float:
        return self.prediction.crps(y)

    def sample(self, size, rng) -> np.ndarray:
        return self.prediction.sample(size, rng)

    def to_dict(self) -> dict:
        d = self.prediction.to_dict()
        d["tail_fallback"] = self.fallback_used
        return d


def fit_egp_tail(ecdf: WeightedEcdf, dry_threshold: float = DRY_THRESHOLD) -> HybridPrediction:
    """Fit an EGP law to a weighted ECDF.

    The atom is the total weight on values below ``dry_threshold``; the
    positive part is renormalized and matched through its first three
    probability weighted moments.  Falls back to the unmodified ECDF
    (``fallback_used=True``) when fewer than three distinct positive values
    carry weight or the moment system is infeasible in the search box.
    """
    dry = ecdf.values < dry_threshold
    wet = ~dry & (ecdf.weights > 0.0)
    pi_hat = float(ecdf.weights[dry].sum())
    values = ecdf.values[wet]
    weights = ecdf.weights[wet]
    if np.unique(values).size < 3 or pi_hat >= 1.0 - 1e-12:
        return HybridPrediction(EcdfPrediction(ecdf), True)
    weights = weights / weights.sum()
    try:
        pwm = PwmTriple.from_ecdf(values, weights)
        kappa, sigma, xi = egp_fit_pwm(pwm)
    except (PwmInfeasibleError, ValueError):
        return HybridPrediction(EcdfPrediction(ecdf), True)
    params = EgpParams(pi=pi_hat, kappa=kappa, sigma=sigma, xi=xi)
    return HybridPrediction(ParametricPrediction(params), False)
