"""Predictive distributions: the common output type of every calibration method.

A prediction is one of

* a parametric family (EGP, CSG or CGEV parameters),
* a weighted empirical CDF (forest output),
* a finite exchangeable ensemble (raw members or analog observations).

All three expose ``cdf``, ``cdf_left``, ``quantile``, ``crps``, ``sample``
and a JSON-ready ``to_dict`` with a ``family`` tag, so downstream scoring
and the command-line pipeline never branch on the producing method.
"""

from __future__ import annotations

import numpy as np

from . import distributions as pdist
from .ecdf import WeightedEcdf, ecdf_crps

__all__ = [
    "ParametricPrediction",
    "EcdfPrediction",
    "EnsemblePrediction",
    "prediction_from_dict",
]


class ParametricPrediction:
    """Wraps EgpParams / CsgParams / CgevParams behind the prediction API."""

    __slots__ = ("params",)

    def __init__(self, params):
        if not isinstance(params, (pdist.EgpParams, pdist.CsgParams, pdist.CgevParams)):
            raise TypeError(f"unsupported parameter type {type(params).__name__}")
        self.params = params

    @property
    def family(self) -> str:
        return {
            pdist.EgpParams: "egp",
            pdist.CsgParams: "csg",
            pdist.CgevParams: "cgev",
        }[type(self.params)]

    def cdf(self, y):
        fn = {"egp": pdist.egp_cdf, "csg": pdist.csg_cdf, "cgev": pdist.cgev_cdf}[self.family]
        return fn(self.params, y)

    def cdf_left(self, y):
        # the only discontinuity of these families is the atom at zero
        out = np.where(np.asarray(y) <= 0.0, 0.0, self.cdf(y))
        return float(out) if np.ndim(y) == 0 else out

    def quantile(self, prob):
        fn = {
            "egp": pdist.egp_quantile,
            "csg": pdist.csg_quantile,
            "cgev": pdist.cgev_quantile,
        }[self.family]
        return fn(self.params, prob)

    def crps(self, y: float) -> float:
        if self.family == "egp":
            return pdist.egp_crps(self.params, y)
        cdf = self.cdf
        return pdist.crps_numeric(lambda t: cdf(t), y)

    def sample(self, size, rng) -> np.ndarray:
        fn = {
            "egp": pdist.egp_random,
            "csg": pdist.csg_random,
            "cgev": pdist.cgev_random,
        }[self.family]
        return fn(self.params, size, rng)

    def to_dict(self) -> dict:
        d = {"family": self.family}
        p = self.params
        if self.family == "egp":
            d.update(pi=p.pi, kappa=p.kappa, sigma=p.sigma, xi=p.xi)
        elif self.family == "csg":
            d.update(delta=p.delta, kappa=p.kappa, theta=p.theta, pi=p.pi)
        else:
            d.update(mu=p.mu, sigma=p.sigma, xi=p.xi, pi=p.pi)
        return d

    def __repr__(self):
        return f"ParametricPrediction({self.params!r})"


class EcdfPrediction:
    """Weighted empirical CDF output (quantile forests)."""

    __slots__ = ("ecdf",)

    def __init__(self, ecdf: WeightedEcdf):
        self.ecdf = ecdf

    family = "ecdf"

    def cdf(self, y):
        return self.ecdf.cdf(y)

    def cdf_left(self, y):
        return self.ecdf.cdf_left(y)

    def quantile(self, prob):
        return self.ecdf.quantile(prob)

    def crps(self, y: float) -> float:
        return self.ecdf.crps(y)

    def sample(self, size, rng) -> np.ndarray:
        return self.ecdf.sample(size, rng)

    def to_dict(self) -> dict:
        return {
            "family": "ecdf",
            "values": self.ecdf.values.tolist(),
            "weights": self.ecdf.weights.tolist(),
        }


class EnsemblePrediction:
    """Finite exchangeable ensemble (raw members or analog observations).

    Scored with the fair CRPS estimator rather than the plain empirical
    kernel, since the members are draws from the underlying distribution
    rather than the distribution itself.
    """

    __slots__ = ("members",)

    def __init__(self, members):
        members = np.asarray(members, dtype=float)
        if members.ndim != 1 or members.size < 1:
            raise ValueError("members must be a nonempty 1-D array")
        self.members = np.sort(members)

    family = "ensemble"

    def _weights(self):
        return np.full(self.members.size, 1.0 / self.members.size)

    def cdf(self, y):
        out = np.searchsorted(self.members, y, side="right") / self.members.size
        return float(out) if np.ndim(y) == 0 else out

    def cdf_left(self, y):
        out = np.searchsorted(self.members, y, side="left") / self.members.size
        return float(out) if np.ndim(y) == 0 else out

    def quantile(self, prob):
        prob = np.asarray(prob, dtype=float)
        scalar = prob.ndim == 0
        if np.any((prob <= 0.0) | (prob > 1.0)):
            raise ValueError("prob must lie in (0, 1]")
        idx = np.minimum(
            np.ceil(prob * self.members.size).astype(int) - 1, self.members.size - 1
        )
        out = self.members[np.maximum(idx, 0)]
        return float(out) if scalar else out

    def crps(self, y: float) -> float:
        from .verification import fair_crps

        if self.members.size == 1:
            return float(abs(self.members[0] - y))
        return fair_crps(self.members, y)

    def empirical_crps(self, y: float) -> float:
        """Plain (non-fair) kernel CRPS of the equal-weight step CDF."""
        return ecdf_crps(self.members, self._weights(), y)

    def sample(self, size, rng) -> np.ndarray:
        return self.members[rng.integers(0, self.members.size, size)]

    def to_dict(self) -> dict:
        return {"family": "ensemble", "members": self.members.tolist()}


def prediction_from_dict(d: dict):
    """Inverse of ``to_dict`` for all prediction kinds."""
    family = d.get("family")
    if family == "egp":
        return ParametricPrediction(
            pdist.EgpParams(pi=d["pi"], kappa=d["kappa"], sigma=d["sigma"], xi=d["xi"])
        )
    if family == "csg":
        return ParametricPrediction(
            pdist.CsgParams(delta=d["delta"], kappa=d["kappa"], theta=d["theta"], pi=d["pi"])
        )
    if family == "cgev":
        return ParametricPrediction(
            pdist.CgevParams(mu=d["mu"], sigma=d["sigma"], xi=d["xi"], pi=d["pi"])
        )
    if family == "ecdf":
        return EcdfPrediction(WeightedEcdf(d["values"], d["weights"]))
    if family == "ensemble":
        return EnsemblePrediction(d["members"])
    raise ValueError(f"unknown prediction family {family!r}")
