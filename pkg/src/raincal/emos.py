"""Ensemble model output statistics for censored rainfall families.

Each family maps a small set of ensemble summary statistics to its
distribution parameters through fixed link structures:

* shifted gamma (csg): mean affine in (HRES, CTRL, MEAN, PR0), variance
  affine in MEAN, shift delta a free nonnegative coefficient; the gamma
  shape and scale are kappa = mean^2/var, theta = var/mean.
* censored GEV (cgev): location affine in (HRES, CTRL, MEAN, PR0), scale
  affine in the ensemble MAD, shape a free coefficient constrained to
  (-0.5, 0.95).
* extended GP (egp): GP scale sigma affine in MAD, the product
  kappa * sigma affine in (HRES, CTRL, MEAN, PR0) and floored at zero,
  dry mass pi affine in PR0 clipped to [0, 1]; the tail index xi is not
  fitted per case but frozen at a station climatology estimated from the
  observed positive amounts (moment fit, clamped to [0.01, 0.7]).

Coefficients minimize the mean CRPS of the training cases with a
Nelder-Mead search restarted from a deterministic fan of perturbed
starting points around a climatological moment match.  The extended GP
CRPS uses its closed form; the gamma and GEV families integrate
(F - 1{x >= y})^2 with fixed-node Gauss-Legendre panels on [0, y] and on
the substituted tail x = y + s*u/(1-u).
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, special

from .distributions import (
    CgevParams,
    CsgParams,
    EgpParams,
    PwmInfeasibleError,
    PwmTriple,
    egp_crps_batch,
    egp_fit_pwm,
)
from .prediction import ParametricPrediction
from .tail import DRY_THRESHOLD

__all__ = [
    "EMOS_FAMILIES",
    "LinkSpec",
    "EmosModel",
    "EmosConfig",
    "emos_features",
    "apply_links",
    "mean_crps_objective",
    "emos_fit",
    "station_xi_climatology",
    "load_emos",
]

EMOS_FAMILIES = ("csg", "cgev", "egp")

_MU_COVARIATES = ("HRES", "CTRL", "MEAN", "PR0")
_PENALTY = 1.0e6

# Gauss-Legendre nodes shared by every objective evaluation.
_HEAD_X, _HEAD_W = np.polynomial.legendre.leggauss(64)
_TAIL_X, _TAIL_W = np.polynomial.legendre.leggauss(96)
_HEAD_T = 0.5 * (_HEAD_X + 1.0)  # nodes mapped to [0, 1]
_TAIL_U = 0.5 * (_TAIL_X + 1.0)


@dataclass(frozen=True)
class LinkSpec:
    """Names and layout of the coefficient vector of one family."""

    family: str

    def __post_init__(self):
        if self.family not in EMOS_FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")

    @property
    def coef_names(self) -> tuple:
        mu = ("mu0",) + tuple(f"mu_{c}" for c in _MU_COVARIATES)
        if self.family == "csg":
            return mu + ("var0", "var_MEAN", "delta")
        if self.family == "cgev":
            return mu + ("sigma0", "sigma_MAD", "xi")
        return mu + ("sigma0", "sigma_MAD", "pi0", "pi_PR0")

    @property
    def n_coefs(self) -> int:
        return len(self.coef_names)


@dataclass(frozen=True)
class EmosConfig:
    """Search settings for the coefficient fit."""

    n_restarts: int = 20
    max_evals: int = 200
    xi_default: float = 0.2
    xi_clamp: tuple = (0.01, 0.7)
    min_positive: int = 100

    def __post_init__(self):
        if self.n_restarts < 1 or self.max_evals < 10:
            raise ValueError("need at least 1 restart and 10 evaluations")


def emos_features(dataset) -> dict:
    """Per-case regression inputs: HRES, CTRL, MEAN, PR0 and the ensemble MAD.

    HRES and CTRL come from the auxiliary columns; the rest are computed
    from the members.  MAD is the median absolute deviation around the
    member median.
    """
    from .data import PredictorSet, derive_matrix

    stats = derive_matrix(dataset, PredictorSet("custom", ("MEAN", "PR0")))
    med = np.median(dataset.members, axis=1)
    mad = np.median(np.abs(dataset.members - med[:, None]), axis=1)
    out = {"MEAN": stats[:, 0], "PR0": stats[:, 1], "MAD": mad}
    for name in ("HRES", "CTRL"):
        if name not in dataset.aux:
            raise KeyError(f"EMOS needs auxiliary column {name}")
        out[name] = np.asarray(dataset.aux[name], dtype=float)
    return out


def _mu_design(features) -> np.ndarray:
    cols = [np.ones_like(np.asarray(features["MEAN"], dtype=float))]
    cols += [np.asarray(features[c], dtype=float) for c in _MU_COVARIATES]
    return np.column_stack(cols)


def _links_batch(family: str, coefs: np.ndarray, xi_fixed, features) -> dict | float:
    """Vector of per-case parameters, or a penalty distance for structurally
    invalid coefficients (only the cgev shape can be invalid; everything
    else is clamped)."""
    design = _mu_design(features)
    mu_lin = design @ coefs[:5]
    if family == "csg":
        mu = np.maximum(mu_lin, 1e-3)
        var = np.maximum(coefs[5] + coefs[6] * features["MEAN"], 1e-6)
        return {
            "kappa": mu * mu / var,
            "theta": var / mu,
            "delta": max(float(coefs[7]), 0.0),
        }
    if family == "cgev":
        xi = float(coefs[7])
        if not (-0.5 < xi < 0.95):
            return abs(xi) + 1.0
        sigma = np.maximum(coefs[5] + coefs[6] * features["MAD"], 1e-6)
        return {"mu": mu_lin, "sigma": sigma, "xi": xi}
    sigma = np.maximum(coefs[5] + coefs[6] * features["MAD"], 1e-6)
    kappa = np.maximum(np.maximum(mu_lin, 0.0) / sigma, 1e-3)
    pi = np.clip(coefs[7] + coefs[8] * features["PR0"], 0.0, 1.0)
    return {"pi": pi, "kappa": kappa, "sigma": sigma, "xi": float(xi_fixed)}


def _csg_cdf_grid(x: np.ndarray, p: dict) -> np.ndarray:
    """Gamma CDF of x + delta on an (n_cases, n_nodes) grid."""
    return special.gammainc(p["kappa"][:, None], np.maximum(x + p["delta"], 0.0) / p["theta"][:, None])


def _cgev_cdf_grid(x: np.ndarray, p: dict) -> np.ndarray:
    xi = p["xi"]
    z = (x - p["mu"][:, None]) / p["sigma"][:, None]
    if abs(xi) < 1e-10:
        return np.exp(-np.exp(-z))
    arg = 1.0 + xi * z
    if xi > 0.0:
        t = np.where(arg > 0.0, np.power(np.maximum(arg, 1e-300), -1.0 / xi), np.inf)
    else:
        t = np.where(arg > 0.0, np.power(np.maximum(arg, 1e-300), -1.0 / xi), 0.0)
    return np.exp(-t)


def _crps_gl_batch(cdf_grid, params: dict, y: np.ndarray, scale: np.ndarray) -> np.ndarray:
    """Per-case CRPS of a censored family by two Gauss-Legendre panels.

    Head: integral of F^2 over [0, y] on 64 nodes.  Tail: integral of
    (1 - F)^2 over [y, inf) via x = y + s*u/(1-u) on 96 nodes, with s a
    per-case scale that keeps the substituted integrand well resolved.
    """
    y = np.asarray(y, dtype=float)
    xh = y[:, None] * _HEAD_T[None, :]
    fh = cdf_grid(xh, params)
    head = 0.5 * y * ((fh * fh) @ _HEAD_W)
    u = _TAIL_U[None, :]
    xt = y[:, None] + scale[:, None] * u / (1.0 - u)
    ft = cdf_grid(xt, params)
    jac = scale[:, None] / (1.0 - u) ** 2
    tail = 0.5 * (((1.0 - ft) ** 2 * jac) @ _TAIL_W)
    return head + tail


def _family_crps_batch(family: str, params: dict, y: np.ndarray) -> np.ndarray:
    if family == "egp":
        return egp_crps_batch(params["pi"], params["kappa"], params["sigma"], params["xi"], y)
    if family == "csg":
        scale = np.maximum(params["kappa"] * params["theta"] + params["delta"], 0.5)
        return _crps_gl_batch(_csg_cdf_grid, params, y, scale)
    scale = np.maximum(2.0 * params["sigma"] + np.abs(params["mu"]), 0.5)
    return _crps_gl_batch(_cgev_cdf_grid, params, y, scale)


def mean_crps_objective(family: str, coefs: np.ndarray, xi_fixed, features, y) -> float:
    """Mean CRPS of the training set under one coefficient vector.

    Structurally invalid coefficients return a large penalty that grows
    with the violation so the simplex is pushed back toward the feasible
    region.  The per-case scores are summed in sorted order, making the
    value invariant to the ordering of the training cases.
    """
    params = _links_batch(family, np.asarray(coefs, dtype=float), xi_fixed, features)
    if not isinstance(params, dict):
        return _PENALTY + params
    vals = _family_crps_batch(family, params, np.asarray(y, dtype=float))
    if not np.all(np.isfinite(vals)):
        return _PENALTY + float(np.sum(~np.isfinite(vals)))
    vals = np.sort(vals)
    return float(vals.sum() / vals.size)


@dataclass(frozen=True)
class EmosModel:
    """Fitted coefficient vector plus the frozen tail index for egp."""

    family: str
    coefs: np.ndarray
    xi: float | None = None
    train_crps: float = float("nan")
    spec: LinkSpec = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "spec", LinkSpec(self.family))
        coefs = np.asarray(self.coefs, dtype=float)
        if coefs.shape != (self.spec.n_coefs,):
            raise ValueError(f"{self.family} expects {self.spec.n_coefs} coefficients")
        object.__setattr__(self, "coefs", coefs)
        if self.family == "egp" and self.xi is None:
            raise ValueError("egp model needs a frozen xi")

    def params_for(self, features_row: dict):
        """Distribution parameters for one case (scalar features)."""
        feats = {k: np.atleast_1d(np.asarray(v, dtype=float)) for k, v in features_row.items()}
        p = _links_batch(self.family, self.coefs, self.xi, feats)
        if not isinstance(p, dict):
            raise ValueError("model coefficients are structurally invalid")
        if self.family == "csg":
            return CsgParams(delta=p["delta"], kappa=float(p["kappa"][0]), theta=float(p["theta"][0]))
        if self.family == "cgev":
            return CgevParams(mu=float(p["mu"][0]), sigma=float(p["sigma"][0]), xi=p["xi"])
        return EgpParams(pi=float(p["pi"][0]), kappa=float(p["kappa"][0]),
                         sigma=float(p["sigma"][0]), xi=p["xi"])

    def predict(self, features) -> list:
        """Parametric predictions for a batch of cases (dict of arrays)."""
        n = np.asarray(features["MEAN"]).size
        out = []
        for i in range(n):
            row = {k: float(np.asarray(v)[i]) for k, v in features.items()}
            out.append(ParametricPrediction(self.params_for(row)))
        return out

    def to_dict(self) -> dict:
        return {
            "format": "raincal-emos",
            "version": 1,
            "family": self.family,
            "coef_names": list(self.spec.coef_names),
            "coefs": self.coefs.tolist(),
            "xi": self.xi,
            "train_crps": self.train_crps,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EmosModel":
        if d.get("format") != "raincal-emos":
            raise ValueError("not an EMOS model payload")
        return cls(family=d["family"], coefs=np.asarray(d["coefs"], dtype=float),
                   xi=d["xi"], train_crps=d.get("train_crps", float("nan")))

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, sort_keys=True, indent=1)
            fh.write("\n")


def load_emos(path) -> EmosModel:
    with open(path) as fh:
        return EmosModel.from_dict(json.load(fh))


def station_xi_climatology(observations, *, dry_threshold: float = DRY_THRESHOLD,
                           config: EmosConfig | None = None) -> float:
    """Tail index of the station's positive-amount climatology.

    A moment fit of the extended GP to the observed amounts at or above
    the dry threshold, clamped to the configured range.  Stations with
    too few wet cases, or an infeasible moment system, fall back to the
    default with a warning.
    """
    cfg = config or EmosConfig()
    lo, hi = cfg.xi_clamp
    obs = np.asarray(observations, dtype=float)
    wet = np.sort(obs[obs >= dry_threshold])
    if wet.size < cfg.min_positive:
        warnings.warn(
            f"only {wet.size} wet cases; using default tail index {cfg.xi_default}",
            stacklevel=2,
        )
        return float(np.clip(cfg.xi_default, lo, hi))
    weights = np.full(wet.size, 1.0 / wet.size)
    try:
        _, _, xi = egp_fit_pwm(PwmTriple.from_ecdf(wet, weights))
    except (PwmInfeasibleError, ValueError):
        warnings.warn(
            f"tail moment fit infeasible; using default tail index {cfg.xi_default}",
            stacklevel=2,
        )
        return float(np.clip(cfg.xi_default, lo, hi))
    return float(np.clip(xi, lo, hi))


def _start_vector(family: str, y: np.ndarray, dry_threshold: float) -> np.ndarray:
    """Climatological moment-matched start: intercepts only, slopes zero."""
    m = float(np.mean(y))
    sd = float(np.std(y, ddof=1)) if y.size > 1 else 1.0
    if family == "csg":
        return np.array([max(m, 0.1), 0, 0, 0, 0, max(sd * sd, 0.1), 0.0, 0.5])
    if family == "cgev":
        sigma0 = max(sd * np.sqrt(6.0) / np.pi, 0.1)
        return np.array([m - 0.5772 * sigma0, 0, 0, 0, 0, sigma0, 0.0, 0.1])
    wet = y[y >= dry_threshold]
    pi0 = 1.0 - wet.size / y.size
    mean_wet = float(np.mean(wet)) if wet.size else 1.0
    sd_wet = float(np.std(wet, ddof=1)) if wet.size > 1 else 1.0
    return np.array([max(mean_wet, 0.1), 0, 0, 0, 0, max(0.5 * sd_wet, 0.1), 0.0, pi0, 0.0])


def emos_fit(family: str, features, y, *, xi_fixed=None, config: EmosConfig | None = None,
             seed: int = 0, dry_threshold: float = DRY_THRESHOLD) -> EmosModel:
    """Minimum-CRPS coefficients for one family on one training set.

    The search runs Nelder-Mead from the moment-matched start and from
    ``n_restarts - 1`` seeded perturbations of it, each capped at
    ``max_evals`` objective evaluations, and keeps the best vector.  For
    the egp family ``xi_fixed`` must be supplied (see
    ``station_xi_climatology``).
    """
    cfg = config or EmosConfig()
    spec = LinkSpec(family)
    y = np.asarray(y, dtype=float)
    if y.size < 20:
        raise ValueError("need at least 20 training cases")
    if np.any(~np.isfinite(y)):
        raise ValueError("training observations must be finite")
    if family == "egp":
        if xi_fixed is None:
            raise ValueError("egp fit needs xi_fixed")
        lo, hi = cfg.xi_clamp
        if not (lo <= xi_fixed <= hi):
            raise ValueError(f"xi_fixed outside [{lo}, {hi}]")
    feats = {k: np.asarray(v, dtype=float) for k, v in features.items()}

    def objective(c):
        return mean_crps_objective(family, c, xi_fixed, feats, y)

    x0 = _start_vector(family, y, dry_threshold)
    scale = np.maximum(np.abs(x0), 0.2)
    rng = np.random.default_rng([seed, 0xE305])
    best_x, best_f = None, np.inf
    for r in range(cfg.n_restarts):
        start = x0 if r == 0 else x0 + 0.3 * scale * rng.standard_normal(spec.n_coefs)
        res = optimize.minimize(objective, start, method="Nelder-Mead",
                                options={"maxfev": cfg.max_evals, "xatol": 1e-4, "fatol": 1e-5})
        if res.fun < best_f:
            best_x, best_f = res.x, float(res.fun)
    if best_x is None or best_f >= _PENALTY:
        raise RuntimeError(f"{family} fit failed to find a feasible coefficient vector")
    return EmosModel(family=family, coefs=best_x,
                     xi=float(xi_fixed) if family == "egp" else None, train_crps=best_f)


def apply_links(model: EmosModel, features_row: dict):
    """Distribution parameters of one case under a fitted model."""
    return model.params_for(features_row)
