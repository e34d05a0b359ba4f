"""Probabilistic verification: CRPS variants, calibration diagnostics, ROC.

Scoring conventions
-------------------
* ``fair_crps`` scores a K-member ensemble as an estimator of the CRPS of
  the distribution the members were drawn from:

      (1/K) sum_i |x_i - y|  -  (1/(2K(K-1))) sum_ij |x_i - x_j|,

  which is unbiased in the ensemble size (the plain empirical kernel with
  1/(2K^2) is not).
* Parametric predictions use their closed-form CRPS when available and
  adaptive quadrature otherwise; weighted ECDFs use the exact kernel form.
* Skill: crpss = 1 - CRPS_method / CRPS_reference, positive when the
  method improves on the reference.

Calibration diagnostics
-----------------------
Ranks of the observation within the ensemble (ties resolved uniformly at
random) or randomized PIT values (uniform on [F(y-), F(y)] at atoms) are
binned into a K+1-bin histogram.  Summary statistics of Z = (rank-1)/K:

* E(Z), targeting 1/2;
* V(Z) = 12 * K/(K+2) * Var(Z), targeting 1 (the K/(K+2) factor removes
  the discreteness bias of a finite ensemble);
* entropy Omega = -(1/log(K+1)) sum f_i log f_i, targeting 1.

The flatness test projects standardized bin deviations onto orthonormal
linear and quadratic contrasts (slope and convexity components, each
asymptotically chi-square with 1 df under flatness) plus a chi-square
residual with K-2 df; the overall decision applies a Bonferroni-corrected
component threshold.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import stats as sstats

from .prediction import EcdfPrediction, EnsemblePrediction, ParametricPrediction

_trapezoid = getattr(np, "trapezoid", None) or np.trapz  # numpy < 2 fallback

__all__ = [
    "fair_crps",
    "crps_of_predictive",
    "crpss",
    "rank_of_obs",
    "pit_value",
    "RankHistogram",
    "histogram_stats",
    "flatness_test",
    "FlatnessResult",
    "RocCurve",
    "roc_curve",
    "peirce_score",
    "bootstrap_ci_mean",
    "stable_mean",
    "ScoreReport",
    "build_report",
]


def _pairwise_sum_abs(sorted_vals: np.ndarray) -> float:
    """sum_ij |v_i - v_j| over all ordered pairs, values sorted ascending."""
    n = sorted_vals.size
    k = np.arange(n)
    return float(2.0 * np.sum((2.0 * k - n + 1.0) * sorted_vals))


def fair_crps(members, y: float) -> float:
    """Fair (ensemble-size unbiased) CRPS of a K >= 2 member ensemble."""
    members = np.sort(np.asarray(members, dtype=float))
    k = members.size
    if k < 2:
        raise ValueError("fair CRPS needs at least two members")
    term1 = float(np.mean(np.abs(members - y)))
    return term1 - _pairwise_sum_abs(members) / (2.0 * k * (k - 1.0))


def crps_of_predictive(pred, y: float) -> float:
    """CRPS dispatch: fair for ensembles, kernel for ECDFs, closed form or
    quadrature for parametric families."""
    if isinstance(pred, EnsemblePrediction):
        return pred.crps(y)
    if isinstance(pred, (EcdfPrediction, ParametricPrediction)):
        return pred.crps(y)
    crps = getattr(pred, "crps", None)
    if crps is None:
        raise TypeError(f"cannot score {type(pred).__name__}")
    return crps(y)


def crpss(crps_method: float, crps_reference: float) -> float:
    """Skill score 1 - a/b; reference must be positive."""
    if not crps_reference > 0.0:
        raise ValueError("reference CRPS must be positive")
    return 1.0 - crps_method / crps_reference


def rank_of_obs(members, y: float, rng) -> int:
    """Rank of the observation in the pooled set {members, y}, in 1..K+1.

    Ties are resolved by placing the observation uniformly at random among
    the tied positions, so e.g. y = all members = 0 is uniform on 1..K+1.
    """
    members = np.asarray(members, dtype=float)
    below = int(np.sum(members < y))
    tied = int(np.sum(members == y))
    return below + 1 + int(rng.integers(0, tied + 1))


def pit_value(pred, y: float, rng) -> float:
    """Randomized PIT: F(y) at continuity points, uniform on [F(y-), F(y)]
    across an atom (for these families the atom sits at zero; for ECDFs
    every support point is an atom)."""
    hi = float(pred.cdf(y))
    lo = float(pred.cdf_left(y))
    if hi > lo:
        return lo + (hi - lo) * float(rng.random())
    return hi


@dataclass(frozen=True)
class RankHistogram:
    """Counts over the K+1 possible ranks."""

    counts: np.ndarray

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        if counts.ndim != 1 or counts.size < 2:
            raise ValueError("need at least two rank bins")
        if np.any(counts < 0):
            raise ValueError("negative count")
        object.__setattr__(self, "counts", counts)

    @property
    def k(self) -> int:
        return self.counts.size - 1

    @property
    def n(self) -> int:
        return int(self.counts.sum())

    @classmethod
    def from_ranks(cls, ranks, k: int) -> "RankHistogram":
        ranks = np.asarray(ranks, dtype=np.int64)
        if np.any((ranks < 1) | (ranks > k + 1)):
            raise ValueError("ranks must lie in 1..K+1")
        return cls(np.bincount(ranks - 1, minlength=k + 1))


def histogram_stats(h: RankHistogram) -> dict:
    """E(Z), V(Z) and entropy Omega of a rank histogram (Z = (rank-1)/K)."""
    if h.n == 0:
        raise ValueError("empty histogram")
    k = h.k
    z = np.arange(k + 1) / k
    f = h.counts / h.n
    ez = float(np.sum(f * z))
    var = float(np.sum(f * (z - ez) ** 2))
    vz = 12.0 * k / (k + 2.0) * var
    pos = f > 0.0
    omega = float(-np.sum(f[pos] * np.log(f[pos])) / np.log(k + 1))
    return {"ez": ez, "vz": vz, "omega": omega}


@dataclass(frozen=True)
class FlatnessResult:
    slope_stat: float
    slope_p: float
    convex_stat: float
    convex_p: float
    resid_stat: float
    resid_p: float
    alpha: float
    reject: bool

    def to_dict(self) -> dict:
        return {
            "slope_stat": self.slope_stat,
            "slope_p": self.slope_p,
            "convex_stat": self.convex_stat,
            "convex_p": self.convex_p,
            "resid_stat": self.resid_stat,
            "resid_p": self.resid_p,
            "alpha": self.alpha,
            "reject": self.reject,
        }


def flatness_test(h: RankHistogram, alpha: float = 0.05) -> FlatnessResult:
    """Decompose the flatness chi-square into slope, convexity and residual.

    Standardized deviations x_i = (n_i - n/m)/sqrt(n/m) over the m = K+1
    bins are projected on the orthonormal linear contrast (slope) and the
    orthonormal centered-quadratic contrast (convexity); each squared
    projection is chi-square(1) under flatness and the leftover sum of
    squares is chi-square(K-2).  The overall decision rejects when any
    component falls below the Bonferroni-adjusted level alpha/3, keeping
    the familywise error at alpha.
    """
    m = h.k + 1
    if m < 4:
        raise ValueError("flatness decomposition needs at least 4 bins")
    if h.n < 10 * m:
        raise ValueError("need n >= 10 * (K+1) cases for the chi-square approximation")
    e = h.n / m
    x = (h.counts - e) / np.sqrt(e)
    i = np.arange(1, m + 1, dtype=float)
    lin = i - (m + 1) / 2.0
    lin = lin / np.linalg.norm(lin)
    quad = (i - (m + 1) / 2.0) ** 2
    quad -= quad.mean()
    quad = quad / np.linalg.norm(quad)
    s_lin = float(np.dot(lin, x) ** 2)
    s_quad = float(np.dot(quad, x) ** 2)
    total = float(np.dot(x, x))
    resid = max(total - s_lin - s_quad, 0.0)
    df_resid = m - 3
    p_lin = float(sstats.chi2.sf(s_lin, 1))
    p_quad = float(sstats.chi2.sf(s_quad, 1))
    p_resid = float(sstats.chi2.sf(resid, df_resid))
    level = alpha / 3.0
    reject = (p_lin < level) or (p_quad < level) or (p_resid < level)
    return FlatnessResult(s_lin, p_lin, s_quad, p_quad, resid, p_resid, alpha, reject)


@dataclass(frozen=True)
class RocCurve:
    thresholds: np.ndarray  # decision thresholds, descending
    far: np.ndarray  # false alarm rate, nondecreasing
    hit: np.ndarray  # hit rate, nondecreasing
    auc: float
    peirce_max: float
    peirce_threshold: float

    def to_dict(self) -> dict:
        return {
            "thresholds": self.thresholds.tolist(),
            "far": self.far.tolist(),
            "hit": self.hit.tolist(),
            "auc": self.auc,
            "peirce_max": self.peirce_max,
            "peirce_threshold": self.peirce_threshold,
        }


def roc_curve(prob_forecasts, events) -> RocCurve:
    """ROC of probability forecasts for a binary event.

    Decision thresholds sweep all distinct forecast probabilities plus
    {0, 1} (descending, with a leading +inf so the curve starts at (0,0));
    "forecast yes" means probability >= threshold.  AUC by the trapezoid
    rule; the Peirce skill score hit - false alarm is maximized over the
    sweep.
    """
    p = np.asarray(prob_forecasts, dtype=float)
    ev = np.asarray(events, dtype=bool)
    if p.shape != ev.shape or p.ndim != 1:
        raise ValueError("prob_forecasts and events must be equal-length 1-D")
    if np.any((p < 0.0) | (p > 1.0)):
        raise ValueError("probabilities must lie in [0, 1]")
    n_event = int(ev.sum())
    n_non = ev.size - n_event
    if n_event == 0 or n_non == 0:
        raise ValueError("events must contain both outcomes")
    order = np.argsort(p, kind="stable")
    p_asc = p[order]
    ev_asc = ev[order].astype(np.int64)
    suffix_ev = np.concatenate((np.cumsum(ev_asc[::-1])[::-1], [0]))
    sweep = np.concatenate(([np.inf], np.unique(np.concatenate((p, [0.0, 1.0])))[::-1]))
    pos_from = np.searchsorted(p_asc, sweep, side="left")
    hits = suffix_ev[pos_from]
    total_pos = p.size - pos_from
    fas = total_pos - hits
    hit = hits / n_event
    far = fas / n_non
    auc = float(_trapezoid(hit, far))
    peirce = hit - far
    best = int(np.argmax(peirce))
    return RocCurve(sweep, far, hit, auc, float(peirce[best]), float(sweep[best]))


def peirce_score(hits: int, misses: int, false_alarms: int, correct_rejections: int) -> float:
    """Peirce skill score of one 2x2 contingency table."""
    if hits + misses == 0 or false_alarms + correct_rejections == 0:
        raise ValueError("contingency table needs both outcomes")
    return hits / (hits + misses) - false_alarms / (false_alarms + correct_rejections)


def stable_mean(values) -> float:
    """Mean that is invariant to the order of the inputs (sorted summation)."""
    v = np.sort(np.asarray(values, dtype=float))
    return float(v.sum() / v.size)


def bootstrap_ci_mean(values, n_boot: int = 1000, seed: int = 0, level: float = 0.95):
    """Percentile bootstrap interval for the mean (case resampling)."""
    v = np.asarray(values, dtype=float)
    if v.size < 2:
        raise ValueError("need at least two values")
    rng = np.random.default_rng([seed, 0x1CEB00])
    idx = rng.integers(0, v.size, size=(n_boot, v.size))
    means = v[idx].mean(axis=1)
    lo, hi = np.quantile(means, [(1 - level) / 2, 1 - (1 - level) / 2])
    return float(lo), float(hi)


@dataclass(frozen=True)
class ScoreReport:
    """Verification summary of one method on one validation set."""

    method: str
    n_cases: int
    k_ref: int
    mean_crps: float
    crps_ci: tuple
    crpss: float | None
    ez: float
    vz: float
    omega: float
    flatness: dict | None
    rank_counts: tuple
    roc: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "n_cases": self.n_cases,
            "k_ref": self.k_ref,
            "mean_crps": self.mean_crps,
            "crps_ci": list(self.crps_ci),
            "crpss": self.crpss,
            "ez": self.ez,
            "vz": self.vz,
            "omega": self.omega,
            "flatness": dict(self.flatness) if self.flatness is not None else None,
            "rank_counts": list(self.rank_counts),
            "roc": {str(k): None if v is None else dict(v) for k, v in self.roc.items()},
        }


def build_report(method: str, predictions, observations, *, baseline_crps: float | None = None,
                 seed: int = 0, thresholds=(0.1,), k_ref: int | None = None,
                 alpha: float = 0.05) -> ScoreReport:
    """Score a set of predictions against verified observations.

    Ensembles are ranked with ``rank_of_obs``; continuous predictions get
    randomized PIT values mapped to the same K+1 bins, with K taken from
    the ensembles themselves or ``k_ref`` (default 35).  ROC curves are
    computed for the events {obs > s}, s in ``thresholds``, using
    forecast probabilities 1 - F(s); thresholds with a degenerate outcome
    column are reported as null.
    """
    obs = np.asarray(observations, dtype=float)
    if len(predictions) != obs.size or obs.size == 0:
        raise ValueError("predictions and observations must align and be nonempty")
    if np.any(~np.isfinite(obs)):
        raise ValueError("observations must be verified (finite)")

    crps_vals = np.array([crps_of_predictive(p, y) for p, y in zip(predictions, obs)])
    mean_crps = stable_mean(crps_vals)
    ci = bootstrap_ci_mean(crps_vals, seed=seed)
    skill = crpss(mean_crps, baseline_crps) if baseline_crps is not None else None

    if k_ref is None:
        sizes = {p.members.size for p in predictions if isinstance(p, EnsemblePrediction)}
        if len(sizes) > 1:
            raise ValueError("mixed ensemble sizes; pass k_ref explicitly")
        k_ref = sizes.pop() if sizes else 35

    rng_rank = np.random.default_rng([seed, 0xA11])
    ranks = np.empty(obs.size, dtype=np.int64)
    for i, (pred, y) in enumerate(zip(predictions, obs)):
        if isinstance(pred, EnsemblePrediction) and pred.members.size == k_ref:
            ranks[i] = rank_of_obs(pred.members, y, rng_rank)
        else:
            u = pit_value(pred, y, rng_rank)
            ranks[i] = min(int(u * (k_ref + 1)) + 1, k_ref + 1)
    hist = RankHistogram.from_ranks(ranks, k_ref)
    stats_ = histogram_stats(hist)
    try:
        flat = flatness_test(hist, alpha=alpha).to_dict()
    except ValueError:
        flat = None  # too few cases for the chi-square approximation

    roc = {}
    for s in thresholds:
        probs = np.array([1.0 - float(p.cdf(s)) for p in predictions])
        try:
            roc[float(s)] = {
                k: v
                for k, v in roc_curve(probs, obs > s).to_dict().items()
                if k in ("auc", "peirce_max", "peirce_threshold")
            }
        except ValueError:
            roc[float(s)] = None

    return ScoreReport(
        method=method,
        n_cases=int(obs.size),
        k_ref=int(k_ref),
        mean_crps=mean_crps,
        crps_ci=ci,
        crpss=skill,
        ez=stats_["ez"],
        vz=stats_["vz"],
        omega=stats_["omega"],
        flatness=flat,
        rank_counts=tuple(int(c) for c in hist.counts),
        roc=roc,
    )
