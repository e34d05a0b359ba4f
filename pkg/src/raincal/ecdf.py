"""Weighted empirical CDF shared by the forest, tail and verification code."""

from __future__ import annotations

import numpy as np

__all__ = ["WeightedEcdf", "ecdf_quantile", "ecdf_crps", "pairwise_mean_abs_diff"]


class WeightedEcdf:
    """Step CDF with atoms ``values`` carrying probabilities ``weights``.

    Atoms are sorted ascending and exact duplicates are merged on
    construction.  Weights must be nonnegative and sum to one within 1e-9.
    """

    __slots__ = ("values", "weights", "_cum")

    def __init__(self, values, weights):
        values = np.asarray(values, dtype=float)
        weights = np.asarray(weights, dtype=float)
        if values.shape != weights.shape or values.ndim != 1 or values.size == 0:
            raise ValueError("values and weights must be equal-length nonempty 1-D arrays")
        if np.any(weights < 0.0):
            raise ValueError("negative weight")
        total = weights.sum()
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"weights must sum to 1, got {total!r}")
        uniq, inverse = np.unique(values, return_inverse=True)
        merged = np.zeros(uniq.size)
        np.add.at(merged, inverse, weights)
        self.values = uniq
        self.weights = merged
        self._cum = np.minimum(np.cumsum(merged), 1.0)
        self._cum[-1] = 1.0

    def __len__(self):
        return self.values.size

    def cdf(self, y):
        """P(Y <= y)."""
        idx = np.searchsorted(self.values, y, side="right")
        cum = np.concatenate(([0.0], self._cum))
        out = cum[idx]
        return float(out) if np.ndim(y) == 0 else out

    def cdf_left(self, y):
        """Left limit P(Y < y)."""
        idx = np.searchsorted(self.values, y, side="left")
        cum = np.concatenate(([0.0], self._cum))
        out = cum[idx]
        return float(out) if np.ndim(y) == 0 else out

    def quantile(self, prob):
        """Smallest atom whose cumulative weight reaches ``prob``."""
        prob = np.asarray(prob, dtype=float)
        scalar = prob.ndim == 0
        if np.any((prob <= 0.0) | (prob > 1.0)):
            raise ValueError("prob must lie in (0, 1]")
        # searchsorted side='left' yields the first index with cum >= prob
        idx = np.searchsorted(self._cum, prob, side="left")
        idx = np.minimum(idx, self.values.size - 1)
        out = self.values[idx]
        return float(out) if scalar else out

    def mean(self) -> float:
        return float(np.dot(self.values, self.weights))

    def support_max(self) -> float:
        """Largest atom with positive weight."""
        pos = self.weights > 0.0
        return float(self.values[pos][-1])

    def crps(self, y: float) -> float:
        return ecdf_crps(self.values, self.weights, y)

    def sample(self, size, rng) -> np.ndarray:
        """Inverse-CDF draws (atoms are hit with their weights)."""
        u = rng.random(size)
        idx = np.searchsorted(self._cum, u, side="left")
        return self.values[np.minimum(idx, self.values.size - 1)]


def ecdf_quantile(ecdf: WeightedEcdf, prob) -> float:
    """Quantile of a weighted empirical CDF (smallest value with cum weight >= prob)."""
    return ecdf.quantile(prob)


def pairwise_mean_abs_diff(values, weights) -> float:
    """E|X - X'| for X, X' iid from the weighted ECDF (values sorted ascending).

    Uses the sorted identity E|X - X'| = 2 * sum_i w_i v_i (W_i + W_{i-1} - 1),
    which equals the double sum sum_ij w_i w_j |v_i - v_j| exactly but costs
    O(n) after sorting.
    """
    values = np.asarray(values, dtype=float)
    weights = np.asarray(weights, dtype=float)
    w_hi = np.cumsum(weights)
    w_lo = w_hi - weights
    return float(2.0 * np.sum(weights * values * (w_hi + w_lo - 1.0)))


def ecdf_crps(values, weights, y: float) -> float:
    """CRPS of a weighted empirical CDF via the kernel identity.

    CRPS = sum_i w_i |v_i - y| - 0.5 * sum_ij w_i w_j |v_i - v_j|,
    with the double sum evaluated in its exact sorted O(n) form.
    """
    values = np.asarray(values, dtype=float)
    weights = np.asarray(weights, dtype=float)
    one = float(np.sum(weights * np.abs(values - y)))
    return one - 0.5 * pairwise_mean_abs_diff(values, weights)
