"""Forest-guided predictor selection and cross-station frequencies.

Importance of a predictor is the increase in holdout mean squared error
of forest mean predictions when that predictor's holdout column is
randomly permuted (averaged over a few seeded permutations).  The
holdout is a deterministic interleaved quarter of the cases (every
fourth row), so repeated runs rank identically.

The chosen subset is built greedily from the importance ranking,
skipping any candidate whose absolute Pearson correlation with an
already chosen predictor exceeds the redundancy threshold, and stopping
at ``max_k`` predictors or at the first candidate with nonpositive
importance.

``predictor_frequency`` turns per-station selections into the fraction
of stations choosing each predictor, the weighting used by the
selection-frequency analog mode.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .forests import Forest, ForestHyper, grow_forest

__all__ = ["SelectionResult", "select_predictors", "permutation_importance", "predictor_frequency"]


@dataclass(frozen=True)
class SelectionResult:
    chosen: tuple
    ranking: tuple
    importances: dict
    base_mse: float

    def to_dict(self) -> dict:
        return {
            "chosen": list(self.chosen),
            "ranking": list(self.ranking),
            "importances": {k: float(v) for k, v in self.importances.items()},
            "base_mse": self.base_mse,
        }


def _holdout_mask(n: int) -> np.ndarray:
    """Every fourth case, a deterministic interleaved quarter."""
    mask = np.zeros(n, dtype=bool)
    mask[3::4] = True
    return mask


def permutation_importance(forest: Forest, X_hold: np.ndarray, y_hold: np.ndarray,
                           seed: int = 0, n_repeats: int = 3):
    """Per-predictor holdout MSE increase under column permutation."""
    base_pred = forest.predict_mean(X_hold)
    base_mse = float(np.mean((base_pred - y_hold) ** 2))
    p = X_hold.shape[1]
    imp = np.zeros(p)
    for j in range(p):
        acc = 0.0
        for r in range(n_repeats):
            rng = np.random.default_rng([seed, j, r])
            Xp = X_hold.copy()
            Xp[:, j] = Xp[rng.permutation(X_hold.shape[0]), j]
            acc += float(np.mean((forest.predict_mean(Xp) - y_hold) ** 2))
        imp[j] = acc / n_repeats - base_mse
    return imp, base_mse


def select_predictors(X, y, names, *, max_k: int = 4, corr_threshold: float = 0.9,
                      seed: int = 0, n_trees: int = 50, min_node_size: int = 10,
                      n_repeats: int = 3) -> SelectionResult:
    """Greedy forward selection from forest permutation importance.

    ``X`` is the full candidate matrix (n cases, p predictors) with
    verified responses ``y``; needs at least 200 cases so the holdout
    MSE is stable enough to rank on.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    names = list(names)
    if X.ndim != 2 or X.shape[0] != y.size:
        raise ValueError("X must be (n, p) aligned with y")
    if X.shape[1] != len(names) or len(set(names)) != len(names):
        raise ValueError("names must be unique and match the columns of X")
    if X.shape[0] < 200:
        raise ValueError("need at least 200 cases to rank predictors")
    if X.shape[1] < 2:
        raise ValueError("need at least two candidate predictors")
    if max_k < 1:
        raise ValueError("max_k must be positive")

    hold = _holdout_mask(X.shape[0])
    hyper = ForestHyper(n_trees=n_trees, min_node_size=min_node_size)
    forest = grow_forest(X[~hold], y[~hold], "cart", hyper, seed=seed, feature_names=names)
    imp, base_mse = permutation_importance(forest, X[hold], y[hold],
                                           seed=seed, n_repeats=n_repeats)

    order = np.argsort(-imp, kind="stable")
    ranking = tuple(names[j] for j in order)
    chosen_idx: list[int] = []
    for j in order:
        if imp[j] <= 0.0:
            break
        redundant = False
        for k in chosen_idx:
            with np.errstate(invalid="ignore"):
                r = np.corrcoef(X[:, j], X[:, k])[0, 1]
            if np.isfinite(r) and abs(r) > corr_threshold:
                redundant = True
                break
        if redundant:
            continue
        chosen_idx.append(int(j))
        if len(chosen_idx) == max_k:
            break

    return SelectionResult(
        chosen=tuple(names[j] for j in chosen_idx),
        ranking=ranking,
        importances={names[j]: float(imp[j]) for j in range(len(names))},
        base_mse=base_mse,
    )


def predictor_frequency(per_station) -> list:
    """Cross-station selection frequencies, descending (name breaks ties).

    ``per_station`` maps station id to its chosen predictor names (or to
    a SelectionResult).  Returns (name, fraction-of-stations) pairs for
    every predictor chosen at least once.
    """
    if not per_station:
        raise ValueError("no stations")
    counts: dict = {}
    for sel in per_station.values():
        chosen = sel.chosen if isinstance(sel, SelectionResult) else sel
        for name in chosen:
            counts[name] = counts.get(name, 0) + 1
    n = len(per_station)
    return sorted(((k, v / n) for k, v in counts.items()), key=lambda t: (-t[1], t[0]))
