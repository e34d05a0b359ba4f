"""Regression forests whose predictions are weighted empirical CDFs.

Two split criteria share one growing engine:

* ``cart``: maximize the variance reduction
  v(D0) - v(D1) - v(D2) with v(D) = sum (Y - mean)^2.
* ``gf``: gradient-style quantile splitting.  At each split a level ``q``
  is drawn uniformly from the configured orders, the parent node quantile
  theta is computed (linear-interpolation convention), the indicators
  rho_i = 1{Y_i >= theta} replace the responses, and the criterion

      Delta = sum_{j=1,2} (sum_{i in D_j} rho_i)^2 / |D_j|

  is maximized.  Delta equals the parent baseline (sum rho)^2/|D0| when a
  split leaves the indicator balanced, so "no gain" means Delta at its
  baseline.

Each tree grows on a bootstrap copy; a query's prediction collects the
training rows of the leaf it reaches in every tree, row j receiving weight
1/(leaf size * n_trees) per appearance.  The aggregated weights define an
empirical CDF over the original training responses: nonnegative weights
summing to one, so predicted quantiles can never exceed the largest
training response.

Trees are grown from per-tree seeds spawned deterministically from the
forest seed; growing in parallel or serially yields bit-identical forests.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .ecdf import WeightedEcdf, ecdf_quantile

__all__ = [
    "ForestHyper",
    "Forest",
    "split_score_cart",
    "split_score_gf",
    "choose_split",
    "grow_forest",
    "forest_weights",
    "ecdf_quantile",
    "load_forest",
]

FOREST_FORMAT = "raincal-forest"
FOREST_VERSION = 1


@dataclass(frozen=True)
class ForestHyper:
    """Forest hyperparameters.

    ``mtry`` defaults to ceil(p / 3) when left as None.  ``min_node_size``
    stops recursion once a node holds fewer than twice that many samples.
    """

    n_trees: int = 500
    mtry: int | None = None
    min_node_size: int = 10
    bootstrap_fraction: float = 1.0
    gf_orders: tuple = (0.1, 0.5, 0.9)

    def __post_init__(self):
        if self.n_trees < 1:
            raise ValueError("n_trees must be >= 1")
        if self.mtry is not None and self.mtry < 1:
            raise ValueError("mtry must be >= 1")
        if self.min_node_size < 1:
            raise ValueError("min_node_size must be >= 1")
        if not 0.0 < self.bootstrap_fraction <= 1.0:
            raise ValueError("bootstrap_fraction must lie in (0, 1]")
        if len(self.gf_orders) == 0 or any(not 0.0 < q < 1.0 for q in self.gf_orders):
            raise ValueError("gf_orders must be probabilities in (0, 1)")


def _variance_sum(y) -> float:
    y = np.asarray(y, dtype=float)
    return float(np.sum((y - y.mean()) ** 2))


def split_score_cart(parent, left, right) -> float:
    """Variance-reduction score v(D0) - v(D1) - v(D2) of a candidate split."""
    parent = np.asarray(parent, dtype=float)
    left = np.asarray(left, dtype=float)
    right = np.asarray(right, dtype=float)
    if left.size == 0 or right.size == 0 or left.size + right.size != parent.size:
        raise ValueError("left/right must partition the parent")
    return _variance_sum(parent) - _variance_sum(left) - _variance_sum(right)


def split_score_gf(parent, left, right, q: float) -> float:
    """Quantile-indicator score Delta of a candidate split.

    theta is the parent's order-``q`` quantile (linear interpolation) and
    rho_i = 1{Y_i >= theta}; Delta = sum_j (sum rho)^2 / |D_j|.
    """
    parent = np.asarray(parent, dtype=float)
    left = np.asarray(left, dtype=float)
    right = np.asarray(right, dtype=float)
    if left.size == 0 or right.size == 0 or left.size + right.size != parent.size:
        raise ValueError("left/right must partition the parent")
    if not 0.0 < q < 1.0:
        raise ValueError("q must lie in (0, 1)")
    theta = np.quantile(parent, q)
    rl = float(np.sum(left >= theta))
    rr = float(np.sum(right >= theta))
    return rl * rl / left.size + rr * rr / right.size


def choose_split(X_node, y_node, criterion: str = "cart", q: float | None = None):
    """Best cut over all candidate features and midpoint cuts of a node.

    Parameters
    ----------
    X_node : (n, m) candidate feature block, columns in evaluation order
    y_node : (n,) responses
    criterion : 'cart' or 'gf'
    q : quantile order, required for 'gf'

    Returns
    -------
    None if no cut has positive gain, else a tuple
    ``(feature_pos, cut, score, gain)`` where ``score`` is the criterion
    value (variance reduction for 'cart', Delta for 'gf') and ties are
    broken by first encounter in column-then-ascending-cut order.
    """
    X_node = np.asarray(X_node, dtype=float)
    y_node = np.asarray(y_node, dtype=float)
    n = y_node.size
    if X_node.shape[0] != n:
        raise ValueError("X_node and y_node disagree on n")
    if criterion == "cart":
        resp = y_node
        baseline = None  # gain computed against S^2/n below either way
    elif criterion == "gf":
        if q is None:
            raise ValueError("criterion 'gf' needs a quantile order q")
        theta = np.quantile(y_node, q)
        resp = (y_node >= theta).astype(float)
    else:
        raise ValueError(f"unknown criterion {criterion!r}")
    total = float(resp.sum())
    parent_term = total * total / n
    best = None  # (sum_of_child_terms, feature_pos, cut)
    for j in range(X_node.shape[1]):
        x = X_node[:, j]
        order = np.argsort(x, kind="stable")
        xs = x[order]
        rs = resp[order]
        bounds = np.nonzero(xs[1:] > xs[:-1])[0]
        if bounds.size == 0:
            continue
        cums = np.cumsum(rs)
        n_left = bounds + 1.0
        s_left = cums[bounds]
        child = s_left * s_left / n_left + (total - s_left) ** 2 / (n - n_left)
        k = int(np.argmax(child))  # first maximum: earliest cut wins ties
        if best is None or child[k] > best[0]:
            cut = 0.5 * (xs[bounds[k]] + xs[bounds[k] + 1])
            best = (float(child[k]), j, float(cut))
    if best is None:
        return None
    gain = best[0] - parent_term
    if not gain > 0.0:
        return None
    score = gain if criterion == "cart" else best[0]
    return best[1], best[2], score, gain


class _Tree:
    __slots__ = ("feature", "cut", "left", "right", "leaf_slot", "leaf_ptr",
                 "leaf_members", "inv_leaf_size", "leaf_means")

    def __init__(self, feature, cut, left, right, leaf_slot, leaf_ptr, leaf_members):
        self.feature = np.asarray(feature, dtype=np.int64)
        self.cut = np.asarray(cut, dtype=float)
        self.left = np.asarray(left, dtype=np.int64)
        self.right = np.asarray(right, dtype=np.int64)
        self.leaf_slot = np.asarray(leaf_slot, dtype=np.int64)
        self.leaf_ptr = np.asarray(leaf_ptr, dtype=np.int64)
        self.leaf_members = np.asarray(leaf_members, dtype=np.int64)
        sizes = np.diff(self.leaf_ptr).astype(float)
        self.inv_leaf_size = 1.0 / sizes
        self.leaf_means = None  # filled lazily by Forest.predict_mean

    @property
    def n_leaves(self) -> int:
        return self.leaf_ptr.size - 1

    def route(self, X) -> np.ndarray:
        """Leaf slot reached by every row of X (queries equal to a cut go left)."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        cur = np.zeros(X.shape[0], dtype=np.int64)
        while True:
            f = self.feature[cur]
            rows = np.nonzero(f >= 0)[0]
            if rows.size == 0:
                break
            nodes = cur[rows]
            go_left = X[rows, f[rows]] <= self.cut[nodes]
            cur[rows] = np.where(go_left, self.left[nodes], self.right[nodes])
        return self.leaf_slot[cur]

    def members_of(self, leaf: int) -> np.ndarray:
        return self.leaf_members[self.leaf_ptr[leaf]:self.leaf_ptr[leaf + 1]]


def _grow_tree(X, y, criterion, hyper, mtry, seed_seq):
    rng = np.random.default_rng(seed_seq)
    n, p = X.shape
    n_boot = max(1, int(round(hyper.bootstrap_fraction * n)))
    boot = rng.integers(0, n, n_boot)
    Xb = X[boot]
    yb = y[boot]

    feature, cut, left, right, leaf_slot = [], [], [], [], []
    leaf_ptr = [0]
    leaf_members = []

    def new_node():
        feature.append(-1)
        cut.append(np.nan)
        left.append(-1)
        right.append(-1)
        leaf_slot.append(-1)
        return len(feature) - 1

    def make_leaf(node_id, pos):
        leaf_slot[node_id] = len(leaf_ptr) - 1
        leaf_members.extend(boot[pos].tolist())
        leaf_ptr.append(len(leaf_members))

    root = new_node()
    stack = [(root, np.arange(n_boot))]
    while stack:
        node_id, pos = stack.pop()
        if pos.size < 2 * hyper.min_node_size:
            make_leaf(node_id, pos)
            continue
        feats = rng.choice(p, size=mtry, replace=False)
        q = None
        if criterion == "gf":
            q = hyper.gf_orders[rng.integers(0, len(hyper.gf_orders))]
        found = choose_split(Xb[np.ix_(pos, feats)], yb[pos], criterion, q)
        if found is None:
            make_leaf(node_id, pos)
            continue
        jpos, cut_val, _, _ = found
        fglobal = int(feats[jpos])
        go_left = Xb[pos, fglobal] <= cut_val
        feature[node_id] = fglobal
        cut[node_id] = cut_val
        lid = new_node()
        rid = new_node()
        left[node_id] = lid
        right[node_id] = rid
        # push right first so the left child is grown (and draws RNG) first
        stack.append((rid, pos[~go_left]))
        stack.append((lid, pos[go_left]))
    return _Tree(feature, cut, left, right, leaf_slot, leaf_ptr, leaf_members)


class Forest:
    """Grown forest plus the training responses its predictions draw from."""

    def __init__(self, trees, y_train, criterion, hyper, seed, feature_names=None):
        self.trees = list(trees)
        self.y_train = np.asarray(y_train, dtype=float)
        self.criterion = criterion
        self.hyper = hyper
        self.seed = int(seed)
        self.feature_names = tuple(feature_names) if feature_names is not None else None

    @property
    def n_trees(self) -> int:
        return len(self.trees)

    @property
    def n_train(self) -> int:
        return self.y_train.size

    def _as_matrix(self, x):
        if isinstance(x, dict):
            if self.feature_names is None:
                raise ValueError("forest was grown without feature names")
            missing = [k for k in self.feature_names if k not in x]
            if missing:
                raise KeyError(f"missing predictors: {missing}")
            x = np.array([x[k] for k in self.feature_names], dtype=float)
        X = np.atleast_2d(np.asarray(x, dtype=float))
        p = len(self.feature_names) if self.feature_names is not None else X.shape[1]
        if X.shape[1] != p:
            raise ValueError(f"expected {p} predictors, got {X.shape[1]}")
        return X

    def weights(self, x) -> np.ndarray:
        """Aggregated leaf weights of one query over the training rows."""
        X = self._as_matrix(x)
        if X.shape[0] != 1:
            raise ValueError("weights() takes a single query; use weight_table for batches")
        w = np.zeros(self.n_train)
        for tree in self.trees:
            leaf = int(tree.route(X)[0])
            np.add.at(w, tree.members_of(leaf), tree.inv_leaf_size[leaf])
        return w / self.n_trees

    def _leaf_table(self, X) -> list:
        return [tree.route(X) for tree in self.trees]

    def predict_ecdf(self, x):
        """Weighted ECDF prediction(s); a list for 2-D input, one ECDF for 1-D."""
        X = self._as_matrix(x)
        single = np.asarray(x).ndim == 1 or isinstance(x, dict)
        leaf_table = self._leaf_table(X)
        out = []
        inv_t = 1.0 / self.n_trees
        for i in range(X.shape[0]):
            w = np.zeros(self.n_train)
            for tree, leaves in zip(self.trees, leaf_table):
                leaf = leaves[i]
                np.add.at(w, tree.members_of(leaf), tree.inv_leaf_size[leaf])
            nz = np.nonzero(w)[0]
            out.append(WeightedEcdf(self.y_train[nz], w[nz] * inv_t))
        return out[0] if single else out

    def predict_mean(self, X) -> np.ndarray:
        """Mean of the predictive ECDF of each query row.

        Equals the weight-averaged training response; computed tree by
        tree from cached per-leaf means, so it is cheap enough for
        permutation importance loops.
        """
        X = self._as_matrix(X)
        out = np.zeros(X.shape[0])
        for tree in self.trees:
            if tree.leaf_means is None:
                sums = np.add.reduceat(self.y_train[tree.leaf_members], tree.leaf_ptr[:-1])
                tree.leaf_means = sums * tree.inv_leaf_size
            out += tree.leaf_means[tree.route(X)]
        return out / self.n_trees

    def predict_quantiles(self, X, probs) -> np.ndarray:
        """Quantiles of the predictive ECDFs, shape (n_queries, len(probs))."""
        probs = np.atleast_1d(np.asarray(probs, dtype=float))
        ecdfs = self.predict_ecdf(np.atleast_2d(np.asarray(X, dtype=float)))
        if isinstance(ecdfs, WeightedEcdf):
            ecdfs = [ecdfs]
        return np.array([[e.quantile(p) for p in probs] for e in ecdfs])

    def to_dict(self) -> dict:
        return {
            "format": FOREST_FORMAT,
            "version": FOREST_VERSION,
            "criterion": self.criterion,
            "seed": self.seed,
            "hyper": {
                "n_trees": self.hyper.n_trees,
                "mtry": self.hyper.mtry,
                "min_node_size": self.hyper.min_node_size,
                "bootstrap_fraction": self.hyper.bootstrap_fraction,
                "gf_orders": list(self.hyper.gf_orders),
            },
            "feature_names": list(self.feature_names) if self.feature_names else None,
            "y_train": self.y_train.tolist(),
            "trees": [
                {
                    "feature": t.feature.tolist(),
                    "cut": [None if f < 0 else c for f, c in zip(t.feature, t.cut)],
                    "left": t.left.tolist(),
                    "right": t.right.tolist(),
                    "leaf_slot": t.leaf_slot.tolist(),
                    "leaf_ptr": t.leaf_ptr.tolist(),
                    "leaf_members": t.leaf_members.tolist(),
                }
                for t in self.trees
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Forest":
        if d.get("format") != FOREST_FORMAT:
            raise ValueError("not a serialized forest")
        if d.get("version") != FOREST_VERSION:
            raise ValueError(f"unsupported forest version {d.get('version')}")
        hyper = ForestHyper(**{**d["hyper"], "gf_orders": tuple(d["hyper"]["gf_orders"])})
        trees = [
            _Tree(
                td["feature"],
                [np.nan if c is None else c for c in td["cut"]],
                td["left"],
                td["right"],
                td["leaf_slot"],
                td["leaf_ptr"],
                td["leaf_members"],
            )
            for td in d["trees"]
        ]
        return cls(trees, d["y_train"], d["criterion"], hyper, d["seed"],
                   d.get("feature_names"))

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, sort_keys=True)

    def __eq__(self, other):
        if not isinstance(other, Forest):
            return NotImplemented
        return self.to_dict() == other.to_dict()


def load_forest(path) -> Forest:
    with open(path) as fh:
        return Forest.from_dict(json.load(fh))


def grow_forest(X, y, criterion: str = "cart", hyper: ForestHyper | None = None,
                seed: int = 0, feature_names=None, n_jobs: int = 1) -> Forest:
    """Grow a forest of ``hyper.n_trees`` trees.

    Per-tree seeds are spawned from ``seed`` so results do not depend on
    ``n_jobs``.  All-constant responses are legal and give single-leaf
    trees (no cut ever has positive gain).
    """
    if criterion not in ("cart", "gf"):
        raise ValueError(f"unknown criterion {criterion!r}")
    hyper = hyper or ForestHyper()
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.size:
        raise ValueError("X must be (n, p) and y (n,)")
    if y.size == 0:
        raise ValueError("empty training set")
    if feature_names is not None and len(feature_names) != X.shape[1]:
        raise ValueError("feature_names length mismatch")
    p = X.shape[1]
    mtry = min(hyper.mtry if hyper.mtry is not None else -(-p // 3), p)
    seeds = np.random.SeedSequence(seed).spawn(hyper.n_trees)
    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            trees = list(pool.map(
                lambda s: _grow_tree(X, y, criterion, hyper, mtry, s), seeds
            ))
    else:
        trees = [_grow_tree(X, y, criterion, hyper, mtry, s) for s in seeds]
    return Forest(trees, y, criterion, hyper, seed, feature_names)


def forest_weights(forest: Forest, x) -> np.ndarray:
    """Training-row weights of one query (nonnegative, summing to one)."""
    return forest.weights(x)
