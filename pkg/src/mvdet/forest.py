"""Decision trees and random forests over concatenated per-view features.

CART with Gini impurity: at each node the best split minimizes the weighted
child impurity over candidate thresholds placed at midpoints between sorted
distinct values.  Ties break toward the lowest feature index, then the lowest
threshold.  A node splits whenever it is impure, within depth budget, and a
min_leaf-respecting split exists (zero-gain splits are allowed, which is what
lets depth-2 trees solve XOR).

The per-view analysis walks internal nodes from the root down (breadth-first,
ties by creation order) and attributes each split feature to the view that
owns its index range.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DimensionMismatch, InsufficientData


@dataclass
class TreeNode:
    depth: int
    order: int
    counts: np.ndarray  # 2-class sample counts at this node
    feature_index: int = -1  # -1 marks a leaf
    threshold: float = 0.0
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None

    @property
    def is_leaf(self) -> bool:
        return self.feature_index < 0


@dataclass(frozen=True)
class TreeOptions:
    max_depth: int = 12
    min_leaf: int = 2
    feature_subsample: int | str | None = None  # None = all, "sqrt", or a count
    bootstrap: bool = True  # forests only

    def __post_init__(self):
        if self.max_depth < 1 or self.min_leaf < 1:
            raise ConfigError("max_depth and min_leaf must be >= 1")


@dataclass
class Forest:
    trees: list[TreeNode]
    n_trees: int
    rng_seed: int
    meta: dict = field(default_factory=dict)
    _flat: list[dict] = field(default_factory=list, repr=False)

    def __post_init__(self):
        if self.n_trees < 1 or len(self.trees) != self.n_trees:
            raise ConfigError("forest needs n_trees >= 1 trained trees")
        if not self._flat:
            self._flat = [flatten_tree(t) for t in self.trees]

    @property
    def n_features(self) -> int | None:
        return self.meta.get("n_features")


def _gini_pair(n_pos: np.ndarray, n_tot: np.ndarray) -> np.ndarray:
    """Gini impurity of binary count vectors; 0 where n_tot is 0."""
    with np.errstate(divide="ignore", invalid="ignore"):
        p = np.where(n_tot > 0, n_pos / n_tot, 0.0)
    return 1.0 - p ** 2 - (1.0 - p) ** 2


def _split_matrix(Xsub: np.ndarray, labels: np.ndarray, min_leaf: int):
    """Weighted child Gini for every (cut position, feature); invalid = inf.

    Returns (weighted (n-1, F), sorted values (n, F)).  Cut i puts the i+1
    lowest values of a feature in the left child (x <= midpoint threshold).
    """
    n = Xsub.shape[0]
    order = np.argsort(Xsub, axis=0, kind="stable")
    xs = np.take_along_axis(Xsub, order, axis=0)
    ys = labels[order]
    cum_pos = np.cumsum(ys, axis=0)
    total_pos = cum_pos[-1]
    nl = np.arange(1, n, dtype=np.float64)[:, None]
    nr = n - nl
    valid = (xs[1:] > xs[:-1]) & (nl >= min_leaf) & (nr >= min_leaf)
    pos_l = cum_pos[:-1]
    pos_r = total_pos[None, :] - pos_l
    weighted = (nl * _gini_pair(pos_l, nl) + nr * _gini_pair(pos_r, nr)) / n
    weighted[~valid] = np.inf
    return weighted, xs


def best_split_for_feature(x: np.ndarray, labels: np.ndarray, min_leaf: int):
    """Best (weighted_gini, threshold) of one feature column, or None.

    Left child takes x <= threshold.  Thresholds are midpoints between sorted
    distinct values; splits leaving fewer than min_leaf samples on a side are
    skipped.  Ties resolve to the lowest threshold.
    """
    weighted, xs = _split_matrix(np.asarray(x, dtype=np.float64)[:, None],
                                 np.asarray(labels, dtype=np.int64), min_leaf)
    i = int(np.argmin(weighted[:, 0]))
    if not np.isfinite(weighted[i, 0]):
        return None
    return float(weighted[i, 0]), float(0.5 * (xs[i, 0] + xs[i + 1, 0]))


def _pick_candidate_features(n_features: int, opts: TreeOptions, rng: np.random.Generator | None):
    sub = opts.feature_subsample
    if sub is None:
        return np.arange(n_features)
    if sub == "sqrt":
        k = max(1, int(round(np.sqrt(n_features))))
    else:
        k = min(int(sub), n_features)
    if rng is None:
        raise ConfigError("feature subsampling needs an rng")
    return np.sort(rng.choice(n_features, size=k, replace=False))


def train_tree(
    features: np.ndarray,
    labels: np.ndarray,
    opts: TreeOptions = TreeOptions(),
    rng: np.random.Generator | None = None,
) -> TreeNode:
    """Grow a CART tree; single-class data yields a pure leaf (not an error)."""
    X = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if X.ndim != 2 or len(X) != len(y):
        raise InsufficientData("features must be (N, D) with matching labels")
    if len(X) < 1:
        raise InsufficientData("empty dataset")
    counter = [0]

    def build(idx: np.ndarray, depth: int) -> TreeNode:
        counts = np.array([(y[idx] == 0).sum(), (y[idx] == 1).sum()])
        node = TreeNode(depth=depth, order=counter[0], counts=counts)
        counter[0] += 1
        if depth >= opts.max_depth or counts.min() == 0 or len(idx) < 2 * opts.min_leaf:
            return node
        candidates = _pick_candidate_features(X.shape[1], opts, rng)
        weighted, xs = _split_matrix(X[np.ix_(idx, candidates)], y[idx], opts.min_leaf)
        cut = np.argmin(weighted, axis=0)
        per_feature = weighted[cut, np.arange(weighted.shape[1])]
        fi = int(np.argmin(per_feature))
        if not np.isfinite(per_feature[fi]):
            return node
        i = int(cut[fi])
        f = int(candidates[fi])
        thr = float(0.5 * (xs[i, fi] + xs[i + 1, fi]))
        node.feature_index = f
        node.threshold = thr
        mask = X[idx, f] <= thr
        node.left = build(idx[mask], depth + 1)
        node.right = build(idx[~mask], depth + 1)
        return node

    return build(np.arange(len(X)), 0)


def train_forest(
    features: np.ndarray,
    labels: np.ndarray,
    n_trees: int = 100,
    opts: TreeOptions = TreeOptions(feature_subsample="sqrt"),
    rng: np.random.Generator | int = 0,
) -> Forest:
    """Bagged CART ensemble with per-node feature subsampling."""
    if n_trees < 1:
        raise ConfigError("n_trees must be >= 1")
    if isinstance(rng, (int, np.integer)):
        seed = int(rng)
        gen = np.random.default_rng(seed)
    else:
        seed = -1  # external generator, seed unknown
        gen = rng
    X = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    trees = []
    for _ in range(n_trees):
        tree_rng = np.random.default_rng(int(gen.integers(2 ** 63)))
        idx = tree_rng.integers(0, len(X), size=len(X)) if opts.bootstrap else np.arange(len(X))
        trees.append(train_tree(X[idx], y[idx], opts, rng=tree_rng))
    return Forest(trees=trees, n_trees=n_trees, rng_seed=seed,
                  meta={"n_features": X.shape[1]})


def flatten_tree(root: TreeNode) -> dict:
    """Arrays in creation order: feature, threshold, left, right, counts."""
    nodes: list[TreeNode] = []

    def collect(node: TreeNode):
        nodes.append(node)
        if not node.is_leaf:
            collect(node.left)
            collect(node.right)

    collect(root)
    nodes.sort(key=lambda n: n.order)
    index = {id(n): i for i, n in enumerate(nodes)}
    return {
        "feature": [n.feature_index for n in nodes],
        "threshold": [float(n.threshold) for n in nodes],
        "left": [-1 if n.is_leaf else index[id(n.left)] for n in nodes],
        "right": [-1 if n.is_leaf else index[id(n.right)] for n in nodes],
        "counts": [[int(n.counts[0]), int(n.counts[1])] for n in nodes],
    }


def unflatten_tree(flat: dict) -> TreeNode:
    feature = flat["feature"]
    nodes = [
        TreeNode(
            depth=0,
            order=i,
            counts=np.asarray(flat["counts"][i]),
            feature_index=int(feature[i]),
            threshold=float(flat["threshold"][i]),
        )
        for i in range(len(feature))
    ]
    for i, node in enumerate(nodes):
        li, ri = flat["left"][i], flat["right"][i]
        if not node.is_leaf:
            node.left, node.right = nodes[li], nodes[ri]

    def fix_depth(node: TreeNode, depth: int):
        node.depth = depth
        if not node.is_leaf:
            fix_depth(node.left, depth + 1)
            fix_depth(node.right, depth + 1)

    fix_depth(nodes[0], 0)
    return nodes[0]


def _tree_predict_batch(flat: dict, X: np.ndarray) -> np.ndarray:
    """Positive-class leaf frequency for each row, by iterative descent."""
    feature = np.asarray(flat["feature"])
    threshold = np.asarray(flat["threshold"])
    left = np.asarray(flat["left"])
    right = np.asarray(flat["right"])
    counts = np.asarray(flat["counts"], dtype=np.float64)
    node = np.zeros(len(X), dtype=np.int64)
    active = feature[node] >= 0
    while active.any():
        rows = np.flatnonzero(active)
        f = feature[node[rows]]
        goes_left = X[rows, f] <= threshold[node[rows]]
        node[rows] = np.where(goes_left, left[node[rows]], right[node[rows]])
        active = feature[node] >= 0
    c = counts[node]
    return c[:, 1] / c.sum(axis=1)


def predict_proba(forest: Forest, features: np.ndarray) -> np.ndarray:
    """Mean per-tree leaf positive frequency; accepts one vector or (N, D)."""
    X = np.atleast_2d(np.asarray(features, dtype=np.float64))
    expected = forest.n_features
    if expected is not None and X.shape[1] != expected:
        raise DimensionMismatch(f"feature length {X.shape[1]} != {expected}")
    acc = np.zeros(len(X))
    for flat in forest._flat:
        acc += _tree_predict_batch(flat, X)
    probs = acc / forest.n_trees
    return float(probs[0]) if np.asarray(features).ndim == 1 else probs


def internal_nodes_topdown(root: TreeNode) -> list[TreeNode]:
    """Internal nodes ordered by (depth, creation order)."""
    out: list[TreeNode] = []

    def collect(node: TreeNode):
        if node.is_leaf:
            return
        out.append(node)
        collect(node.left)
        collect(node.right)

    collect(root)
    out.sort(key=lambda n: (n.depth, n.order))
    return out


def feature_view_distribution(tree: TreeNode, top_k: int, features_per_view: int, n_views: int) -> np.ndarray:
    """Count the views owning the split features of the top_k highest nodes.

    Nodes are visited breadth-first from the root (ties by creation order);
    repeated features count once per occurrence.  Counts sum to
    min(top_k, number of internal nodes).
    """
    if features_per_view < 1 or n_views < 1:
        raise ConfigError("features_per_view and n_views must be >= 1")
    counts = np.zeros(n_views, dtype=np.int64)
    for node in internal_nodes_topdown(tree)[:top_k]:
        view = node.feature_index // features_per_view
        if view >= n_views:
            raise DimensionMismatch(
                f"feature {node.feature_index} outside {n_views} views x {features_per_view}"
            )
        counts[view] += 1
    return counts


def save_forest(path, forest: Forest):
    payload = {
        "format": "mvdet-forest",
        "version": 1,
        "n_trees": forest.n_trees,
        "rng_seed": forest.rng_seed,
        "meta": forest.meta,
        "trees": forest._flat,
    }
    with open(path, "w") as f:
        json.dump(payload, f, separators=(",", ":"))
        f.write("\n")


def load_forest(path) -> Forest:
    with open(path) as f:
        raw = json.load(f)
    if raw.get("format") != "mvdet-forest":
        raise ConfigError("not a forest checkpoint")
    trees = [unflatten_tree(flat) for flat in raw["trees"]]
    return Forest(trees=trees, n_trees=int(raw["n_trees"]), rng_seed=int(raw["rng_seed"]),
                  meta=raw.get("meta", {}), _flat=raw["trees"])
