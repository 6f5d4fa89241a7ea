"""CART regression trees with exact and histogram-binned split finding.

Both fitters grow the same greedy, depth-first, squared-loss tree: at each
node every candidate (feature, threshold) split is scored by weighted
variance reduction and the best is taken, with ties broken toward the lowest
feature index and then the lowest threshold. The exact fitter scans
midpoints between consecutive distinct sorted values; the histogram fitter
scans boundaries between consecutive nonempty quantile bins, accumulating
per-bin (count, weight, weighted target) statistics instead of sorting.

Determinism: rows are brought into a canonical order before fitting, so the
fitted tree is bit-identical under any permutation of the training rows, and
when every feature has at most ``max_bins`` distinct values the histogram
tree is bit-identical to the exact tree (bin edges then fall on the same
value midpoints).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DataError
from .rng import substream


@dataclass(slots=True, frozen=True)
class TreeConfig:
    """Growth limits and seeding for a single regression tree.

    ``max_depth=None`` means unlimited. ``feature_subsample`` < 1 draws a
    fresh candidate-feature subset at every node (random forest behaviour);
    the subset size is ``ceil(feature_subsample * n_features)``.
    """

    max_depth: int | None = None
    min_samples_leaf: int = 1
    min_samples_split: int = 2
    max_bins: int = 255
    feature_subsample: float = 1.0
    seed: int = 0

    def validate(self) -> None:
        if self.max_depth is not None and self.max_depth < 1:
            raise DataError("max_depth must be >= 1 or None")
        if self.min_samples_leaf < 1:
            raise DataError("min_samples_leaf must be >= 1")
        if self.min_samples_split < 2:
            raise DataError("min_samples_split must be >= 2")
        if not 2 <= self.max_bins <= 255:
            raise DataError("max_bins must be in [2, 255]")
        if not 0.0 < self.feature_subsample <= 1.0:
            raise DataError("feature_subsample must be in (0, 1]")


@dataclass(slots=True, eq=True)
class TreeNode:
    """A node of a fitted tree; ``feature == -1`` marks a leaf.

    Internal nodes route ``x[feature] <= threshold`` to the left child.
    Every node stores the (weighted) mean target and sample count of the
    training rows that reached it. The root additionally records the
    training arity (``n_features``) so predictions can reject mis-shaped
    inputs.
    """

    feature: int
    threshold: float
    value: float
    n_samples: int
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None
    n_features: int | None = None

    @property
    def is_leaf(self) -> bool:
        return self.feature < 0

    def depth(self) -> int:
        if self.is_leaf:
            return 0
        return 1 + max(self.left.depth(), self.right.depth())

    def n_leaves(self) -> int:
        if self.is_leaf:
            return 1
        return self.left.n_leaves() + self.right.n_leaves()

    def to_dict(self) -> dict:
        if self.is_leaf:
            doc = {"kind": "leaf", "value": self.value, "n": self.n_samples}
        else:
            doc = {
                "kind": "split",
                "feature": self.feature,
                "threshold": self.threshold,
                "value": self.value,
                "n": self.n_samples,
                "left": self.left.to_dict(),
                "right": self.right.to_dict(),
            }
        if self.n_features is not None:
            doc["n_features"] = self.n_features
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "TreeNode":
        n_features = doc.get("n_features")
        if doc["kind"] == "leaf":
            return cls(
                feature=-1,
                threshold=0.0,
                value=float(doc["value"]),
                n_samples=int(doc["n"]),
                n_features=n_features,
            )
        return cls(
            feature=int(doc["feature"]),
            threshold=float(doc["threshold"]),
            value=float(doc["value"]),
            n_samples=int(doc["n"]),
            left=cls.from_dict(doc["left"]),
            right=cls.from_dict(doc["right"]),
            n_features=n_features,
        )


@dataclass(slots=True)
class BinMap:
    """Per-feature bin edges plus the observed value range of each bin.

    ``edges[f]`` is strictly ascending; a value v maps to the number of
    edges strictly below it (values above the last edge land in the final
    bin). ``bin_min``/``bin_max`` hold the smallest/largest training value
    seen in each bin and provide split thresholds that fall between bins.
    """

    edges: list[np.ndarray]
    bin_min: list[np.ndarray]
    bin_max: list[np.ndarray]

    @property
    def n_features(self) -> int:
        return len(self.edges)

    def n_bins(self, feature: int) -> int:
        return len(self.edges[feature]) + 1

    def binize(self, X: np.ndarray) -> np.ndarray:
        X = _as_matrix(X)
        if X.shape[1] != self.n_features:
            raise DataError(
                f"binize: expected {self.n_features} features, got {X.shape[1]}"
            )
        out = np.empty(X.shape, dtype=np.int32)
        for f in range(self.n_features):
            out[:, f] = np.searchsorted(self.edges[f], X[:, f], side="left")
        return out

    def to_dict(self) -> dict:
        return {
            "edges": [e.tolist() for e in self.edges],
            "bin_min": [m.tolist() for m in self.bin_min],
            "bin_max": [m.tolist() for m in self.bin_max],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "BinMap":
        return cls(
            edges=[np.asarray(e, dtype=np.float64) for e in doc["edges"]],
            bin_min=[np.asarray(m, dtype=np.float64) for m in doc["bin_min"]],
            bin_max=[np.asarray(m, dtype=np.float64) for m in doc["bin_max"]],
        )


def build_bins(X: np.ndarray, max_bins: int = 255) -> BinMap:
    """Quantile bin map for ``X``.

    Features with at most ``max_bins`` distinct values get one bin per
    value, with edges at the midpoints between consecutive distinct values
    (histogram splits are then exact). Denser features get edges at the
    ``i/max_bins`` quantiles, deduplicated.
    """
    X = _as_matrix(X)
    if X.shape[0] == 0:
        raise DataError("build_bins: empty feature table")
    if not 2 <= max_bins <= 255:
        raise DataError("max_bins must be in [2, 255]")
    edges: list[np.ndarray] = []
    mins: list[np.ndarray] = []
    maxs: list[np.ndarray] = []
    for f in range(X.shape[1]):
        col = X[:, f]
        uniq = np.unique(col)
        if uniq.size <= max_bins:
            e = (uniq[:-1] + uniq[1:]) / 2.0
            edges.append(e)
            mins.append(uniq.copy())
            maxs.append(uniq.copy())
            continue
        qs = np.quantile(col, np.arange(1, max_bins) / max_bins)
        e = np.unique(qs)
        n_bins = e.size + 1
        idx = np.searchsorted(e, col, side="left")
        lo = np.full(n_bins, np.inf)
        hi = np.full(n_bins, -np.inf)
        np.minimum.at(lo, idx, col)
        np.maximum.at(hi, idx, col)
        edges.append(e)
        mins.append(lo)
        maxs.append(hi)
    return BinMap(edges=edges, bin_min=mins, bin_max=maxs)


def fit_tree_exact(
    X: np.ndarray,
    y: np.ndarray,
    w: np.ndarray | None = None,
    cfg: TreeConfig = TreeConfig(),
) -> TreeNode:
    """Grow a regression tree scanning every distinct-value midpoint split."""
    fit = _FitData.prepare(X, y, w, cfg)
    return _grow(fit, bins=None, binned=None, presort=None)


def fit_tree_hist(
    X: np.ndarray,
    y: np.ndarray,
    w: np.ndarray | None,
    cfg: TreeConfig,
    bins: BinMap,
) -> TreeNode:
    """Grow a regression tree scanning histogram-bin boundaries.

    ``bins`` must have been built from a superset of ``X``'s values.
    """
    fit = _FitData.prepare(X, y, w, cfg)
    binned = bins.binize(fit.X)
    return _grow(fit, bins=bins, binned=binned, presort=None)


def _check_arity(tree: TreeNode, width: int, caller: str) -> None:
    if tree.n_features is not None and width != tree.n_features:
        raise DataError(f"{caller}: tree was fit on {tree.n_features} features, input has {width}")


def predict_tree(tree: TreeNode, x: Sequence[float] | np.ndarray) -> float:
    """Route one feature vector to its leaf value (ties go left)."""
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    _check_arity(tree, x.shape[0], "predict_tree")
    node = tree
    while not node.is_leaf:
        if node.feature >= x.shape[0]:
            raise DataError(
                f"predict_tree: tree uses feature {node.feature}, input has {x.shape[0]}"
            )
        node = node.left if x[node.feature] <= node.threshold else node.right
    return node.value


def predict_tree_batch(tree: TreeNode, X: np.ndarray) -> np.ndarray:
    """Vectorized prediction for a row matrix."""
    X = _as_matrix(X)
    _check_arity(tree, X.shape[1], "predict_tree_batch")
    out = np.empty(X.shape[0], dtype=np.float64)
    stack: list[tuple[TreeNode, np.ndarray]] = [(tree, np.arange(X.shape[0]))]
    while stack:
        node, idx = stack.pop()
        if node.is_leaf:
            out[idx] = node.value
            continue
        if node.feature >= X.shape[1]:
            raise DataError(
                f"predict_tree_batch: tree uses feature {node.feature}, input has {X.shape[1]}"
            )
        go_left = X[idx, node.feature] <= node.threshold
        stack.append((node.left, idx[go_left]))
        stack.append((node.right, idx[~go_left]))
    return out


def tree_training_mse(tree: TreeNode, X: np.ndarray, y: np.ndarray) -> float:
    pred = predict_tree_batch(tree, X)
    return float(np.mean((y - pred) ** 2))


def n_candidate_features(n_features: int, feature_subsample: float) -> int:
    """Size of the per-node candidate feature set under subsampling."""
    return min(n_features, max(1, int(np.ceil(feature_subsample * n_features))))


# ---------------------------------------------------------------------------
# Fitting internals.


def _as_matrix(X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise DataError(f"expected a 2-D feature matrix, got shape {X.shape}")
    return X


@dataclass(slots=True)
class _FitData:
    """Training arrays in canonical row order plus per-fit scratch."""

    X: np.ndarray
    y: np.ndarray
    w: np.ndarray
    wy: np.ndarray
    cfg: TreeConfig
    rng: np.random.Generator | None

    @classmethod
    def prepare(cls, X, y, w, cfg: TreeConfig) -> "_FitData":
        cfg.validate()
        X = _as_matrix(X)
        y = np.asarray(y, dtype=np.float64).reshape(-1)
        if X.shape[0] != y.shape[0]:
            raise DataError(f"X has {X.shape[0]} rows but y has {y.shape[0]}")
        if X.shape[0] == 0:
            raise DataError("cannot fit a tree on empty data")
        if w is None:
            w = np.ones(X.shape[0], dtype=np.float64)
        else:
            w = np.asarray(w, dtype=np.float64).reshape(-1)
            if w.shape[0] != X.shape[0]:
                raise DataError("sample weights must match the number of rows")
            if np.any(w <= 0):
                raise DataError("sample weights must be positive")
        X, y, w = canonical_rows(X, y, w)
        return cls.from_canonical(X, y, w, cfg)

    @classmethod
    def from_canonical(cls, X, y, w, cfg: TreeConfig) -> "_FitData":
        """Wrap arrays already in canonical row order (no copy, no checks)."""
        rng = None
        if cfg.feature_subsample < 1.0:
            rng = substream(cfg.seed, "tree-feature-subsample")
        return cls(X=X, y=y, w=w, wy=w * y, cfg=cfg, rng=rng)


def canonical_rows(
    X: np.ndarray, y: np.ndarray, w: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Sort rows into canonical order (by features, then target, then weight).

    Any permutation of identical (x, y, w) rows sorts to the same sequence,
    which makes every downstream floating-point sum bit-stable and fitted
    trees independent of input row order.
    """
    keys = [w, y] + [X[:, f] for f in range(X.shape[1] - 1, -1, -1)]
    order = np.lexsort(tuple(keys))
    return X[order], y[order], w[order]


def column_presort(X: np.ndarray) -> np.ndarray:
    """Per-feature stable sort order of ``X`` (already canonical) rows.

    Lets repeated fits on the same rows (boosting stages) skip per-node
    sorting: a node's value-sorted order is recovered by filtering these
    global orders with the node's membership mask.
    """
    presort = np.empty(X.shape, dtype=np.int64, order="F")
    for f in range(X.shape[1]):
        presort[:, f] = np.argsort(X[:, f], kind="stable")
    return presort


def _grow(
    fit: _FitData,
    bins: BinMap | None,
    binned: np.ndarray | None,
    presort: np.ndarray | None,
) -> TreeNode:
    cfg = fit.cfg
    n_features = fit.X.shape[1]
    root_idx = np.arange(fit.X.shape[0], dtype=np.int64)
    root = _make_node(fit, root_idx)
    root.n_features = n_features
    # Depth-first, preorder; the explicit stack both avoids recursion limits
    # on deep trees and pins the node-visit order the subsample rng sees.
    stack: list[tuple[TreeNode, np.ndarray, int]] = [(root, root_idx, 0)]
    while stack:
        node, idx, depth = stack.pop()
        if cfg.max_depth is not None and depth >= cfg.max_depth:
            continue
        n = idx.shape[0]
        if n < cfg.min_samples_split or n < 2 * cfg.min_samples_leaf:
            continue
        y_node = fit.y[idx]
        if y_node[0] == y_node[-1] and np.all(y_node == y_node[0]):
            continue  # constant target: no split can reduce variance

        features = _candidate_features(fit, n_features)
        if bins is None:
            best = _best_split_exact(fit, idx, features, presort)
        else:
            best = _best_split_hist(fit, idx, features, bins, binned)
        if best is None:
            continue
        feature, threshold = best
        go_left = fit.X[idx, feature] <= threshold
        left_idx = idx[go_left]
        right_idx = idx[~go_left]
        node.feature = feature
        node.threshold = threshold
        node.left = _make_node(fit, left_idx)
        node.right = _make_node(fit, right_idx)
        stack.append((node.right, right_idx, depth + 1))
        stack.append((node.left, left_idx, depth + 1))
    return root


def _make_node(fit: _FitData, idx: np.ndarray) -> TreeNode:
    w_sum = float(np.sum(fit.w[idx]))
    value = float(np.sum(fit.wy[idx]) / w_sum)
    return TreeNode(feature=-1, threshold=0.0, value=value, n_samples=int(idx.shape[0]))


def _candidate_features(fit: _FitData, n_features: int) -> np.ndarray:
    if fit.rng is None:
        return np.arange(n_features)
    k = n_candidate_features(n_features, fit.cfg.feature_subsample)
    chosen = fit.rng.choice(n_features, size=k, replace=False)
    chosen.sort()
    return chosen


def _best_split_exact(
    fit: _FitData,
    idx: np.ndarray,
    features: np.ndarray,
    presort: np.ndarray | None,
) -> tuple[int, float] | None:
    """Best (feature, threshold) by variance reduction, or None.

    Candidates are scored by the left+right term of the weighted SSE
    decrease (the parent term is constant per node); scanning features in
    ascending order with strict improvement implements the tie-break rule.
    Sorting a node's rows via the global presort (membership filtering) and
    via a stable per-node argsort yield the same sequence, so both paths
    fit bit-identical trees.
    """
    min_leaf = fit.cfg.min_samples_leaf
    n = idx.shape[0]
    if presort is not None:
        mask = np.zeros(fit.X.shape[0], dtype=bool)
        mask[idx] = True
    else:
        Xn = fit.X[idx]
        wn = fit.w[idx]
        wyn = fit.wy[idx]
        # one stable sort call for all candidate columns
        orders = np.argsort(Xn[:, features], axis=0, kind="stable")

    best_score = -np.inf
    best: tuple[int, float] | None = None
    best_parent = 0.0
    for slot, f in enumerate(features):
        if presort is not None:
            col_order = presort[:, f]
            snode = col_order[mask[col_order]]
            sv = fit.X[snode, f]
            sw = fit.w[snode]
            swy = fit.wy[snode]
        else:
            order = orders[:, slot]
            sv = Xn[order, f]
            sw = wn[order]
            swy = wyn[order]
        if sv[0] == sv[-1]:
            continue
        starts = np.flatnonzero(np.concatenate(([True], sv[1:] != sv[:-1])))
        g_w = np.add.reduceat(sw, starts)
        g_wy = np.add.reduceat(swy, starts)
        g_n = np.diff(np.append(starts, n))
        score, pos, parent = _score_groups(g_w, g_wy, g_n, min_leaf)
        if pos < 0 or score <= best_score:
            continue
        uniq = sv[starts]
        threshold = (uniq[pos] + uniq[pos + 1]) / 2.0
        best_score, best, best_parent = score, (int(f), float(threshold)), parent
    if best is None or best_score - best_parent <= 0.0:
        return None
    return best


def _best_split_hist(
    fit: _FitData,
    idx: np.ndarray,
    features: np.ndarray,
    bins: BinMap,
    binned: np.ndarray,
) -> tuple[int, float] | None:
    """Histogram-accumulation variant of :func:`_best_split_exact`.

    Thresholds fall halfway between the observed value ranges of consecutive
    nonempty bins, which reduces to the exact midpoint rule whenever bins
    hold single distinct values. Accumulating buckets in canonical row order
    keeps the group sums bit-identical to the exact scan's.
    """
    wn = fit.w[idx]
    wyn = fit.wy[idx]
    bn = binned[idx]
    min_leaf = fit.cfg.min_samples_leaf

    best_score = -np.inf
    best: tuple[int, float] | None = None
    best_parent = 0.0
    for f in features:
        b = bn[:, f]
        n_bins = bins.n_bins(f)
        counts = np.bincount(b, minlength=n_bins)
        nonempty = np.flatnonzero(counts)
        if nonempty.size < 2:
            continue
        w_b = np.bincount(b, weights=wn, minlength=n_bins)
        wy_b = np.bincount(b, weights=wyn, minlength=n_bins)
        score, pos, parent = _score_groups(
            w_b[nonempty], wy_b[nonempty], counts[nonempty], min_leaf
        )
        if pos < 0 or score <= best_score:
            continue
        left_bin = nonempty[pos]
        right_bin = nonempty[pos + 1]
        threshold = (bins.bin_max[f][left_bin] + bins.bin_min[f][right_bin]) / 2.0
        best_score, best, best_parent = score, (int(f), float(threshold)), parent
    if best is None or best_score - best_parent <= 0.0:
        return None
    return best


def _score_groups(
    g_w: np.ndarray, g_wy: np.ndarray, g_n: np.ndarray, min_leaf: int
) -> tuple[float, int, float]:
    """Score splits between consecutive value groups.

    Returns (score, position, parent_term) where score = S_L^2/W_L +
    S_R^2/W_R maximized over valid positions, position indexes the last
    left-side group (-1 if no valid split), and parent_term = S^2/W of the
    whole node. Weighted SSE decrease of a split is score - parent_term.
    """
    cw = np.cumsum(g_w)
    cwy = np.cumsum(g_wy)
    cn = np.cumsum(g_n)
    w_tot = cw[-1]
    s_tot = cwy[-1]
    n_tot = cn[-1]

    w_left = cw[:-1]
    s_left = cwy[:-1]
    n_left = cn[:-1]
    w_right = w_tot - w_left
    s_right = s_tot - s_left
    n_right = n_tot - n_left

    valid = (n_left >= min_leaf) & (n_right >= min_leaf)
    if not np.any(valid):
        return -np.inf, -1, 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        score = s_left * s_left / w_left + s_right * s_right / w_right
    score[~valid] = -np.inf
    pos = int(np.argmax(score))
    return float(score[pos]), pos, float(s_tot * s_tot / w_tot)
