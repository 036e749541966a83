"""Per-coefficient random-forest regressors on exogenous covariates.

Each time-varying coefficient gets its own independent forest mapping
covariate rows to that coefficient's windowed value at the same time
step. Training uses scikit-learn; fitted trees are flattened into plain
arrays so models serialize to JSON and predict without scikit-learn,
which keeps save/load round-trips exact.
"""

from dataclasses import dataclass

import numpy as np
from sklearn.ensemble import RandomForestRegressor


@dataclass(frozen=True)
class ForestConfig:
    n_trees: int = 5000
    max_depth: int = 5
    min_samples_split: int = 10
    min_samples_leaf: int = 5
    bootstrap: bool = True

    def __post_init__(self):
        if self.n_trees < 1:
            raise ValueError("need at least one tree")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if self.min_samples_split < 2 * self.min_samples_leaf:
            raise ValueError("min_samples_split must be at least twice min_samples_leaf")


@dataclass
class Forest:
    """Flattened regression forest: per-node arrays for each tree.

    feature < 0 marks a leaf; prediction averages the trees. Splits
    follow scikit-learn's convention (x[feature] <= threshold goes
    left).
    """

    trees: list
    n_features: int

    def predict(self, features):
        features = np.atleast_2d(np.asarray(features, dtype=float))
        if features.shape[1] != self.n_features:
            raise ValueError("feature count does not match the trained forest")
        total = np.zeros(features.shape[0])
        for feature, thresh, left, right, value in self.trees:
            idx = np.zeros(features.shape[0], dtype=np.int64)
            while True:
                internal = feature[idx] >= 0
                if not internal.any():
                    break
                rows = np.flatnonzero(internal)
                cols = feature[idx[rows]]
                go_left = features[rows, cols] <= thresh[idx[rows]]
                idx[rows] = np.where(go_left, left[idx[rows]], right[idx[rows]])
            total += value[idx]
        return total / len(self.trees)


def train_forest(features, targets, config=None, seed=0):
    """Fit one forest (all features considered at every split,
    bootstrap samples the size of the training set)."""
    if config is None:
        config = ForestConfig()
    features = np.atleast_2d(np.asarray(features, dtype=float))
    targets = np.asarray(targets, dtype=float)
    model = RandomForestRegressor(
        n_estimators=config.n_trees,
        max_depth=config.max_depth,
        min_samples_split=config.min_samples_split,
        min_samples_leaf=config.min_samples_leaf,
        max_features=None,
        bootstrap=config.bootstrap,
        random_state=int(seed),
        n_jobs=1,
    )
    model.fit(features, targets)
    trees = []
    for est in model.estimators_:
        t = est.tree_
        trees.append(
            (
                t.feature.astype(np.int64).copy(),
                t.threshold.astype(float).copy(),
                t.children_left.astype(np.int64).copy(),
                t.children_right.astype(np.int64).copy(),
                t.value[:, 0, 0].astype(float).copy(),
            )
        )
    return Forest(trees=trees, n_features=features.shape[1])


def build_training_set(track, features, train_end=None):
    """Pair covariate rows with the window value active at each step.

    Returns (X, Y): X the covariate rows over the training range, Y one
    column per varying coefficient, constant inside each window.
    """
    features = np.atleast_2d(np.asarray(features, dtype=float))
    targets = track.per_step()
    if train_end is None:
        train_end = targets.shape[0]
    if features.shape[0] < train_end:
        raise ValueError("covariate rows do not cover the training range")
    return features[:train_end], targets[:train_end]


@dataclass
class ParameterPredictor:
    """One forest per (state, varying-term) coefficient."""

    feature_names: tuple
    state_names: tuple
    varying: list
    forests: dict
    config: ForestConfig

    def predict_track(self, features):
        """Per-step coefficient predictions, one (m, n_varying) block per state."""
        features = np.atleast_2d(np.asarray(features, dtype=float))
        out = []
        for k in range(len(self.state_names)):
            block = np.empty((features.shape[0], len(self.varying[k])))
            for j, term in enumerate(self.varying[k]):
                block[:, j] = self.forests[(k, term)].predict(features)
            out.append(block)
        return out


def coefficient_seed(base_seed, state_index, term_index):
    """Stable per-forest seed independent of training order."""
    ss = np.random.SeedSequence([int(base_seed), int(state_index), int(term_index)])
    return int(ss.generate_state(1)[0])


def train_predictor(model, features, feature_names, config=None, base_seed=0, train_end=None):
    """Fit forests for every varying coefficient of a split model."""
    if config is None:
        config = ForestConfig()
    forests = {}
    varying = [list(split.varying) for split in model.splits]
    for k, track in enumerate(model.tracks):
        X, Y = build_training_set(track, features, train_end)
        for j, term in enumerate(varying[k]):
            forests[(k, term)] = train_forest(
                X, Y[:, j], config, seed=coefficient_seed(base_seed, k, term)
            )
    return ParameterPredictor(
        feature_names=tuple(feature_names),
        state_names=model.state_names,
        varying=varying,
        forests=forests,
        config=config,
    )


def predictor_to_json(predictor):
    payload = {
        "format": "tvode-coefficient-predictor",
        "feature_names": list(predictor.feature_names),
        "state_names": list(predictor.state_names),
        "config": {
            "n_trees": predictor.config.n_trees,
            "max_depth": predictor.config.max_depth,
            "min_samples_split": predictor.config.min_samples_split,
            "min_samples_leaf": predictor.config.min_samples_leaf,
            "bootstrap": predictor.config.bootstrap,
        },
        "forests": [],
    }
    for (k, term), forest in sorted(predictor.forests.items()):
        payload["forests"].append(
            {
                "state": k,
                "term": term,
                "n_features": forest.n_features,
                "trees": [
                    {
                        "feature": f.tolist(),
                        "threshold": t.tolist(),
                        "left": l.tolist(),
                        "right": r.tolist(),
                        "value": v.tolist(),
                    }
                    for f, t, l, r, v in forest.trees
                ],
            }
        )
    return payload


def predictor_from_json(payload):
    if payload.get("format") != "tvode-coefficient-predictor":
        raise ValueError("not a coefficient-predictor payload")
    cfg = payload["config"]
    config = ForestConfig(**cfg)
    forests = {}
    n_states = len(payload["state_names"])
    varying = [[] for _ in range(n_states)]
    for entry in payload["forests"]:
        trees = [
            (
                np.asarray(t["feature"], dtype=np.int64),
                np.asarray(t["threshold"], dtype=float),
                np.asarray(t["left"], dtype=np.int64),
                np.asarray(t["right"], dtype=np.int64),
                np.asarray(t["value"], dtype=float),
            )
            for t in entry["trees"]
        ]
        forests[(entry["state"], entry["term"])] = Forest(
            trees=trees, n_features=entry["n_features"]
        )
        varying[entry["state"]].append(entry["term"])
    return ParameterPredictor(
        feature_names=tuple(payload["feature_names"]),
        state_names=tuple(payload["state_names"]),
        varying=[sorted(v) for v in varying],
        forests=forests,
        config=config,
    )
