import json

import numpy as np
import pytest
from sklearn.ensemble import RandomForestRegressor

from tvode.discovery import CoefficientTrack
from tvode.predictor import (
    Forest,
    ForestConfig,
    build_training_set,
    coefficient_seed,
    predictor_from_json,
    predictor_to_json,
    train_forest,
)


def test_forest_config_validation():
    with pytest.raises(ValueError):
        ForestConfig(n_trees=0)
    with pytest.raises(ValueError):
        ForestConfig(max_depth=0)
    with pytest.raises(ValueError):
        ForestConfig(min_samples_split=5, min_samples_leaf=5)
    cfg = ForestConfig(min_samples_split=10, min_samples_leaf=5)
    assert cfg.n_trees == 5000


def test_single_unpruned_tree_memorizes_distinct_rows():
    rng = np.random.default_rng(0)
    features = rng.uniform(-1.0, 1.0, size=(40, 2))
    targets = rng.normal(size=40)
    config = ForestConfig(
        n_trees=1, max_depth=20, min_samples_split=2, min_samples_leaf=1, bootstrap=False
    )
    forest = train_forest(features, targets, config, seed=0)
    assert np.allclose(forest.predict(features), targets)


def test_flattened_forest_matches_sklearn_predictions():
    rng = np.random.default_rng(7)
    features = rng.uniform(-1.0, 1.0, size=(120, 3))
    targets = np.sin(features[:, 0]) + 0.5 * features[:, 1] ** 2
    config = ForestConfig(n_trees=30, max_depth=4, min_samples_split=6, min_samples_leaf=3)
    forest = train_forest(features, targets, config, seed=11)
    reference = RandomForestRegressor(
        n_estimators=30,
        max_depth=4,
        min_samples_split=6,
        min_samples_leaf=3,
        max_features=None,
        bootstrap=True,
        random_state=11,
        n_jobs=1,
    ).fit(features, targets)
    grid = rng.uniform(-1.0, 1.0, size=(50, 3))
    assert np.allclose(forest.predict(grid), reference.predict(grid), atol=1e-12)


def test_step_function_is_learned():
    rng = np.random.default_rng(7)
    features = rng.uniform(-1.0, 1.0, size=(250, 3))
    targets = (features[:, 0] > 0.0).astype(float)
    config = ForestConfig(n_trees=50, max_depth=3, min_samples_split=10, min_samples_leaf=5)
    forest = train_forest(features[:200], targets[:200], config, seed=0)
    labels = forest.predict(features[200:]) > 0.5
    accuracy = np.mean(labels == (targets[200:] > 0.5))
    assert accuracy >= 0.95


def test_constant_target_is_predicted_exactly():
    rng = np.random.default_rng(1)
    features = rng.normal(size=(50, 2))
    forest = train_forest(features, np.full(50, 3.25), ForestConfig(n_trees=10), seed=0)
    assert np.allclose(forest.predict(rng.normal(size=(20, 2))), 3.25)


def test_predictions_stay_within_the_training_range():
    rng = np.random.default_rng(2)
    features = rng.uniform(-1.0, 1.0, size=(100, 2))
    targets = rng.uniform(5.0, 9.0, size=100)
    forest = train_forest(features, targets, ForestConfig(n_trees=20), seed=3)
    wild = rng.uniform(-100.0, 100.0, size=(30, 2))
    preds = forest.predict(wild)
    assert np.all(preds >= targets.min() - 1e-12)
    assert np.all(preds <= targets.max() + 1e-12)


def test_predict_validates_feature_count():
    rng = np.random.default_rng(3)
    forest = train_forest(rng.normal(size=(30, 2)), rng.normal(size=30), ForestConfig(n_trees=2), seed=0)
    with pytest.raises(ValueError):
        forest.predict(np.ones((4, 3)))


def test_training_set_pairs_steps_with_window_values():
    track = CoefficientTrack(
        starts=np.array([0, 5]),
        ends=np.array([5, 10]),
        values=np.array([[0.1], [0.2]]),
        underdetermined=np.zeros(2, dtype=bool),
    )
    features = np.arange(24.0).reshape(12, 2)
    X, Y = build_training_set(track, features)
    assert X.shape == (10, 2)
    assert np.array_equal(Y[:, 0], [0.1] * 5 + [0.2] * 5)
    X, Y = build_training_set(track, features, train_end=6)
    assert X.shape == (6, 2)
    assert np.array_equal(Y[:, 0], [0.1] * 5 + [0.2])
    single = CoefficientTrack(
        starts=np.array([0]),
        ends=np.array([4]),
        values=np.array([[0.3]]),
        underdetermined=np.zeros(1, dtype=bool),
    )
    X, Y = build_training_set(single, features[:4])
    assert np.array_equal(Y[:, 0], [0.3] * 4)
    with pytest.raises(ValueError):
        build_training_set(track, features[:6])


def test_coefficient_seed_is_stable_and_distinct():
    assert coefficient_seed(0, 1, 2) == coefficient_seed(0, 1, 2)
    seeds = {coefficient_seed(0, k, t) for k in range(3) for t in range(3)}
    assert len(seeds) == 9
    assert coefficient_seed(1, 0, 0) != coefficient_seed(0, 0, 0)


def test_same_seed_same_forest_different_seed_differs():
    rng = np.random.default_rng(4)
    features = rng.uniform(-1.0, 1.0, size=(80, 2))
    targets = rng.normal(size=80)
    config = ForestConfig(n_trees=10)
    a = train_forest(features, targets, config, seed=5)
    b = train_forest(features, targets, config, seed=5)
    c = train_forest(features, targets, config, seed=6)
    grid = rng.uniform(-1.0, 1.0, size=(20, 2))
    assert np.array_equal(a.predict(grid), b.predict(grid))
    assert not np.array_equal(a.predict(grid), c.predict(grid))


def make_predictor():
    from tvode.predictor import ParameterPredictor

    rng = np.random.default_rng(5)
    features = rng.uniform(-1.0, 1.0, size=(60, 2))
    config = ForestConfig(n_trees=4, max_depth=3, min_samples_split=6, min_samples_leaf=3)
    forests = {
        (0, 0): train_forest(features, np.sin(features[:, 0]), config, seed=coefficient_seed(0, 0, 0)),
        (0, 2): train_forest(features, features[:, 1] ** 2, config, seed=coefficient_seed(0, 0, 2)),
        (1, 0): train_forest(features, features @ [0.3, -0.2], config, seed=coefficient_seed(0, 1, 0)),
    }
    return (
        ParameterPredictor(
            feature_names=("AT", "RH"),
            state_names=("a", "b"),
            varying=[[0, 2], [0]],
            forests=forests,
            config=config,
        ),
        features,
    )


def test_predict_track_blocks_follow_the_varying_layout():
    predictor, features = make_predictor()
    blocks = predictor.predict_track(features[:9])
    assert len(blocks) == 2
    assert blocks[0].shape == (9, 2)
    assert blocks[1].shape == (9, 1)
    assert np.array_equal(blocks[0][:, 1], predictor.forests[(0, 2)].predict(features[:9]))


def test_predictor_json_round_trip_predicts_identically():
    predictor, features = make_predictor()
    payload = json.loads(json.dumps(predictor_to_json(predictor)))
    back = predictor_from_json(payload)
    assert back.feature_names == predictor.feature_names
    assert back.state_names == predictor.state_names
    assert back.varying == predictor.varying
    assert back.config == predictor.config
    for key in predictor.forests:
        assert np.array_equal(back.forests[key].predict(features), predictor.forests[key].predict(features))
    with pytest.raises(ValueError):
        predictor_from_json({"format": "wrong"})
