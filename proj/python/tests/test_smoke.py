import math

import numpy as np
import pytest

import bedsense


def test_bmi():
    assert bedsense.compute_bmi(70.0, 1.75) == pytest.approx(22.857142857)
    with pytest.raises(ValueError):
        bedsense.compute_bmi(-1.0, 1.75)


def test_median_and_features():
    frame = np.arange(1, 10, dtype=float).reshape(3, 3)
    out = bedsense.median_filter(frame)
    assert out[1, 1] == 5
    assert out[0, 0] == 3
    feats = bedsense.extract_features(np.array([[0.0, 10.0], [10.0, 20.0]]))
    assert len(feats) == len(bedsense.FEATURE_NAMES) == 14
    assert feats[bedsense.FEATURE_NAMES.index("max")] == 20


def test_temporal_gaussian_keeps_constants():
    session = [np.full((2, 2), 7.0) for _ in range(4)]
    out = bedsense.temporal_gaussian(session)
    assert all(np.allclose(f, 7.0) for f in out)
    assert sum(bedsense.gaussian_kernel(5, 1.0)) == pytest.approx(1.0)


def test_isolines():
    assert bedsense.contour_levels(0, 42) == [5, 10, 15, 20, 25, 30, 35, 40]
    disc = np.zeros((5, 5))
    disc[2, 2] = 10
    lines = bedsense.trace_isolines(disc, 5)
    assert len(lines) == 1
    pts, closed = lines[0]
    assert closed and len(pts) == 4


def test_pipeline_and_cv():
    corpus = bedsense.synthesize(subjects=3, frames_per_subject=20, seed=4)
    assert len(corpus) == 60
    assert corpus.shape == (64, 32)
    table = bedsense.extract_table(bedsense.preprocess(corpus))
    assert table.matrix().shape == (60, 14)
    report = bedsense.cross_validate(table, recipe="knn", folds=5, seed=1, k=1)
    assert len(report["per_fold"]) == 5
    assert report["aggregate"]["mean"]["identity.accuracy"] > 0.9


def test_train_predict():
    rng = np.random.default_rng(0)
    x = rng.normal(size=(40, 3))
    ids = [i % 2 for i in range(40)]
    x[:, 0] += 5 * np.array(ids)
    bmi = [20.0 + 5 * i for i in ids]
    model = bedsense.train(x, ids, bmi, 2, max_iterations=100, hidden=[8, 8], seed=1)
    pred, est, probs = model.predict(x)
    assert list(pred) == ids
    assert probs.shape == (40, 2)
    assert bedsense.r2(est, bmi) > 0.9


def test_baselines_and_metrics():
    train = np.array([[0.0], [10.0]])
    assert bedsense.knn_classify(train, [0, 1], np.array([[4.0]]), k=1) == [0]
    subjects = [bedsense.make_subject(f"S{i}", 1.75, b * 1.75**2) for i, b in enumerate([18, 22, 26, 30, 34])]
    classes = bedsense.build_bmi_classes(subjects, mode="bmi")
    assert [classes[f"S{i}"] for i in range(5)] == [0, 1, 2, 3, 4]
    assert bedsense.r2([1, 2, 4], [1, 2, 3]) == 0.5
    assert math.isclose(bedsense.rmse([1, 2, 4], [1, 2, 3]), math.sqrt(1 / 3))
    prf = bedsense.per_class_prf([0, 0, 0, 0], [0, 1, 0, 1], 2)
    assert prf["per_class"][1]["precision"] == 0
    assert bedsense.confusion_matrix([0, 1], [1, 1], 2) == [[0, 0], [1, 1]]
