import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from botgraph import corpus
from botgraph.dga import (
    BENIGN, DGA, LinearModel, ModelError, Prediction, TrainConfig, TrainingError,
    classify_domain, decision_score, evaluate, fit_hinge_sgd, hinge_objective, load_model,
    predict, report_from_counts, save_model, train_linear_svm,
)
from botgraph.features import extract_domain_features


def unit(i, value=1.0):
    x = [0.0] * 11
    x[i] = value
    return x


def separable():
    samples = [unit(0, -1.0)] * 100 + [unit(0, 1.0)] * 100
    labels = [-1] * 100 + [1] * 100
    return samples, labels


def test_separable_training_is_perfect():
    samples, labels = separable()
    model = train_linear_svm(samples, labels)
    report = evaluate(model, samples, labels)
    assert report.accuracy == 1.0
    assert all(decision_score(model, x) * y >= 0 for x, y in zip(samples, labels))


def test_conflicting_labels_do_not_crash():
    samples = [unit(1, 0.5)] * 2
    model = train_linear_svm(samples, [1, -1])
    report = evaluate(model, samples, [1, -1])
    assert report.accuracy < 1.0


def test_training_is_deterministic():
    samples, labels = separable()
    cfg = TrainConfig(seed=4, epochs=5)
    assert train_linear_svm(samples, labels, cfg) == train_linear_svm(samples, labels, cfg)


def test_single_class_is_rejected():
    with pytest.raises(TrainingError, match="degenerate training set"):
        train_linear_svm([unit(0)] * 3, [1, 1, 1])


@pytest.mark.parametrize("kwargs", [{"regularization": 0}, {"epochs": 0}, {"learning_rate": -1}])
def test_bad_train_config(kwargs):
    with pytest.raises(ValueError):
        TrainConfig(**kwargs)


def test_predict_examples():
    m = LinearModel(tuple(unit(0)), 0.0)
    assert predict(m, unit(0, 2.0)) == Prediction(DGA, 2.0)
    m = LinearModel((0.0,) * 11, -0.5)
    assert predict(m, [0.0] * 11) == Prediction(BENIGN, -0.5)
    m = LinearModel((0.0,) * 11, 0.0)
    assert predict(m, [0.0] * 11).label == BENIGN


def test_predict_schema_mismatch():
    with pytest.raises(ModelError):
        predict(LinearModel((0.0,) * 11, 0.0), [1.0] * 5)


def test_model_rejects_wrong_width():
    with pytest.raises(ModelError):
        LinearModel((1.0,) * 3, 0.0)


def test_precision_from_counts():
    r = report_from_counts(tp=7, fp=2, tn=8, fn=3)
    assert r.precision == pytest.approx(7 / 9)
    assert r.recall == pytest.approx(0.7)
    assert r.total == 20


def test_all_correct_and_no_positive_predictions():
    r = report_from_counts(tp=5, fp=0, tn=5, fn=0)
    assert r.precision == r.recall == 1
    r = report_from_counts(tp=0, fp=0, tn=4, fn=3)
    assert r.precision is None and r.recall == 0


def test_evaluate_counts_sum():
    rng = np.random.default_rng(0)
    m = LinearModel(tuple(rng.normal(size=11)), 0.1)
    X = rng.normal(size=(57, 11))
    y = rng.choice([-1, 1], size=57)
    assert evaluate(m, list(X), list(y)).total == 57


def test_objective_history_non_increasing():
    benign = corpus.generate_benign_domains(200, seed=3)
    dga = corpus.generate_dga_domains(200, seed=4)
    X = np.array([extract_domain_features(d).values() for d in benign + dga])
    X = (X - X.mean(axis=0)) / np.where(X.std(axis=0) == 0, 1, X.std(axis=0))
    y = np.array([-1.0] * 200 + [1.0] * 200)
    cfg = TrainConfig(epochs=15, learning_rate=0.5)
    result = fit_hinge_sgd(X, y, cfg)
    assert all(b <= a for a, b in zip(result.history, result.history[1:]))
    assert result.history[-1] == pytest.approx(hinge_objective(result.weights, result.bias, X, y, cfg.regularization))


@given(st.lists(st.floats(-5, 5), min_size=11, max_size=11), st.floats(-5, 5),
       st.lists(st.floats(-5, 5), min_size=11, max_size=11), st.floats(0.01, 100))
def test_label_invariant_under_positive_scaling(w, b, x, c):
    m = LinearModel(tuple(w), b)
    scaled = LinearModel(tuple(c * v for v in w), c * b)
    score = decision_score(m, x)
    if abs(score) > 1e-9:
        assert predict(m, x).label == predict(scaled, x).label


def test_trained_model_separates_generated_corpora():
    model = train_linear_svm(
        [extract_domain_features(d) for d in corpus.generate_benign_domains(500, seed=5)]
        + [extract_domain_features(d) for d in corpus.generate_dga_domains(500, seed=6)],
        [-1] * 500 + [1] * 500)
    assert classify_domain(model, "xkqzjwvbnmtrplq.net").label == DGA
    assert classify_domain(model, "weatherchannel.com").label == BENIGN
    assert model.trained_on == (500, 500)


def test_model_round_trip(tmp_path):
    m = LinearModel(tuple(np.random.default_rng(1).normal(size=11)), 0.1 + 0.2)
    save_model(m, tmp_path / "m.json")
    assert load_model(tmp_path / "m.json") == m


def test_truncated_model(tmp_path):
    path = tmp_path / "m.json"
    save_model(LinearModel((1.0,) * 11, 0.0), path)
    path.write_text(path.read_text()[:40])
    with pytest.raises(ModelError, match="corrupt model"):
        load_model(path)


def test_unsupported_model_version(tmp_path):
    path = tmp_path / "m.json"
    save_model(LinearModel((1.0,) * 11, 0.0), path)
    doc = json.loads(path.read_text())
    doc["schemaVersion"] = 99
    path.write_text(json.dumps(doc))
    with pytest.raises(ModelError, match="unsupported version"):
        load_model(path)


def test_missing_model_field(tmp_path):
    path = tmp_path / "m.json"
    path.write_text(json.dumps({"schemaVersion": 1, "weights": [0] * 11}))
    with pytest.raises(ModelError, match="corrupt model"):
        load_model(path)


# corpus generation


def test_generated_corpora_are_distinct_and_seeded():
    a = corpus.generate_dga_domains(300, seed=9)
    assert len(set(a)) == 300 and a == corpus.generate_dga_domains(300, seed=9)
    assert a != corpus.generate_dga_domains(300, seed=10)
    assert all(8 <= len(d.split(".")[0]) <= 20 for d in a)
    b = corpus.generate_benign_domains(300, seed=9)
    assert len(set(b)) == 300 and b == corpus.generate_benign_domains(300, seed=9)


def test_load_domain_list(tmp_path):
    path = tmp_path / "d.txt"
    path.write_text("# list\nexample.com\n\n  foo.net  1\n")
    assert corpus.load_domain_list(path) == ["example.com", "foo.net"]


@settings(max_examples=25)
@given(st.integers(0, 10_000))
def test_generated_names_are_featurizable(seed):
    for d in corpus.generate_benign_domains(20, seed) + corpus.generate_dga_domains(20, seed):
        extract_domain_features(d)
