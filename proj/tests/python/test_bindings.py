import json
import math
import subprocess
import sys

import pytest

import floodaid


@pytest.fixture(scope="module")
def data():
    return floodaid.generate_synthetic(seed=0)


@pytest.fixture(scope="module")
def split(data):
    return floodaid.stratified_split(data, 0.8, seed=0)


def test_generated_dataset(data):
    assert len(data) == 87
    assert len(set(data.district_labels)) == 11
    assert abs(sum(data.haor_flags) - 0.55 * 87) <= 1
    assert all(0.0 <= v <= 1.0 for v in data.vulnerability)
    assert len(data.features()[0]) == 11
    again = floodaid.generate_synthetic(seed=0)
    assert again.targets == data.targets


def test_split_sizes(split):
    train, test = split
    assert (len(train), len(test)) == (70, 17)
    assert not set(train.ids) & set(test.ids)


def test_train_evaluate_rank_save(split, tmp_path):
    train, test = split
    model = floodaid.train(train, variant="fair", lam=1.0, epochs=10, seed=0)
    assert model.parameter_count == 45132
    assert model.variant == "fair"
    assert model.training_ids == train.ids
    assert len(model.log["epochs"]) == 10

    preds = model.predict(test)
    assert len(preds) == len(test) and all(p >= 0 for p in preds)
    report = model.evaluate(test)
    assert set(report) == {"performance", "fairness"}
    assert report["fairness"]["spd"] >= 0

    ranking = model.rank(test, context=None)
    assert sorted(r["rank"] for r in ranking) == list(range(1, len(test) + 1))

    manifest = model.save(str(tmp_path / "m"))
    loaded = floodaid.load_checkpoint(manifest)
    assert loaded.predict(test) == preds
    doc = json.loads((tmp_path / "m.json").read_text())
    assert doc["schema_version"] == floodaid.SCHEMA_VERSION
    assert doc["kind"] == "checkpoint"


def test_lambda_zero_matches_baseline(split):
    train, test = split
    fair = floodaid.train(train, variant="fair", lam=0.0, epochs=10, seed=3)
    base = floodaid.train(train, variant="baseline", epochs=10, seed=3)
    assert fair.predict(test) == base.predict(test)
    assert base.parameter_count == 35393


def test_metric_oracles():
    assert floodaid.statistical_parity_difference([1, 3, 5, 2], ["a", "a", "b", "c"]) == 3.0
    assert floodaid.prediction_variance([1, 3, 5, 2], ["a", "a", "b", "c"]) == pytest.approx(2.0, abs=1e-15)
    assert floodaid.regional_fairness_gap([0, 0, 0], [1, 5, 1], [True, True, False]) == 2.0
    assert floodaid.equal_opportunity([0, 0, 0], [2.73, 2.91, 2.85], ["x", "y", "z"]) == pytest.approx(0.18)
    perf = floodaid.performance_metrics([1, 2, 3], [1, 2, 4])
    assert perf["r2"] == pytest.approx(0.5)
    assert abs(floodaid.improvement_pct(3.82, 6.54) - 41.6) <= 0.05
    assert abs(floodaid.improvement_pct(0.67, 1.18) - 43.2) <= 0.05
    assert floodaid.spearman([1, 2, 3, 4, 5], [5, 4, 3, 2, 1]) == pytest.approx(-1.0)
    assert floodaid.pearson([1, 2, 3], [2, 4, 6]) == pytest.approx(1.0)


def test_grl_and_priority():
    g = [0.5, -1.25, 3.0]
    for lam in (0.0, 0.5, 1.0, 2.0):
        assert floodaid.grl_backward(g, lam) == [-lam * v for v in g]
    assert floodaid.min_max_norm([2, 4, 6]) == [0.0, 0.5, 1.0]
    rows = floodaid.priority_scores(["a", "b", "c"], [0, 5, 10], [0.1, 0.25, 1.0])
    assert rows[1]["priority_score"] == pytest.approx(0.4, abs=1e-12)
    assert rows[2]["rank"] == 1


def test_errors_map_to_exception_types(tmp_path):
    assert issubclass(floodaid.DataError, floodaid.FloodAidError)
    with pytest.raises(floodaid.DataError):
        floodaid.Dataset.load(str(tmp_path / "missing.csv"))
    with pytest.raises(floodaid.DataError):
        floodaid.performance_metrics([1, 2], [1])
    with pytest.raises(floodaid.UsageError):
        floodaid.train(floodaid.generate_synthetic(seed=1), variant="other")


def test_run_experiment_summary():
    r = floodaid.run_experiment(seed=0, lam=1.0, epochs=5)
    assert r["seed"] == 0
    assert "improvement_pct" in r["comparison"]["spd"]
    assert r["rank_shift"]["n"] == 17
