import numpy as np
import pytest

import flowbench


def blobs(n=400, d=5, seed=0):
    rng = np.random.default_rng(seed)
    y = (rng.random(n) < 0.3).astype(np.int32)
    X = rng.normal(size=(n, d))
    X[:, 0] += 3.0 * y
    return X, y


def test_schemas_listed():
    assert "unsw-nb15" in flowbench.builtin_schemas()


def test_synth_and_load(tmp_path):
    path = tmp_path / "flows.csv"
    info = flowbench.synth(str(path), seed=1, rows=300, imbalance=0.8)
    assert info["rows"] == 300 and info["class1"] == 60
    data = flowbench.load_dataset(str(path), "synthetic")
    assert data["X"].shape[0] == len(data["y"]) == 300
    assert "label" not in data["feature_names"]


def test_pca_matches_numpy():
    X, _ = blobs()
    model = flowbench.pca_fit(X, 3)
    cov = np.cov(X, rowvar=False)
    eig = np.sort(np.linalg.eigvalsh(cov))[::-1][:3]
    np.testing.assert_allclose(model.explained_variance, eig, rtol=1e-9)
    assert model.transform(X).shape == (X.shape[0], 3)


def test_lda_finds_informative_axis():
    X, y = blobs(d=4)
    w = flowbench.lda_fit(X, y).projection
    assert abs(w[0]) > 0.95


@pytest.mark.parametrize("model", ["dff", "cnn", "rnn", "dt", "lr", "nb"])
def test_classifiers_separate_blobs(model):
    X, y = blobs()
    folds = np.asarray(flowbench.stratified_kfold(y.tolist(), 4, 0))
    train, test = folds != 0, folds == 0
    Xtr, Xte = flowbench.minmax_scale(X[train], X[test])
    p = flowbench.fit_predict(model, Xtr, y[train].tolist(), Xte, epochs=30, batch_size=32, learning_rate=1e-2)
    assert p.shape == (test.sum(),)
    assert flowbench.roc_auc(p, y[test].tolist()) > 0.85


def test_evaluate_formulas():
    r = flowbench.evaluate(np.array([0.9, 0.8, 0.7, 0.6]), [1, 0, 1, 0])
    assert r["auc"] == 0.75
    assert (r["tp"], r["fp"], r["tn"], r["fn"]) == (2, 2, 0, 0)


def test_errors_are_value_errors():
    with pytest.raises(ValueError):
        flowbench.roc_auc(np.array([0.1, 0.2]), [1, 1])


def test_run_experiment(tmp_path):
    flowbench.synth(str(tmp_path / "flows.csv"), seed=2, rows=400, imbalance=0.7)
    (tmp_path / "cfg.yaml").write_text(
        "version: 1\n"
        "dataset: {path: flows.csv, schema: synthetic}\n"
        "fe: [full, pca]\n"
        "dims: [2]\n"
        "models: [dt, nb]\n"
        "folds: 3\n"
        "seed: 5\n"
        "svg: false\n"
    )
    rows = flowbench.run_experiment(str(tmp_path / "cfg.yaml"), out_dir=str(tmp_path / "out"))
    means = [r for r in rows if r["fold"] == "mean"]
    assert len(means) == 4 and not any(r["failed"] for r in means)
    assert (tmp_path / "out" / "results.csv").exists()
    text = flowbench.report([str(tmp_path / "out")], str(tmp_path / "out"))
    assert "Result rows: 16" in text
