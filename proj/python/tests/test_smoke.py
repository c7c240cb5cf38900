import itertools
import math

import numpy as np
import pytest

import wordfuse


def brute_force_dtw(a, b):
    best = math.inf

    def walk(i, j, cost):
        nonlocal best
        cost += abs(a[i] - b[j])
        if i == len(a) - 1 and j == len(b) - 1:
            best = min(best, cost)
            return
        if i + 1 < len(a):
            walk(i + 1, j, cost)
        if j + 1 < len(b):
            walk(i, j + 1, cost)
        if i + 1 < len(a) and j + 1 < len(b):
            walk(i + 1, j + 1, cost)

    walk(0, 0, 0.0)
    return best


def test_dtw_matches_brute_force():
    for a in itertools.product([0.0, 1.0, 2.0], repeat=3):
        for b in itertools.product([0.0, 1.0, 2.0], repeat=4):
            cost, path = wordfuse.dtw(np.array(a), np.array(b))
            assert cost == brute_force_dtw(a, b)
            assert path[0] == (0, 0) and path[-1] == (2, 3)


def test_dtw_rejects_impossible_band():
    with pytest.raises(wordfuse.WordfuseError):
        wordfuse.dtw(np.zeros(2), np.zeros(40), radius=1.0)


def test_worked_metrics():
    m = wordfuse.metrics_from_confusion([[8, 2], [4, 6]])
    assert m["wa"] == pytest.approx(0.7)
    assert m["ua"] == pytest.approx(0.7)
    assert m["weighted_f1"] == pytest.approx(0.697, abs=5e-4)
    assert wordfuse.metrics([0, 1, 1], [0, 1, 0], 2)["confusion"] == [[1, 0], [1, 1]]


def test_mfsc_shape():
    t = np.arange(16000) / 16000.0
    feats = wordfuse.mfsc(0.3 * np.sin(2 * np.pi * 440.0 * t))
    assert feats.shape == (98, 64)
    assert np.isfinite(feats).all()


def test_pipeline_from_python(tmp_path):
    d = tmp_path
    wordfuse.cli("synth", "--out-dir", d, "--n-per-class", 3)
    wordfuse.cli("extract", "--manifest", d / "manifest.jsonl", "--cache", d / "f.wfc")
    small = ["--set", "model.hidden=4", "--set", "model.filters=3", "--set", "split.folds=1"]
    wordfuse.cli("train", "--manifest", d / "manifest.jsonl", "--cache", d / "f.wfc", "--checkpoint", d / "m.wfc",
                 "--epochs", 1, *small)
    model = wordfuse.load_model(d / "m.wfc")
    assert wordfuse.model_config(model)["strategy"] == "faf"
    preds = model.predict(str(d / "f.wfc"), ["toy0_k0_t0"])
    att = preds[0]["attention"]
    assert sum(att["t_alpha"]) == pytest.approx(1.0, abs=1e-9)
    assert sum(att["u_alpha"]) == pytest.approx(2.0, abs=1e-9)
    assert sum(preds[0]["scores"]) == pytest.approx(1.0, abs=1e-9)


def test_cli_failure_raises(tmp_path):
    code, _, err = wordfuse.run_cli(["train", "--manifest", str(tmp_path / "missing.jsonl")])
    assert code == 1 and err
    with pytest.raises(wordfuse.WordfuseError):
        wordfuse.cli("frobnicate")
