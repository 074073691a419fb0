import math

import numpy as np
import pytest

import protvec as pv


def test_segmentation_worked_examples():
    assert len(pv.segment_sequence("A" * 400, 120)) == 11
    assert pv.segment_count(1000, 100) == 31
    tail = pv.segment_sequence("M" * 130, 120)[-1]
    assert tail.start == 30
    assert tail.pad_length == 20
    assert tail.residues.endswith("-" * 20)
    with pytest.raises(pv.InvalidArgument):
        pv.segment_sequence("", 100)


def test_tokenize_reserves_zero():
    ids = pv.tokenize("MKVLAWX", ["MKVLAW"], 4, 1)
    assert len(ids) == 4
    assert ids[-1] == 0
    assert all(i > 0 for i in ids[:-1])


def test_lstm_step_against_numpy():
    rng = np.random.default_rng(0)
    H, E = 3, 2
    W = rng.uniform(-1, 1, (4 * H, H + E))
    b = rng.uniform(-1, 1, 4 * H)
    h, c, x = rng.uniform(-1, 1, H), rng.uniform(-1, 1, H), rng.uniform(-1, 1, E)
    out = pv.lstm_cell_step(W, b, h, c, x)
    z = W @ np.concatenate([h, x]) + b
    sig = lambda v: 1 / (1 + np.exp(-v))
    f, i, g, o = sig(z[:H]), sig(z[H:2 * H]), np.tanh(z[2 * H:3 * H]), sig(z[3 * H:])
    cell = f * c + i * g
    assert np.allclose(out["cell"], cell, atol=1e-12, rtol=0)
    assert np.allclose(out["hidden"], o * np.tanh(cell), atol=1e-12, rtol=0)


def test_metrics_and_buckets():
    assert pv.score_sample({"a", "b"}, {"b", "c"}) == (0.5, 0.5, 0.5)
    m = pv.compute_metrics([{"a"}, {"a", "b"}], [{"a"}, set()])
    assert m["count"] == 2
    assert m["f1"] == pytest.approx(0.5)
    b = pv.bucketize([{"a"}, {"a"}], [{"a"}, set()], [50, 2000])
    assert b[0]["range"] == "(0,100]" and b[0]["count"] == 1
    assert b[-1]["range"] == "(1600,inf)" and b[-1]["count"] == 1


def test_alpha_hybrid_threshold():
    assert abs(pv.compute_alpha(54.65, 49.27) - 0.5259) <= 5e-4
    z = pv.hybrid_combine(np.array([0.9, 0.1]), np.array([0.5, 0.5]), 0.25)
    assert np.allclose(z, [0.6, 0.4])
    direction, t, margin = pv.train_threshold([0.1, 0.2, 0.8, 0.9], [False, False, True, True])
    assert direction == "above"
    assert t == pytest.approx(0.5)
    assert margin == pytest.approx(0.3)
    assert pv.hinge_loss(direction, t, margin, [0.1, 0.2, 0.8, 0.9], [False, False, True, True]) <= 1e-12


def test_mlda_projection_is_generalized_eigenvector():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(30, 4))
    Y = np.zeros((30, 3))
    Y[np.arange(30), np.arange(30) % 3] = 1
    X[:, 0] += 2 * (np.arange(30) % 3)
    W, lam = pv.mlda_fit(X, Y)
    assert W.shape == (4, 2)
    Sb, Sw = pv.mlda_scatter(X, Y)
    Swr = Sw + 1e-6 * np.trace(Sw) / 4 * np.eye(4)
    for j in range(2):
        assert np.linalg.norm(Sb @ W[:, j] - lam[j] * Swr @ W[:, j]) < 1e-6
    assert math.isclose(np.linalg.norm(W[:, 0]), 1.0)


def test_filter_and_split():
    records = [pv.ProteinRecord(f"p{i}", "MKVL", {"GO:0000001"} | ({"GO:0000002"} if i < 3 else set()))
               for i in range(8)]
    kept, terms = pv.filter_corpus(records, 4)
    assert terms == ["GO:0000001"]
    assert len(kept) == 8
    assert pv.split_counts(records, 0.75, 0.0, 0.25) == (6, 0, 2)


def test_cli_round_trip(tmp_path):
    code, out, err = pv.cli(["--work-dir", str(tmp_path), "--set", "synth.records=40", "synth"])
    assert code == 0, err
    code, _, _ = pv.cli(["train-svg", "--segment-size", "3"])
    assert code == 1
    ids = [r.id for r in pv.generate_synthetic(records=10, seed=3)]
    assert len(ids) == 10
    assert pv.derive_seed(1, "split") == pv.derive_seed(1, "split")
