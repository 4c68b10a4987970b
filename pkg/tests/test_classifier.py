import numpy as np
import pytest
from hypothesis import given, strategies as st

from puea_detect.classifier import (
    ClassifierModel, NetworkShape, TrainConfig, decide, fit_feature_stats, forward, init_model, loss_and_grads,
    predict, sigmoid, train,
)
from puea_detect.features import FeatureVector
from puea_detect.signal_synth import Hypothesis


def scalar_forward(model, x):
    xn = [(x[i] - model.feature_mean[i]) / model.feature_std[i] for i in range(len(x))]
    hidden = []
    for j in range(model.w1.shape[0]):
        a = model.b1[j] + sum(model.w1[j, i] * xn[i] for i in range(len(xn)))
        hidden.append(1 / (1 + np.exp(-a)))
    out = []
    for c in range(model.w2.shape[0]):
        a = model.b2[c] + sum(model.w2[c, j] * hidden[j] for j in range(len(hidden)))
        out.append(1 / (1 + np.exp(-a)))
    return np.array(out)


def blobs(rng, n=100, sep=4.0):
    centers = np.array([[0, 0], [sep, 0], [0, sep]])
    x = np.vstack([c + rng.standard_normal((n, 2)) * 0.5 for c in centers])
    y = np.repeat([0, 1, 2], n)
    return x, y


def test_init_determinism_and_shape():
    a, b = init_model(NetworkShape(200, 64, 3), 5), init_model(NetworkShape(200, 64, 3), 5)
    assert np.array_equal(a.w1, b.w1) and np.array_equal(a.w2, b.w2)
    assert a.w1.shape == (64, 200)
    m = init_model(NetworkShape(1, 1, 1), 0)
    assert forward(m, [0.3]).shape == (1,)
    with pytest.raises(ValueError):
        NetworkShape(0, 4, 2)


def test_zero_model_scores_half():
    m = init_model(NetworkShape(5, 4, 3), 0)
    for p in m.params().values():
        p[...] = 0
    assert np.allclose(forward(m, np.ones(5)), 0.5)


@given(st.integers(0, 2**31))
def test_forward_matches_scalar_loop(seed):
    rng = np.random.default_rng(seed)
    m = init_model(NetworkShape(6, 5, 3), seed)
    m.b1 = rng.standard_normal(5)
    m.b2 = rng.standard_normal(3)
    m.feature_mean = rng.standard_normal(6)
    m.feature_std = rng.random(6) + 0.5
    x = rng.standard_normal(6) * 3
    s = forward(m, x)
    assert np.all((s > 0) & (s < 1))
    assert np.max(np.abs(s - scalar_forward(m, x))) <= 1e-12


def test_forward_rejects_wrong_length():
    with pytest.raises(ValueError):
        forward(init_model(NetworkShape(4, 3, 2), 0), np.ones(5))


def test_sigmoid_is_stable():
    assert np.all(np.isfinite(sigmoid(np.array([-1e4, 0, 1e4]))))
    assert sigmoid(0.0) == 0.5


def finite_difference_check(seed, n=16, k=7, h=5, m=3, step=1e-5):
    rng = np.random.default_rng(seed)
    params = {"w1": rng.standard_normal((h, k)), "b1": rng.standard_normal(h), "w2": rng.standard_normal((m, h)),
              "b2": rng.standard_normal(m)}
    x = rng.standard_normal((n, k))
    t = np.eye(m)[rng.integers(0, m, n)]
    _, grads = loss_and_grads(params, x, t)
    worst = 0.0
    for key, p in params.items():
        num = np.zeros_like(p)
        for idx in np.ndindex(p.shape):
            old = p[idx]
            p[idx] = old + step
            lp = loss_and_grads(params, x, t)[0]
            p[idx] = old - step
            lm = loss_and_grads(params, x, t)[0]
            p[idx] = old
            num[idx] = (lp - lm) / (2 * step)
        worst = max(worst, np.linalg.norm(num - grads[key]) / max(np.linalg.norm(num), 1e-12))
    return worst


def test_backprop_matches_finite_differences():
    assert finite_difference_check(0) <= 1e-5


def test_loss_value_is_summed_bce():
    rng = np.random.default_rng(3)
    params = {"w1": rng.standard_normal((4, 3)), "b1": np.zeros(4), "w2": rng.standard_normal((2, 4)),
              "b2": np.zeros(2)}
    x = rng.standard_normal((5, 3))
    t = np.eye(2)[[0, 1, 1, 0, 1]]
    s = sigmoid(sigmoid(x @ params["w1"].T) @ params["w2"].T)
    ref = -np.mean(np.sum(t * np.log(s) + (1 - t) * np.log(1 - s), axis=1))
    assert np.isclose(loss_and_grads(params, x, t)[0], ref)


def test_separable_blobs_are_learned(rng):
    x, y = blobs(rng)
    model, rep = train(x, NetworkShape(2, 16, 3), TrainConfig(epochs=200, heldout_fraction=0.0), labels=y)
    labels, _ = predict(model, x)
    assert np.mean(np.array([int(l) for l in labels]) == y) >= 0.99
    assert rep.train_accuracy >= 0.99
    assert np.all(np.isnan(rep.heldout_loss))


def test_zero_learning_rate_keeps_weights(rng):
    x, y = blobs(rng, 30)
    hyper = TrainConfig(epochs=5, learning_rate=0.0, seed=4)
    model, _ = train(x, NetworkShape(2, 8, 3), hyper, labels=y)
    init = init_model(NetworkShape(2, 8, 3), np.random.SeedSequence(4).spawn(3)[0])
    assert np.array_equal(model.w1, init.w1) and np.array_equal(model.w2, init.w2)


def test_small_step_loss_is_nonincreasing(rng):
    x, y = blobs(rng, 60, sep=2.0)
    _, rep = train(x, NetworkShape(2, 8, 3), TrainConfig(epochs=150, learning_rate=1e-3), labels=y)
    loss = rep.train_loss
    upticks = np.diff(loss) > 0
    assert upticks.mean() <= 0.01
    assert loss[-1] < loss[0]


def test_training_is_deterministic(rng):
    x, y = blobs(rng, 40)
    a, ra = train(x, NetworkShape(2, 8, 3), TrainConfig(epochs=10), labels=y)
    b, rb = train(x, NetworkShape(2, 8, 3), TrainConfig(epochs=10), labels=y)
    assert np.array_equal(a.w1, b.w1) and np.array_equal(a.b2, b.b2)
    assert np.array_equal(ra.train_loss, rb.train_loss)


def test_feature_vector_dataset(rng):
    x, y = blobs(rng, 20)
    data = [FeatureVector(row, Hypothesis(int(c)), 0.0) for row, c in zip(x, y)]
    model, _ = train(data, NetworkShape(2, 4, 3), TrainConfig(epochs=3))
    assert model.class_map == (Hypothesis.H0_HOLE, Hypothesis.H1_PU, Hypothesis.H2_PUE)


def test_class_map_controls_output_order(rng):
    x, y = blobs(rng, 20)
    labels = np.array([0, 1, 3])[y]
    model, _ = train(x, NetworkShape(2, 4, 3), TrainConfig(epochs=2), labels=labels,
                     class_map=["Jammer", "Hole", "PU"])
    assert model.class_map == (Hypothesis.H3_JAMMER, Hypothesis.H0_HOLE, Hypothesis.H1_PU)


def test_training_errors(rng):
    x, y = blobs(rng, 10)
    with pytest.raises(ValueError, match="no training samples"):
        train(x, NetworkShape(2, 4, 4), TrainConfig(epochs=1), labels=y, class_map=[0, 1, 2, 3])
    with pytest.raises(ValueError):
        train(x, NetworkShape(3, 4, 3), TrainConfig(epochs=1), labels=y)
    with pytest.raises(ValueError):
        train(x, NetworkShape(2, 4, 2), TrainConfig(epochs=1), labels=y, class_map=[0, 1])
    with pytest.raises(ValueError):
        train(np.zeros((0, 2)), NetworkShape(2, 4, 3), TrainConfig(epochs=1), labels=[])


def test_decide_ties_and_argmax():
    assert decide([0.9, 0.1, 0.1])[0] == 0
    assert decide([0.5, 0.5, 0.5])[0] == 0
    assert list(decide([[0.1, 0.2, 0.7], [0.3, 0.3, 0.1]])) == [2, 0]


def test_monotone_rescaling_with_refit_stats(rng):
    x, y = blobs(rng, 30)
    model, _ = train(x, NetworkShape(2, 8, 3), TrainConfig(epochs=20), labels=y)
    scaled = 7.5 * x - 3.0
    other = fit_feature_stats(model.copy(), scaled)
    fit_feature_stats(model, x)
    assert np.allclose(forward(other, scaled), forward(model, x))
    assert np.array_equal(decide(forward(other, scaled)), decide(forward(model, x)))


def test_save_load_roundtrip(tmp_path, rng):
    x, y = blobs(rng, 10)
    model, _ = train(x, NetworkShape(2, 4, 3), TrainConfig(epochs=2), labels=y)
    model.save(tmp_path / "m", {"config_hash": "abc"})
    back = ClassifierModel.load(tmp_path / "m")
    assert np.array_equal(forward(back, x), forward(model, x))
    assert back.class_map == model.class_map
