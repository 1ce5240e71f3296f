import math

import numpy as np
import pytest

from memxbar.errors import ConfigError
from memxbar.harness.datasets import load_dataset
from memxbar.harness.experiments import preset_config
from memxbar.network import (
    NetworkConfig, build_network, infer, loss, output, predict_label, target_vector, train,
    train_step,
)
from memxbar.oracle import DenseNet, oracle_step


def test_loss_examples():
    assert loss(np.array([0.0, 1.0, 0.0]), np.array([0, 1, 0])) == 0.0
    assert loss(np.full(3, 1 / 3), np.array([1, 0, 0])) == pytest.approx(math.log(3))
    assert loss(np.array([1.0, 0.0]), np.array([0, 1])) == pytest.approx(-math.log(1e-12))


def test_binary_cross_entropy_for_single_output():
    assert loss(np.array([0.8]), np.array([1.0])) == pytest.approx(-math.log(0.8))
    assert loss(np.array([0.8]), np.array([0.0])) == pytest.approx(-math.log(0.2))


def test_softmax_is_stable_and_normalized():
    o = output("softmax", np.array([1000.0, 1000.0, -1000.0]))
    np.testing.assert_allclose(o, [0.5, 0.5, 0.0], atol=1e-300)


def test_config_validation():
    with pytest.raises(ConfigError):
        NetworkConfig((4,))
    with pytest.raises(ConfigError):
        NetworkConfig((4, 2), output_fn="sigmoid")
    with pytest.raises(ConfigError):
        NetworkConfig((4, 3, 2), activation=("relu",))
    with pytest.raises(ConfigError):
        NetworkConfig((4, 2), mode="spice")


@pytest.mark.parametrize("mode", ["device", "behavioral"])
def test_zero_weights_give_uniform_output(mode):
    net = build_network(NetworkConfig((4, 4, 3), mode=mode))
    for cb in net.crossbars:
        cb.set_conductance(cb.G_ref)
    o, _ = infer(net, np.array([0.1, -0.2, 0.05, 0.2]))
    np.testing.assert_allclose(o, 1 / 3, atol=1e-4 if mode == "device" else 1e-12)


def test_outputs_sum_to_one():
    net = build_network(NetworkConfig((4, 4, 3)))
    rng = np.random.default_rng(0)
    for _ in range(5):
        o, _ = infer(net, rng.uniform(-0.2, 0.2, 4))
        assert abs(o.sum() - 1) < 1e-12


def test_trace_shapes():
    net = build_network(NetworkConfig((4, 4, 3)))
    _, tr = infer(net, np.zeros(4))
    assert [u.shape for u in tr.inputs] == [(5,), (5,)]
    assert tr.inputs[0][0] == 0.2 and tr.inputs[1][0] == 1.0
    assert [r.shape for r in tr.r] == [(4,), (3,)]


def test_matching_target_changes_nothing():
    net = build_network(NetworkConfig((4, 4, 3)))
    x = np.array([0.2, -0.1, 0.05, 0.0])
    o, _ = infer(net, x)
    before = [cb.G.copy() for cb in net.crossbars]
    train_step(net, x, o)
    for cb, G in zip(net.crossbars, before):
        np.testing.assert_array_equal(cb.G, G)


def test_single_layer_update_signs():
    net = build_network(NetworkConfig((4, 3), activation=()))
    x = np.array([0.2, -0.15, 0.1, -0.05])
    W0 = net.weights[0]
    o, tr = infer(net, x)
    d = np.array([0.0, 1.0, 0.0])
    train_step(net, x, d)
    dW = net.weights[0] - W0
    want = np.sign(np.outer(d - o, tr.inputs[0]))
    np.testing.assert_array_equal(np.sign(dW), want)


def test_behavioral_step_matches_oracle():
    cfg, _ = preset_config(load_dataset("xor"), "silver", "behavioral", 0)
    net = build_network(cfg)
    ref = DenseNet.from_network(net)
    rng = np.random.default_rng(4)
    for _ in range(20):
        x = rng.uniform(-0.2, 0.2, 2)
        d = np.eye(2)[rng.integers(2)]
        W0 = net.weights
        train_step(net, x, d)
        dW_ref = oracle_step(ref, x, d)
        for k in range(2):
            np.testing.assert_allclose(net.weights[k] - W0[k], dW_ref[k], rtol=0, atol=1e-6)


def test_epochs_must_be_positive():
    net = build_network(NetworkConfig((2, 2, 2), activation="tanh"))
    with pytest.raises(ValueError):
        train(net, load_dataset("xor"), 0)


def test_target_vector_and_labels():
    net = build_network(NetworkConfig((4, 3)))
    np.testing.assert_array_equal(target_vector(net, 2), [0, 0, 1])
    single = build_network(NetworkConfig((4, 1), output_fn="sigmoid"))
    np.testing.assert_array_equal(target_vector(single, 1), [1.0])
    assert predict_label(single, np.array([0.7])) == 1
    assert predict_label(net, np.array([0.2, 0.5, 0.3])) == 1


def test_xor_behavioral_solves():
    ds = load_dataset("xor")
    cfg, epochs = preset_config(ds, "silver", "behavioral", 0)
    rep = train(build_network(cfg), ds, epochs)
    assert rep.train_accuracy == 1.0
    assert rep.losses[-1] < rep.losses[0]


def test_reports_are_deterministic():
    ds = load_dataset("iris", seed=1)
    cfg, _ = preset_config(ds, "silver", "device", 1)
    a = train(build_network(cfg), ds, 2)
    b = train(build_network(cfg), ds, 2)
    assert a.losses == b.losses and a.snapshots == b.snapshots


def test_fault_free_config_matches_baseline():
    ds = load_dataset("iris", seed=0)
    cfg, _ = preset_config(ds, "silver", "device", 0)
    cfg0, _ = preset_config(ds, "silver", "device", 0, fault_fraction=0.0)
    assert train(build_network(cfg), ds, 1).losses == train(build_network(cfg0), ds, 1).losses
