import json

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra import numpy as hnp

from ecoedgetwin.errors import LifecycleError, NumericError, ShapeError
from ecoedgetwin.nn import (GradientSet, Network, apply_update, backward, forward, load_checkpoint,
                            save_checkpoint, softmax_policy)

import gradcheck


def test_zero_net_outputs_zero():
    assert np.all(forward(Network.zeros((3, 4, 4, 4, 2)), np.ones(3)) == 0)


def test_identity_chain():
    one = [np.ones((1, 1))] * 4
    net = Network((1, 1, 1, 1, 1), one, [np.zeros(1)] * 4)
    assert forward(net, np.array([2.0]))[0] == 2.0


def test_negative_preactivation_is_cut():
    net = Network((1, 2, 1), [np.array([[1.0], [-1.0]]), np.array([[1.0, 5.0]])], [np.zeros(2), np.zeros(1)])
    assert forward(net, np.array([3.0]))[0] == 3.0


def test_shape_and_finiteness_checks():
    net = Network.zeros((3, 2))
    with pytest.raises(ShapeError):
        forward(net, np.ones(4))
    with pytest.raises(ShapeError):
        Network((3, 2), [np.zeros((3, 2))], [np.zeros(2)])
    with pytest.raises(NumericError):
        Network((1, 1), [np.array([[np.nan]])], [np.zeros(1)])


def test_backward_requires_forward():
    net = Network.zeros((2, 2))
    with pytest.raises(LifecycleError):
        net.backward(np.ones(2))
    forward(net, np.ones(2))
    with pytest.raises(LifecycleError):
        backward(net, np.zeros(2), np.ones(2))


def test_zero_upstream_zero_gradients():
    net = Network.init((4, 8, 8, 8, 2), np.random.default_rng(0))
    g = backward(net, *(lambda x: (forward(net, x), x)[1:])(np.ones(4)) + (np.zeros(2),))
    assert all(np.all(a == 0) for a in g.arrays())


def test_linear_layer_gradient_is_outer_product():
    rng = np.random.default_rng(1)
    net = Network((3, 2), [rng.normal(size=(2, 3))], [np.zeros(2)])
    x, e = rng.normal(size=3), np.array([0.0, 1.0])
    forward(net, x)
    g = backward(net, x, e)
    assert np.array_equal(g.weights[0], np.outer(e, x))
    assert np.array_equal(g.biases[0], e)


def test_gradcheck_4_8_8_8_2():
    rng = np.random.default_rng(2)
    net = Network.init((4, 8, 8, 8, 2), rng)
    for b in net.biases:
        b += rng.normal(scale=0.1, size=b.shape)
    checked, skipped, worst = gradcheck.check(net, rng.normal(size=4), rng.normal(size=2))
    assert checked > 0.9 * (checked + skipped)
    assert worst < 1e-4


def test_forward_backward_pure():
    rng = np.random.default_rng(3)
    net = Network.init((5, 7, 3), rng)
    x, u = rng.normal(size=5), rng.normal(size=3)
    y1 = forward(net, x).copy()
    g1 = backward(net, x, u)
    y2 = forward(net, x)
    g2 = backward(net, x, u)
    assert np.array_equal(y1, y2)
    assert all(np.array_equal(a, b) for a, b in zip(g1.arrays(), g2.arrays()))


def test_apply_update_examples():
    rng = np.random.default_rng(4)
    net = Network.init((3, 4, 2), rng)
    g = GradientSet([rng.normal(size=w.shape) for w in net.weights], [rng.normal(size=b.shape) for b in net.biases])
    one = apply_update(net, g, 1.0, "descent")
    assert all(np.array_equal(a, w - gw) for a, w, gw in zip(one.weights, net.weights, g.weights))
    back = apply_update(apply_update(net, g, 0.3, "ascent"), g, 0.3, "descent")
    assert all(np.allclose(a, b, atol=1e-12, rtol=0) for a, b in zip(back.weights, net.weights))
    with pytest.raises(ValueError):
        apply_update(net, g, 0.0)
    bad = GradientSet([np.full(w.shape, np.inf) for w in net.weights], g.biases)
    with pytest.raises(NumericError):
        apply_update(net, bad, 0.1)


def test_two_descent_steps_equal_one_summed_step_for_linear_model():
    rng = np.random.default_rng(5)
    net = Network((3, 1), [rng.normal(size=(1, 3))], [np.zeros(1)])
    g1 = GradientSet([rng.normal(size=(1, 3))], [rng.normal(size=1)])
    g2 = GradientSet([rng.normal(size=(1, 3))], [rng.normal(size=1)])
    two = apply_update(apply_update(net, g1, 0.1), g2, 0.1)
    one = apply_update(net, g1 + g2, 0.1)
    assert np.allclose(two.weights[0], one.weights[0], atol=1e-15)


def test_softmax_examples():
    assert np.allclose(softmax_policy(np.zeros(4)), 0.25)
    assert np.allclose(softmax_policy(np.array([0.0, np.log(3)])), [0.25, 0.75], atol=1e-15)


@given(hnp.arrays(np.float64, st.integers(1, 50), elements=st.floats(-300, 300)), st.floats(-1e3, 1e3))
def test_softmax_properties(z, c):
    p = softmax_policy(z)
    assert np.all(p > 0) or z.max() - z.min() > 700
    assert abs(p.sum() - 1) < 1e-12
    assert p[np.argmax(z)] == p.max()
    assert np.allclose(softmax_policy(z + c), p, atol=1e-12)


def test_checkpoint_roundtrip_and_dim_check(tmp_path):
    rng = np.random.default_rng(6)
    a, c = Network.init((5, 8, 3), rng), Network.init((5, 8, 1), rng)
    p = tmp_path / "ck.json"
    save_checkpoint(p, {"actor": a, "critic": c}, {"seed": 1})
    nets = load_checkpoint(p, {"actor": (5, 8, 3)})
    assert all(np.array_equal(x, y) for x, y in zip(nets["actor"].weights, a.weights))
    with pytest.raises(ShapeError):
        load_checkpoint(p, {"actor": (5, 8, 4)})
    with pytest.raises(ShapeError):
        load_checkpoint(p, {"policy": (5, 8, 3)})
    doc = json.loads(p.read_text())
    doc["version"] = 99
    p.write_text(json.dumps(doc))
    with pytest.raises(ShapeError):
        load_checkpoint(p)
