import numpy as np
import pytest
from scipy.optimize import approx_fprime

from src.errors import ConfigurationError, NumericalError, UsageError
from src.ndgrad import tensor as T
from src.ndgrad.checkpoint import load_checkpoint, save_checkpoint
from src.ndgrad.mlp import MLPSpec, Network, ParamStore, forward, forward_graph, input_gradient
from src.ndgrad.optim import adam_step, clip_grad_norm, global_norm
from src.ndgrad.tensor import Tensor


def numeric_grad(f, x, eps=1e-6):
    return approx_fprime(x, f, eps)


def test_composite_gradient_matches_finite_differences(rng):
    W = rng.normal(size=(4, 3))
    b = rng.normal(size=3)

    def loss_value(flat):
        x = flat.reshape(5, 4)
        h = np.tanh(x @ W + b)
        return float(np.sum(np.logaddexp(0.0, h) * h) + np.mean(x ** 2))

    x0 = rng.normal(size=(5, 4))
    x = Tensor.leaf(x0)
    h = T.tanh(x @ Tensor.const(W) + Tensor.const(b))
    loss = T.tsum(T.softplus(h) * h) + T.mean(x ** 2)
    loss.backward()

    assert loss.value == pytest.approx(loss_value(x0.ravel()))
    np.testing.assert_allclose(x.grad.ravel(), numeric_grad(loss_value, x0.ravel()), atol=1e-5)


def test_broadcast_and_take_accumulate_gradients():
    a = Tensor.leaf(np.array([1.0, 2.0, 3.0]))
    bias = Tensor.leaf(np.array([[0.5]]))
    picked = T.take(a, [0, 0, 2])
    loss = T.tsum(picked + bias)
    loss.backward()
    np.testing.assert_allclose(a.grad, [2.0, 0.0, 1.0])
    np.testing.assert_allclose(bias.grad, [[3.0]])


def test_minimum_routes_gradient_to_smaller_input():
    a = Tensor.leaf(np.array([1.0, 5.0]))
    b = Tensor.leaf(np.array([2.0, 4.0]))
    T.tsum(T.minimum(a, b)).backward()
    np.testing.assert_allclose(a.grad, [1.0, 0.0])
    np.testing.assert_allclose(b.grad, [0.0, 1.0])


def test_log_sigmoid_is_stable_for_large_inputs():
    x = Tensor.leaf(np.array([-800.0, 0.0, 800.0]))
    out = T.log_sigmoid(x)
    T.tsum(out).backward()
    assert np.all(np.isfinite(out.value))
    assert out.value[0] == pytest.approx(-800.0)
    np.testing.assert_allclose(x.grad, [1.0, 0.5, 0.0], atol=1e-12)


def test_backward_requires_a_recorded_scalar_loss():
    with pytest.raises(UsageError):
        Tensor.const(np.ones(1)).backward()
    x = Tensor.leaf(np.ones(3))
    with pytest.raises(UsageError):
        (x * 2.0).backward()


def test_mlp_spec_validates_dimensions_and_activations():
    with pytest.raises(ConfigurationError):
        MLPSpec(0, 2)
    with pytest.raises(ConfigurationError):
        MLPSpec(3, 2, ((8, "gelu"),))
    spec = MLPSpec(3, 2, ((4, "relu"),))
    assert spec.param_count() == 3 * 4 + 4 + 4 * 2 + 2
    assert MLPSpec.from_dict(spec.to_dict()) == spec


def test_forward_and_forward_graph_agree(rng):
    spec = MLPSpec(3, 2, ((5, "tanh"), (4, "relu")))
    net = Network.initialised({"net": spec}, rng)
    x = rng.normal(size=(6, 3))
    fast = net.evaluate("net", x)
    graph = forward_graph(spec, net.bind()["net"], x)
    np.testing.assert_allclose(fast, graph.value)
    np.testing.assert_allclose(net.evaluate("net", x[0]), fast[0])


def test_copies_evaluate_independent_heads(rng):
    spec = MLPSpec(3, 1, ((4, "tanh"),), copies=2)
    net = Network.initialised({"heads": spec}, rng)
    x = rng.normal(size=(2, 5, 3))
    out = net.evaluate("heads", x)
    assert out.shape == (2, 5, 1)
    W0, b0, W1, b1 = net.weights("heads")
    manual = np.tanh(x[1] @ W0[1] + b0[1]) @ W1[1] + b1[1]
    np.testing.assert_allclose(out[1], manual)


def test_parameter_gradients_reach_the_param_store(rng):
    spec = MLPSpec(2, 1, ((3, "tanh"),))
    net = Network.initialised({"net": spec}, rng)
    x = rng.normal(size=(4, 2))
    base = net.params.values.copy()

    def loss_value(values):
        return float(np.sum(forward(spec, values, x) ** 2))

    net.params.zero_grad()
    T.tsum(forward_graph(spec, net.bind()["net"], x) ** 2).backward()
    np.testing.assert_allclose(net.params.grads, numeric_grad(loss_value, base), atol=1e-5)


def _central_difference(f, x, h=1e-5):
    grad = np.zeros_like(x)
    for i in range(x.size):
        step = np.zeros_like(x)
        step[i] = h
        grad[i] = (f(x + step) - f(x - step)) / (2.0 * h)
    return grad


def test_random_networks_match_central_differences(rng):
    for _ in range(100):
        hidden = tuple((int(rng.integers(2, 7)), str(rng.choice(["tanh", "identity"])))
                       for _ in range(int(rng.integers(1, 3))))
        spec = MLPSpec(int(rng.integers(1, 5)), int(rng.integers(1, 4)), hidden)
        net = Network.initialised({"net": spec}, rng)
        x = rng.normal(size=(4, spec.input_dim))
        base = net.params.values.copy()

        def loss_value(values):
            out = forward(spec, values, x)
            return float(np.sum(out ** 2) + np.mean(np.logaddexp(0.0, out)))

        net.params.zero_grad()
        out = forward_graph(spec, net.bind()["net"], x)
        (T.tsum(out ** 2) + T.mean(T.softplus(out))).backward()
        numeric = _central_difference(loss_value, base)
        error = np.linalg.norm(net.params.grads - numeric) / max(np.linalg.norm(numeric), 1e-6)
        assert error <= 1e-4


def test_input_gradient_and_double_backprop(rng):
    spec = MLPSpec(3, 1, ((6, "tanh"), (5, "tanh")))
    net = Network.initialised({"d": spec}, rng)
    x = rng.normal(size=(4, 3))
    selector = np.ones((4, 1))
    base = net.params.values.copy()

    out, grad = input_gradient(spec, net.bind()["d"], x, selector)
    for row in range(4):
        def f(xr, row=row):
            batch = x.copy()
            batch[row] = xr
            return float(forward(spec, base, batch)[row, 0])
        np.testing.assert_allclose(grad.value[row], numeric_grad(f, x[row].copy()), atol=1e-5)

    def penalty(values):
        _, g = input_gradient(spec, Network({"d": spec}, ParamStore(values)).bind(False)["d"], x, selector)
        return float(np.mean(np.sum(g.value ** 2, axis=1)))

    net.params.zero_grad()
    _, grad = input_gradient(spec, net.bind()["d"], x, selector)
    T.mean(T.tsum(grad * grad, axis=1)).backward()
    np.testing.assert_allclose(net.params.grads, numeric_grad(penalty, base), atol=1e-4)


def test_network_round_trips_through_description(rng):
    specs = {"trunk": MLPSpec(3, 4, ((4, "relu"),), "relu"), "head": MLPSpec(4, 2)}
    net = Network.initialised(specs, rng)
    clone = Network.from_description(net.describe(), net.params.values.copy())
    x = rng.normal(size=(2, 3))
    np.testing.assert_allclose(clone.evaluate("trunk", x), net.evaluate("trunk", x))
    with pytest.raises(ConfigurationError):
        Network(specs, ParamStore(np.zeros(3)))


def test_adam_first_step_moves_by_learning_rate_times_sign():
    store = ParamStore(np.array([1.0, -2.0, 0.5]))
    store.grads[:] = [0.3, -4.0, 0.0]
    adam_step(store, lr=0.1)
    np.testing.assert_allclose(store.values, [0.9, -1.9, 0.5], atol=1e-6)
    assert store.step_count == 1


def test_adam_applies_decoupled_weight_decay():
    store = ParamStore(np.array([2.0]))
    adam_step(store, lr=0.1, weight_decay=0.5)
    np.testing.assert_allclose(store.values, [2.0 * (1 - 0.05)])


def test_adam_rejects_non_finite_gradients_without_changing_state():
    store = ParamStore(np.array([1.0, 2.0]))
    store.grads[:] = [np.nan, 1.0]
    with pytest.raises(NumericalError) as info:
        adam_step(store, lr=0.1)
    assert info.value.code == "numerical"
    np.testing.assert_array_equal(store.values, [1.0, 2.0])
    assert store.step_count == 0
    assert not np.any(store.adam_m)


def test_clip_grad_norm_rescales_jointly():
    a, b = ParamStore(np.zeros(1)), ParamStore(np.zeros(1))
    a.grads[:] = 3.0
    b.grads[:] = 4.0
    factor = clip_grad_norm([a, b], 1.0)
    assert factor == pytest.approx(0.2)
    assert global_norm([a, b]) == pytest.approx(1.0)
    assert clip_grad_norm(a, 10.0) == 1.0


def test_clipping_twice_leaves_gradients_unchanged(rng):
    a, b = ParamStore(np.zeros(20)), ParamStore(np.zeros(17))
    for _ in range(1000):
        a.grads[:] = rng.normal(size=20) * 100.0
        b.grads[:] = rng.normal(size=17) * 100.0
        clip_grad_norm([a, b], 1.0)
        assert global_norm([a, b]) == pytest.approx(1.0, rel=1e-12)
        once = (a.grads.copy(), b.grads.copy())
        assert clip_grad_norm([a, b], 1.0) == 1.0
        np.testing.assert_array_equal(a.grads, once[0])
        np.testing.assert_array_equal(b.grads, once[1])


def test_checkpoint_round_trip_and_corruption(tmp_path, rng):
    values = rng.normal(size=17)
    path = save_checkpoint(tmp_path / "ckpt" / "policy.ckpt", values, {"tasks": ["stack"]})
    header, loaded = load_checkpoint(path)
    assert header["tasks"] == ["stack"]
    assert header["param_count"] == 17
    np.testing.assert_allclose(loaded, values.astype(np.float32))

    path.write_bytes(path.read_bytes()[:-4])
    with pytest.raises(ConfigurationError):
        load_checkpoint(path)
    with pytest.raises(ConfigurationError):
        load_checkpoint(tmp_path / "missing.ckpt")
