import numpy as np
import pytest

from src.exceptions import NumericError
from src.model.layers import ParameterRegistry
from src.training.optimizer import Adam, AdamState, adam_step, clip_grad_norm, collect_grads


def _registry(**params):
    registry = ParameterRegistry()
    for name, value in params.items():
        registry.register(name, np.asarray(value, dtype=np.float64))
    return registry


def test_first_step_example():
    registry = _registry(theta=0.0)
    adam_step(registry, {'theta': np.array(1.0)}, AdamState(), lr=0.1)
    assert registry['theta'].data.item() == pytest.approx(-0.1, abs=1e-8)


def test_zero_gradient_leaves_parameters():
    registry = _registry(w=[1.0, -2.0, 3.0])
    state = AdamState()
    for _ in range(3):
        adam_step(registry, {'w': np.zeros(3)}, state, lr=0.1)
    np.testing.assert_array_equal(registry['w'].data, [1.0, -2.0, 3.0])
    assert state.step == 3


def test_weight_decay_shrinks_parameters():
    registry = _registry(w=[2.0, -4.0])
    adam_step(registry, {'w': np.zeros(2)}, AdamState(), lr=0.5, weight_decay=0.1)
    np.testing.assert_allclose(registry['w'].data, [2.0 * 0.95, -4.0 * 0.95])


def test_non_finite_gradient_names_parameter():
    registry = _registry(a=[0.0], b=[0.0])
    with pytest.raises(NumericError, match="'b'"):
        adam_step(registry, {'a': np.zeros(1), 'b': np.array([np.inf])}, AdamState(), lr=0.1)
    np.testing.assert_array_equal(registry['a'].data, [0.0])


def test_collect_grads_fills_unused_with_zeros():
    registry = _registry(a=[1.0, 2.0], b=[3.0])
    registry['a'].grad = np.array([0.5, 0.5])
    grads = collect_grads(registry)
    np.testing.assert_array_equal(grads['b'], [0.0])
    np.testing.assert_array_equal(grads['a'], [0.5, 0.5])


def test_clip_grad_norm():
    grads = {'a': np.array([3.0]), 'b': np.array([4.0])}
    assert clip_grad_norm(grads, 1.0) == pytest.approx(5.0)
    total = np.sqrt(grads['a'] ** 2 + grads['b'] ** 2)
    assert total.item() == pytest.approx(1.0, abs=1e-9)
    small = {'a': np.array([0.1])}
    clip_grad_norm(small, 1.0)
    np.testing.assert_array_equal(small['a'], [0.1])


def test_adam_class_minimizes_quadratic():
    registry = _registry(x=[5.0, -3.0])
    opt = Adam(registry, lr=0.1)
    for _ in range(500):
        opt.zero_grad()
        registry['x'].grad = 2.0 * registry['x'].data
        opt.step()
    np.testing.assert_allclose(registry['x'].data, 0.0, atol=5e-2)


def test_adam_step_returns_gradient_norm():
    registry = _registry(x=[0.0, 0.0])
    opt = Adam(registry, lr=0.1, grad_clip=1.0)
    registry['x'].grad = np.array([3.0, 4.0])
    assert opt.step() == pytest.approx(5.0)
