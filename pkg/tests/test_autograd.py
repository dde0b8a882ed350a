import numpy as np
import pytest

from src.autograd import Graph, Tensor, functions as F, grad_check, no_grad
from src.exceptions import GraphFreedError, ShapeError


def test_product_rule():
    x = Tensor(2.0, requires_grad=True)
    y = Tensor(3.0, requires_grad=True)
    F.mul(x, y).backward()
    assert x.grad == pytest.approx(3.0)
    assert y.grad == pytest.approx(2.0)


def test_fan_out_accumulates():
    x = Tensor(1.5, requires_grad=True)
    F.add(F.mul(x, x), x).backward()
    assert x.grad == pytest.approx(2 * 1.5 + 1)


def test_softmax_sum_has_zero_gradient(rng):
    x = Tensor(rng.standard_normal((3, 5)), requires_grad=True)
    F.sum_(F.softmax(x)).backward()
    np.testing.assert_allclose(x.grad, 0.0, atol=1e-12)


def test_softmax_rows_on_simplex(rng):
    s = F.softmax(Tensor(rng.standard_normal((4, 6)) * 20)).data
    assert np.all(s >= 0)
    np.testing.assert_allclose(s.sum(axis=-1), 1.0, atol=1e-12)


def test_matmul_matches_finite_differences(rng):
    X = Tensor(rng.standard_normal((3, 4)))
    W = Tensor(rng.standard_normal((4, 2)))
    assert grad_check(F.matmul, [X, W]) < 1e-6


def test_broadcast_add_gradient_is_summed():
    a = Tensor(np.ones((2, 3)), requires_grad=True)
    b = Tensor(np.zeros(3), requires_grad=True)
    F.sum_(F.add(a, b)).backward()
    np.testing.assert_array_equal(b.grad, [2.0, 2.0, 2.0])
    np.testing.assert_array_equal(a.grad, np.ones((2, 3)))


def test_gather_routes_gradient_to_selected_entries():
    a = Tensor(np.arange(6.0).reshape(3, 2), requires_grad=True)
    idx = np.array([[2, 0]])
    out = F.gather(a, idx, axis=0)
    np.testing.assert_array_equal(out.data, [[4.0, 1.0]])
    F.sum_(out).backward()
    np.testing.assert_array_equal(a.grad, [[0, 1], [0, 0], [1, 0]])


def test_non_scalar_backward_rejected():
    x = Tensor(np.ones(3), requires_grad=True)
    with pytest.raises(ShapeError):
        F.scale(x, 2.0).backward()


def test_backward_twice_raises():
    x = Tensor(2.0, requires_grad=True)
    y = F.mul(x, x)
    y.backward()
    with pytest.raises(GraphFreedError):
        y.backward()


def test_shared_subgraph_cannot_be_replayed():
    x = Tensor(np.array([0.5, -1.0]), requires_grad=True)
    y = F.exp(x)
    a = F.sum_(y)
    b = F.sum_(F.mul(y, 2.0))
    a.backward()
    first = x.grad.copy()
    with pytest.raises(GraphFreedError, match="already consumed"):
        b.backward()
    np.testing.assert_array_equal(x.grad, first)


def test_no_grad_records_nothing():
    x = Tensor(np.ones(3), requires_grad=True)
    with no_grad():
        y = F.sum_(F.exp(x))
    assert y.node is None


def test_graph_nodes_in_creation_order():
    x = Tensor(np.ones(2), requires_grad=True)
    a = F.exp(x)
    b = F.log(a)
    c = F.sum_(b)
    graph = Graph.from_output(c)
    assert len(graph) == 3
    assert [type(n).__name__ for n in graph.nodes] == ['Exp', 'Log', 'Sum']


def test_avg_pool_keeps_constants_and_rejects_short_input():
    x = Tensor(np.full((2, 8), 3.25))
    np.testing.assert_array_equal(F.avg_pool1d(x, 2).data, np.full((2, 4), 3.25))
    with pytest.raises(ShapeError):
        F.avg_pool1d(Tensor(np.ones(1)), 2)


def test_transpose_twice_is_identity(rng):
    x = rng.standard_normal((2, 3, 4))
    np.testing.assert_array_equal(F.transpose(F.transpose(Tensor(x))).data, x)


def test_matmul_shape_errors():
    with pytest.raises(ShapeError):
        F.matmul(Tensor(np.ones((2, 3))), Tensor(np.ones((2, 3))))
    with pytest.raises(ShapeError):
        F.matmul(Tensor(np.ones(3)), Tensor(np.ones((3, 1))))


@pytest.mark.parametrize("fn, shapes", [
    (lambda a: F.gelu(a), [(3, 4)]),
    (lambda a: F.softplus(a), [(5,)]),
    (lambda a: F.softmax(a), [(2, 5)]),
    (lambda a: F.var(a, axis=-1), [(3, 6)]),
    (lambda a: F.avg_pool1d(a, 2), [(2, 7)]),
    (lambda a, b: F.div(a, F.add(F.square(b), 1.0)), [(2, 3), (3,)]),
    (lambda a: F.concat([a, F.scale(a, 2.0)], axis=0), [(2, 3)]),
    (lambda a: F.reshape(F.transpose(a), (6,)), [(2, 3)]),
    (lambda a: F.slice_(a, (Ellipsis, 1, slice(None))), [(2, 3, 4)]),
])
def test_primitive_gradients(rng, fn, shapes):
    inputs = [Tensor(rng.standard_normal(s)) for s in shapes]
    assert grad_check(fn, inputs) < 1e-5
