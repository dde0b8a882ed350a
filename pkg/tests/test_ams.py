import numpy as np
import pytest

from src.autograd import Tensor, functions as F
from src.exceptions import ConfigError
from src.model import ams as ams_module
from src.model.ams import TPProjection, TPSelector, ams_forward, selector_forward, topk_scale
from src.model.layers import ParameterRegistry


def _selector(rng, L=8, m=4, k=2, noise=True, hidden=6):
    registry = ParameterRegistry()
    return registry, TPSelector(registry, L, m, k, 1.0, hidden=hidden, noise=noise, rng=rng)


def _constant_projection(values, L=8, T=3):
    proj = TPProjection(ParameterRegistry(), L, T, len(values), hidden=5)
    proj.zero_()
    for j, c in enumerate(values):
        proj.b2.data[j] = c
    return proj


def _fixed_decomp(sel, q):
    """Make the decomposition net output the constant vector q for any input."""
    sel.decomp.zero_()
    sel.decomp.layers[-1][1].data[...] = q


def test_topk_scale_example():
    out = topk_scale(Tensor([0.5, 0.3, 0.2]), 1, 1.0).data
    np.testing.assert_allclose(out, [0.64872, 0.26236, 0.18232], atol=1e-5)


def test_topk_scale_ties_with_k_equal_m():
    m = 4
    out = topk_scale(Tensor(np.full(m, 1.0 / m)), m, 1.0).data
    np.testing.assert_allclose(out, np.exp(1.0 / m) - 1.0)


def test_topk_scale_keeps_top_entries_ahead(rng):
    for _ in range(1000):
        m = int(rng.integers(2, 9))
        k = int(rng.integers(1, m))
        u = rng.dirichlet(np.ones(m))
        out = topk_scale(Tensor(u), k, 1.0).data
        top = np.argsort(-u, kind='stable')[:k]
        rest = np.setdiff1d(np.arange(m), top)
        assert out[top].min() > out[rest].max()


@pytest.mark.parametrize("k", [0, 4])
def test_topk_scale_rejects_bad_k(k):
    with pytest.raises(ConfigError):
        topk_scale(Tensor([0.2, 0.3, 0.5]), k, 1.0)


def test_selector_matches_hand_computation(rng):
    m, k = 8, 2
    _, sel = _selector(rng, m=m, k=k, noise=False)
    q = np.array([0.3, -1.0, 2.0, 0.0, 0.7, 1.1, -0.4, 0.2])
    _fixed_decomp(sel, q)

    p = np.exp(q - q.max())
    p /= p.sum()
    v_k = np.sort(p)[-k]
    scaled = np.where(p >= v_k, np.exp(p) - 1.0, np.log(p + 1.0))
    expected = np.exp(scaled) / np.exp(scaled).sum()

    S = selector_forward(Tensor(rng.standard_normal((3, 8))), sel, training=False).data
    np.testing.assert_allclose(S, np.tile(expected, (3, 1)), atol=1e-12)


def test_uniform_decomposition_gives_uniform_gate(rng):
    _, sel = _selector(rng, noise=False)
    _fixed_decomp(sel, np.full(4, 0.25))
    S = sel(Tensor(rng.standard_normal((2, 8)))).data
    np.testing.assert_allclose(S, 0.25, atol=1e-12)


def test_gate_noise_follows_rng(rng):
    _, sel = _selector(rng)
    u = Tensor(rng.standard_normal((5, 8)))
    a = sel(u, rng=np.random.default_rng(3), training=True).data
    b = sel(u, rng=np.random.default_rng(3), training=True).data
    c = sel(u, rng=np.random.default_rng(4), training=True).data
    np.testing.assert_array_equal(a, b)
    assert not np.allclose(a, c)


def test_no_noise_outside_training(rng):
    _, sel = _selector(rng)
    u = Tensor(rng.standard_normal((5, 8)))
    np.testing.assert_array_equal(sel(u, training=False).data, sel(u, training=False).data)


def test_noisy_training_needs_rng(rng):
    _, sel = _selector(rng)
    with pytest.raises(ConfigError):
        selector_forward(Tensor(np.ones((1, 8))), sel, rng=None, training=True)


def test_gates_on_simplex(rng):
    _, sel = _selector(rng)
    sel.w_noise.data[...] = rng.uniform(-1, 1, (4, 4))
    S = sel(Tensor(rng.standard_normal((10000, 8)) * 3), rng=rng, training=True).data
    assert np.all(S >= 0)
    np.testing.assert_allclose(S.sum(axis=-1), 1.0, atol=1e-10)


def test_one_hot_gate_picks_single_predictor(rng, monkeypatch):
    _, sel = _selector(rng, m=2, k=1, noise=False)
    proj = _constant_projection([1.5, -2.0])
    monkeypatch.setattr(ams_module, 'selector_forward',
                        lambda u, params, rng=None, training=True: Tensor([[1.0, 0.0]]))
    y, _ = ams_forward(Tensor(np.ones((1, 8))), Tensor(np.ones((1, 8))), sel, proj)
    np.testing.assert_allclose(y.data, [[1.5, 1.5, 1.5]])


def test_average_mode(rng):
    _, sel = _selector(rng)
    proj = _constant_projection([1.0, 2.0, 3.0, 4.0])
    u = Tensor(rng.standard_normal((2, 3, 8)))
    y, S = ams_forward(u, u, sel, proj, mode='average')
    assert y.shape == (2, 3, 3)
    np.testing.assert_allclose(y.data, 2.5)
    np.testing.assert_allclose(S.data, 0.25)


def test_sparse_equals_dense_when_all_selected(rng):
    registry = ParameterRegistry()
    sel = TPSelector(registry, 8, 4, 4, 1.0, hidden=6, rng=rng)
    proj = TPProjection(registry, 8, 3, 4, hidden=5, rng=rng)
    u, v = Tensor(rng.standard_normal((2, 3, 8))), Tensor(rng.standard_normal((2, 3, 8)))
    dense, S_dense = ams_forward(u, v, sel, proj, mode='dense')
    sparse, S_sparse = ams_forward(u, v, sel, proj, mode='sparse')
    np.testing.assert_allclose(sparse.data, dense.data, atol=1e-12)
    np.testing.assert_allclose(S_sparse.data, S_dense.data, atol=1e-12)


def test_sparse_mode_blocks_dropped_predictors(rng):
    registry = ParameterRegistry()
    sel = TPSelector(registry, 8, 4, 1, 1.0, hidden=6, noise=False, rng=rng)
    proj = TPProjection(registry, 8, 3, 4, hidden=5, rng=rng)
    u = Tensor(rng.standard_normal((1, 8)))
    y, S = ams_forward(u, u, sel, proj, mode='sparse')
    chosen = int(np.argmax(S.data[0]))
    np.testing.assert_allclose(S.data[0, chosen], 1.0)
    F.sum_(y).backward()
    for j in range(4):
        if j == chosen:
            assert np.any(proj.w2.grad[j] != 0)
        else:
            assert np.all(proj.w2.grad[j] == 0)
            assert np.all(proj.b2.grad[j] == 0)


def test_dense_mode_updates_every_predictor(rng):
    registry = ParameterRegistry()
    sel = TPSelector(registry, 8, 4, 1, 1.0, hidden=6, noise=False, rng=rng)
    proj = TPProjection(registry, 8, 3, 4, hidden=5, rng=rng)
    u = Tensor(rng.standard_normal((1, 8)))
    y, _ = ams_forward(u, u, sel, proj, mode='dense')
    F.sum_(y).backward()
    for j in range(4):
        assert np.any(proj.b2.grad[j] != 0)


def test_predictor_permutation_is_invisible(rng):
    registry = ParameterRegistry()
    sel = TPSelector(registry, 8, 4, 2, 1.0, hidden=6, rng=rng)
    proj = TPProjection(registry, 8, 3, 4, hidden=5, rng=rng)
    u, v = Tensor(rng.standard_normal((3, 8))), Tensor(rng.standard_normal((3, 8)))
    before, _ = ams_forward(u, v, sel, proj)

    perm = np.array([2, 0, 3, 1])
    w_last, b_last = sel.decomp.layers[-1]
    w_last.data[...] = w_last.data[:, perm]
    b_last.data[...] = b_last.data[perm]
    sel.w_noise.data[...] = sel.w_noise.data[np.ix_(perm, perm)]
    for t in (proj.w1, proj.b1, proj.w2, proj.b2):
        t.data[...] = t.data[perm]

    after, _ = ams_forward(u, v, sel, proj)
    np.testing.assert_allclose(after.data, before.data, atol=1e-12)


def test_unknown_mode(rng):
    _, sel = _selector(rng)
    proj = _constant_projection([0.0] * 4)
    with pytest.raises(ConfigError):
        ams_forward(Tensor(np.ones((1, 8))), Tensor(np.ones((1, 8))), sel, proj, mode='median')
