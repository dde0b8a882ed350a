import numpy as np
import pytest

from src.autograd import Tensor, functions as F, grad_check
from src.exceptions import ShapeError
from src.model.ddi import DDI, DDIBlock, compute_d_model, patchify, unpatchify
from src.model.layers import ParameterRegistry


def _block(rng, L=8, C=2, P=2, beta=0.5, layer_norm=False, depth=2, d_model=4):
    registry = ParameterRegistry()
    block = DDIBlock(registry, "ddi.0", L, C, P, beta=beta, layer_norm=layer_norm,
                     d_model=d_model, depth=depth, rng=rng)
    return registry, block


@pytest.mark.parametrize("C, expected", [(7, 32), (321, 256), (32, 32), (1, 32), (862, 1024)])
def test_d_model(C, expected):
    assert compute_d_model(C) == expected


def test_patchify_example_and_round_trip(rng):
    np.testing.assert_array_equal(patchify(Tensor([[1.0, 2.0, 3.0, 4.0]]), 2).data, [[[1, 2], [3, 4]]])
    U = rng.standard_normal((3, 8))
    np.testing.assert_array_equal(unpatchify(patchify(Tensor(U), 4)).data, U)
    assert patchify(Tensor(U), 8).shape == (3, 1, 8)


def test_patchify_requires_divisible_length():
    with pytest.raises(ShapeError, match="L=6.*P=4"):
        patchify(Tensor(np.ones((2, 6))), 4)


def test_zero_networks_without_layer_norm_are_identity(rng):
    _, block = _block(rng)
    block.zero_()
    U = rng.standard_normal((3, 2, 8))
    np.testing.assert_array_equal(block(Tensor(U)).data, U)


def test_beta_zero_ignores_channel_mix(rng):
    _, block = _block(rng, beta=0.0)
    U = Tensor(rng.standard_normal((2, 2, 8)))
    before = block(U).data.copy()
    for t in block.channel_mix.parameters():
        t.data[...] += rng.standard_normal(t.shape)
    np.testing.assert_array_equal(block(U).data, before)


def test_linear_block_matches_hand_computation():
    _, block = _block(np.random.default_rng(0), L=4, C=2, P=2, beta=0.5, depth=1)
    (wt, bt), = block.time_mix.layers
    (wc, bc), = block.channel_mix.layers
    wt.data[...] = [[1.0, 2.0], [0.0, -1.0]]
    bt.data[...] = [0.5, -0.5]
    wc.data[...] = [[2.0, 1.0], [1.0, 0.0]]
    bc.data[...] = [1.0, 3.0]

    U = np.array([[1.0, 2.0, 3.0, 4.0], [-1.0, 0.0, 2.0, 5.0]])
    v0 = U[:, 0:2]
    z1 = U[:, 2:4] + v0 @ wt.data + bt.data
    v1 = z1 + 0.5 * (z1.T @ wc.data + bc.data).T
    expected = np.concatenate([v0, v1], axis=1)

    np.testing.assert_allclose(block(Tensor(U)).data, expected, atol=1e-12)


def test_first_patch_passes_through(rng):
    _, block = _block(rng)
    U = rng.standard_normal((2, 2, 8))
    np.testing.assert_array_equal(block(Tensor(U)).data[..., :2], U[..., :2])


def test_later_patches_do_not_affect_earlier_outputs(rng):
    _, block = _block(rng, L=8, P=2)
    U = rng.standard_normal((1, 2, 8))
    base = block(Tensor(U)).data
    perturbed = U.copy()
    perturbed[..., 4:6] += 10.0
    out = block(Tensor(perturbed)).data
    np.testing.assert_array_equal(out[..., :4], base[..., :4])
    assert not np.allclose(out[..., 4:], base[..., 4:])


def test_layer_norm_parameters_registered(rng):
    registry, _ = _block(rng, layer_norm=True)
    assert registry['ddi.0.norm.weight'].shape == (8,)
    assert 'ddi.0.time_mix.w0' in registry and 'ddi.0.channel_mix.w1' in registry


def test_stacked_blocks_compose(rng):
    registry = ParameterRegistry()
    ddi = DDI(registry, 8, 2, 4, num_blocks=2, d_model=4, rng=rng)
    U = Tensor(rng.standard_normal((2, 2, 8)))
    expected = ddi.blocks[1](ddi.blocks[0](U)).data
    np.testing.assert_array_equal(ddi(U).data, expected)
    assert any(name.startswith('ddi.1.') for name in registry)


def test_wrong_input_shape(rng):
    _, block = _block(rng)
    with pytest.raises(ShapeError):
        block(Tensor(np.ones((2, 3, 8))))


def test_block_gradients(rng):
    registry, block = _block(rng, L=8, C=2, P=4, layer_norm=True)
    target = rng.standard_normal((2, 2, 8))
    inputs = [Tensor(rng.standard_normal((2, 2, 8)))] + [t for _, t in registry.items()]
    assert grad_check(lambda u, *_: F.mul(block(u), target), inputs) < 1e-5
