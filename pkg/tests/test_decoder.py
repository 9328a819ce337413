import numpy as np
import pytest

from core.errors import DimensionError
from core.tensor import Tensor
from modules.decoder import AttentionTaps, CLHead, TEHead, TransformerDecoder, run_cl_decoder, run_te_decoder
from modules.decoder.heads import denormalize_points, normalize_points
from modules.scenegen.types import FeatureMap


def _feature_map(rng, hw, d):
    grid = rng.normal(size=(hw[0] * hw[1], d))
    return FeatureMap(grid=Tensor(grid), signal=np.zeros((hw[0] * hw[1], 1)), shape=hw, extent=(1.0, 1.0))


def test_te_decoder_shapes():
    rng = np.random.default_rng(0)
    dec = TransformerDecoder(L=2, d=8, h=2, ffn_width=16, n_queries=3, rng=rng)
    out = run_te_decoder(_feature_map(rng, (3, 4), 8), dec)
    assert out.q.shape == (3, 2, 8)
    assert out.k.shape == (3, 2, 8)
    assert out.out.shape == (3, 8)


def test_cl_decoder_shapes():
    rng = np.random.default_rng(0)
    dec = TransformerDecoder(L=3, d=8, h=4, ffn_width=16, n_queries=5, rng=rng)
    out = run_cl_decoder(_feature_map(rng, (4, 4), 8), dec)
    assert out.q.shape == (5, 3, 8)
    assert len(out.sa_inputs) == 3


@pytest.mark.parametrize("L", [1, 2, 4])
@pytest.mark.parametrize("h,d", [(1, 8), (2, 16), (4, 32)])
def test_shape_sweep(L, h, d):
    rng = np.random.default_rng(L * 100 + d)
    dec = TransformerDecoder(L=L, d=d, h=h, ffn_width=d, n_queries=3, rng=rng)
    out = dec(_feature_map(rng, (2, 3), d).grid, (2, 3))
    assert out.q.shape == (3, L, d) and out.k.shape == (3, L, d) and out.out.shape == (3, d)


def test_width_mismatch():
    rng = np.random.default_rng(0)
    dec = TransformerDecoder(L=1, d=8, h=2, ffn_width=8, n_queries=2, rng=rng)
    with pytest.raises(DimensionError):
        run_te_decoder(_feature_map(rng, (2, 2), 6), dec)


def test_identity_query_projection_exposes_layer_input():
    rng = np.random.default_rng(1)
    dec = TransformerDecoder(L=2, d=8, h=2, ffn_width=8, n_queries=3, rng=rng)
    attn = dec.layers[0].self_attn
    attn.q_proj.weight.assign(np.eye(8))
    attn.q_proj.bias.assign(np.zeros(8))
    out = run_te_decoder(_feature_map(rng, (2, 2), 8), dec)
    assert np.array_equal(out.q.numpy()[:, 0, :], out.sa_inputs[0].numpy())


def test_taps_reproduce_projection_of_recorded_inputs():
    rng = np.random.default_rng(2)
    dec = TransformerDecoder(L=3, d=8, h=2, ffn_width=8, n_queries=4, rng=rng)
    out = run_cl_decoder(_feature_map(rng, (3, 3), 8), dec)
    for l, layer in enumerate(dec.layers):
        s = out.sa_inputs[l].numpy()
        q = s @ layer.self_attn.q_proj.weight.numpy() + layer.self_attn.q_proj.bias.numpy()
        k = s @ layer.self_attn.k_proj.weight.numpy() + layer.self_attn.k_proj.bias.numpy()
        assert np.array_equal(out.q.numpy()[:, l, :], q)
        assert np.array_equal(out.k.numpy()[:, l, :], k)


def test_same_seed_gives_identical_taps():
    def run():
        rng = np.random.default_rng(5)
        dec = TransformerDecoder(L=2, d=8, h=2, ffn_width=8, n_queries=3, rng=rng)
        return run_te_decoder(_feature_map(rng, (2, 3), 8), dec)

    a, b = run(), run()
    assert np.array_equal(a.q.numpy(), b.q.numpy())
    assert np.array_equal(a.k.numpy(), b.k.numpy())
    assert np.array_equal(a.out.numpy(), b.out.numpy())


def test_query_permutation_equivariance():
    rng = np.random.default_rng(3)
    dec = TransformerDecoder(L=2, d=8, h=2, ffn_width=8, n_queries=5, rng=rng)
    fmap = _feature_map(rng, (3, 3), 8)
    base = run_cl_decoder(fmap, dec)
    perm = np.array([3, 0, 4, 1, 2])
    dec.query_embed.assign(dec.query_embed.numpy()[perm])
    permuted = run_cl_decoder(fmap, dec)
    assert np.allclose(permuted.out.numpy(), base.out.numpy()[perm], atol=1e-12)
    assert np.allclose(permuted.q.numpy(), base.q.numpy()[perm], atol=1e-12)


def test_zero_value_projection_ignores_memory_content():
    rng = np.random.default_rng(4)
    dec = TransformerDecoder(L=2, d=8, h=2, ffn_width=8, n_queries=3, rng=rng)
    for layer in dec.layers:
        layer.cross_attn.v_proj.weight.assign(np.zeros((8, 8)))
        layer.cross_attn.v_proj.bias.assign(np.zeros(8))
    zero = FeatureMap(grid=Tensor(np.zeros((9, 8))), signal=np.zeros((9, 1)), shape=(3, 3), extent=(1.0, 1.0))
    a = run_cl_decoder(zero, dec)
    b = run_cl_decoder(_feature_map(rng, (3, 3), 8), dec)
    assert np.allclose(a.out.numpy(), b.out.numpy(), atol=1e-12)


def test_detached_taps_drop_the_graph():
    rng = np.random.default_rng(0)
    dec = TransformerDecoder(L=1, d=8, h=2, ffn_width=8, n_queries=2, rng=rng)
    out = run_te_decoder(_feature_map(rng, (2, 2), 8), dec)
    taps = AttentionTaps.from_outputs(out, out)
    assert taps.q_te.requires_grad
    detached = taps.detached()
    assert not any(t.requires_grad for t in (detached.q_te, detached.k_cl, detached.out_cl))
    assert np.array_equal(detached.q_te.numpy(), taps.q_te.numpy())


def test_te_head_ranges():
    rng = np.random.default_rng(0)
    head = TEHead(8, 4, rng)
    logits, boxes = head(Tensor(rng.normal(size=(3, 8)) * 5.0))
    assert logits.shape == (3, 5) and boxes.shape == (3, 4)
    assert np.all((boxes.numpy() >= 0) & (boxes.numpy() <= 1))
    assert np.all(np.isfinite(logits.numpy()))


def test_cl_head_points_stay_in_extent():
    rng = np.random.default_rng(0)
    head = CLHead(8, 11, rng)
    fg, pts = head(Tensor(rng.normal(size=(4, 8)) * 5.0))
    assert fg.shape == (4,) and pts.shape == (4, 11, 2)
    meters = denormalize_points(pts.numpy(), 25.0)
    assert np.all(np.abs(meters) <= 25.0)
    assert np.allclose(normalize_points(meters, 25.0), pts.numpy())
