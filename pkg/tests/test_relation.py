import numpy as np
import pytest

from core.errors import ConfigError, DimensionError
from core.gradcheck import check_gradients
from core.tensor import Tensor
from engine.benchmark import random_taps
from modules.decoder.decoder import AttentionTaps
from modules.metrics.bench import param_count
from modules.model.model import one_stage_topology
from modules.relation import (
    GatedFusion,
    GatedRelationHead,
    InteractionsHead,
    RelationProjections,
    TwoStageBaseline,
    build_concat_qk,
    build_relation_resource,
    gated_relation_logits,
    select_task_slices,
)
from modules.relation.baseline import baseline_param_count, gated_head_param_count


def _affine(x, layer):
    return x @ layer.weight.numpy() + layer.bias.numpy()


def _reference_resource(taps, proj):
    """Projection, concatenation, pairwise concatenation and stacking done directly in numpy."""
    L = proj.L
    q_te, k_te, q_cl, k_cl = (t.numpy() for t in (taps.q_te, taps.k_te, taps.q_cl, taps.k_cl))
    queries, keys = [], []
    for l in range(L):
        queries.append(np.concatenate([_affine(q_te[:, l], proj.q_te[l]), _affine(q_cl[:, l], proj.q_cl[l])]))
        keys.append(np.concatenate([_affine(k_te[:, l], proj.k_te[l]), _affine(k_cl[:, l], proj.k_cl[l])]))
    out_te, out_cl = taps.out_te.numpy(), taps.out_cl.numpy()
    queries.append(np.concatenate([_affine(out_te, proj.z_q_te), _affine(out_cl, proj.z_q_cl)]))
    keys.append(np.concatenate([_affine(out_te, proj.z_k_te), _affine(out_cl, proj.z_k_cl)]))
    n = queries[0].shape[0]
    half = queries[0].shape[1]
    r = np.empty((n, n, L + 1, 2 * half))
    for i in range(n):
        for j in range(n):
            for s in range(L + 1):
                r[i, j, s, :half] = queries[s][i]
                r[i, j, s, half:] = keys[s][j]
    return r


def _resource(taps, proj):
    Q, K = build_concat_qk(taps, proj)
    return build_relation_resource(Q, K, taps.out_te, taps.out_cl, proj)


def test_resource_matches_direct_construction_exactly():
    rng = np.random.default_rng(0)
    for trial in range(50):
        L = int(rng.integers(1, 4))
        d = int(rng.choice([2, 4, 8]))
        n_te, n_cl = int(rng.integers(1, 4)), int(rng.integers(1, 5))
        taps = random_taps(L, d, n_te, n_cl, rng)
        proj = RelationProjections(L, d, rng)
        res = _resource(taps, proj)
        assert res.r.shape == (n_te + n_cl, n_te + n_cl, L + 1, d)
        assert np.array_equal(res.r.numpy(), _reference_resource(taps, proj)), trial


def test_task_slice_index_audit():
    rng = np.random.default_rng(1)
    n_te, n_cl, L, d = 2, 3, 2, 4
    taps = random_taps(L, d, n_te, n_cl, rng)
    res = _resource(taps, RelationProjections(L, d, rng))
    r = res.r.numpy()
    r_tecl, r_clcl = select_task_slices(res)
    assert r_tecl.shape == (n_te, n_cl, L + 1, d)
    assert r_clcl.shape == (n_cl, n_cl, L + 1, d)
    for i in range(n_te):
        for j in range(n_cl):
            assert np.array_equal(r_tecl.numpy()[i, j], r[i, n_te + j])
    for i in range(n_cl):
        for j in range(n_cl):
            assert np.array_equal(r_clcl.numpy()[i, j], r[n_te + i, n_te + j])


def test_projection_requires_even_width_and_matching_taps():
    rng = np.random.default_rng(0)
    with pytest.raises(ConfigError):
        RelationProjections(2, 7, rng)
    taps = random_taps(2, 8, 2, 2, rng)
    with pytest.raises(DimensionError):
        build_concat_qk(taps, RelationProjections(3, 8, rng))


def _permuted(taps, pt, pc):
    return AttentionTaps(
        q_te=Tensor(taps.q_te.numpy()[pt]),
        k_te=Tensor(taps.k_te.numpy()[pt]),
        q_cl=Tensor(taps.q_cl.numpy()[pc]),
        k_cl=Tensor(taps.k_cl.numpy()[pc]),
        out_te=Tensor(taps.out_te.numpy()[pt]),
        out_cl=Tensor(taps.out_cl.numpy()[pc]),
    )


@pytest.mark.parametrize("seed", range(5))
def test_topology_logits_are_slot_equivariant(seed):
    rng = np.random.default_rng(seed)
    L, d, n_te, n_cl = 3, 8, 4, 6
    taps = random_taps(L, d, n_te, n_cl, rng)
    proj, tecl_head, clcl_head = RelationProjections(L, d, rng), GatedRelationHead(d, rng), GatedRelationHead(d, rng)
    pt, pc = rng.permutation(n_te), rng.permutation(n_cl)
    base = one_stage_topology(taps, proj, tecl_head, clcl_head)
    moved = one_stage_topology(_permuted(taps, pt, pc), proj, tecl_head, clcl_head)
    np.testing.assert_allclose(moved.tecl.numpy(), base.tecl.numpy()[np.ix_(pt, pc)], rtol=0, atol=1e-12)
    np.testing.assert_allclose(moved.clcl.numpy(), base.clcl.numpy()[np.ix_(pc, pc)], rtol=0, atol=1e-12)


def test_param_counts_match_closed_form():
    rng = np.random.default_rng(0)
    one_stage = [RelationProjections(3, 32, rng), GatedRelationHead(32, rng), GatedRelationHead(32, rng)]
    baseline = TwoStageBaseline(32, rng)
    assert param_count(one_stage) == gated_head_param_count(3, 32) == 12804
    assert baseline.num_parameters() == baseline_param_count(32) == 18882
    assert param_count(one_stage) < baseline.num_parameters()


def test_gated_clcl_ignores_traffic_elements_but_interactions_do_not():
    rng = np.random.default_rng(2)
    L, d, n_te, n_cl = 2, 8, 3, 4
    taps = random_taps(L, d, n_te, n_cl, rng)
    proj = RelationProjections(L, d, rng)
    tecl_head, gated, inter = GatedRelationHead(d, rng), GatedRelationHead(d, rng), InteractionsHead(d, rng)
    other = AttentionTaps(
        q_te=Tensor(rng.normal(size=taps.q_te.shape)),
        k_te=Tensor(rng.normal(size=taps.k_te.shape)),
        q_cl=taps.q_cl,
        k_cl=taps.k_cl,
        out_te=Tensor(rng.normal(size=taps.out_te.shape)),
        out_cl=taps.out_cl,
    )
    a = one_stage_topology(taps, proj, tecl_head, gated).clcl.numpy()
    b = one_stage_topology(other, proj, tecl_head, gated).clcl.numpy()
    assert np.array_equal(a, b)
    c = one_stage_topology(taps, proj, tecl_head, inter)
    e = one_stage_topology(other, proj, tecl_head, inter)
    assert c.clcl.shape == (n_cl, n_cl)
    assert not np.allclose(c.clcl.numpy(), e.clcl.numpy())


def test_two_stage_baseline_blocks_gradients_to_embeddings():
    rng = np.random.default_rng(0)
    te = Tensor(rng.normal(size=(3, 8)), requires_grad=True)
    cl = Tensor(rng.normal(size=(4, 8)), requires_grad=True)
    head = TwoStageBaseline(8, rng)
    logits = head(te, cl)
    assert logits.tecl.shape == (3, 4) and logits.clcl.shape == (4, 4)
    (logits.tecl.sum() + logits.clcl.sum()).backward()
    assert te.grad is None and cl.grad is None
    assert any(p.grad is not None and np.any(p.grad) for p in head.parameters())


def test_one_stage_gradients_reach_taps():
    rng = np.random.default_rng(1)
    L, d, n_te, n_cl = 2, 4, 2, 3
    raw = random_taps(L, d, n_te, n_cl, rng)
    taps = AttentionTaps(
        *(Tensor(t.numpy(), requires_grad=True) for t in (raw.q_te, raw.k_te, raw.q_cl, raw.k_cl, raw.out_te, raw.out_cl))
    )
    proj, tecl_head, clcl_head = RelationProjections(L, d, rng), GatedRelationHead(d, rng), GatedRelationHead(d, rng)
    target_tecl = Tensor(rng.normal(size=(n_te, n_cl)))
    target_clcl = Tensor(rng.normal(size=(n_cl, n_cl)))

    def loss():
        out = one_stage_topology(taps, proj, tecl_head, clcl_head)
        return (out.tecl - target_tecl).square().mean() + (out.clcl - target_clcl).square().mean()

    params = {"q_te": taps.q_te, "k_cl": taps.k_cl, "out_te": taps.out_te}
    params.update({f"proj.{n}": p for n, p in proj.named_parameters() if n.startswith(("q_te.0", "z_k_cl"))})
    params.update({f"tecl.{n}": p for n, p in tecl_head.named_parameters()})
    result = check_gradients(loss, params)
    assert result.passed(1e-4), result.worst


def test_interactions_head_gradients():
    rng = np.random.default_rng(3)
    L, d, n_te, n_cl = 1, 4, 2, 3
    taps = random_taps(L, d, n_te, n_cl, rng)
    proj, tecl_head, inter = RelationProjections(L, d, rng), GatedRelationHead(d, rng), InteractionsHead(d, rng)

    def loss():
        return one_stage_topology(taps, proj, tecl_head, inter).clcl.tanh().sum()

    params = {"conv_weight": inter.conv_weight, "conv_bias": inter.conv_bias, "gate": inter.fusion.gate.weight}
    result = check_gradients(loss, params, entries_per_param=20)
    assert result.passed(1e-4), result.worst


def test_pairwise_head_matches_scoring_the_full_resource():
    rng = np.random.default_rng(7)
    for trial in range(20):
        L = int(rng.integers(1, 4))
        d = int(rng.choice([2, 4, 8]))
        n_te, n_cl = int(rng.integers(1, 4)), int(rng.integers(1, 5))
        taps = random_taps(L, d, n_te, n_cl, rng)
        proj, tecl_head, clcl_head = RelationProjections(L, d, rng), GatedRelationHead(d, rng), GatedRelationHead(d, rng)
        r_tecl, r_clcl = select_task_slices(_resource(taps, proj))
        out = one_stage_topology(taps, proj, tecl_head, clcl_head)
        np.testing.assert_allclose(out.tecl.numpy(), gated_relation_logits(r_tecl, tecl_head).numpy(), rtol=0, atol=1e-12)
        np.testing.assert_allclose(out.clcl.numpy(), gated_relation_logits(r_clcl, clcl_head).numpy(), rtol=0, atol=1e-12)


def test_pairwise_fusion_gradients_match_finite_differences():
    rng = np.random.default_rng(8)
    d = 4
    fusion = GatedFusion(d, rng)
    rows = Tensor(rng.normal(size=(2, 3, d // 2)), requires_grad=True)
    cols = Tensor(rng.normal(size=(3, 3, d // 2)), requires_grad=True)

    def loss():
        return fusion.pairwise(rows, cols).tanh().sum()

    params = {"rows": rows, "cols": cols, "gate": fusion.gate.weight, "gate_bias": fusion.gate.bias}
    params.update({"value": fusion.value.weight, "value_bias": fusion.value.bias})
    result = check_gradients(loss, params, entries_per_param=12)
    assert result.passed(1e-4), result.worst


def test_pairwise_fusion_rejects_mismatched_halves():
    rng = np.random.default_rng(0)
    fusion = GatedFusion(8, rng)
    with pytest.raises(DimensionError):
        fusion.pairwise(Tensor(np.ones((2, 3, 4))), Tensor(np.ones((2, 2, 4))))
    with pytest.raises(DimensionError):
        fusion.pairwise(Tensor(np.ones((2, 3, 3))), Tensor(np.ones((2, 3, 3))))
