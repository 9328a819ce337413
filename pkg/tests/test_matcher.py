import itertools
import math

import numpy as np
import pytest

from config.schema import LossConfig, SceneConfig
from core.errors import ConfigError, DimensionError, NonFiniteError
from core.tensor import Tensor
from modules.matcher import (
    Assignment,
    align_topology_targets,
    cl_cost,
    fg_targets,
    focal_bce,
    hungarian,
    te_class_targets,
    te_cost,
    term_weights,
)
from modules.scenegen.generator import generate_scene


def _brute_force(cost):
    n, m = cost.shape
    if n >= m:
        return min(sum(cost[r, c] for c, r in enumerate(rows)) for rows in itertools.permutations(range(n), m))
    return min(sum(cost[r, c] for r, c in enumerate(cols)) for cols in itertools.permutations(range(m), n))


def test_hungarian_matches_brute_force():
    rng = np.random.default_rng(0)
    for _ in range(200):
        n, m = int(rng.integers(1, 7)), int(rng.integers(1, 7))
        cost = rng.uniform(0.0, 10.0, size=(n, m))
        a = hungarian(cost)
        assert len(a.pairs) == min(n, m)
        assert a.cost == pytest.approx(_brute_force(cost), abs=1e-9)
        assert len({p for p, _ in a.pairs}) == len({g for _, g in a.pairs}) == len(a.pairs)
        assert [p for p, _ in a.pairs] == sorted(p for p, _ in a.pairs)
        assert sorted(a.unmatched_pred + [p for p, _ in a.pairs]) == list(range(n))


def test_hungarian_ties_prefer_lower_prediction_index():
    a = hungarian(np.ones((4, 2)))
    assert {p for p, _ in a.pairs} == {0, 1}
    assert a.unmatched_pred == [2, 3]


def test_hungarian_edge_shapes_and_errors():
    empty = hungarian(np.zeros((3, 0)))
    assert empty.pairs == [] and empty.unmatched_pred == [0, 1, 2]
    assert empty.unmatched_gt == []
    assert hungarian(np.zeros((0, 2))).unmatched_gt == [0, 1]
    with pytest.raises(NonFiniteError):
        hungarian(np.array([[1.0, np.nan]]))
    with pytest.raises(DimensionError):
        hungarian(np.zeros(3))


def test_assignment_maps():
    a = Assignment(pairs=[(0, 2), (3, 0)], unmatched_pred=[1, 2], n_pred=4, n_gt=3)
    assert a.pred_to_gt() == {0: 2, 3: 0}
    assert a.gt_to_pred() == {2: 0, 0: 3}
    assert a.unmatched_gt == [1]
    ident = Assignment.identity(3, 2)
    assert ident.pairs == [(0, 0), (1, 1)] and ident.unmatched_pred == [2]


def test_focal_reduces_to_weighted_bce():
    logits = Tensor(np.zeros(4))
    targets = np.array([1.0, 1.0, 0.0, 0.0])
    assert focal_bce(logits, targets, alpha=0.5, gamma=0.0).item() == pytest.approx(0.5 * math.log(2.0))
    assert focal_bce(logits, targets, alpha=0.5, gamma=2.0).item() == pytest.approx(0.25 * 0.5 * math.log(2.0))


def test_focal_stays_finite_on_extreme_logits():
    logits = Tensor(np.array([1000.0, -1000.0, 1000.0, -1000.0]), requires_grad=True)
    loss = focal_bce(logits, np.array([1.0, 0.0, 0.0, 1.0]))
    assert np.isfinite(loss.item())
    loss.backward()
    assert np.all(np.isfinite(logits.grad))
    confident = focal_bce(Tensor(np.array([1000.0, -1000.0])), np.array([1.0, 0.0]))
    assert confident.item() == pytest.approx(0.0, abs=1e-12)


def test_focal_argument_checks():
    with pytest.raises(ConfigError):
        focal_bce(Tensor(np.zeros(2)), np.zeros(2), alpha=1.5)
    with pytest.raises(DimensionError):
        focal_bce(Tensor(np.zeros(2)), np.zeros(3))
    assert focal_bce(Tensor(np.zeros((0, 3))), np.zeros((0, 3))).item() == 0.0


def test_classification_targets():
    a = Assignment(pairs=[(1, 0), (2, 1)], unmatched_pred=[0], n_pred=3, n_gt=2)
    t = te_class_targets(a, np.array([3, 0]), n_pred=3, c_te=4)
    assert t.shape == (3, 5)
    assert np.array_equal(t[0], [0, 0, 0, 0, 1])
    assert np.array_equal(t[1], [0, 0, 0, 1, 0])
    assert np.array_equal(t[2], [1, 0, 0, 0, 0])
    assert np.array_equal(fg_targets(a, 4), [0, 1, 1, 0])


def test_topology_targets_follow_matches():
    scene = next(s for s in (generate_scene(i, SceneConfig()) for i in range(50)) if s.a_lt.sum() and s.a_ll.sum())
    n_te, n_cl = scene.n_tes + 2, scene.n_lanes + 3
    te_perm = np.random.default_rng(0).permutation(n_te)[: scene.n_tes]
    cl_perm = np.random.default_rng(1).permutation(n_cl)[: scene.n_lanes]
    a_te = Assignment(pairs=sorted((int(p), g) for g, p in enumerate(te_perm)), n_pred=n_te, n_gt=scene.n_tes)
    a_cl = Assignment(pairs=sorted((int(p), g) for g, p in enumerate(cl_perm)), n_pred=n_cl, n_gt=scene.n_lanes)
    tecl, clcl = align_topology_targets(a_te, a_cl, scene, n_te, n_cl)
    assert tecl.shape == (n_te, n_cl) and clcl.shape == (n_cl, n_cl)
    assert tecl.sum() == scene.a_lt.sum() and clcl.sum() == scene.a_ll.sum()
    for g_te, p_te in enumerate(te_perm):
        for g_cl, p_cl in enumerate(cl_perm):
            assert tecl[p_te, p_cl] == scene.a_lt[g_cl, g_te]
    for gi, pi in enumerate(cl_perm):
        for gj, pj in enumerate(cl_perm):
            assert clcl[pi, pj] == scene.a_ll[gi, gj]


def test_matching_costs():
    loss = LossConfig()
    logits = np.array([[10.0, -10.0], [-10.0, 10.0]])
    boxes = np.array([[0.1, 0.1, 0.2, 0.2], [0.5, 0.5, 0.2, 0.2]])
    cost = te_cost(logits, boxes, boxes[::-1], np.array([1, 0]), loss)
    assert cost.shape == (2, 2)
    assert cost[0, 1] < cost[0, 0] and cost[1, 0] < cost[1, 1]
    assert te_cost(logits, boxes, np.zeros((0, 4)), np.zeros(0), loss).shape == (2, 0)
    pts = np.random.default_rng(0).uniform(size=(3, 5, 2))
    lane = cl_cost(np.zeros(3), pts, pts[:2], loss)
    assert lane.shape == (3, 2)
    assert np.allclose(np.diag(lane[:2]), loss.lambda_cls * 0.5)


def test_term_weights_mirror_loss_config():
    w = term_weights(LossConfig(lambda_bev=0.0, lambda_top=2.0))
    assert w["distill"] == 0.0 and w["top_tecl"] == w["top_clcl"] == 2.0
