import numpy as np
import pytest

from core.errors import DimensionError, NonFiniteError
from core.gradcheck import check_gradients, relative_error
from core.tensor import Graph, Tensor, checked_mode, concat, is_grad_enabled, layer_norm, no_grad, softmax, stack


def _param(rng, *shape):
    return Tensor(rng.normal(size=shape), requires_grad=True)


def test_data_is_read_only():
    t = Tensor([1.0, 2.0])
    with pytest.raises(ValueError):
        t.data[0] = 5.0


def test_suffix_broadcasting_allowed():
    a = Tensor(np.ones((2, 3, 4)))
    b = Tensor(np.arange(4.0))
    assert (a + b).shape == (2, 3, 4)
    assert (b * a).shape == (2, 3, 4)
    assert (a * 2.0).shape == (2, 3, 4)


def test_non_suffix_broadcasting_rejected():
    a = Tensor(np.ones((3, 4)))
    with pytest.raises(DimensionError):
        a + Tensor(np.ones(3))
    with pytest.raises(DimensionError):
        a * Tensor(np.ones((3, 1)))


def test_explicit_broadcast_to_follows_numpy_rules():
    a = Tensor(np.ones((3, 1)), requires_grad=True)
    b = a.broadcast_to(2, 3, 4)
    assert b.shape == (2, 3, 4)
    b.sum().backward()
    assert np.array_equal(a.grad, np.full((3, 1), 8.0))


def test_matmul_shapes():
    rng = np.random.default_rng(0)
    a = Tensor(rng.normal(size=(5, 2, 3)))
    assert (a @ Tensor(rng.normal(size=(3, 4)))).shape == (5, 2, 4)
    assert (a @ Tensor(rng.normal(size=(5, 3, 6)))).shape == (5, 2, 6)
    with pytest.raises(DimensionError):
        a @ Tensor(rng.normal(size=(4, 3, 6)))
    with pytest.raises(DimensionError):
        a @ Tensor(rng.normal(size=(4, 4)))


def test_shared_node_gradients_accumulate():
    x = Tensor([1.5, -2.0], requires_grad=True)
    y = (x * x + x).sum()
    y.backward()
    assert np.allclose(x.grad, 2 * np.array([1.5, -2.0]) + 1.0)


def test_graph_is_parents_first():
    x = Tensor([1.0], requires_grad=True)
    y = (x * 2.0).exp()
    z = y + x
    graph = Graph.from_root(z)
    position = {id(n): i for i, n in enumerate(graph.nodes)}
    for node in graph.nodes:
        for parent in node._parents:
            assert position[id(parent)] < position[id(node)]
    assert graph.leaves() == [x]


def test_backward_requires_scalar_or_matching_seed():
    x = Tensor(np.ones(3), requires_grad=True)
    with pytest.raises(DimensionError):
        (x * 2.0).backward()
    (x * 2.0).backward(np.ones(3))
    assert np.array_equal(x.grad, np.full(3, 2.0))


def test_no_grad_records_nothing():
    x = Tensor(np.ones(2), requires_grad=True)
    with no_grad():
        assert not is_grad_enabled()
        y = x * 3.0
    assert is_grad_enabled()
    assert not y.requires_grad
    assert y._parents == ()


def test_detach_cuts_the_graph():
    x = Tensor(np.ones(2), requires_grad=True)
    y = (x.detach() * x).sum()
    y.backward()
    assert np.array_equal(x.grad, np.ones(2))


def test_checked_mode_names_the_op():
    with checked_mode(True):
        with pytest.raises(NonFiniteError) as info:
            Tensor([-1.0]).log()
    assert info.value.op == "log"
    with checked_mode(False):
        out = Tensor([-1.0]).log()
    assert np.isnan(out.numpy()[0])


def test_item_requires_single_element():
    assert Tensor([[3.0]]).item() == 3.0
    with pytest.raises(DimensionError):
        Tensor([1.0, 2.0]).item()


def test_fancy_index_backward_accumulates_repeats():
    x = Tensor(np.arange(4.0), requires_grad=True)
    x[np.array([0, 0, 2])].sum().backward()
    assert np.array_equal(x.grad, [2.0, 0.0, 1.0, 0.0])


def test_basic_index_backward():
    x = Tensor(np.arange(12.0).reshape(3, 4), requires_grad=True)
    x[1:, 2].sum().backward()
    expected = np.zeros((3, 4))
    expected[1:, 2] = 1.0
    assert np.array_equal(x.grad, expected)


def test_softmax_rows_sum_to_one_and_resist_overflow():
    y = softmax(Tensor([[1000.0, 1000.0], [0.0, np.log(3.0)]]), axis=-1)
    assert np.allclose(y.numpy().sum(axis=-1), 1.0)
    assert np.allclose(y.numpy()[1], [0.25, 0.75])


def test_concat_and_stack_split_gradients():
    a = Tensor(np.ones((2, 3)), requires_grad=True)
    b = Tensor(np.ones((1, 3)), requires_grad=True)
    (concat([a, b], axis=0) * Tensor(np.arange(3.0))).sum().backward()
    assert np.array_equal(a.grad, np.tile(np.arange(3.0), (2, 1)))
    c = Tensor(np.ones(3), requires_grad=True)
    d = Tensor(np.ones(3), requires_grad=True)
    stack([c, d], axis=1)[:, 1].sum().backward()
    assert np.array_equal(c.grad, np.zeros(3))
    assert np.array_equal(d.grad, np.ones(3))


@pytest.mark.parametrize(
    "build",
    [
        lambda x, w: (x @ w).tanh().sum(),
        lambda x, w: ((x @ w).gelu() * (x @ w).sigmoid()).mean(),
        lambda x, w: softmax(x @ w, axis=-1).square().sum(),
        lambda x, w: ((x.square() + 1.0).sqrt().log() / (w.abs() + 2.0).sum()).sum(),
        lambda x, w: (x @ w).softplus().reshape(-1).pow(3).mean(),
        lambda x, w: (x.transpose(1, 0).swapaxes(0, 1) @ w).exp().sum(axis=0).mean(),
    ],
)
def test_finite_differences_agree(build):
    rng = np.random.default_rng(3)
    x, w = _param(rng, 4, 3), _param(rng, 3, 5)
    result = check_gradients(lambda: build(x, w), {"x": x, "w": w})
    assert result.passed(1e-4), result.worst


def test_layer_norm_gradients():
    rng = np.random.default_rng(1)
    x, g, b = _param(rng, 2, 3, 6), _param(rng, 6), _param(rng, 6)
    target = Tensor(rng.normal(size=(2, 3, 6)))
    result = check_gradients(lambda: (layer_norm(x, g, b) * target).sum(), {"x": x, "g": g, "b": b})
    assert result.passed(1e-4)


def test_relative_error_floor():
    assert relative_error(0.0, 1e-9) == pytest.approx(1e-9 / 1e-4)
    assert relative_error(2.0, 1.0) == pytest.approx(0.5)
