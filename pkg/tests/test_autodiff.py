import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from docmanip.autodiff import (
    AdamState,
    LSTMWeights,
    NondeterministicLoss,
    Tensor,
    adam_step,
    bilstm_encode,
    check_op,
    grad_check,
    lstm_cell,
    lstm_step,
    ops,
    softmax_axis,
)
from docmanip.autodiff.nn import lstm_forward


def _weights(rng, d_in, d, scale=0.5):
    return LSTMWeights(
        Tensor(rng.standard_normal((d_in, 4 * d)) * scale, requires_grad=True),
        Tensor(rng.standard_normal((d, 4 * d)) * scale, requires_grad=True),
        Tensor(rng.standard_normal(4 * d) * scale, requires_grad=True),
    )


# --- softmax ---------------------------------------------------------------

def test_softmax_symmetric_pair():
    out = softmax_axis(Tensor([[0.0, 0.0]]), "rows")
    np.testing.assert_allclose(out.data, [[0.5, 0.5]])


def test_softmax_ln3():
    # e^0 / (e^0 + e^ln3) = 1/4
    out = softmax_axis(Tensor([[0.0], [math.log(3.0)]]), "cols")
    np.testing.assert_allclose(out.data[:, 0], [0.25, 0.75], atol=1e-15)


@given(st.floats(-50, 50), st.integers(0, 10_000))
@settings(max_examples=30, deadline=None)
def test_softmax_shift_invariant(c, seed):
    x = np.random.default_rng(seed).standard_normal((3, 4))
    a = softmax_axis(Tensor(x), "rows").data
    b = softmax_axis(Tensor(x + c), "rows").data
    np.testing.assert_allclose(a, b, atol=1e-12)


@pytest.mark.parametrize("bad", [np.nan, np.inf, -np.inf])
def test_softmax_rejects_nonfinite(bad):
    with pytest.raises(FloatingPointError):
        softmax_axis(Tensor([[0.0, bad]]), "rows")


def test_softmax_large_values_stable():
    out = softmax_axis(Tensor([[1000.0, 1000.0]]), "rows")
    np.testing.assert_allclose(out.data, [[0.5, 0.5]])


# --- lstm ------------------------------------------------------------------

def test_lstm_zero_params_zero_state():
    w = LSTMWeights(Tensor(np.zeros((3, 8))), Tensor(np.zeros((2, 8))), Tensor(np.zeros(8)))
    h, c = lstm_cell(np.ones(3), np.zeros(2), np.zeros(2), w)
    assert np.all(h.data == 0) and np.all(c.data == 0)


def test_lstm_scalar_hand_evaluation():
    sig = 1.0 / (1.0 + math.exp(-1.0))
    g = math.tanh(1.0)
    c_expected = sig * g
    h_expected = sig * math.tanh(c_expected)
    w = LSTMWeights(Tensor(np.ones((1, 4))), Tensor(np.ones((1, 4))), Tensor(np.zeros(4)))
    h, c = lstm_cell(np.ones(1), np.zeros(1), np.zeros(1), w)
    assert c.data[0] == pytest.approx(c_expected, abs=1e-12)
    assert h.data[0] == pytest.approx(h_expected, abs=1e-12)
    assert c.data[0] == pytest.approx(0.5568, abs=1e-4)
    assert h.data[0] == pytest.approx(0.36961, abs=1e-5)


@pytest.mark.parametrize("d_in", [1, 3, 7])
def test_lstm_output_shapes_independent_of_input(d_in):
    rng = np.random.default_rng(d_in)
    w = _weights(rng, d_in, 5)
    h, c = lstm_cell(rng.standard_normal(d_in), np.zeros(5), np.zeros(5), w)
    assert h.shape == (5,) and c.shape == (5,)


def test_lstm_shape_mismatch():
    w = _weights(np.random.default_rng(0), 3, 4)
    with pytest.raises(ValueError):
        lstm_cell(np.zeros(2), np.zeros(4), np.zeros(4), w)
    with pytest.raises(ValueError):
        lstm_step(np.zeros((1, 16)), np.zeros((1, 3)), np.zeros((1, 4)), w.wh)


def test_masked_step_keeps_state():
    rng = np.random.default_rng(1)
    w = _weights(rng, 2, 3)
    h0, c0 = rng.standard_normal((2, 3)), rng.standard_normal((2, 3))
    h, c = lstm_step(rng.standard_normal((2, 12)), h0, c0, w.wh, mask=np.array([[1.0], [0.0]]))
    np.testing.assert_array_equal(h.data[1], h0[1])
    np.testing.assert_array_equal(c.data[1], c0[1])
    assert not np.allclose(h.data[0], h0[0])


# --- bilstm ----------------------------------------------------------------

def test_bilstm_length_one():
    rng = np.random.default_rng(2)
    states, fl, bf = bilstm_encode([Tensor(rng.standard_normal(3))], _weights(rng, 3, 4), _weights(rng, 3, 4))
    assert len(states) == 1 and states[0].shape == (8,)
    assert fl.shape == (4,) and bf.shape == (4,)


def test_bilstm_empty_rejected():
    rng = np.random.default_rng(2)
    with pytest.raises(ValueError):
        bilstm_encode([], _weights(rng, 3, 4), _weights(rng, 3, 4))


def test_bilstm_direction_symmetry():
    rng = np.random.default_rng(3)
    f, b = _weights(rng, 3, 4), _weights(rng, 3, 4)
    seq = rng.standard_normal((1, 5, 3))
    orig, _, _ = bilstm_encode(Tensor(seq), f, b)
    # swapping the roles of the two weight sets and reversing time mirrors the states
    rev, _, _ = bilstm_encode(Tensor(seq[:, ::-1].copy()), b, f)
    np.testing.assert_allclose(rev.data[0, ::-1, :4], orig.data[0, :, 4:], atol=1e-12)
    np.testing.assert_allclose(rev.data[0, ::-1, 4:], orig.data[0, :, :4], atol=1e-12)


def test_bilstm_equals_two_unidirectional_runs():
    rng = np.random.default_rng(4)
    f, b = _weights(rng, 3, 4), _weights(rng, 3, 4)
    seq = rng.standard_normal((3, 6, 3))
    lengths = np.array([6, 2, 4])
    states, last_f, first_b = bilstm_encode(Tensor(seq), f, b, lengths)
    ref_f = lstm_forward(seq, f, lengths)
    ref_b = lstm_forward(seq, b, lengths, reverse=True)
    for s, n in enumerate(lengths):
        np.testing.assert_allclose(states.data[s, :n, :4], ref_f[s, :n], atol=1e-12)
        np.testing.assert_allclose(states.data[s, :n, 4:], ref_b[s, :n], atol=1e-12)
        np.testing.assert_allclose(last_f.data[s], ref_f[s, n - 1], atol=1e-12)
        np.testing.assert_allclose(first_b.data[s], ref_b[s, 0], atol=1e-12)


# --- adam ------------------------------------------------------------------

def test_adam_first_step_hand_value():
    p = {"theta": Tensor(np.array([1.0]))}
    state = AdamState(lr=0.001)
    adam_step(p, {"theta": np.array([2.0])}, state)
    # m_hat = 2, v_hat = 4 -> step = lr * 2 / (2 + eps)
    assert p["theta"].data[0] == pytest.approx(1.0 - 0.001 * 2.0 / (2.0 + 1e-8), abs=1e-15)
    assert p["theta"].data[0] == pytest.approx(0.999, abs=1e-9)
    assert state.t == 1


def test_adam_zero_gradient_no_move():
    p = {"w": Tensor(np.array([0.3, -2.0]))}
    adam_step(p, {"w": np.zeros(2)}, AdamState())
    np.testing.assert_array_equal(p["w"].data, [0.3, -2.0])


@given(st.lists(st.floats(-1e3, 1e3).filter(lambda v: abs(v) > 1e-6), min_size=1, max_size=6))
@settings(max_examples=40, deadline=None)
def test_adam_first_update_opposes_gradient(gs):
    g = np.array(gs)
    p = {"w": Tensor(np.zeros_like(g))}
    adam_step(p, {"w": g}, AdamState())
    assert np.all(np.sign(p["w"].data) == -np.sign(g))


def test_adam_nan_names_parameter():
    with pytest.raises(FloatingPointError, match="emb"):
        adam_step({"emb": Tensor(np.zeros(2))}, {"emb": np.array([0.0, np.nan])}, AdamState())


def test_lr_decay():
    s = AdamState(lr=0.001, lr_decay=0.97)
    s.decay()
    assert s.lr == pytest.approx(0.00097, abs=1e-15)


# --- grad check ------------------------------------------------------------

def test_grad_check_square():
    theta = Tensor(np.array([3.0]), requires_grad=True)
    err = grad_check(lambda: ops.sum(ops.mul(theta, theta)), {"theta": theta})
    assert err < 1e-8


def test_constant_loss_zero_grad():
    theta = Tensor(np.array([1.0, 2.0]), requires_grad=True)
    loss = ops.add(ops.mul(ops.sum(theta), 0.0), 5.0)
    loss.backward()
    np.testing.assert_array_equal(theta.grad, [0.0, 0.0])
    assert grad_check(lambda: ops.add(ops.mul(ops.sum(theta), 0.0), 5.0), {"theta": theta}) == 0.0


def test_grad_check_detects_nondeterminism():
    theta = Tensor(np.array([1.0]), requires_grad=True)
    rng = np.random.default_rng(0)
    with pytest.raises(NondeterministicLoss):
        grad_check(lambda: ops.sum(ops.mul(theta, float(rng.random()))), {"theta": theta})


def test_gradient_accumulates_for_shared_use():
    w = Tensor(np.array([[2.0]]), requires_grad=True)
    x = Tensor(np.array([[3.0]]))
    y = ops.matmul(ops.matmul(x, w), w)  # x w^2
    ops.sum(y).backward()
    assert w.grad[0, 0] == pytest.approx(2 * 3.0 * 2.0)


shapes = st.tuples(st.integers(1, 4), st.integers(1, 4), st.integers(1, 4))


@given(shapes, st.integers(0, 2**16))
@settings(max_examples=15, deadline=None)
def test_primitives_pass_grad_check(shape, seed):
    rng = np.random.default_rng(seed)
    a, b, k = shape
    x = rng.standard_normal((a, b))
    y = rng.standard_normal((b, k))
    z = rng.standard_normal((a, b))
    tol = 1e-4
    assert check_op(ops.matmul, x, y) < tol
    assert check_op(ops.add, x, z) < tol
    assert check_op(ops.add, x, rng.standard_normal(b)) < tol
    assert check_op(ops.mul, x, z) < tol
    assert check_op(ops.sigmoid, x) < tol
    assert check_op(ops.tanh, x) < tol
    assert check_op(lambda p: softmax_axis(p, "rows"), x) < tol
    assert check_op(lambda p: softmax_axis(p, "cols"), x) < tol
    assert check_op(lambda p, q: ops.concat([p, q], axis=0), x, z) < tol
    ids = rng.integers(0, a, size=(2, 3))
    assert check_op(lambda w: ops.embedding(w, ids), x) < tol
    probs = rng.random((a, b)) + 0.1
    targets = rng.integers(0, b, size=a)
    mask = (rng.random(a) > 0.3).astype(float)
    mask[0] = 1.0
    assert check_op(lambda p: ops.masked_cross_entropy(p, targets, mask), probs) < tol


@given(st.integers(1, 3), st.integers(1, 4), st.integers(1, 3), st.integers(0, 2**16))
@settings(max_examples=10, deadline=None)
def test_lstm_cell_grad_check(d_in, d, batch, seed):
    rng = np.random.default_rng(seed)
    w = _weights(rng, d_in, d)
    x = Tensor(rng.standard_normal((batch, d_in)), requires_grad=True)
    h = Tensor(rng.standard_normal((batch, d)), requires_grad=True)
    c = Tensor(rng.standard_normal((batch, d)), requires_grad=True)
    probe = rng.standard_normal((batch, d))
    params = {"wx": w.wx, "wh": w.wh, "b": w.b, "x": x, "h": h, "c": c}

    def loss():
        h2, c2 = lstm_cell(x, h, c, w)
        return ops.add(ops.sum(ops.mul(h2, probe)), ops.sum(ops.mul(c2, probe)))

    assert grad_check(loss, params) < 1e-4


def test_masked_bilstm_grad_check():
    rng = np.random.default_rng(9)
    f, b = _weights(rng, 2, 3), _weights(rng, 2, 3)
    seq = Tensor(rng.standard_normal((2, 4, 2)), requires_grad=True)
    probe = rng.standard_normal((2, 4, 6))
    params = {"seq": seq, "fwx": f.wx, "fwh": f.wh, "bwx": b.wx, "bb": b.b}

    def loss():
        states, fl, bf = bilstm_encode(seq, f, b, lengths=[4, 2])
        return ops.add(ops.sum(ops.mul(states, probe)), ops.sum(ops.mul(fl, bf)))

    assert grad_check(loss, params) < 1e-4


def test_backward_deterministic():
    def run():
        rng = np.random.default_rng(5)
        f, b = _weights(rng, 2, 3), _weights(rng, 2, 3)
        states, _, _ = bilstm_encode(Tensor(rng.standard_normal((2, 3, 2))), f, b, [3, 1])
        ops.sum(ops.mul(states, states)).backward()
        return states.data.tobytes() + f.wx.grad.tobytes() + b.wh.grad.tobytes()

    assert run() == run()
