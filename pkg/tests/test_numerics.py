import numpy as np
import pytest
from hypothesis import given, strategies as st

from crisiscnn.numerics import (Rng, finite_diff_grad, relu, sigmoid, softmax,
                                splitmix64_reference)


def test_splitmix_known_values():
    assert splitmix64_reference(0, 1)[0] == 0xE220A8397B1DCDAF
    assert splitmix64_reference(1234567, 3) == [
        6457827717110365317, 3203168211198807973, 9817491932198370423]


@given(st.integers(0, 2**64 - 1), st.integers(1, 40))
def test_vectorised_stream_matches_scalar(seed, n):
    assert Rng(seed).next_uint64(n).tolist() == splitmix64_reference(seed, n)


def test_blocks_concatenate_to_one_stream():
    a = Rng(9)
    b = Rng(9)
    joined = np.concatenate([a.next_uint64(3), a.next_uint64(5)])
    assert np.array_equal(joined, b.next_uint64(8))


def test_state_roundtrip():
    r = Rng(5)
    r.random(7)
    st_ = r.getstate()
    x = r.random(4)
    r2 = Rng(0)
    r2.setstate(st_)
    assert np.array_equal(r2.random(4), x)


def test_random_range_and_spawn_independence():
    u = Rng(3).random(10000)
    assert u.min() >= 0.0 and u.max() < 1.0
    assert abs(u.mean() - 0.5) < 0.02
    r = Rng(3)
    assert not np.array_equal(r.spawn(1).next_uint64(4), r.spawn(2).next_uint64(4))
    assert np.array_equal(r.spawn(1).next_uint64(4), Rng(3).spawn(1).next_uint64(4))


@given(st.integers(0, 200), st.integers(0, 2**32))
def test_permutation_is_permutation(n, seed):
    p = Rng(seed).permutation(n)
    assert sorted(p.tolist()) == list(range(n))


def test_uniform_bounds():
    u = Rng(1).uniform(-2.0, 3.0, (50, 4))
    assert u.shape == (50, 4) and u.min() >= -2.0 and u.max() < 3.0


def test_relu():
    assert np.array_equal(relu(np.array([-1.0, 0.0, 2.5])), [0.0, 0.0, 2.5])


@given(st.floats(-1e4, 1e4))
def test_sigmoid_symmetry_and_range(x):
    s = sigmoid(x)
    assert 0.0 <= s <= 1.0
    assert s + sigmoid(-x) == pytest.approx(1.0, abs=1e-15)


def test_sigmoid_extremes_do_not_overflow():
    with np.errstate(over="raise"):
        out = sigmoid(np.array([-1000.0, 0.0, 1000.0]))
    assert out.tolist() == [0.0, 0.5, 1.0]


@given(st.lists(st.floats(-700, 700), min_size=1, max_size=10), st.floats(-100, 100))
def test_softmax_sums_to_one_and_shift_invariant(v, c):
    p = softmax(v)
    assert p.sum() == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(softmax(np.array(v) + c), p, atol=1e-12)


def test_softmax_empty_rejected():
    with pytest.raises(ValueError):
        softmax([])


def test_finite_diff_on_quadratic():
    A = np.array([[2.0, 1.0], [1.0, 3.0]])
    x = np.array([0.3, -0.7])
    g = finite_diff_grad(lambda p: 0.5 * p @ A @ p, x)
    assert np.allclose(g, A @ x, atol=1e-9)
    assert np.array_equal(x, [0.3, -0.7])
