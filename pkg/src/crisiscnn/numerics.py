"""Numeric substrate: activations, a portable seeded generator and a
finite-difference gradient oracle.

Everything here works in float64.  The generator is SplitMix64 used in
counter mode: draw ``k`` of a stream seeded with ``s`` is
``mix(s + (k + 1) * GOLDEN)``, so any block of draws can be produced with
vectorised uint64 arithmetic and the stream is identical on every platform.
"""
from __future__ import annotations

from typing import Callable

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MUL1 = np.uint64(0xBF58476D1CE4E5B9)
_MUL2 = np.uint64(0x94D049BB133111EB)
_MASK64 = (1 << 64) - 1


def _mix64(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * _MUL1
    z = (z ^ (z >> np.uint64(27))) * _MUL2
    return z ^ (z >> np.uint64(31))


def splitmix64_reference(seed: int, n: int) -> list[int]:
    """Scalar SplitMix64, kept as a cross-check for the vectorised stream."""
    out = []
    state = seed & _MASK64
    for _ in range(n):
        state = (state + 0x9E3779B97F4A7C15) & _MASK64
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        out.append(z ^ (z >> 31))
    return out


class Rng:
    """Counter-based SplitMix64 generator.

    The full state is ``(seed, counter)``; :meth:`getstate` and
    :meth:`setstate` serialise it as plain integers.
    """

    algorithm = "splitmix64"

    def __init__(self, seed: int):
        self.seed = int(seed) & _MASK64
        self.counter = 0

    def getstate(self) -> tuple[int, int]:
        return self.seed, self.counter

    def setstate(self, state: tuple[int, int]) -> None:
        self.seed, self.counter = int(state[0]) & _MASK64, int(state[1])

    def spawn(self, stream: int) -> "Rng":
        """Independent child generator derived from this seed and ``stream``."""
        child_seed = int(_mix64(np.array([self.seed ^ ((stream * 0xD1B54A32D192ED03) & _MASK64)],
                                         dtype=np.uint64))[0])
        return Rng(child_seed)

    def next_uint64(self, n: int) -> np.ndarray:
        ks = np.arange(self.counter + 1, self.counter + 1 + n, dtype=np.uint64)
        self.counter += n
        with np.errstate(over="ignore"):
            return _mix64(np.uint64(self.seed) + ks * _GOLDEN)

    def random(self, size=None) -> np.ndarray | float:
        """Uniform draws on [0, 1) with 53 bits of resolution."""
        n = 1 if size is None else int(np.prod(size))
        u = (self.next_uint64(n) >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))
        if size is None:
            return float(u[0])
        return u.reshape(size)

    def uniform(self, low: float, high: float, size) -> np.ndarray:
        return low + (high - low) * self.random(size)

    def permutation(self, n: int) -> np.ndarray:
        keys = self.next_uint64(n)
        return np.argsort(keys, kind="stable")


def relu(x):
    return np.maximum(x, 0.0)


def sigmoid(x):
    """Logistic function, evaluated on the branch that cannot overflow."""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out if out.ndim else float(out)


def softmax(v, axis: int = -1) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    if v.size == 0:
        raise ValueError("softmax of an empty vector")
    e = np.exp(v - v.max(axis=axis, keepdims=True))
    return e / e.sum(axis=axis, keepdims=True)


def finite_diff_grad(loss_fn: Callable[[np.ndarray], float], params, h: float = 1e-5) -> np.ndarray:
    """Central-difference gradient of ``loss_fn`` at ``params``."""
    p = np.array(params, dtype=np.float64)
    flat = p.reshape(-1)
    grad = np.zeros_like(flat)
    for i in range(flat.size):
        old = flat[i]
        flat[i] = old + h
        fp = loss_fn(p)
        flat[i] = old - h
        fm = loss_fn(p)
        flat[i] = old
        grad[i] = (fp - fm) / (2.0 * h)
    return grad.reshape(p.shape)
