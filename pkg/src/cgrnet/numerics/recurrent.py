"""LSTM and BiLSTM built from tape primitives.

Several independent LSTMs of equal size run together as a stack: weights carry
a leading stack axis ``K`` and every time step is one batched matmul.
Gate layout along the last axis is ``[input, forget, cell, output]``.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .tensor import Tensor, concat, matmul, sigmoid, split_last, tanh


class LSTMWeights(NamedTuple):
    w: Tensor  # (K, in, 4h)
    u: Tensor  # (K, h, 4h)
    b: Tensor  # (K, 1, 4h)


def lstm_step(x: Tensor, state: tuple[Tensor, Tensor], weights: LSTMWeights) -> tuple[Tensor, Tensor]:
    """One LSTM update. ``x`` is (K, B, in); ``h`` and ``c`` are (K, B, h)."""
    h, c = state
    gates = matmul(x, weights.w) + matmul(h, weights.u) + weights.b
    return _cell(gates, c)


def _cell(gates: Tensor, c: Tensor) -> tuple[Tensor, Tensor]:
    i, f, g, o = split_last(gates, 4)
    c_new = sigmoid(f) * c + sigmoid(i) * tanh(g)
    h_new = sigmoid(o) * tanh(c_new)
    return h_new, c_new


def lstm(xs: Tensor, weights: LSTMWeights) -> Tensor:
    """Run a stack of LSTMs over ``xs`` (K, T, in) from zero state; returns (K, T, h)."""
    k, steps, _ = xs.shape
    hidden = weights.u.shape[-2]
    # Input projections for every step at once; only the recurrent part loops.
    projected = matmul(xs, weights.w) + weights.b
    h = Tensor(np.zeros((k, 1, hidden)))
    c = Tensor(np.zeros((k, 1, hidden)))
    outputs = []
    for t in range(steps):
        gates = projected[:, t : t + 1, :] + matmul(h, weights.u)
        h, c = _cell(gates, c)
        outputs.append(h)
    return concat(outputs, axis=1)


def bilstm(xs: Tensor, weights: LSTMWeights) -> Tensor:
    """Bidirectional pass for a stack of ``K`` sequences.

    ``weights`` hold ``2K`` LSTMs: the first ``K`` read left to right, the rest
    right to left. Output position ``t`` is ``[forward_t, backward_t]``.
    """
    k = xs.shape[0]
    if weights.w.shape[0] != 2 * k:
        raise ValueError(f"bilstm over {k} sequences needs {2 * k} stacked LSTMs, got {weights.w.shape[0]}")
    both = concat([xs, xs[:, ::-1, :]], axis=0)
    out = lstm(both, weights)
    return concat([out[:k], out[k:, ::-1, :]], axis=-1)


def check_bidirectional_width(d: int) -> int:
    if d % 2:
        raise ValueError(f"BiLSTM width must be even, got {d}")
    return d // 2
