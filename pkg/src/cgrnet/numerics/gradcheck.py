"""Central finite-difference gradient checking."""

from __future__ import annotations

from typing import Callable

import numpy as np

from .tensor import Tape, Tensor


def relative_error(analytic: float, numeric: float, floor: float = 1e-6) -> float:
    # the floor keeps near-zero coordinates from turning round-off into huge ratios
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), floor)


def grad_check(
    fn: Callable[[], Tensor],
    params: dict[str, Tensor],
    eps: float = 1e-5,
    max_coords: int | None = None,
    seed: int = 0,
    floor: float = 1e-6,
) -> float:
    """Worst relative error between tape gradients and central differences.

    ``fn`` rebuilds the scalar loss from the current parameter values. With
    ``max_coords`` set, each parameter is checked on a random subsample.
    """
    with Tape() as tape:
        loss = fn()
    grads = tape.backward(loss)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for name, t in params.items():
        analytic = grads.get(t, np.zeros_like(t.data))
        flat = t.data.reshape(-1)
        coords = np.arange(flat.size)
        if max_coords is not None and flat.size > max_coords:
            coords = np.sort(rng.choice(flat.size, size=max_coords, replace=False))
        for k in coords:
            old = flat[k]
            flat[k] = old + eps
            up = fn().item()
            flat[k] = old - eps
            down = fn().item()
            flat[k] = old
            numeric = (up - down) / (2 * eps)
            worst = max(worst, relative_error(analytic.reshape(-1)[k], numeric, floor))
    return worst
