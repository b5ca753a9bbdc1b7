"""Named parameter storage, Adam updates and JSON checkpoints."""

from __future__ import annotations

import json
import math
import zlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .tensor import Tensor


def glorot_uniform(shape: tuple[int, ...], rng: np.random.Generator) -> np.ndarray:
    fan_in, fan_out = (shape[-2], shape[-1]) if len(shape) >= 2 else (shape[0], shape[0])
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    step: int = 0


@dataclass
class ParamStore:
    """Ordered map of trainable tensors plus their optimizer moments."""

    seed: int = 0
    params: dict[str, Tensor] = field(default_factory=dict)
    state: dict[str, AdamState] = field(default_factory=dict)

    def add(self, name: str, shape: tuple[int, ...], init: str = "glorot") -> Tensor:
        if name in self.params:
            raise KeyError(f"duplicate parameter {name!r}")
        if init == "glorot":
            # one RNG stream per name, so adding a parameter never shifts the others
            rng = np.random.default_rng([self.seed, zlib.crc32(name.encode())])
            values = glorot_uniform(shape, rng)
        elif init == "zeros":
            values = np.zeros(shape)
        else:
            raise ValueError(f"unknown init {init!r}")
        t = Tensor(values, requires_grad=True, name=name)
        self.params[name] = t
        self.state[name] = AdamState(np.zeros(shape), np.zeros(shape))
        return t

    def __getitem__(self, name: str) -> Tensor:
        return self.params[name]

    def __contains__(self, name: str) -> bool:
        return name in self.params

    def __iter__(self):
        return iter(self.params)

    def __len__(self) -> int:
        return len(self.params)

    def items(self):
        return self.params.items()

    def num_values(self) -> int:
        return sum(t.data.size for t in self.params.values())

    def gradients(self, grads: dict[Tensor, np.ndarray]) -> dict[str, np.ndarray]:
        """Name-keyed gradients; parameters the loss never touched get zeros."""
        return {
            name: grads[t] if t in grads else np.zeros_like(t.data)
            for name, t in self.params.items()
        }

    def snapshot(self) -> dict[str, np.ndarray]:
        return {name: t.data.copy() for name, t in self.params.items()}

    def load_snapshot(self, values: dict[str, np.ndarray]) -> None:
        for name, t in self.params.items():
            if values[name].shape != t.shape:
                raise ValueError(f"{name}: shape {values[name].shape} != {t.shape}")
            t.data = np.array(values[name], dtype=np.float64)


def adam_step(
    store: ParamStore,
    grads: dict[str, np.ndarray],
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
    weight_decay: float = 0.0,
) -> None:
    """Bias-corrected Adam; ``weight_decay`` is applied decoupled (AdamW)."""
    for name, g in grads.items():
        if not np.all(np.isfinite(g)):
            raise FloatingPointError(f"non-finite gradient for parameter {name!r}")
    for name, t in store.params.items():
        g = grads[name]
        st = store.state[name]
        st.step += 1
        st.m = beta1 * st.m + (1.0 - beta1) * g
        st.v = beta2 * st.v + (1.0 - beta2) * g * g
        m_hat = st.m / (1.0 - beta1**st.step)
        v_hat = st.v / (1.0 - beta2**st.step)
        update = lr * m_hat / (np.sqrt(v_hat) + eps)
        if weight_decay:
            update = update + lr * weight_decay * t.data
        t.data = t.data - update


def save_checkpoint(path: str | Path, store: ParamStore, meta: dict | None = None) -> None:
    # json writes floats with repr(), which round-trips float64 exactly
    payload = {
        "meta": meta or {},
        "seed": store.seed,
        "params": {
            name: {"shape": list(t.shape), "values": t.data.ravel().tolist()}
            for name, t in store.params.items()
        },
    }
    Path(path).write_text(json.dumps(payload), encoding="utf-8")


def load_checkpoint(path: str | Path) -> tuple[ParamStore, dict]:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    store = ParamStore(seed=payload.get("seed", 0))
    for name, entry in payload["params"].items():
        shape = tuple(entry["shape"])
        values = np.asarray(entry["values"], dtype=np.float64).reshape(shape)
        store.params[name] = Tensor(values, requires_grad=True, name=name)
        store.state[name] = AdamState(np.zeros(shape), np.zeros(shape))
    return store, payload.get("meta", {})
