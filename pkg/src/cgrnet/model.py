"""Network forward pass.

Task order is ``(cause, tag, emotion)`` everywhere; per-task hidden states
are kept stacked as one ``(3, n, d)`` tensor so the three task BiLSTMs and
the graph transformation run as single batched operations.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .corpus import Document, EmotionCausePair, decode_pairs, index_to_tag, num_tag_classes
from .mrg import TASKS, MRG, build_mrg, relation_types
from .numerics import (
    LSTMWeights,
    ParamStore,
    Tensor,
    bilstm,
    check_bidirectional_width,
    dropout,
    index_add,
    matmul,
    softmax,
    stack,
    tanh,
)

UNK = "<unk>"


@dataclass
class ModelConfig:
    vocab_size: int = 1
    embed_dim: int = 32
    d: int = 32
    gamma: int = 3
    steps: int = 3
    mlp_hidden: int = 256
    dropout: float = 0.0
    graph_variant: str = "full"
    disable_pred_interactions: bool = False
    disable_rlgt: bool = False
    disable_nlst: bool = False

    def validate(self) -> None:
        check_bidirectional_width(self.d)
        if self.steps < 0:
            raise ValueError("steps must be >= 0")
        if self.gamma < 1:
            raise ValueError("gamma must be >= 1")
        relation_types(self.gamma, self.graph_variant)

    def num_classes(self, task: str) -> int:
        return num_tag_classes(self.gamma) if task == "tag" else 2


@dataclass
class Vocab:
    tokens: list[str] = field(default_factory=lambda: [UNK])

    def __post_init__(self):
        self._index = {t: k for k, t in enumerate(self.tokens)}

    @classmethod
    def from_corpus(cls, docs) -> "Vocab":
        seen = sorted({tok for doc in docs for clause in doc.clauses for tok in clause})
        return cls([UNK] + [t for t in seen if t != UNK])

    def __len__(self) -> int:
        return len(self.tokens)

    def id(self, token: str) -> int:
        return self._index.get(token, 0)


def init_params(config: ModelConfig, seed: int = 0) -> ParamStore:
    config.validate()
    d, half = config.d, check_bidirectional_width(config.d)
    store = ParamStore(seed=seed)
    store.add("embed.table", (config.vocab_size, config.embed_dim))
    store.add("embed.proj", (config.embed_dim, d))
    store.add("embed.bias", (1, d), init="zeros")
    for block in ("encoder", "nlst"):
        # 3 tasks x 2 directions
        store.add(f"{block}.w", (6, d, 4 * half))
        store.add(f"{block}.u", (6, half, 4 * half))
        store.add(f"{block}.b", (6, 1, 4 * half), init="zeros")
    for task in TASKS:
        c = config.num_classes(task)
        store.add(f"decoder.{task}.w1", (d, config.mlp_hidden))
        store.add(f"decoder.{task}.b1", (1, config.mlp_hidden), init="zeros")
        store.add(f"decoder.{task}.w2", (config.mlp_hidden, c))
        store.add(f"decoder.{task}.b2", (1, c), init="zeros")
        store.add(f"label.{task}", (c, d))
    store.add("rlgt.self", (d, d))
    n_rel = len(relation_types(config.gamma, config.graph_variant))
    store.add("rlgt.relation", (n_rel, d, d))
    return store


@dataclass
class CGRNet:
    config: ModelConfig
    vocab: Vocab
    params: ParamStore

    @classmethod
    def create(cls, config: ModelConfig, vocab: Vocab, seed: int = 0) -> "CGRNet":
        config.vocab_size = len(vocab)
        return cls(config, vocab, init_params(config, seed))

    def meta(self) -> dict:
        return {"config": asdict(self.config), "vocab": self.vocab.tokens}

    @classmethod
    def from_meta(cls, meta: dict, params: ParamStore) -> "CGRNet":
        return cls(ModelConfig(**meta["config"]), Vocab(list(meta["vocab"])), params)

    def forward(self, doc: Document, rng: np.random.Generator | None = None) -> "StepOutputs":
        return forward(doc, self, rng)

    def predict(self, doc: Document) -> set[EmotionCausePair]:
        return predict_pairs(self.forward(doc), doc.n, self.config.gamma)


@dataclass
class StepOutputs:
    """Hidden states ``(3, n, d)`` and ``(cause, tag, emotion)`` distributions per step 0..L."""

    states: list[Tensor]
    dists: list[tuple[Tensor, Tensor, Tensor]]

    @property
    def steps(self) -> int:
        return len(self.states) - 1

    def hidden(self, step: int, task: str) -> Tensor:
        return self.states[step][TASKS.index(task)]

    def dist(self, step: int, task: str) -> Tensor:
        return self.dists[step][TASKS.index(task)]


def _lstm_weights(params: ParamStore, block: str) -> LSTMWeights:
    return LSTMWeights(params[f"{block}.w"], params[f"{block}.u"], params[f"{block}.b"])


def token_weights(doc: Document, vocab: Vocab) -> np.ndarray:
    """(n, |V|) matrix whose row i averages the one-hot tokens of clause i."""
    counts = np.zeros((doc.n, len(vocab)))
    for i, clause in enumerate(doc.clauses):
        for tok in clause:
            counts[i, vocab.id(tok)] += 1.0 / len(clause)
    return counts


def encode_clauses(doc: Document, params: ParamStore, vocab: Vocab) -> Tensor:
    """Mean-pooled token embeddings, projected to width d. Lookup is a matmul."""
    pooled = matmul(Tensor(token_weights(doc, vocab)), params["embed.table"])
    return matmul(pooled, params["embed.proj"]) + params["embed.bias"]


def document_encode(clauses: Tensor, params: ParamStore) -> Tensor:
    """Three independent BiLSTMs over the clause sequence; returns (3, n, d)."""
    xs = stack([clauses, clauses, clauses])
    return bilstm(xs, _lstm_weights(params, "encoder"))


def decode_distributions(hidden: Tensor, task: str, params: ParamStore) -> Tensor:
    p = f"decoder.{task}"
    z = tanh(matmul(hidden, params[f"{p}.w1"]) + params[f"{p}.b1"])
    return softmax(matmul(z, params[f"{p}.w2"]) + params[f"{p}.b2"])


def decode_all(states: Tensor, params: ParamStore) -> tuple[Tensor, Tensor, Tensor]:
    return tuple(decode_distributions(states[k], task, params) for k, task in enumerate(TASKS))


def project_labels(
    p_cause: Tensor, p_tag: Tensor, p_emotion: Tensor, params: ParamStore
) -> tuple[Tensor, Tensor, Tensor, Tensor]:
    """Expected label embeddings per task and their sum ``e`` (each n x d)."""
    e_c = matmul(p_cause, params["label.cause"])
    e_t = matmul(p_tag, params["label.tag"])
    e_e = matmul(p_emotion, params["label.emotion"])
    return e_c, e_t, e_e, e_c + e_t + e_e


def superimpose(hidden: Tensor, labels: Tensor) -> Tensor:
    """Add the clause label vector to every task's hidden state; broadcasts over (3, n, d)."""
    return hidden + labels


def rlgt(graph: MRG, nodes: Tensor, params: ParamStore) -> Tensor:
    """Relational local graph transformation over the (3n, d) node matrix.

    ``h_i <- W1 h_i + sum_r mean_{j in N_i^r} W2^r h_j``, written with row vectors.
    """
    out = matmul(nodes, params["rlgt.self"])
    src, dst, rel, weight = graph.message_index
    if len(src) == 0:
        return out
    per_relation = matmul(nodes, params["rlgt.relation"])  # (R, 3n, d)
    messages = per_relation[rel, src] * Tensor(weight[:, None])
    return out + index_add(messages, dst, nodes.shape[0])


def nlst(states: Tensor, params: ParamStore) -> Tensor:
    """Task-specific BiLSTMs over each task's node sequence; (3, n, d) in and out."""
    return bilstm(states, _lstm_weights(params, "nlst"))


def mrgt_step(
    graph: MRG,
    states: Tensor,
    dists: tuple[Tensor, Tensor, Tensor],
    net: CGRNet,
) -> Tensor:
    cfg, params = net.config, net.params
    n, d = states.shape[1], states.shape[2]
    if cfg.disable_pred_interactions:
        lifted = states
    else:
        *_, e = project_labels(*dists, params)
        lifted = superimpose(states, e)
    if cfg.disable_rlgt:
        mixed = lifted
    else:
        mixed = rlgt(graph, lifted.reshape(3 * n, d), params).reshape(3, n, d)
    if cfg.disable_nlst:
        return mixed
    return nlst(mixed, params)


def forward(doc: Document, net: CGRNet, rng: np.random.Generator | None = None) -> StepOutputs:
    cfg, params = net.config, net.params
    clauses = dropout(encode_clauses(doc, params, net.vocab), cfg.dropout, rng)
    states = document_encode(clauses, params)
    dists = decode_all(states, params)
    out = StepOutputs([states], [dists])
    graph = build_mrg(doc.n, cfg.gamma, cfg.graph_variant)
    for _ in range(cfg.steps):
        states = mrgt_step(graph, states, dists, net)
        dists = decode_all(dropout(states, cfg.dropout, rng), params)
        out.states.append(states)
        out.dists.append(dists)
    return out


def predict_pairs(outputs: StepOutputs, n: int, gamma: int) -> set[EmotionCausePair]:
    """Argmax of the final tag distribution (lowest class wins ties), then decode."""
    tag = outputs.dist(outputs.steps, "tag").data
    classes = np.argmax(tag, axis=-1)
    pairs, _ = decode_pairs([index_to_tag(int(k), gamma) for k in classes], n)
    return pairs
