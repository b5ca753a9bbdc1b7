"""Multi-task relational graph over the cause/tag/emotion nodes of a document.

Every clause ``i`` owns three nodes ``c_i``, ``t_i``, ``e_i``. An edge
``(source, target, relation)`` carries messages from source to target, and
``rdis`` is ``target clause - source clause``.

Relations of the full graph:

* ``cc``, ``tt``, ``ee`` link same-task nodes with ``1 <= |rdis| <= gamma``
* ``ct`` and ``tc`` link the cause and tag node of one clause
* ``te:d`` and ``et:d`` link tag and emotion nodes at ``rdis = d`` for every
  ``d`` in ``[-gamma, gamma]``

Self messages are not edges; the model adds them separately.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import NamedTuple

import numpy as np

TASKS = ("cause", "tag", "emotion")
TASK_LETTER = {"cause": "c", "tag": "t", "emotion": "e"}
_LETTER_TASK = {v: k for k, v in TASK_LETTER.items()}
VARIANTS = ("full", "owm", "norel", "fcg")


class NodeId(NamedTuple):
    task: str
    index: int

    @property
    def label(self) -> str:
        return f"{TASK_LETTER[self.task]}{self.index}"

    def sort_key(self) -> tuple[int, int]:
        return self.index, TASKS.index(self.task)


class Relation(NamedTuple):
    kind: str
    distance: int | None = None

    @property
    def name(self) -> str:
        return self.kind if self.distance is None else f"{self.kind}:{self.distance}"

    @classmethod
    def parse(cls, name: str) -> "Relation":
        if ":" in name:
            kind, d = name.split(":")
            return cls(kind, int(d))
        return cls(name)


UNTYPED = Relation("rel")


def reverse_relation(r: Relation) -> Relation:
    if r.kind in ("cc", "tt", "ee", "rel"):
        return r
    if r.kind == "ct":
        return Relation("tc")
    if r.kind == "tc":
        return Relation("ct")
    if r.kind == "te":
        return Relation("et", -r.distance)
    if r.kind == "et":
        return Relation("te", -r.distance)
    raise ValueError(f"unknown relation {r!r}")


def relation_types(gamma: int, variant: str = "full") -> tuple[Relation, ...]:
    """Relations the variant uses, in canonical order."""
    if variant in ("norel", "fcg"):
        return (UNTYPED,)
    span = range(-gamma, gamma + 1)
    rels = [Relation("cc"), Relation("tt"), Relation("ee"), Relation("ct")]
    if variant == "full":
        rels.append(Relation("tc"))
        rels += [Relation("te", d) for d in span]
    elif variant != "owm":
        raise ValueError(f"unknown graph variant {variant!r}")
    rels += [Relation("et", d) for d in span]
    return tuple(rels)


def typed_relation(source: NodeId, target: NodeId, gamma: int) -> Relation | None:
    """Relation of a full-graph edge from ``source`` to ``target``, or None."""
    rdis = target.index - source.index
    if abs(rdis) > gamma:
        return None
    pair = TASK_LETTER[source.task] + TASK_LETTER[target.task]
    if source.task == target.task:
        return Relation(pair) if rdis != 0 else None
    if pair in ("ct", "tc"):
        return Relation(pair) if rdis == 0 else None
    if pair in ("te", "et"):
        return Relation(pair, rdis)
    return None


Edge = tuple[NodeId, NodeId, Relation]


@dataclass(frozen=True)
class MRG:
    n: int
    gamma: int
    variant: str
    edges: tuple[Edge, ...]
    relations: tuple[Relation, ...]

    @property
    def nodes(self) -> tuple[NodeId, ...]:
        return tuple(NodeId(task, i) for i in range(1, self.n + 1) for task in TASKS)

    def node_position(self, node: NodeId) -> int:
        """Row of ``node`` in the stacked (cause block, tag block, emotion block) state matrix."""
        return TASKS.index(node.task) * self.n + node.index - 1

    def neighbors(self, node: NodeId, relation: Relation) -> list[NodeId]:
        return neighbors(self, node, relation)

    @cached_property
    def message_index(self):
        """``(source rows, target rows, relation ids, 1/|N|)`` arrays, one entry per edge."""
        return _message_index(self)


def _full_edges(n: int, gamma: int) -> list[Edge]:
    edges = []
    nodes = [NodeId(task, i) for i in range(1, n + 1) for task in TASKS]
    for s in nodes:
        lo, hi = max(1, s.index - gamma), min(n, s.index + gamma)
        for j in range(lo, hi + 1):
            for task in TASKS:
                t = NodeId(task, j)
                r = typed_relation(s, t, gamma)
                if r is not None:
                    edges.append((s, t, r))
    return edges


@lru_cache(maxsize=256)
def build_mrg(n: int, gamma: int, variant: str = "full") -> MRG:
    if n < 1 or gamma < 1:
        raise ValueError(f"need n >= 1 and gamma >= 1, got n={n}, gamma={gamma}")
    edges = _full_edges(n, gamma)
    if variant == "owm":
        edges = [e for e in edges if e[2].kind not in ("tc", "te")]
    elif variant == "norel":
        edges = [(s, t, UNTYPED) for s, t, _ in edges]
    elif variant == "fcg":
        same = [(s, t, UNTYPED) for s, t, _ in edges if s.task == t.task]
        cross = []
        for i in range(1, n + 1):
            for j in range(1, n + 1):
                for other in ("cause", "emotion"):
                    cross.append((NodeId("tag", i), NodeId(other, j), UNTYPED))
                    cross.append((NodeId(other, j), NodeId("tag", i), UNTYPED))
        edges = same + cross
    elif variant != "full":
        raise ValueError(f"unknown graph variant {variant!r}")
    order = {r: k for k, r in enumerate(relation_types(gamma, variant))}
    edges = sorted(set(edges), key=lambda e: (e[1].sort_key(), order[e[2]], e[0].sort_key()))
    return MRG(n, gamma, variant, tuple(edges), relation_types(gamma, variant))


def neighbors(graph: MRG, node: NodeId, relation: Relation) -> list[NodeId]:
    found = [s for s, t, r in graph.edges if t == node and r == relation]
    return sorted(found, key=NodeId.sort_key)


def _message_index(graph: MRG):
    rel_id = {r: k for k, r in enumerate(graph.relations)}
    src = np.array([graph.node_position(s) for s, _, _ in graph.edges], dtype=np.intp)
    dst = np.array([graph.node_position(t) for _, t, _ in graph.edges], dtype=np.intp)
    rel = np.array([rel_id[r] for _, _, r in graph.edges], dtype=np.intp)
    fan_in = Counter(zip(dst.tolist(), rel.tolist()))
    weight = np.array([1.0 / fan_in[(d, r)] for d, r in zip(dst.tolist(), rel.tolist())])
    for arr in (src, dst, rel, weight):
        arr.flags.writeable = False
    return src, dst, rel, weight


def relation_counts(graph: MRG) -> dict[str, int]:
    counts = Counter(r for _, _, r in graph.edges)
    return {r.name: counts.get(r, 0) for r in graph.relations}


def export_dot(graph: MRG) -> str:
    lines = [f'digraph "mrg_n{graph.n}_g{graph.gamma}_{graph.variant}" {{']
    for node in graph.nodes:
        lines.append(f'  "{node.label}" [task="{node.task}"];')
    for s, t, r in graph.edges:
        lines.append(f'  "{s.label}" -> "{t.label}" [label="{r.name}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def export_edges_json(graph: MRG) -> str:
    rows = [[s.task, s.index, t.task, t.index, r.name] for s, t, r in graph.edges]
    return json.dumps(rows)


def parse_node_label(label: str) -> NodeId:
    return NodeId(_LETTER_TASK[label[0]], int(label[1:]))
