"""Documents, the cause-centric tag codec, pair metrics and corpus I/O.

Clause indices are 1-based throughout. A tag is ``(C, d)`` for a cause
clause whose emotion clause sits ``d`` clauses away (``emotion = cause + d``),
or ``(O, None)`` for everything else.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

import numpy as np


class MalformedDocumentError(ValueError):
    pass


class CorpusFormatError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class ConfigError(ValueError):
    pass


class EmotionCausePair(NamedTuple):
    emotion: int
    cause: int


class TagLabel(NamedTuple):
    flag: str  # "C" or "O"
    distance: int | None = None


OUTSIDE = TagLabel("O", None)


@dataclass(frozen=True)
class Document:
    id: str
    clauses: tuple[tuple[str, ...], ...]
    pairs: tuple[EmotionCausePair, ...] = ()

    def __post_init__(self):
        clauses = tuple(tuple(c) for c in self.clauses)
        pairs = tuple(EmotionCausePair(int(e), int(c)) for e, c in self.pairs)
        object.__setattr__(self, "clauses", clauses)
        object.__setattr__(self, "pairs", pairs)
        validate_document(self)

    @property
    def n(self) -> int:
        return len(self.clauses)

    @property
    def pair_set(self) -> set[EmotionCausePair]:
        return set(self.pairs)


def validate_document(doc: Document) -> None:
    if not doc.clauses:
        raise MalformedDocumentError(f"document {doc.id!r} has no clauses")
    for i, clause in enumerate(doc.clauses, start=1):
        if not clause:
            raise MalformedDocumentError(f"document {doc.id!r}: clause {i} is empty")
    n = len(doc.clauses)
    for e, c in doc.pairs:
        if not (1 <= e <= n and 1 <= c <= n):
            raise MalformedDocumentError(
                f"document {doc.id!r}: pair ({e}, {c}) outside clause range 1..{n}"
            )
    if len(set(doc.pairs)) != len(doc.pairs):
        raise MalformedDocumentError(f"document {doc.id!r} has duplicate pairs")


# -- tag classes -------------------------------------------------------------


def num_tag_classes(gamma: int) -> int:
    return 2 * (gamma + 1)


def tag_to_index(tag: TagLabel, gamma: int) -> int:
    """Class 0 is ``(O, None)``; ``(C, d)`` maps to ``d + gamma + 1``."""
    if tag.flag == "O":
        return 0
    return tag.distance + gamma + 1


def index_to_tag(k: int, gamma: int) -> TagLabel:
    if k == 0:
        return OUTSIDE
    return TagLabel("C", k - gamma - 1)


@dataclass(frozen=True)
class TaskLabels:
    tag: tuple[TagLabel, ...]
    cause: tuple[int, ...]
    emotion: tuple[int, ...]
    dropped_pairs: int = 0

    def tag_indices(self, gamma: int) -> np.ndarray:
        return np.array([tag_to_index(t, gamma) for t in self.tag], dtype=np.intp)

    def onehots(self, gamma: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """One-hot gold matrices ``(cause, tag, emotion)``.

        Binary tasks use class 0 for label 1 and class 1 for label 0, following
        the ordering ``{1, 0}`` of their class sets.
        """
        n = len(self.tag)
        tag = np.zeros((n, num_tag_classes(gamma)))
        tag[np.arange(n), self.tag_indices(gamma)] = 1.0
        cause = np.zeros((n, 2))
        cause[np.arange(n), 1 - np.asarray(self.cause)] = 1.0
        emotion = np.zeros((n, 2))
        emotion[np.arange(n), 1 - np.asarray(self.emotion)] = 1.0
        return cause, tag, emotion


def encode_labels(doc: Document, gamma: int) -> TaskLabels:
    if gamma < 1:
        raise ValueError(f"gamma must be >= 1, got {gamma}")
    validate_document(doc)
    n = doc.n
    best: dict[int, int] = {}
    dropped = 0
    emotion = [0] * n
    for e, c in doc.pairs:
        emotion[e - 1] = 1
        d = e - c
        if abs(d) > gamma:
            dropped += 1
            continue
        if c in best:
            dropped += 1
            # one distance per cause clause: keep the nearest, ties go to d > 0
            if (abs(d), -d) < (abs(best[c]), -best[c]):
                best[c] = d
        else:
            best[c] = d
    tags = [OUTSIDE] * n
    cause = [0] * n
    for c, d in best.items():
        tags[c - 1] = TagLabel("C", d)
        cause[c - 1] = 1
    return TaskLabels(tuple(tags), tuple(cause), tuple(emotion), dropped)


def decode_pairs(tags: Sequence[TagLabel], n: int) -> tuple[set[EmotionCausePair], int]:
    """Pairs encoded by ``tags`` plus the count of out-of-range ones dropped."""
    if len(tags) != n:
        raise ValueError(f"expected {n} tags, got {len(tags)}")
    pairs = set()
    dropped = 0
    for i, tag in enumerate(tags, start=1):
        if tag.flag != "C":
            continue
        e = i + tag.distance
        if 1 <= e <= n:
            pairs.add(EmotionCausePair(e, i))
        else:
            dropped += 1
    return pairs, dropped


# -- metrics -----------------------------------------------------------------


class PRF(NamedTuple):
    precision: float
    recall: float
    f1: float


def prf(correct: int, predicted: int, gold: int) -> PRF:
    p = correct / predicted if predicted else 0.0
    r = correct / gold if gold else 0.0
    f = 2 * p * r / (p + r) if p + r > 0 else 0.0
    return PRF(p, r, f)


@dataclass
class Counts:
    """Global correct/predicted/gold tallies for micro-averaging."""

    ecpe: list[int] = field(default_factory=lambda: [0, 0, 0])
    ee: list[int] = field(default_factory=lambda: [0, 0, 0])
    ce: list[int] = field(default_factory=lambda: [0, 0, 0])

    def update(self, predicted: Iterable[EmotionCausePair], gold: Iterable[EmotionCausePair]) -> None:
        predicted, gold = set(predicted), set(gold)
        for tally, p, g in (
            (self.ecpe, predicted, gold),
            (self.ee, {x.emotion for x in predicted}, {x.emotion for x in gold}),
            (self.ce, {x.cause for x in predicted}, {x.cause for x in gold}),
        ):
            tally[0] += len(p & g)
            tally[1] += len(p)
            tally[2] += len(g)

    def metrics(self) -> "Metrics":
        return Metrics(prf(*self.ecpe), prf(*self.ee), prf(*self.ce))


@dataclass(frozen=True)
class Metrics:
    ecpe: PRF
    ee: PRF
    ce: PRF

    def as_dict(self) -> dict[str, float]:
        out = {}
        for task in ("ecpe", "ee", "ce"):
            for key, value in getattr(self, task)._asdict().items():
                out[f"{task}_{key}"] = value
        return out


def evaluate(predicted: Iterable[EmotionCausePair], gold: Iterable[EmotionCausePair]) -> Metrics:
    counts = Counts()
    counts.update(predicted, gold)
    return counts.metrics()


def evaluate_corpus(
    predicted: Sequence[Iterable[EmotionCausePair]], gold: Sequence[Iterable[EmotionCausePair]]
) -> Metrics:
    counts = Counts()
    for p, g in zip(predicted, gold, strict=True):
        counts.update(p, g)
    return counts.metrics()


# -- JSONL -------------------------------------------------------------------


def document_to_json(doc: Document) -> dict:
    return {
        "id": doc.id,
        "clauses": [list(c) for c in doc.clauses],
        "pairs": [[p.emotion, p.cause] for p in doc.pairs],
    }


def document_from_json(obj: dict) -> Document:
    if not isinstance(obj, dict):
        raise MalformedDocumentError("expected a JSON object")
    missing = {"id", "clauses", "pairs"} - obj.keys()
    if missing:
        raise MalformedDocumentError(f"missing fields {sorted(missing)}")
    clauses = obj["clauses"]
    if not isinstance(clauses, list) or not all(
        isinstance(c, list) and all(isinstance(tok, str) for tok in c) for c in clauses
    ):
        raise MalformedDocumentError("clauses must be arrays of token strings")
    pairs = []
    for p in obj["pairs"]:
        if not (isinstance(p, list) and len(p) == 2 and all(type(x) is int for x in p)):
            raise MalformedDocumentError(f"bad pair {p!r}")
        pairs.append(EmotionCausePair(*p))
    return Document(str(obj["id"]), clauses, pairs)


def save_corpus(corpus: Iterable[Document], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for doc in corpus:
            fh.write(json.dumps(document_to_json(doc), ensure_ascii=False) + "\n")


def load_corpus(path: str | Path) -> list[Document]:
    docs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                docs.append(document_from_json(json.loads(line)))
            except (json.JSONDecodeError, MalformedDocumentError) as exc:
                raise CorpusFormatError(str(exc), lineno) from exc
    return docs


# -- synthetic corpora -------------------------------------------------------


@dataclass(frozen=True)
class SynthConfig:
    """Generator knobs. Defaults lean on the benchmark's shape (about 15
    clauses per document, mostly one pair) scaled down for desk runs."""

    num_docs: int = 500
    min_clauses: int = 8
    max_clauses: int = 16
    min_pairs: int = 1
    max_pairs: int = 2
    max_span: int = 3
    min_tokens: int = 3
    max_tokens: int = 6
    background_vocab: int = 60
    emotion_vocab: int = 6
    cause_vocab: int = 6
    max_tries: int = 1000

    def validate(self) -> None:
        positive = ("num_docs", "min_clauses", "min_pairs", "min_tokens", "background_vocab",
                    "emotion_vocab", "cause_vocab", "max_tries")
        for name in positive:
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive")
        if self.max_span < 0:
            raise ConfigError("max_span must be non-negative")
        if self.min_clauses > self.max_clauses:
            raise ConfigError("min_clauses exceeds max_clauses")
        if self.min_pairs > self.max_pairs:
            raise ConfigError("min_pairs exceeds max_pairs")
        if self.min_tokens > self.max_tokens:
            raise ConfigError("min_tokens exceeds max_tokens")
        if self.max_span >= self.min_clauses:
            raise ConfigError(
                f"max_span {self.max_span} cannot fit in documents of {self.min_clauses} clauses"
            )
        if self.max_pairs > self.min_clauses:
            raise ConfigError("more pairs than clauses in the shortest document")


def emotion_token(k: int) -> str:
    return f"emo{k}"


def cause_token(k: int) -> str:
    return f"cau{k}"


def is_cause_signal(token: str) -> bool:
    return token.startswith("cau")


def _place_pairs(rng: np.random.Generator, n: int, count: int, cfg: SynthConfig):
    # Each cause's window of +-max_span holds exactly one planted emotion (its own),
    # so the pairing is recoverable from the text.
    for _ in range(cfg.max_tries):
        pairs = []
        ok = True
        for _ in range(count):
            d = int(rng.integers(-cfg.max_span, cfg.max_span + 1))
            lo, hi = max(1, 1 - d), min(n, n - d)
            c = int(rng.integers(lo, hi + 1))
            pairs.append((c + d, c))
        emotions = [e for e, _ in pairs]
        causes = [c for _, c in pairs]
        if len(set(emotions)) < count or len(set(causes)) < count:
            ok = False
        for e, c in pairs:
            if any(abs(e2 - c) <= cfg.max_span for e2 in emotions if e2 != e):
                ok = False
        if ok:
            return pairs
    raise ConfigError(f"could not place {count} pairs in {n} clauses after {cfg.max_tries} tries")


def generate_synthetic(cfg: SynthConfig, seed: int) -> list[Document]:
    cfg.validate()
    rng = np.random.default_rng(seed)
    docs = []
    for k in range(cfg.num_docs):
        n = int(rng.integers(cfg.min_clauses, cfg.max_clauses + 1))
        count = int(rng.integers(cfg.min_pairs, cfg.max_pairs + 1))
        pairs = _place_pairs(rng, n, count, cfg)
        clauses = []
        for _ in range(n):
            length = int(rng.integers(cfg.min_tokens, cfg.max_tokens + 1))
            ids = rng.integers(0, cfg.background_vocab, size=length)
            clauses.append([f"w{int(t):03d}" for t in ids])
        for e, c in pairs:
            for idx, token in (
                (e, emotion_token(int(rng.integers(cfg.emotion_vocab)))),
                (c, cause_token(int(rng.integers(cfg.cause_vocab)))),
            ):
                clause = clauses[idx - 1]
                clause.insert(int(rng.integers(0, len(clause) + 1)), token)
        docs.append(Document(f"syn-{seed}-{k:05d}", clauses, sorted(pairs)))
    return docs
