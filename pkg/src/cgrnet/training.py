"""Losses, the training loop with early stopping, evaluation and sweeps.

Per task ``x`` the objective is

    L_x = pred(P^L) + sum_{l<L} est(P^l) + beta * sum_{l>=1} marg(P^l, P^{l-1})

and the total is ``alpha * L_tag + (1 - alpha) / 2 * (L_cause + L_emotion)``.
``est`` and ``pred`` are negative log-likelihoods of the gold class; ``marg``
is a hinge on any drop of the gold-class probability from one step to the next.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .corpus import Counts, Document, Metrics, TaskLabels, encode_labels
from .model import CGRNet, ModelConfig, StepOutputs, Vocab, predict_pairs
from .mrg import TASKS
from .numerics import Tape, Tensor, adam_step, cross_entropy_rows, hinge, mean, mul, sub, sum_, total

log = logging.getLogger(__name__)

PROB_FLOOR = 1e-12


@dataclass
class LossConfig:
    alpha: float = 0.5
    beta: float = 1e-3
    drop_emotion: bool = False
    drop_cause: bool = False
    drop_estimate: bool = False
    drop_margin: bool = False
    drop_harness: bool = False

    def validate(self) -> None:
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        if self.beta < 0:
            raise ValueError(f"beta must be >= 0, got {self.beta}")

    def task_weights(self) -> dict[str, float]:
        side = (1.0 - self.alpha) / 2.0
        return {
            "tag": self.alpha,
            "cause": 0.0 if self.drop_cause else side,
            "emotion": 0.0 if self.drop_emotion else side,
        }


@dataclass
class TrainConfig:
    lr: float = 1e-4
    batch_size: int = 4
    epochs: int = 10
    patience: int = 3
    seed: int = 0
    dev_fraction: float = 0.1
    weight_decay: float = 0.0

    def validate(self) -> None:
        if self.lr <= 0 or self.batch_size < 1 or self.epochs < 1 or self.patience < 0:
            raise ValueError("learning rate, batch size and epochs must be positive, patience >= 0")
        if not 0.0 < self.dev_fraction < 1.0:
            raise ValueError("dev_fraction must lie in (0, 1)")


# -- loss terms ----------------------------------------------------------------


def gold_probability(probs: Tensor, onehot: np.ndarray) -> Tensor:
    return sum_(mul(probs, onehot), axis=-1)


def estimate_loss(probs: Tensor, onehot: np.ndarray) -> Tensor:
    return cross_entropy_rows(probs, onehot, PROB_FLOOR)


prediction_loss = estimate_loss


def margin_loss(probs: Tensor, previous: Tensor, onehot: np.ndarray) -> Tensor:
    return mean(hinge(sub(gold_probability(previous, onehot), gold_probability(probs, onehot))))


def harness_loss(estimates: Sequence[Tensor], margins: Sequence[Tensor], beta: float) -> Tensor:
    return total(estimates) + mul(total(margins), beta)


def combine_tasks(tag: Tensor, cause: Tensor, emotion: Tensor, alpha: float) -> Tensor:
    side = (1.0 - alpha) / 2.0
    return mul(tag, alpha) + mul(cause, side) + mul(emotion, side)


@dataclass
class TaskLoss:
    estimates: list[float] = field(default_factory=list)
    margins: list[float] = field(default_factory=list)
    prediction: float = 0.0
    harness: float = 0.0
    total: float = 0.0


@dataclass
class LossReport:
    tasks: dict[str, TaskLoss]
    total: float


def task_objective(outputs: StepOutputs, task: str, onehot: np.ndarray, cfg: LossConfig):
    steps = outputs.steps
    probs = [outputs.dist(l, task) for l in range(steps + 1)]
    estimates = [estimate_loss(probs[l], onehot) for l in range(steps)]
    margins = [margin_loss(probs[l], probs[l - 1], onehot) for l in range(1, steps + 1)]
    pred = prediction_loss(probs[steps], onehot)
    kept_est = [] if cfg.drop_estimate or cfg.drop_harness else estimates
    kept_marg = [] if cfg.drop_margin or cfg.drop_harness else margins
    harness = harness_loss(kept_est, kept_marg, cfg.beta)
    objective = pred + harness
    report = TaskLoss(
        [e.item() for e in estimates],
        [m.item() for m in margins],
        pred.item(),
        harness.item(),
        objective.item(),
    )
    return objective, report


def compute_loss(
    outputs: StepOutputs, labels: TaskLabels, gamma: int, cfg: LossConfig
) -> tuple[Tensor, LossReport]:
    onehots = dict(zip(TASKS, labels.onehots(gamma)))
    weights = cfg.task_weights()
    terms, reports = [], {}
    for task in TASKS:
        objective, reports[task] = task_objective(outputs, task, onehots[task], cfg)
        if weights[task]:
            terms.append(mul(objective, weights[task]))
    grand = total(terms)
    return grand, LossReport(reports, grand.item())


# -- evaluation ----------------------------------------------------------------


def evaluate_model(net: CGRNet, corpus: Sequence[Document]) -> Metrics:
    counts = Counts()
    for doc in corpus:
        counts.update(net.predict(doc), doc.pairs)
    return counts.metrics()


@dataclass
class HistoryRow:
    epoch: int
    split: str
    loss_total: float
    loss_tag: float
    loss_cau: float
    loss_emo: float
    f1_ecpe: float
    f1_ee: float
    f1_ce: float


HISTORY_COLUMNS = ("epoch", "split", "loss_total", "loss_tag", "loss_cau", "loss_emo",
                   "f1_ecpe", "f1_ee", "f1_ce")


class _Tally:
    def __init__(self):
        self.losses = np.zeros(4)
        self.docs = 0
        self.counts = Counts()

    def add(self, report: LossReport, predicted, gold) -> None:
        t = report.tasks
        self.losses += (report.total, t["tag"].total, t["cause"].total, t["emotion"].total)
        self.docs += 1
        self.counts.update(predicted, gold)

    def row(self, epoch: int, split: str) -> HistoryRow:
        losses = self.losses / max(self.docs, 1)
        m = self.counts.metrics()
        return HistoryRow(epoch, split, *map(float, losses), m.ecpe.f1, m.ee.f1, m.ce.f1)


def score_split(net: CGRNet, docs: Sequence[Document], cfg: LossConfig, epoch: int, split: str) -> HistoryRow:
    tally = _Tally()
    gamma = net.config.gamma
    for doc in docs:
        outputs = net.forward(doc)
        _, report = compute_loss(outputs, encode_labels(doc, gamma), gamma, cfg)
        tally.add(report, predict_pairs(outputs, doc.n, gamma), doc.pairs)
    return tally.row(epoch, split)


def write_history(rows: Sequence[HistoryRow], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(HISTORY_COLUMNS)
        for r in rows:
            writer.writerow([getattr(r, c) if c in ("epoch", "split") else repr(getattr(r, c))
                             for c in HISTORY_COLUMNS])


# -- training loop -------------------------------------------------------------


def split_corpus(docs: Sequence[Document], held_out: float, seed: int):
    """Deterministic shuffle, then ``(kept, held_out)``."""
    order = np.random.default_rng(seed).permutation(len(docs))
    cut = len(docs) - max(1, int(round(held_out * len(docs))))
    if cut < 1:
        raise ValueError(f"cannot split {len(docs)} documents with fraction {held_out}")
    return [docs[k] for k in order[:cut]], [docs[k] for k in order[cut:]]


@dataclass
class TrainResult:
    net: CGRNet
    history: list[HistoryRow]
    best_epoch: int
    best_dev_f1: float


def train(
    corpus: Sequence[Document],
    model_cfg: ModelConfig,
    train_cfg: TrainConfig,
    loss_cfg: LossConfig,
    dev: Sequence[Document] | None = None,
) -> TrainResult:
    """Mini-batch Adam with early stopping on dev ECPE F1.

    Without an explicit ``dev`` set, ``train_cfg.dev_fraction`` of ``corpus``
    is held out for it. Returns the parameters of the best dev epoch.
    """
    train_cfg.validate()
    loss_cfg.validate()
    if dev is None:
        train_docs, dev = split_corpus(corpus, train_cfg.dev_fraction, train_cfg.seed)
    else:
        train_docs = list(corpus)
    if not train_docs or not dev:
        raise ValueError("training and dev sets must be non-empty")

    net = CGRNet.create(replace(model_cfg), Vocab.from_corpus(train_docs), seed=train_cfg.seed)
    gamma = net.config.gamma
    labels = {id(doc): encode_labels(doc, gamma) for doc in train_docs}
    rng = np.random.default_rng([train_cfg.seed, 1])
    dropout_rng = np.random.default_rng([train_cfg.seed, 2]) if net.config.dropout > 0 else None

    history = [score_split(net, train_docs, loss_cfg, 0, "train"),
               score_split(net, dev, loss_cfg, 0, "dev")]
    best_f1, best_epoch = history[-1].f1_ecpe, 0
    best = net.params.snapshot()
    stale = 0
    for epoch in range(1, train_cfg.epochs + 1):
        tally = _Tally()
        order = rng.permutation(len(train_docs))
        for b, start in enumerate(range(0, len(order), train_cfg.batch_size)):
            batch = [train_docs[k] for k in order[start : start + train_cfg.batch_size]]
            with Tape() as tape:
                losses = []
                for doc in batch:
                    outputs = net.forward(doc, dropout_rng)
                    loss, report = compute_loss(outputs, labels[id(doc)], gamma, loss_cfg)
                    losses.append(loss)
                    tally.add(report, predict_pairs(outputs, doc.n, gamma), doc.pairs)
                batch_loss = mul(total(losses), 1.0 / len(batch))
            if not math.isfinite(batch_loss.item()):
                raise FloatingPointError(f"non-finite loss at epoch {epoch}, batch {b}")
            grads = net.params.gradients(tape.backward(batch_loss))
            adam_step(net.params, grads, train_cfg.lr, weight_decay=train_cfg.weight_decay)
        history.append(tally.row(epoch, "train"))
        dev_row = score_split(net, dev, loss_cfg, epoch, "dev")
        history.append(dev_row)
        log.info("epoch %d train loss %.4f dev ecpe f1 %.4f", epoch, history[-2].loss_total, dev_row.f1_ecpe)
        if dev_row.f1_ecpe > best_f1:
            best_f1, best_epoch, stale = dev_row.f1_ecpe, epoch, 0
            best = net.params.snapshot()
        else:
            stale += 1
            if stale > train_cfg.patience:
                break
    net.params.load_snapshot(best)
    return TrainResult(net, history, best_epoch, best_f1)


# -- sweeps --------------------------------------------------------------------

LOSS_ABLATIONS = {
    "none": {},
    "-emo": {"drop_emotion": True},
    "-cau": {"drop_cause": True},
    "-emo-cau": {"drop_emotion": True, "drop_cause": True},
    "-est": {"drop_estimate": True},
    "-marg": {"drop_margin": True},
    "-harn": {"drop_harness": True},
}

CELL_ABLATIONS = {
    "none": {},
    "-predint": {"disable_pred_interactions": True},
    "-rlgt": {"disable_rlgt": True},
    "-nlst": {"disable_nlst": True},
}

SWEEP_DIMENSIONS = ("gamma", "steps", "variant", "loss", "cell", "beta")


def sweep_setting(dimension: str, value: str, model_cfg: ModelConfig, loss_cfg: LossConfig):
    """Model and loss configs for one sweep point."""
    if dimension == "gamma":
        return replace(model_cfg, gamma=int(value)), loss_cfg
    if dimension == "steps":
        return replace(model_cfg, steps=int(value)), loss_cfg
    if dimension == "variant":
        return replace(model_cfg, graph_variant=value), loss_cfg
    if dimension == "beta":
        return model_cfg, replace(loss_cfg, beta=float(value))
    if dimension == "loss":
        return model_cfg, replace(loss_cfg, **LOSS_ABLATIONS[value])
    if dimension == "cell":
        return replace(model_cfg, **CELL_ABLATIONS[value]), loss_cfg
    raise ValueError(f"unknown sweep dimension {dimension!r}; expected one of {SWEEP_DIMENSIONS}")


def run_sweep(
    corpus: Sequence[Document],
    dimension: str,
    values: Sequence[str],
    model_cfg: ModelConfig,
    train_cfg: TrainConfig,
    loss_cfg: LossConfig,
    seeds: Sequence[int] = (0,),
    test_fraction: float = 0.2,
) -> list[dict]:
    """Train and test every (value, seed); one result row each."""
    rows = []
    for value in values:
        mcfg, lcfg = sweep_setting(dimension, str(value), model_cfg, loss_cfg)
        for seed in seeds:
            kept, test = split_corpus(corpus, test_fraction, seed)
            result = train(kept, mcfg, replace(train_cfg, seed=seed), lcfg)
            metrics = evaluate_model(result.net, test)
            row = {"dimension": dimension, "value": str(value), "seed": seed,
                   "best_epoch": result.best_epoch}
            row.update(metrics.as_dict())
            rows.append(row)
            log.info("%s=%s seed %d ecpe f1 %.4f", dimension, value, seed, metrics.ecpe.f1)
    return rows


def mean_f1(rows: Sequence[dict], value: str, key: str = "ecpe_f1") -> float:
    picked = [r[key] for r in rows if r["value"] == value]
    return float(np.mean(picked))

