import numpy as np
import pytest

from cgrnet.corpus import Document
from cgrnet.model import CGRNet, ModelConfig, Vocab

ACCEPTANCE_LINES: list[str] = []


def make_doc(n=3, pairs=((3, 2),), seed=0, doc_id="t"):
    rng = np.random.default_rng(seed)
    clauses = [[f"w{int(k)}" for k in rng.integers(0, 6, size=rng.integers(1, 4))] for _ in range(n)]
    return Document(doc_id, clauses, list(pairs))


def make_net(seed=0, **overrides):
    cfg = dict(d=8, embed_dim=6, gamma=2, steps=2, mlp_hidden=7)
    cfg.update(overrides)
    vocab = Vocab(["<unk>"] + [f"w{k}" for k in range(6)])
    return CGRNet.create(ModelConfig(**cfg), vocab, seed=seed)


@pytest.fixture
def doc():
    return make_doc()


@pytest.fixture
def net():
    return make_net()


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
