"""Command-line entry point: ``cgrnet {gen,train,eval,predict,graph,sweep}``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .config import RunConfig, dump_run_config, load_run_config
from .corpus import ConfigError, CorpusFormatError, generate_synthetic, load_corpus, save_corpus
from .model import CGRNet
from .mrg import VARIANTS, build_mrg, export_dot, relation_counts
from .numerics import load_checkpoint, save_checkpoint
from .training import SWEEP_DIMENSIONS, evaluate_model, run_sweep, train, write_history

log = logging.getLogger("cgrnet")


def _run_config(args) -> RunConfig:
    cfg = load_run_config(args.config)
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    model = cfg.model
    if getattr(args, "gamma", None) is not None:
        model = replace(model, gamma=args.gamma)
    if getattr(args, "steps", None) is not None:
        model = replace(model, steps=args.steps)
    if getattr(args, "variant", None) is not None:
        model = replace(model, graph_variant=args.variant)
    cfg.model = model
    cfg.train = replace(cfg.train, seed=cfg.seed)
    return cfg


def _load_net(path: str) -> CGRNet:
    store, meta = load_checkpoint(path)
    return CGRNet.from_meta(meta, store)


def cmd_gen(args) -> None:
    cfg = _run_config(args)
    save_corpus(generate_synthetic(cfg.synth, cfg.seed), args.out)


def cmd_train(args) -> None:
    cfg = _run_config(args)
    corpus = load_corpus(args.corpus)
    result = train(corpus, cfg.model, cfg.train, cfg.loss)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_checkpoint(out / "checkpoint.json", result.net.params, result.net.meta())
    write_history(result.history, out / "history.csv")
    (out / "config.ini").write_text(dump_run_config(cfg), encoding="utf-8")
    print(json.dumps({"best_epoch": result.best_epoch, "best_dev_f1_ecpe": result.best_dev_f1}))


def cmd_eval(args) -> None:
    net = _load_net(args.checkpoint)
    metrics = evaluate_model(net, load_corpus(args.corpus))
    print(json.dumps(metrics.as_dict()))


def cmd_predict(args) -> None:
    net = _load_net(args.checkpoint)
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        for doc in load_corpus(args.corpus):
            pairs = sorted(net.predict(doc))
            fh.write(json.dumps({"id": doc.id, "pairs": [[p.emotion, p.cause] for p in pairs]}) + "\n")


def cmd_graph(args) -> None:
    graph = build_mrg(args.n, args.gamma, args.variant)
    dot = export_dot(graph)
    if args.out:
        Path(args.out).write_text(dot, encoding="utf-8")
    else:
        sys.stdout.write(dot)
    table = sys.stderr if not args.out else sys.stdout
    print(f"nodes\t{3 * graph.n}", file=table)
    print(f"edges\t{len(graph.edges)}", file=table)
    for name, count in relation_counts(graph).items():
        print(f"{name}\t{count}", file=table)


def cmd_sweep(args) -> None:
    cfg = _run_config(args)
    corpus = load_corpus(args.corpus) if args.corpus else generate_synthetic(cfg.synth, cfg.seed)
    values = [v.strip() for v in args.values.split(",") if v.strip()]
    rows = run_sweep(corpus, args.dimension, values, cfg.model, cfg.train, cfg.loss,
                     seeds=cfg.sweep.seeds, test_fraction=cfg.sweep.test_fraction)
    fh = open(args.out, "w", newline="", encoding="utf-8") if args.out else sys.stdout
    try:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    finally:
        if fh is not sys.stdout:
            fh.close()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cgrnet", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, model=True):
        p.add_argument("--config", help="INI run configuration")
        p.add_argument("--seed", type=int)
        if model:
            p.add_argument("--gamma", type=int)
            p.add_argument("--steps", type=int)
            p.add_argument("--variant", choices=VARIANTS)

    p = sub.add_parser("gen", help="write a synthetic JSONL corpus")
    common(p, model=False)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("train", help="train and write checkpoint + history")
    common(p)
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="print the nine P/R/F1 numbers as JSON")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--corpus", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("predict", help="write predicted pairs as JSONL")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("graph", help="emit the graph as DOT plus per-relation edge counts")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--gamma", type=int, default=3)
    p.add_argument("--variant", choices=VARIANTS, default="full")
    p.add_argument("--out")
    p.set_defaults(func=cmd_graph)

    p = sub.add_parser("sweep", help="train+test across one dimension; CSV rows per value and seed")
    common(p)
    p.add_argument("--dimension", required=True, choices=SWEEP_DIMENSIONS)
    p.add_argument("--values", required=True, help="comma-separated values")
    p.add_argument("--corpus", help="JSONL corpus; generated from [synth] when omitted")
    p.add_argument("--out")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(message)s")
    try:
        args.func(args)
    except (ConfigError, CorpusFormatError, ValueError, KeyError, OSError, FloatingPointError) as exc:
        print(f"cgrnet: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
