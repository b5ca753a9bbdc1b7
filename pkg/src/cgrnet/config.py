"""INI-style run configuration.

Sections map onto the config dataclasses::

    [run]    seed
    [model]  ModelConfig fields (vocab_size excluded, it comes from the corpus)
    [train]  TrainConfig fields
    [loss]   LossConfig fields
    [synth]  SynthConfig fields
    [sweep]  seeds (comma list), test_fraction

Unknown sections or keys are errors. Missing keys keep their defaults.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .corpus import ConfigError, SynthConfig
from .model import ModelConfig
from .training import LossConfig, TrainConfig


@dataclass
class SweepConfig:
    seeds: tuple[int, ...] = (0, 1, 2)
    test_fraction: float = 0.2


@dataclass
class RunConfig:
    seed: int = 0
    model: ModelConfig = field(default_factory=ModelConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    loss: LossConfig = field(default_factory=LossConfig)
    synth: SynthConfig = field(default_factory=SynthConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)


_SECTIONS = ("model", "train", "loss", "synth", "sweep")
_FIXED = {"model": {"vocab_size"}}


def _convert(raw: str, default, key: str):
    try:
        if isinstance(default, bool):
            lowered = raw.strip().lower()
            if lowered in ("1", "true", "yes", "on"):
                return True
            if lowered in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
        if isinstance(default, tuple):
            return tuple(int(x) for x in raw.split(",") if x.strip())
    except ValueError:
        raise ConfigError(f"bad value for {key}: {raw!r}") from None
    return raw.strip()


def _apply(obj, section: str, items: dict[str, str]):
    allowed = {f.name for f in fields(obj)} - _FIXED.get(section, set())
    updates = {}
    for key, raw in items.items():
        if key not in allowed:
            raise ConfigError(f"unknown key [{section}] {key}")
        updates[key] = _convert(raw, getattr(obj, key), f"[{section}] {key}")
    return replace(obj, **updates)


def parse_run_config(text: str) -> RunConfig:
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc).splitlines()[0]) from None
    cfg = RunConfig()
    for section in parser.sections():
        items = dict(parser.items(section))
        if section == "run":
            extra = set(items) - {"seed"}
            if extra:
                raise ConfigError(f"unknown key [run] {sorted(extra)[0]}")
            if "seed" in items:
                cfg.seed = _convert(items["seed"], 0, "[run] seed")
        elif section in _SECTIONS:
            setattr(cfg, section, _apply(getattr(cfg, section), section, items))
        else:
            raise ConfigError(f"unknown section [{section}]")
    return cfg


def load_run_config(path: str | Path | None) -> RunConfig:
    if path is None:
        return RunConfig()
    return parse_run_config(Path(path).read_text(encoding="utf-8"))


def dump_run_config(cfg: RunConfig) -> str:
    lines = ["[run]", f"seed = {cfg.seed}", ""]
    for section in _SECTIONS:
        obj = getattr(cfg, section)
        lines.append(f"[{section}]")
        for f in fields(obj):
            if f.name in _FIXED.get(section, set()):
                continue
            value = getattr(obj, f.name)
            if isinstance(value, tuple):
                value = ",".join(str(v) for v in value)
            lines.append(f"{f.name} = {value}")
        lines.append("")
    return "\n".join(lines)
