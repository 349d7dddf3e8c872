"""Pipeline configuration from an INI-style key/value file.

Every key is optional::

    [pipeline]
    seed = 7
    corpus_size = 2000

    [dga]
    regularization = 1e-4
    epochs = 30
    learning_rate = 0.05

    [som]
    rows = 8
    cols = 8
    epochs = 50
    learning_rate = 0.3
    radius = 4

    [flux]
    ttl_max = 300
    min_distinct = 5
    min_ns_changes = 2
    window = 3600

    [rule]
    min_sinkhole_hits = 1
    min_dga_domains = 2
    min_ips_with_dga = 1
    min_flux_domains = 1
    min_dga_with_flux = 1
    dga_score_threshold = 0.0
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, fields, replace
from typing import Optional

from .dga import TrainConfig
from .dnshistory import FluxThresholds
from .graph import SuspicionRule
from .som import SomConfig


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class PipelineConfig:
    seed: int = 0
    corpus_size: int = 2000  # per class, when the DGA model is trained on the fly
    dga: TrainConfig = field(default_factory=TrainConfig)
    som: SomConfig = field(default_factory=SomConfig)
    flux: FluxThresholds = field(default_factory=FluxThresholds)
    rule: SuspicionRule = field(default_factory=SuspicionRule)

    def with_seed(self, seed: int) -> "PipelineConfig":
        return replace(self, seed=seed, dga=replace(self.dga, seed=seed), som=replace(self.som, seed=seed))


# section -> {file key: (attribute, type)}
_SOM_KEYS = {
    "rows": ("rows", int),
    "cols": ("cols", int),
    "epochs": ("epochs", int),
    "learning_rate": ("initial_learning_rate", float),
    "radius": ("initial_radius", float),
}


def _typed(cls) -> dict:
    hints = {"int": int, "float": float}
    out = {}
    for f in fields(cls):
        kind = f.type if isinstance(f.type, type) else hints.get(str(f.type))
        if kind is not None:
            out[f.name] = (f.name, kind)
    return out


_SECTIONS = {
    "dga": (TrainConfig, {k: v for k, v in _typed(TrainConfig).items() if k != "seed"}),
    "som": (SomConfig, _SOM_KEYS),
    "flux": (FluxThresholds, _typed(FluxThresholds)),
    "rule": (SuspicionRule, _typed(SuspicionRule)),
}


def parse_config(text: str) -> PipelineConfig:
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None
    cfg = PipelineConfig()
    seed = cfg.seed
    updates = {}
    for section in parser.sections():
        items = dict(parser.items(section))
        if section == "pipeline":
            for key, value in items.items():
                if key not in ("seed", "corpus_size"):
                    raise ConfigError(f"unknown key [pipeline] {key}")
                try:
                    updates[key] = int(value)
                except ValueError:
                    raise ConfigError(f"[pipeline] {key}: expected an integer") from None
            continue
        if section not in _SECTIONS:
            raise ConfigError(f"unknown section [{section}]")
        cls, keys = _SECTIONS[section]
        values = {}
        for key, raw in items.items():
            if key not in keys:
                raise ConfigError(f"unknown key [{section}] {key}")
            attr, kind = keys[key]
            try:
                values[attr] = kind(raw)
            except ValueError:
                raise ConfigError(f"[{section}] {key}: expected {kind.__name__}") from None
        try:
            updates[section] = replace(getattr(cfg, section), **values)
        except ValueError as exc:
            raise ConfigError(f"[{section}] {exc}") from None
    seed = updates.pop("seed", seed)
    return replace(cfg, **updates).with_seed(seed)


def load_config(path: Optional[str]) -> PipelineConfig:
    if path is None:
        return PipelineConfig()
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
