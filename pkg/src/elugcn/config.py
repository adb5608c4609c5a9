"""Flat key=value configuration with range checks and named sub-seeds.

A config file holds one ``section.key=value`` per line (``#`` comments
allowed); every CLI flag overrides one key. The effective configuration
is embedded into each report the pipeline writes.
"""

from dataclasses import dataclass, field, fields

import numpy as np

from .errors import ConfigError

_SEED_CODES = {"sbm": 1, "mlp": 2, "gcn": 3, "head": 4, "dual": 5, "bench": 6}


def sub_seed(seed, name):
    """Derive a component seed from the master seed, stable across runs."""
    if name not in _SEED_CODES:
        raise ValueError(f"unknown seed component {name!r}")
    ss = np.random.SeedSequence([int(seed), _SEED_CODES[name]])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass
class MlpConfig:
    hidden: int = 64
    lr: float = 0.2
    epochs: int = 300
    weight_decay: float = 1e-4


@dataclass
class LpaConfig:
    k: int = 10


@dataclass
class EluConfig:
    beta: float = 1.0
    k: int = 10
    keep_fraction: float = 0.1
    clip_negative: bool = False
    operator: str = "symnorm"


@dataclass
class GcnConfig:
    hidden: int = 64
    lr: float = 0.2
    epochs: int = 300
    momentum: float = 0.9
    weight_decay: float = 5e-4


@dataclass
class ConConfig:
    tau: float = 0.1
    gamma: float = 0.1
    lambda_: float = 0.1
    eta_fuse: float = 0.5
    proj_dim: int = 16


@dataclass
class BenchConfig:
    sizes: tuple = (2000, 4000, 8000)
    classes: int = 8
    repeats: int = 5


@dataclass
class PipelineConfig:
    seed: int = 0
    mlp: MlpConfig = field(default_factory=MlpConfig)
    lpa: LpaConfig = field(default_factory=LpaConfig)
    elu: EluConfig = field(default_factory=EluConfig)
    gcn: GcnConfig = field(default_factory=GcnConfig)
    con: ConConfig = field(default_factory=ConConfig)
    bench: BenchConfig = field(default_factory=BenchConfig)

    def validate(self):
        checks = [
            ("elu.beta", self.elu.beta > 0, "must be > 0"),
            ("elu.k", self.elu.k >= 1, "must be >= 1"),
            ("lpa.k", self.lpa.k >= 1, "must be >= 1"),
            ("elu.keep_fraction", 0 < self.elu.keep_fraction <= 1, "must be in (0, 1]"),
            ("con.tau", self.con.tau > 0, "must be > 0"),
            ("con.gamma", self.con.gamma >= 0, "must be >= 0"),
            ("con.lambda", 0 <= self.con.lambda_ <= 1, "must be in [0, 1]"),
            ("con.eta_fuse", 0 <= self.con.eta_fuse <= 1, "must be in [0, 1]"),
            ("con.proj_dim", self.con.proj_dim >= 1, "must be >= 1"),
            ("mlp.hidden", self.mlp.hidden >= 1, "must be >= 1"),
            ("gcn.hidden", self.gcn.hidden >= 1, "must be >= 1"),
            ("mlp.lr", self.mlp.lr >= 0, "must be >= 0"),
            ("gcn.lr", self.gcn.lr >= 0, "must be >= 0"),
            ("mlp.epochs", self.mlp.epochs >= 0, "must be >= 0"),
            ("gcn.epochs", self.gcn.epochs >= 0, "must be >= 0"),
            ("gcn.momentum", 0 <= self.gcn.momentum < 1, "must be in [0, 1)"),
            ("mlp.weight_decay", self.mlp.weight_decay >= 0, "must be >= 0"),
            ("gcn.weight_decay", self.gcn.weight_decay >= 0, "must be >= 0"),
            ("bench.sizes", all(s >= 2 for s in self.bench.sizes), "sizes must be >= 2"),
            ("bench.repeats", self.bench.repeats >= 1, "must be >= 1"),
            (
                "elu.operator",
                self.elu.operator in ("raw", "rownorm", "symnorm"),
                "must be raw, rownorm or symnorm",
            ),
        ]
        for key, ok, msg in checks:
            if not ok:
                raise ConfigError(f"config {key}: {msg} (got {self.get(key)})")
        return self

    # -- flat key access ---------------------------------------------------

    def _resolve(self, key):
        if "." in key:
            section, name = key.split(".", 1)
        else:
            section, name = None, key
        if section is None:
            if name != "seed":
                raise ConfigError(f"unknown config key {key!r}")
            return self, "seed"
        group = getattr(self, section, None)
        if group is None or section not in ("mlp", "lpa", "elu", "gcn", "con", "bench"):
            raise ConfigError(f"unknown config section {section!r}")
        attr = "lambda_" if (section, name) == ("con", "lambda") else name
        if not any(f.name == attr for f in fields(group)):
            raise ConfigError(f"unknown config key {key!r}")
        return group, attr

    def get(self, key):
        obj, attr = self._resolve(key)
        return getattr(obj, attr)

    def set(self, key, raw):
        obj, attr = self._resolve(key)
        current = getattr(obj, attr)
        try:
            if isinstance(current, bool):
                if str(raw).lower() in ("1", "true", "yes", "on"):
                    value = True
                elif str(raw).lower() in ("0", "false", "no", "off"):
                    value = False
                else:
                    raise ValueError(raw)
            elif isinstance(current, int):
                value = int(raw)
            elif isinstance(current, float):
                value = float(raw)
            elif isinstance(current, tuple):
                value = tuple(int(tok) for tok in str(raw).replace(",", " ").split())
            else:
                value = raw
        except ValueError:
            raise ConfigError(f"config {key}: cannot parse {raw!r}") from None
        setattr(obj, attr, value)

    def to_flat(self):
        out = {"seed": self.seed}
        for section in ("mlp", "lpa", "elu", "gcn", "con", "bench"):
            group = getattr(self, section)
            for f in fields(group):
                name = "lambda" if f.name == "lambda_" else f.name
                value = getattr(group, f.name)
                if isinstance(value, tuple):
                    value = ",".join(str(v) for v in value)
                out[f"{section}.{name}"] = value
        return out

    def to_text(self):
        flat = self.to_flat()
        return "".join(f"{k}={flat[k]}\n" for k in sorted(flat))


def parse_config_text(text, base=None):
    cfg = base if base is not None else PipelineConfig()
    for line_no, raw in enumerate(text.splitlines(), start=1):
        payload = raw.split("#", 1)[0].strip()
        if not payload:
            continue
        if "=" not in payload:
            raise ConfigError(f"config line {line_no}: expected key=value, got {payload!r}")
        key, value = (part.strip() for part in payload.split("=", 1))
        cfg.set(key, value)
    return cfg


def load_config(path=None, overrides=None):
    """Build the effective config: defaults, then file, then overrides."""
    cfg = PipelineConfig()
    if path is not None:
        with open(path, "r", encoding="utf-8") as fh:
            cfg = parse_config_text(fh.read(), base=cfg)
    for key, value in (overrides or {}).items():
        cfg.set(key, value)
    return cfg.validate()
