"""Flat ``key = value`` run configuration.

Every key has a default except ``chi2_k`` (chi-squared selection is off
until a ``k`` is given).  Lines starting with ``#`` are comments; unknown keys
are rejected.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, fields
from pathlib import Path

from .cnn import CnnConfig
from .corpus import NOT_INFORMATIVE
from .train import TrainConfig

MODEL_KINDS = ("cnn", "mlp-cnn", "logreg", "svm", "rf")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    # network
    t_max: int = 30
    embed_dim: int = 300
    num_filters: int = 100
    window: int = 3
    pool: int = 2
    hidden: int = 100
    fine_tune: bool = True
    embed_scale: float = 0.25
    # optimisation
    max_epochs: int = 25
    batch_size: int = 64
    dropout: float = 0.5
    patience: int = 5
    seed: int = 0
    # data
    vocab_percent: float = 90.0
    not_informative: str = NOT_INFORMATIVE
    # adaptation
    adapt_lambda: float = 0.5
    # model family and features
    model_kind: str = "cnn"
    chi2_k: int | None = None
    chi2_for_logreg: bool = False
    baseline_epochs: int = 100
    baseline_lr: float = 0.1
    baseline_l2: float = 1e-4

    def __post_init__(self):
        if self.model_kind not in MODEL_KINDS:
            raise ConfigError(f"model_kind must be one of {MODEL_KINDS}, got {self.model_kind!r}")
        if not 0.0 <= self.adapt_lambda <= 1.0:
            raise ConfigError("adapt_lambda must be in [0, 1]")
        if self.chi2_k is not None and self.chi2_k < 1:
            raise ConfigError("chi2_k must be >= 1")

    def cnn_config(self, num_classes: int, extra_dim: int = 0, embed_dim: int | None = None) -> CnnConfig:
        return CnnConfig(
            t_max=self.t_max, embed_dim=embed_dim or self.embed_dim, num_filters=self.num_filters,
            window=self.window, pool=self.pool, hidden=self.hidden, num_classes=num_classes,
            extra_dim=extra_dim, fine_tune=self.fine_tune,
        )

    def train_config(self) -> TrainConfig:
        return TrainConfig(max_epochs=self.max_epochs, batch_size=self.batch_size,
                           dropout_rate=self.dropout, patience=self.patience, seed=self.seed)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def dumps(self) -> str:
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            if v is None:
                continue
            lines.append(f"{f.name} = {str(v).lower() if isinstance(v, bool) else v}")
        return "\n".join(lines) + "\n"

    def updated(self, values: dict[str, str | object]) -> "RunConfig":
        return dataclasses.replace(self, **{k: _coerce(k, v) for k, v in values.items()})


_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _coerce(key: str, value):
    if key not in _FIELD_TYPES:
        raise ConfigError(f"unknown configuration key {key!r}")
    if not isinstance(value, str):
        return value
    kind = _FIELD_TYPES[key]
    text = value.strip()
    try:
        if kind == "bool":
            if text.lower() not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(text)
            return text.lower() in ("true", "1", "yes")
        if kind == "int":
            return int(text)
        if kind == "int | None":
            return None if text.lower() in ("", "none") else int(text)
        if kind == "float":
            return float(text)
    except ValueError:
        raise ConfigError(f"bad value for {key}: {value!r}") from None
    return text


def parse_config(text: str, source: str = "<config>") -> dict[str, object]:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip() if not raw.lstrip().startswith("#") else ""
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        try:
            values[key] = _coerce(key, value)
        except ConfigError as exc:
            raise ConfigError(f"{source}:{lineno}: {exc}") from None
    return values


def load_config(path=None, overrides: dict | None = None) -> RunConfig:
    values: dict = {}
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"config file not found: {p}")
        values.update(parse_config(p.read_text(encoding="utf-8"), str(p)))
    for k, v in (overrides or {}).items():
        values[k] = _coerce(k, v)
    return RunConfig(**values)
