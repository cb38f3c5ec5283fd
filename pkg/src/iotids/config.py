"""Flat ``key=value`` configuration with dotted namespaces.

Example::

    scenario.n_attackers = 3
    window.window_len_s = 0.5
    train.learning_rate = 0.1
    paths.model = out/model.txt

Later sources override earlier ones: defaults, then the file, then CLI flags.
"""

from __future__ import annotations

import dataclasses
import typing
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Mapping

from .dataset import SplitSpec
from .errors import ConfigError, IotIdsError, ParseError
from .features import WindowSpec
from .nn import TrainConfig
from .simulator import ScenarioConfig

SECTIONS = ("scenario", "window", "split", "train", "paths", "model")


def parse_kv_text(text: str, path: str | None = None) -> dict[str, str]:
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ParseError("expected 'key=value'", lineno, path)
        if key in values:
            raise ParseError(f"duplicate key {key!r}", lineno, path)
        values[key] = value
    return values


def parse_kv_file(path: Path) -> dict[str, str]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(str(path), f"cannot read config file ({exc.strerror})") from None
    return parse_kv_text(text, str(path))


def _coerce(field_name: str, tp: Any, raw: str):
    try:
        if tp in (bool, "bool"):
            low = raw.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if tp in (int, "int"):
            return int(raw)
        if tp in (float, "float"):
            return float(raw)
    except ValueError:
        raise ConfigError(field_name, f"cannot parse {raw!r} as {getattr(tp, '__name__', tp)}") from None
    return raw


def build_dataclass(cls, values: Mapping[str, str], prefix: str):
    """Instantiate ``cls`` from ``values`` keyed ``<prefix><field>``; unknown keys are errors."""
    hints = typing.get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, raw in values.items():
        if not key.startswith(prefix):
            continue
        name = key[len(prefix):]
        if name not in names:
            raise ConfigError(key, "unknown key")
        kwargs[name] = _coerce(key, hints[name], raw)
    try:
        return cls(**kwargs)
    except ConfigError as exc:
        raise ConfigError(prefix + exc.field, str(exc).split(": ", 1)[-1]) from None
    except IotIdsError as exc:
        raise ConfigError(prefix.rstrip(".") or cls.__name__, str(exc)) from None


@dataclass(frozen=True)
class Paths:
    trace: str = "artifacts/trace.csv"
    dataset: str = "artifacts/dataset.csv"
    model: str = "artifacts/model.txt"
    history: str = "artifacts/history.csv"
    report_text: str = "artifacts/report.txt"
    report_csv: str = "artifacts/report.csv"

    def __post_init__(self):
        seen: dict[str, str] = {}
        for f in dataclasses.fields(self):
            p = str(Path(getattr(self, f.name)))
            if p in seen:
                raise ConfigError(f.name, f"same path as {seen[p]}")
            seen[p] = f.name


@dataclass(frozen=True)
class ModelSpec:
    hidden_units: int = 3

    def __post_init__(self):
        if self.hidden_units < 1:
            raise ConfigError("hidden_units", "must be >= 1")


@dataclass(frozen=True)
class PipelineConfig:
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    window: WindowSpec = field(default_factory=WindowSpec)
    split: SplitSpec = field(default_factory=SplitSpec)
    train: TrainConfig = field(default_factory=TrainConfig)
    model: ModelSpec = field(default_factory=ModelSpec)
    paths: Paths = field(default_factory=Paths)

    @property
    def layer_sizes(self) -> tuple[int, int, int]:
        from .features import N_FEATURES

        return (N_FEATURES, self.model.hidden_units, 1)


_SECTION_TYPES = {
    "scenario": ScenarioConfig,
    "window": WindowSpec,
    "split": SplitSpec,
    "train": TrainConfig,
    "model": ModelSpec,
    "paths": Paths,
}


def build_config(values: Mapping[str, str], seed: int | None = None) -> PipelineConfig:
    """Assemble a :class:`PipelineConfig`; ``seed`` overrides every component seed."""
    values = dict(values)
    for key in values:
        if key.split(".", 1)[0] not in _SECTION_TYPES or "." not in key:
            raise ConfigError(key, "unknown key")
    if seed is not None:
        if seed < 0:
            raise ConfigError("seed", "must be unsigned")
        for section in ("scenario", "split", "train"):
            values[f"{section}.seed"] = str(seed)
    parts = {name: build_dataclass(cls, values, f"{name}.") for name, cls in _SECTION_TYPES.items()}
    return PipelineConfig(**parts)


def default_config_text() -> str:
    return resources.files("iotids").joinpath("default.cfg").read_text()


def load_config(path=None, overrides: Mapping[str, str] | None = None, seed: int | None = None) -> PipelineConfig:
    """Shipped defaults, overlaid with ``path`` (if given), then ``overrides``."""
    values = parse_kv_text(default_config_text(), "<default.cfg>")
    if path is not None:
        values.update(parse_kv_file(Path(path)))
    if overrides:
        values.update(overrides)
    return build_config(values, seed)


def config_to_text(cfg: PipelineConfig) -> str:
    lines = []
    for name in _SECTION_TYPES:
        part = getattr(cfg, name)
        for f in dataclasses.fields(part):
            lines.append(f"{name}.{f.name}={getattr(part, f.name)}")
    return "\n".join(lines) + "\n"
