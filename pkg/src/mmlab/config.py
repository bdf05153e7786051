"""Flat ``key = value`` run configuration.

One file carries every :class:`ModelParams`, :class:`ActionGrid` and
:class:`TrainConfig` field. ``#`` starts a comment, blank lines are ignored,
unknown keys and duplicated keys are rejected. Omitted keys keep their
defaults.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

from .agents import ActionGrid
from .env import ModelParams
from .errors import ConfigError
from .training import TrainConfig

_SECTIONS = {"params": ModelParams, "grid": ActionGrid, "train": TrainConfig}
_OPTIONAL_INT = {"epsilon_decay_episodes", "network_seed"}


def _field_owner() -> dict[str, tuple[str, dataclasses.Field]]:
    owner = {}
    for section, cls in _SECTIONS.items():
        for f in dataclasses.fields(cls):
            owner[f.name] = (section, f)
    return owner


_OWNER = _field_owner()


@dataclass
class RunConfig:
    params: ModelParams = field(default_factory=ModelParams)
    grid: ActionGrid = field(default_factory=ActionGrid)
    train: TrainConfig = field(default_factory=TrainConfig)

    def with_overrides(self, **values) -> "RunConfig":
        """Copy with the given flat keys replaced (``None`` values are skipped)."""
        return _build(self, {k: v for k, v in values.items() if v is not None})

    def to_text(self) -> str:
        lines = []
        for section in _SECTIONS:
            obj = getattr(self, section)
            lines.append(f"# {section}")
            for f in dataclasses.fields(obj):
                value = getattr(obj, f.name)
                lines.append(f"{f.name} = {'none' if value is None else value}")
            lines.append("")
        return "\n".join(lines)


def _coerce(name: str, raw: str, default):
    text = raw.strip()
    if name in _OPTIONAL_INT and text.lower() == "none":
        return None
    try:
        if isinstance(default, bool):
            raise ConfigError(f"{name}: boolean keys are not supported")
        if isinstance(default, int) or name in _OPTIONAL_INT:
            return int(text)
        if isinstance(default, float):
            return float(text)
    except ValueError:
        raise ConfigError(f"{name}: cannot parse {raw!r}") from None
    return text


def _build(base: RunConfig, values: dict) -> RunConfig:
    grouped = {s: {} for s in _SECTIONS}
    for key, value in values.items():
        if key not in _OWNER:
            raise ConfigError(f"unknown config key {key!r}")
        section, _ = _OWNER[key]
        grouped[section][key] = value
    try:
        return RunConfig(
            **{s: dataclasses.replace(getattr(base, s), **grouped[s]) for s in _SECTIONS}
        )
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    base = RunConfig()
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {line!r}")
        key, raw = (part.strip() for part in line.split("=", 1))
        if key not in _OWNER:
            raise ConfigError(f"{source}:{lineno}: unknown config key {key!r}")
        if key in values:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        section, f = _OWNER[key]
        values[key] = _coerce(key, raw, getattr(getattr(base, section), f.name))
    return _build(base, values)


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc.strerror or exc}") from None
    return parse_config(text, str(path))
