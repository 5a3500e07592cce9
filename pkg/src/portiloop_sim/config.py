"""Plain-text ``key=value`` run configuration.

Keys are ``section.field`` (for example ``train.lr=5e-4``) or one of the
top-level keys in :data:`TOP_LEVEL`. Blank lines and ``#`` comments are
ignored; a comma makes a tuple. Unknown keys are rejected by name.
"""
from __future__ import annotations

from dataclasses import dataclass, field, fields
from pathlib import Path

from .detector.stream import DetectorConfig
from .exceptions import ParameterError
from .nn.network import NetworkSpec
from .nn.train import TrainConfig
from .pmbo.search import SamplerConfig
from .signal.pipeline import PipelineConfig
from .synth.generator import SyntheticConfig

__all__ = ["ConfigError", "RunConfig", "parse_value", "parse_lines", "load_config", "SECTIONS", "TOP_LEVEL"]


class ConfigError(ParameterError):
    """Malformed or unknown configuration entry."""


SECTIONS = {
    "synth": SyntheticConfig,
    "pipeline": PipelineConfig,
    "net": NetworkSpec,
    "train": TrainConfig,
    "detector": DetectorConfig,
    "sampler": SamplerConfig,
}
SECTION_EXTRAS = {
    "synth": {"n_subjects": 20, "phase2_fraction": 0.4},
    "protocol": {"n_shuffles": 10, "n_models": 3},
}
TOP_LEVEL = {"seed", "out", "data", "input", "weights", "threshold", "workers", "budget", "objective",
             "chunk_size", "thresholds"}


def parse_value(text: str):
    """``"3"`` -> 3, ``"0.5"`` -> 0.5, ``"true"`` -> True, ``"none"`` -> None, ``"a,b"`` -> tuple."""
    text = text.strip()
    if "," in text:
        return tuple(parse_value(part) for part in text.split(",") if part.strip())
    low = text.lower()
    if low in ("true", "false"):
        return low == "true"
    if low in ("none", "null"):
        return None
    for kind in (int, float):
        try:
            return kind(text)
        except ValueError:
            pass
    return text


def _allowed(section: str) -> dict:
    out = {}
    if section in SECTIONS:
        out.update({f.name: f for f in fields(SECTIONS[section])})
    out.update(SECTION_EXTRAS.get(section, {}))
    return out


def _coerce(section: str, name: str, value):
    cls = SECTIONS.get(section)
    default = None
    if cls is not None and name in {f.name for f in fields(cls)}:
        default = getattr(cls(), name)
    elif name in SECTION_EXTRAS.get(section, {}):
        default = SECTION_EXTRAS[section][name]
    if isinstance(default, float) and isinstance(value, int) and not isinstance(value, bool):
        return float(value)
    if isinstance(default, tuple) and isinstance(value, tuple):
        return tuple(float(v) if isinstance(d, float) else v for v, d in zip(value, default))
    return value


@dataclass
class RunConfig:
    """Resolved settings for one command; sections hold overrides only."""

    command: str = ""
    sections: dict = field(default_factory=dict)
    top: dict = field(default_factory=dict)

    def set(self, key: str, value) -> None:
        if "." not in key:
            if key not in TOP_LEVEL:
                raise ConfigError(f"unknown config key {key!r}")
            self.top[key] = value
            return
        section, name = key.split(".", 1)
        if section not in SECTIONS and section not in SECTION_EXTRAS:
            raise ConfigError(f"unknown config key {key!r} (no section {section!r})")
        if name not in _allowed(section):
            raise ConfigError(f"unknown config key {key!r}")
        self.sections.setdefault(section, {})[name] = _coerce(section, name, value)

    def get(self, key: str, default=None):
        if "." not in key:
            return self.top.get(key, default)
        section, name = key.split(".", 1)
        if name in self.sections.get(section, {}):
            return self.sections[section][name]
        return SECTION_EXTRAS.get(section, {}).get(name, default)

    def build(self, section: str, **forced):
        """Instantiate a section's dataclass from its overrides plus ``forced`` values."""
        cls = SECTIONS[section]
        own = {k: v for k, v in self.sections.get(section, {}).items() if k in {f.name for f in fields(cls)}}
        try:
            return cls(**{**own, **forced})
        except TypeError as exc:
            raise ConfigError(f"bad value in section {section!r}: {exc}") from exc

    def resolved(self) -> dict:
        """Every setting this run uses, defaults included, for report echoes."""
        out = {"command": self.command, **self.top}
        for section, cls in SECTIONS.items():
            obj = self.build(section)
            out[section] = obj.to_dict() if hasattr(obj, "to_dict") else {}
        for section, extras in SECTION_EXTRAS.items():
            out.setdefault(section, {})
            out[section].update({k: self.get(f"{section}.{k}") for k in extras})
        return out


def parse_lines(lines, config: RunConfig | None = None, source: str = "<config>") -> RunConfig:
    config = config or RunConfig()
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected key=value, got {raw.strip()!r}")
        key, value = line.split("=", 1)
        config.set(key.strip(), parse_value(value))
    return config


def load_config(path, config: RunConfig | None = None) -> RunConfig:
    path = Path(path)
    return parse_lines(path.read_text(encoding="utf-8").splitlines(), config, str(path))
