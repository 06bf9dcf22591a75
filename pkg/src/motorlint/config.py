"""Tool configuration: every detector threshold in one flat ``key = value`` file.

Example::

    # motorlint.conf
    touch_target_min = 44
    lexicon_extra = words.txt

Blank lines and ``#`` comments are ignored. Unknown keys are an error so a
typo never silently falls back to a default. Relative paths are resolved
against the config file's directory.
"""
from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass, fields
from pathlib import Path

from .errors import ConfigError

#: Environment variable naming a config file when ``--config`` is not given.
CONFIG_ENV = "MOTORLINT_CONFIG"

_TEXT_EXTRACTORS = ("none",)


@dataclass(frozen=True)
class ToolConfig:
    touch_target_min: int = 48
    icon_gap_min: float = 8.0
    crop_pad: int = 15
    similarity_min: float = 0.95
    location_tolerance: int = 2
    section_area_min: float = 0.10
    section_area_max: float = 0.95
    ncc_min: float = 0.80
    nms_iou: float = 0.3
    foreground_tolerance: int = 24
    min_component_area: int = 4
    lexicon_extra: str | None = None
    templates_dir: str | None = None
    text_extractor: str = "none"
    seed: int = 0

    def __post_init__(self):
        for name in ("touch_target_min", "icon_gap_min", "crop_pad", "similarity_min",
                     "section_area_min", "section_area_max", "ncc_min", "nms_iou",
                     "foreground_tolerance", "min_component_area"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)!r}")
        if self.location_tolerance < 0:
            raise ConfigError("location_tolerance must be non-negative")
        if not self.section_area_min < self.section_area_max <= 1.0:
            raise ConfigError("need section_area_min < section_area_max <= 1")
        for name in ("similarity_min", "ncc_min", "nms_iou"):
            if getattr(self, name) > 1.0:
                raise ConfigError(f"{name} must not exceed 1")
        if self.text_extractor not in _TEXT_EXTRACTORS:
            raise ConfigError(f"unknown text_extractor {self.text_extractor!r}; "
                              f"available: {', '.join(_TEXT_EXTRACTORS)}")

    def replace(self, **changes) -> ToolConfig:
        return dataclasses.replace(self, **changes)

    def dumps(self) -> str:
        lines = []
        for f in fields(self):
            value = getattr(self, f.name)
            lines.append(f"{f.name} = {'' if value is None else value}")
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str, base_dir: str | os.PathLike | None = None) -> ToolConfig:
        types = {f.name: f.type for f in fields(cls)}
        values = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = (part.strip() for part in line.partition("="))
            if not sep:
                raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
            if key not in types:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
            if key in values:
                raise ConfigError(f"line {lineno}: duplicate key {key!r}")
            values[key] = _convert(key, types[key], value, base_dir, lineno)
        return cls(**values)

    @classmethod
    def load(cls, path: str | os.PathLike) -> ToolConfig:
        p = Path(path)
        try:
            text = p.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {p}: {exc}") from exc
        return cls.loads(text, p.parent)


def _convert(key: str, typ: str, value: str, base_dir, lineno: int):
    try:
        if typ == "int":
            return int(value)
        if typ == "float":
            return float(value)
    except ValueError:
        raise ConfigError(f"line {lineno}: {key} expects a number, got {value!r}") from None
    if typ == "str | None":
        if not value:
            return None
        if base_dir is not None and not os.path.isabs(value):
            return str(Path(base_dir) / value)
        return value
    return value


def resolve_config(path: str | os.PathLike | None = None) -> ToolConfig:
    """Config from ``path``, else from ``$MOTORLINT_CONFIG``, else the defaults."""
    path = path or os.environ.get(CONFIG_ENV) or None
    return ToolConfig.load(path) if path else ToolConfig()


__all__ = ["CONFIG_ENV", "ToolConfig", "resolve_config"]
