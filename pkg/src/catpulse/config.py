"""Run configuration: JSON document, schema validation and typed view.

A user document is validated against the shipped schema (unknown keys are
rejected), then deep-merged onto the shipped defaults.
"""
from __future__ import annotations

import copy
import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import jsonschema

from .decoherence import BathParams
from .errors import ConfigError
from .model import DeviceParams, PulseSpec


def _data(name: str) -> dict:
    return json.loads(resources.files("catpulse").joinpath("data", name).read_text())


def schema() -> dict:
    return _data("config.schema.json")


def default_document() -> dict:
    return _data("default_config.json")


def deep_merge(base: dict, update: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in update.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = deep_merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def _locate(text: str, path) -> int | None:
    """Best-effort 1-based line of the JSON key path in ``text``."""
    pos = 0
    line = None
    for part in path:
        if isinstance(part, int):
            continue
        idx = text.find(f'"{part}"', pos)
        if idx < 0:
            break
        pos = idx
        line = text.count("\n", 0, idx) + 1
    return line


def validate(doc: dict, text: str | None = None, source: str = "<config>") -> None:
    validator = jsonschema.Draft202012Validator(schema())
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if not errors:
        return
    lines = []
    for err in errors:
        where = "/".join(str(p) for p in err.absolute_path) or "<root>"
        line = _locate(text, err.absolute_path) if text else None
        loc = f"{source}:{line}" if line else source
        lines.append(f"{loc}: {where}: {err.message}")
    raise ConfigError("\n".join(lines))


def parse_document(text: str, source: str = "<config>") -> dict:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"{source}:1: top level must be a JSON object")
    validate(doc, text, source)
    return doc


def _complex(value) -> complex:
    if isinstance(value, (list, tuple)):
        return complex(value[0], value[1])
    return complex(value)


@dataclass(frozen=True)
class RunConfig:
    """Typed view of a merged configuration document."""

    doc: dict
    device: DeviceParams
    pulse: PulseSpec
    bath: BathParams
    alpha: complex
    seed: int
    backend: str | None

    @classmethod
    def from_document(cls, doc: dict) -> "RunConfig":
        try:
            device = DeviceParams(**doc["device"])
            pulse = PulseSpec(**doc["pulse"])
            bath = BathParams.from_device(device, **doc["bath"])
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None
        return cls(doc, device, pulse, bath, _complex(doc["alpha"]), int(doc["seed"]),
                   doc.get("backend"))

    def section(self, name: str) -> dict:
        return self.doc[name]

    @property
    def exact_alpha(self) -> complex:
        return _complex(self.doc["exact_compare"]["alpha"])

    def with_overrides(self, overrides: dict) -> "RunConfig":
        merged = deep_merge(self.doc, overrides)
        validate(merged, source="<overrides>")
        return RunConfig.from_document(merged)


def load_config(path: str | Path | None = None, overrides: dict | None = None) -> RunConfig:
    """Defaults, then the JSON file at ``path``, then ``overrides``."""
    doc = default_document()
    if path is not None:
        path = Path(path)
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigError(f"{path}: cannot read config: {exc.strerror}") from None
        doc = deep_merge(doc, parse_document(text, str(path)))
    if overrides:
        doc = deep_merge(doc, overrides)
    validate(doc, source="<merged>")
    return RunConfig.from_document(doc)
