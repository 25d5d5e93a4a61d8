"""Machine-readable pipeline report.

A report is plain JSON data.  Sections that were not produced are ``null``
and explained in ``null_reasons``; the same convention applies inside
sections for individual undefined numbers (see :func:`clean_numbers`).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, fields
from importlib import resources

import jsonschema

from ..errors import SerializationError

SCHEMA_VERSION = 1
SECTIONS = ("metadata", "descriptive", "correlation", "decomposition", "fits", "diagnostics", "validation", "plot_data")


def load_schema():
    return json.loads(resources.files("paynowcast.report").joinpath("report.schema.json").read_text("utf-8"))


def clean_numbers(obj, reasons=None, path="", reason="non-finite value"):
    """Replace non-finite floats with ``None``, recording ``path -> reason``."""
    if isinstance(obj, dict):
        return {k: clean_numbers(v, reasons, f"{path}.{k}" if path else str(k), reason) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean_numbers(v, reasons, f"{path}[{i}]", reason) for i, v in enumerate(obj)]
    if isinstance(obj, float) and not math.isfinite(obj):
        if reasons is not None:
            reasons[path] = f"{reason} ({obj})"
        return None
    if hasattr(obj, "item") and not isinstance(obj, (str, bytes)):
        return clean_numbers(obj.item(), reasons, path, reason)
    return obj


@dataclass
class PipelineReport:
    metadata: dict | None = None
    descriptive: dict | None = None
    correlation: dict | None = None
    decomposition: dict | None = None
    fits: dict | None = None
    diagnostics: dict | None = None
    validation: dict | None = None
    plot_data: list | None = None
    null_reasons: dict = field(default_factory=dict)
    schema_version: int = SCHEMA_VERSION

    def to_dict(self):
        out = {f.name: getattr(self, f.name) for f in fields(self)}
        reasons = {k: v for k, v in self.null_reasons.items() if not (k in SECTIONS and out[k] is not None)}
        for name in SECTIONS:
            if out[name] is None:
                reasons.setdefault(name, "stage not run")
        out["null_reasons"] = reasons
        return out

    def __eq__(self, other):
        if not isinstance(other, PipelineReport):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise SerializationError(f"unknown report keys: {sorted(unknown)}")
        return cls(**d)

    def set_null(self, section, reason):
        setattr(self, section, None)
        self.null_reasons[section] = reason


def _reject_non_finite(obj, path="$"):
    if isinstance(obj, float) and not math.isfinite(obj):
        raise SerializationError(f"non-finite number at {path}; replace it with null and a reason")
    if isinstance(obj, dict):
        for k, v in obj.items():
            if not isinstance(k, str):
                raise SerializationError(f"non-string key {k!r} at {path}")
            _reject_non_finite(v, f"{path}.{k}")
    elif isinstance(obj, (list, tuple)):
        for i, v in enumerate(obj):
            _reject_non_finite(v, f"{path}[{i}]")


def export_json(report, validate=True):
    """Serialize with sorted keys; validates against the bundled schema."""
    data = report.to_dict() if isinstance(report, PipelineReport) else dict(report)
    _reject_non_finite(data)
    if validate:
        try:
            jsonschema.validate(data, load_schema())
        except jsonschema.ValidationError as exc:
            raise SerializationError(f"report does not match schema: {exc.message}") from exc
    try:
        return json.dumps(data, sort_keys=True, indent=2, allow_nan=False, ensure_ascii=False) + "\n"
    except (TypeError, ValueError) as exc:
        raise SerializationError(str(exc)) from exc


def parse_json(text):
    """Parse and schema-validate a report produced by :func:`export_json`."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SerializationError(f"invalid JSON: {exc}") from exc
    if data.get("schema_version") != SCHEMA_VERSION:
        raise SerializationError(f"unsupported schema_version {data.get('schema_version')!r}")
    try:
        jsonschema.validate(data, load_schema())
    except jsonschema.ValidationError as exc:
        raise SerializationError(f"report does not match schema: {exc.message}") from exc
    return PipelineReport.from_dict(data)
