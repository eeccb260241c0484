"""Deterministic JSON/CSV artifact writing with embedded provenance."""
from __future__ import annotations

import hashlib
import json
import math
from json import encoder as _enc
from pathlib import Path

import numpy as np

__all__ = ["TOOL_NAME", "tool_version", "canonical", "config_hash", "metadata",
           "header_lines", "dumps", "write_json", "write_text"]

TOOL_NAME = "ionlgt"


def tool_version():
    from . import __version__
    return __version__


def canonical(obj):
    """Plain-Python copy of ``obj`` (numpy scalars and arrays converted)."""
    if isinstance(obj, dict):
        return {str(k): canonical(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [canonical(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return canonical(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, Path):
        return str(obj)
    return obj


def _float17(x):
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    return format(x, ".17g")


class _Encoder(json.JSONEncoder):
    # pure-Python encoder path with floats pinned to 17 significant digits
    def iterencode(self, o, _one_shot=False):
        markers = {} if self.check_circular else None
        it = _enc._make_iterencode(
            markers, self.default, _enc.py_encode_basestring, self.indent, _float17,
            self.key_separator, self.item_separator, self.sort_keys, self.skipkeys, _one_shot)
        return it(o, 0)


def dumps(obj):
    return json.dumps(canonical(obj), cls=_Encoder, indent=2, sort_keys=True) + "\n"


def config_hash(cfg):
    """First 16 hex digits of the SHA-256 of the canonical config JSON."""
    return hashlib.sha256(dumps(cfg).encode()).hexdigest()[:16]


def metadata(cfg, seed=None):
    return {"tool": TOOL_NAME, "version": tool_version(), "config_hash": config_hash(cfg),
            "seed": seed}


def header_lines(meta):
    return [f"{k}: {meta[k]}" for k in ("tool", "version", "config_hash", "seed")]


def write_json(path, payload, meta):
    doc = dict(canonical(payload))
    doc["metadata"] = meta
    Path(path).write_text(dumps(doc))
    return Path(path)


def write_text(path, text, meta=None):
    if meta is not None:
        text = "".join(f"# {line}\n" for line in header_lines(meta)) + text
    Path(path).write_text(text)
    return Path(path)
