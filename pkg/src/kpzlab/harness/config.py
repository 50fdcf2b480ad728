"""Flat ``key = value`` configuration files.

Precedence, lowest first: experiment defaults, tier overrides, config file,
command-line flags.  Blank lines and ``#`` comments are ignored.
"""

import hashlib
import json
import os

from ..errors import DomainError

OUT_ENV = "KPZLAB_OUT"
DEFAULT_OUT = "out"
RUN_KEYS = ("seed", "workers")


def read_config(path):
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise DomainError(f"{path}:{lineno}: expected key = value, got {raw.strip()!r}")
            key, value = (s.strip() for s in line.split("=", 1))
            if not key:
                raise DomainError(f"{path}:{lineno}: empty key")
            if key in out:
                raise DomainError(f"{path}:{lineno}: duplicate key {key!r}")
            out[key] = value
    return out


def _coerce(key, text, like):
    if not isinstance(text, str):
        return text
    try:
        if isinstance(like, bool):
            if text.lower() not in ("true", "false", "1", "0"):
                raise ValueError(text)
            return text.lower() in ("true", "1")
        if isinstance(like, int):
            return int(float(text)) if float(text).is_integer() else int(text)
        if isinstance(like, float):
            return float(text)
        if isinstance(like, tuple):
            parts = [p.strip() for p in text.split(",") if p.strip()]
            kind = type(like[0]) if like else float
            return tuple(kind(p) for p in parts)
    except ValueError as exc:
        raise DomainError(f"bad value for {key!r}: {text!r}") from exc
    return text


def resolve(defaults, *layers):
    """Merge layers over ``defaults``; unknown keys are rejected and string
    values are converted to the type of the default."""
    params = dict(defaults)
    for layer in layers:
        for key, value in (layer or {}).items():
            if key not in defaults:
                raise DomainError(f"unknown parameter {key!r}; known: {', '.join(sorted(defaults))}")
            params[key] = _coerce(key, value, defaults[key])
    return params


def split_run_keys(cfg):
    """Separate seed and worker settings from experiment parameters."""
    cfg = dict(cfg or {})
    run = {k: cfg.pop(k) for k in RUN_KEYS if k in cfg}
    return run, cfg


def output_dir(flag=None):
    return flag or os.environ.get(OUT_ENV) or DEFAULT_OUT


def config_hash(obj):
    blob = json.dumps(obj, sort_keys=True, default=list).encode()
    return hashlib.sha256(blob).hexdigest()
