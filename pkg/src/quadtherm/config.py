"""JSON config loading, schema versioning, and atomic output writes."""

import hashlib
import json
import os
import tempfile
from importlib import resources
from pathlib import Path

SUPPORTED_SCHEMA_VERSIONS = (1,)


class ConfigError(ValueError):
    """A configuration file failed to parse or validate."""


def resolve_path(path, base=None):
    """Resolve ``builtin:<name>`` to a shipped data file, else a filesystem path."""
    p = str(path)
    if p.startswith("builtin:"):
        return Path(str(resources.files("quadtherm") / "data" / f"{p[len('builtin:'):]}.json"))
    p = Path(p)
    if base is not None and not p.is_absolute():
        p = Path(base) / p
    return p


def read_bytes(path):
    p = resolve_path(path)
    try:
        return p.read_bytes()
    except OSError as exc:
        raise ConfigError(f"{p}: cannot read ({exc.strerror})") from None


def read_json(path):
    p = resolve_path(path)
    raw = read_bytes(p)
    try:
        return json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{p}: malformed JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from None


def check_schema(data, what):
    if not isinstance(data, dict):
        raise ConfigError(f"{what}: top level must be an object")
    version = data.get("schema_version")
    if version not in SUPPORTED_SCHEMA_VERSIONS:
        raise ConfigError(
            f"{what}: field 'schema_version' is {version!r}; supported: {list(SUPPORTED_SCHEMA_VERSIONS)}"
        )


def digest(*blobs):
    h = hashlib.sha256()
    for b in blobs:
        h.update(len(b).to_bytes(8, "little"))
        h.update(b)
    return h.hexdigest()


def atomic_write_text(path, text):
    """Write via a temp file in the same directory and rename it into place."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
