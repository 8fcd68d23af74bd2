"""Reproducible run plumbing: config parsing, atomic outputs, manifests.

Every command writes its data files atomically (temp file + rename), records
a manifest with the content hashes of all inputs and outputs, the seed and
the tool version, and keeps timestamps out of the data files so reruns are
byte-identical.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
import sys
import tempfile
import time
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import __version__
from .errors import ConfigError


def load_config(path: str | os.PathLike) -> dict:
    """Parse a JSON or TOML config file by extension."""
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {p}")
    try:
        if p.suffix.lower() == ".toml":
            with open(p, "rb") as fh:
                return tomllib.load(fh)
        with open(p) as fh:
            return json.load(fh)
    except (json.JSONDecodeError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"cannot parse {p}: {exc}") from exc


def sha256_file(path: str | os.PathLike) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def atomic_write_text(path: str | os.PathLike, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path: str | os.PathLike, payload) -> None:
    atomic_write_text(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def write_csv(path: str | os.PathLike, fieldnames: list[str], rows: list[dict]) -> None:
    """Canonical CSV output: fixed column order, repr-formatted floats, no
    timestamps - rerunning a command reproduces the bytes."""
    buf = []
    buf.append(",".join(fieldnames))
    for row in rows:
        cells = []
        for name in fieldnames:
            v = row.get(name, "")
            # plain-float repr also normalizes numpy scalars
            cells.append(repr(float(v)) if isinstance(v, float) else str(v))
        buf.append(",".join(cells))
    atomic_write_text(path, "\n".join(buf) + "\n")


def read_csv(path: str | os.PathLike) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def child_seed(seed: int, *labels) -> int:
    """Documented per-module seed derivation: hash of the top-level seed and
    a label path, folded to 63 bits."""
    text = ":".join([str(seed), *map(str, labels)])
    return int.from_bytes(hashlib.sha256(text.encode()).digest()[:8], "big") >> 1


def worker_count() -> int:
    """Worker cap from KANEDGE_THREADS (default: single worker)."""
    raw = os.environ.get("KANEDGE_THREADS", "")
    if not raw:
        return 1
    try:
        return max(1, int(raw))
    except ValueError as exc:
        raise ConfigError(f"KANEDGE_THREADS must be an integer, got {raw!r}") from exc


def write_manifest(
    out_dir: str | os.PathLike,
    command: str,
    seed: int,
    inputs: dict,
    outputs: list,
    details: dict | None = None,
) -> None:
    """Record input/output hashes, seed and version; the manifest is the one
    artifact allowed to carry a timestamp."""
    out_dir = Path(out_dir)
    payload = {
        "tool_version": __version__,
        "command": command,
        "seed": seed,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        "inputs": {str(k): sha256_file(v) for k, v in inputs.items() if Path(v).exists()},
        "outputs": {Path(p).name: sha256_file(p) for p in outputs},
    }
    if details:
        payload["details"] = details
    write_json(out_dir / "manifest.json", payload)
