"""Run manifests: every CLI run records what produced its outputs.

The manifest has two parts: ``determinism_key`` (subcommand, full config,
seed, input hashes, tool version) which two runs must share to be expected
to produce byte-identical outputs, and ``run_info`` (timestamps) which is
informational only.
"""

from __future__ import annotations

import hashlib
import json
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Mapping

from . import __version__

__all__ = ["hash_tree", "write_manifest", "read_manifest", "determinism_key"]


def _hash_file(path: Path) -> str:
    digest = hashlib.sha256()
    with path.open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def hash_tree(path: Path | str) -> str:
    """Stable digest of a file, or of a directory's relative paths+contents.

    Run manifests inside the tree are skipped: they carry timestamps and
    describe runs, they are not data.
    """
    path = Path(path)
    if path.is_file():
        return _hash_file(path)
    digest = hashlib.sha256()
    for p in sorted(path.rglob("*")):
        if p.is_file() and p.name != "run_manifest.json":
            digest.update(str(p.relative_to(path)).encode())
            digest.update(bytes.fromhex(_hash_file(p)))
    return digest.hexdigest()


def determinism_key(
    subcommand: str,
    config: Mapping[str, Any],
    seed: int | None,
    inputs: Mapping[str, Path | str],
) -> dict:
    return {
        "subcommand": subcommand,
        "config": dict(sorted(config.items())),
        "seed": seed,
        "input_hashes": {name: hash_tree(p) for name, p in sorted(inputs.items())},
        "tool_version": __version__,
    }


def write_manifest(
    out_dir: Path,
    subcommand: str,
    config: Mapping[str, Any],
    seed: int | None,
    inputs: Mapping[str, Path | str],
) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    doc = {
        "determinism_key": determinism_key(subcommand, config, seed, inputs),
        "run_info": {"started_utc": datetime.now(timezone.utc).isoformat()},
    }
    path = out_dir / "run_manifest.json"
    path.write_text(json.dumps(doc, indent=1, sort_keys=True))
    return path


def read_manifest(path: Path | str) -> dict:
    return json.loads(Path(path).read_text())
