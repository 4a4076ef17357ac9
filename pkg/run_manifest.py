#!/usr/bin/env python3
"""
Run manifests: what a CLI command was asked to do and what it wrote.

manifest.json holds the command, the full effective config (flag overrides
already applied), the seeds in play, the library version, the mask hash and
the output file names relative to the output directory. Input files named in
the config are recorded as absolute paths so a replay works from any working
directory. Keys are sorted and nothing time-dependent is recorded, so the same
run writes the same manifest.
"""

import json
import os
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional

from radar_utils import ParameterError

LIBRARY_VERSION = "1.0.0"
MANIFEST_NAME = "manifest.json"
# config keys that name input files
PATH_KEYS = ("sequences", "mask_file", "init_file", "signal_file")


@dataclass
class RunManifest:
    command: str
    config: Dict[str, Any]
    seeds: List[int] = field(default_factory=list)
    library_version: str = LIBRARY_VERSION
    mask_hash: Optional[str] = None
    outputs: List[str] = field(default_factory=list)

    def __post_init__(self):
        self.config = {key: os.path.abspath(value) if key in PATH_KEYS and isinstance(value, str) else value
                       for key, value in self.config.items()}

    def add_output(self, path: str, out_dir: str) -> str:
        rel = os.path.relpath(path, out_dir).replace(os.sep, "/")
        if rel not in self.outputs:
            self.outputs.append(rel)
        return path

    def save(self, out_dir: str) -> str:
        os.makedirs(out_dir, exist_ok=True)
        path = os.path.join(out_dir, MANIFEST_NAME)
        payload = asdict(self)
        payload["outputs"] = sorted(self.outputs)
        with open(path, "w", encoding="utf-8") as f:
            json.dump(payload, f, indent=2, sort_keys=True)
            f.write("\n")
        return path


def load_manifest(path: str) -> RunManifest:
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except ValueError as e:
        raise ParameterError(f"{path}: not valid JSON ({e})") from e
    if not isinstance(data, dict) or "command" not in data or "config" not in data:
        raise ParameterError(f"{path}: not a run manifest (needs 'command' and 'config')")
    if data.get("library_version") != LIBRARY_VERSION:
        raise ParameterError(f"{path}: written by library version {data.get('library_version')}, "
                             f"this is {LIBRARY_VERSION}")
    return RunManifest(
        command=data["command"],
        config=data["config"],
        seeds=list(data.get("seeds", [])),
        mask_hash=data.get("mask_hash"),
        outputs=list(data.get("outputs", [])),
    )
