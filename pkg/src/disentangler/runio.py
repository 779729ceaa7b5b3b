"""Output files: CSV tables, run manifests, trace logs."""
from __future__ import annotations

import csv
import json
import os
import platform
import time
from pathlib import Path

from . import __version__, kernels

MANIFEST = "manifest.json"


class OutputExistsError(FileExistsError):
    pass


def write_csv(path, rows, columns):
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns, extrasaction="ignore", lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _fmt(row.get(k, "")) for k in columns})


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    if v is None:
        return ""
    return v


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


class RunManifest:
    """Written before any long computation and finalized on exit."""

    def __init__(self, out_dir, command, config, seed, argv=None, force=False):
        self.dir = Path(out_dir)
        self.path = self.dir / MANIFEST
        if self.path.exists() and not force:
            raise OutputExistsError(f"{self.path} exists; pass --force to overwrite")
        self.dir.mkdir(parents=True, exist_ok=True)
        self.doc = {
            "command": command,
            "argv": list(argv or []),
            "config": config,
            "seed": seed,
            "code_version": __version__,
            "kernel_backend": kernels.BACKEND,
            "python": platform.python_version(),
            "outputs": [],
            "started": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
            "finished": None,
            "status": "running",
        }
        self.save()

    def output(self, name) -> Path:
        if name not in self.doc["outputs"]:
            self.doc["outputs"].append(name)
        return self.dir / name

    def save(self):
        tmp = self.path.with_suffix(".tmp")
        tmp.write_text(json.dumps(self.doc, indent=2, default=str))
        os.replace(tmp, self.path)

    def finish(self, status="ok", **extra):
        missing = [n for n in self.doc["outputs"] if not (self.dir / n).exists()]
        if missing and status == "ok":
            status = "error"
            extra["missing_outputs"] = missing
        self.doc.update(extra)
        self.doc["status"] = status
        self.doc["finished"] = time.strftime("%Y-%m-%dT%H:%M:%S%z")
        self.save()
        return status == "ok"
