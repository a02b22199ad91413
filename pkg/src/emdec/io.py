"""CSV and manifest writers: atomic, byte-reproducible output files.

Floats are written with repr (shortest round-trip form) so identical runs
produce identical bytes; every file is written to a temp name and renamed.
"""

from __future__ import annotations

import hashlib
import os
import time

import numpy as np


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if isinstance(x, np.integer):
        return str(int(x))
    return str(x)


def write_csv(path: str, header: list[str], rows) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(x) for x in row) + "\n")
    os.replace(tmp, path)


def write_snapshot(path: str, form: str, degree: int, t: float, values) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w", newline="\n") as fh:
        fh.write(f"# form={form},degree={degree},time={_fmt(float(t))}\n")
        fh.write("cell_index,value\n")
        for i, v in enumerate(values):
            fh.write(f"{i},{_fmt(float(v))}\n")
    os.replace(tmp, path)


def write_manifest(path: str, entries: dict, config_text: str) -> None:
    """Manifest with the volatile timestamp isolated on the last line."""
    digest = hashlib.sha256(config_text.encode()).hexdigest()
    tmp = path + ".tmp"
    with open(tmp, "w", newline="\n") as fh:
        fh.write(f"config_sha256: {digest}\n")
        for key, value in entries.items():
            fh.write(f"{key}: {_fmt(value)}\n")
        fh.write(f"timestamp: {time.strftime('%Y-%m-%dT%H:%M:%SZ', time.gmtime())}\n")
    os.replace(tmp, path)


def read_csv(path: str) -> tuple[list[str], list[list[float]]]:
    """Minimal CSV reader for the spectrum subcommand (skips # comments)."""
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip() and not ln.startswith("#")]
    header = lines[0].split(",")
    rows = [[float(x) for x in ln.split(",")] for ln in lines[1:]]
    return header, rows
