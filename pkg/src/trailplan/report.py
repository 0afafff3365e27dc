"""Deterministic artifact writers: CSV, JSON, logs.

All CSVs carry a header row, use '.' as the decimal separator, format floats
via shortest round-trip repr, and end with a newline. JSON is written with
sorted keys so rerunning a command reproduces files byte for byte; wall-clock
timing goes to run.log only, never into comparable artifacts.
"""

from __future__ import annotations

import json
from pathlib import Path

__all__ = ["fmt", "write_csv", "write_json", "append_log", "config_echo"]


def fmt(v) -> str:
    """Shortest round-trip text for a value; floats keep full precision."""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, (int,)):
        return str(v)
    return repr(float(v))


def write_csv(path, header: list[str], rows) -> None:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) for v in row) + "\n")


def write_json(path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, sort_keys=True, indent=2)
        fh.write("\n")


def append_log(path, text: str) -> None:
    with open(path, "a") as fh:
        fh.write(text.rstrip("\n") + "\n")


def config_echo(sc) -> dict:
    """The scenario file as parsed, for provenance in summaries."""
    return {k: (list(v) if isinstance(v, list) else v) for k, v in sc.raw.items()}
