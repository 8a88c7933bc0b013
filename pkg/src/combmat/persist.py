"""Result files and run manifests.

Every result CSV is paired with one JSON manifest. Both are named after a
hash of the command and its configuration, so a rerun with the same
configuration overwrites the same files, and the CSV carries no
timestamps or other run-specific bytes.
"""

from __future__ import annotations

import csv
import datetime as _dt
import hashlib
import io
import json
import os
import tempfile
from decimal import Decimal, localcontext
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from . import __version__
from .errors import OutputError, RangeViolation
from .experiments import LOG_CONVENTION

__all__ = [
    "format_rational",
    "format_decimal",
    "format_value",
    "write_results",
    "config_hash",
    "result_paths",
    "start_manifest",
    "finalize_manifest",
    "verify_manifest",
]

DECIMAL_PLACES = 12


def format_rational(x) -> str:
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


def format_decimal(x) -> str:
    """Fixed 12-place rounding with trailing zeros dropped: 1/3 -> 0.333333333333, 1/2 -> 0.5."""
    if isinstance(x, Fraction):
        with localcontext() as ctx:
            ctx.prec = max(50, len(str(x.numerator)) + len(str(x.denominator)) + DECIMAL_PLACES)
            value = Decimal(x.numerator) / Decimal(x.denominator)
            text = f"{value:.{DECIMAL_PLACES}f}"
    else:
        text = f"{float(x):.{DECIMAL_PLACES}f}"
    if "." in text:
        text = text.rstrip("0").rstrip(".")
    if text in ("-0", ""):
        text = "0"
    return text


def format_value(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, Fraction):
        return format_rational(x)
    if isinstance(x, float):
        return format_decimal(x)
    if x is None:
        return ""
    return str(x)


def _expand(row: Mapping, schema: Sequence[str]) -> list[str]:
    out = []
    for col in schema:
        if col in row:
            out.append(format_value(row[col]))
        elif col.endswith("_decimal") and col[: -len("_decimal")] in row:
            out.append(format_decimal(row[col[: -len("_decimal")]]))
        else:
            raise RangeViolation(f"row is missing column {col!r}")
    return out


def _check_row(row: Mapping, schema: Sequence[str]):
    extra = set(row) - set(schema)
    if extra:
        raise RangeViolation(f"row has columns outside the schema: {sorted(extra)}")


def _atomic_write(path: Path, text: str):
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
    except OSError as e:
        raise OutputError(f"cannot write {path}: {e}") from e


def write_results(rows: Iterable[Mapping], schema: Sequence[str], path) -> Path:
    """Write rows as CSV via temp file and rename.

    A column ``x_decimal`` in the schema is filled from ``x`` when the row
    does not supply it, so exact values travel in both forms.
    """
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(schema)
    for row in rows:
        _check_row(row, schema)
        writer.writerow(_expand(row, schema))
    _atomic_write(Path(path), buf.getvalue())
    return Path(path)


def _canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), default=str)


def config_hash(command: str, config: Mapping) -> str:
    return hashlib.sha256(_canonical({"command": command, "config": config}).encode()).hexdigest()


def result_paths(out_dir, command: str, config: Mapping) -> tuple[Path, Path]:
    stem = f"{command}-{config_hash(command, config)[:12]}"
    out_dir = Path(out_dir)
    return out_dir / f"{stem}.csv", out_dir / f"{stem}.manifest.json"


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def start_manifest(path, command: str, config: Mapping, results_file, master_seed=None, prime_choice=None) -> dict:
    """Write the manifest with status "running" before any trial executes."""
    manifest = {
        "command": command,
        "config": dict(config),
        "config_hash": config_hash(command, config),
        "tool_version": __version__,
        "master_seed": master_seed,
        "log_base": LOG_CONVENTION,
        "prime_choice": prime_choice,
        "results_file": Path(results_file).name,
        "results_sha256": None,
        "started_at": _now(),
        "finished_at": None,
        "status": "running",
        "summary": {},
    }
    _atomic_write(Path(path), json.dumps(manifest, indent=2, sort_keys=True, default=str) + "\n")
    return manifest


def _sha256_file(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def finalize_manifest(path, manifest: dict, status: str = "complete", summary=None) -> dict:
    manifest = dict(manifest)
    results = Path(path).parent / manifest["results_file"]
    manifest["results_sha256"] = _sha256_file(results) if results.exists() else None
    manifest["finished_at"] = _now()
    manifest["status"] = status
    manifest["summary"] = dict(summary or {})
    _atomic_write(Path(path), json.dumps(manifest, indent=2, sort_keys=True, default=str) + "\n")
    return manifest


def verify_manifest(path) -> bool:
    """True iff the stored config hash and result checksum still match."""
    manifest = json.loads(Path(path).read_text(encoding="utf-8"))
    if config_hash(manifest["command"], manifest["config"]) != manifest["config_hash"]:
        return False
    results = Path(path).parent / manifest["results_file"]
    return results.exists() and _sha256_file(results) == manifest["results_sha256"]
