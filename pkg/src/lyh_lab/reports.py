#!/usr/bin/env python3
"""Run manifests and CSV tables."""

import csv
import datetime
import logging
from importlib import metadata
from pathlib import Path
from typing import Any, Dict, List, Sequence

from pydantic import BaseModel

from .rng import RNG_ALGORITHM

logger = logging.getLogger(__name__)

PACKAGE_NAME = "lyh-lab"


def _get_version_string_from_file() -> str:
    """Get the version of the laboratory assuming a source checkout without metadata."""
    try:
        with open(".version", "r") as f:
            return f.read().strip()
    except FileNotFoundError:
        return "Unknown version"


def get_version_string() -> str:
    """Return the version of the laboratory."""
    try:
        return metadata.version(PACKAGE_NAME)
    except metadata.PackageNotFoundError:
        return _get_version_string_from_file()


class CheckRecord(BaseModel):
    """Outcome of a single assertion, one row of the oracle table."""

    check: str
    seed: int
    value: float
    tolerance: float
    passed: bool
    inconclusive: bool = False
    version: str = ""
    detail: str = ""

    def row(self) -> Dict[str, str]:
        return {
            "check": self.check,
            "seed": str(self.seed),
            "value": repr(self.value),
            "tolerance": repr(self.tolerance),
            "passed": str(self.passed).lower(),
            "version": self.version,
        }


ORACLE_FIELDS = ["check", "seed", "value", "tolerance", "passed", "version"]


class Manifest(BaseModel):
    """Provenance and outcome of a suite run."""

    suite: str
    status: str
    exit_code: int
    seed: int
    rng_algorithm: str = RNG_ALGORITHM
    version: str
    config: Dict[str, Any]
    tables: List[str] = []
    inconclusive: int = 0
    checks: List[CheckRecord] = []
    created: str | None = None


def utc_stamp() -> str:
    return datetime.datetime.now(datetime.timezone.utc).isoformat()


def write_csv(path: Path, rows: Sequence[Dict[str, Any]], fieldnames: Sequence[str], stamp: bool = False) -> Path:
    """Write rows as CSV, optionally preceded by a timestamp comment line.

    Args:
        path (Path): Destination file
        rows (Sequence[Dict[str, Any]]): Rows in output order
        fieldnames (Sequence[str]): Column order
        stamp (bool): Prefix a "# generated <time>" line

    Returns:
        Path: The written file

    """
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as f:
        if stamp:
            f.write(f"# generated {utc_stamp()}\n")
        writer = csv.DictWriter(f, fieldnames=list(fieldnames), lineterminator="\n", extrasaction="ignore")
        writer.writeheader()
        for row in rows:
            writer.writerow(row)
    logger.debug(f"Wrote {len(rows)} rows to {path}")
    return path


def write_manifest(path: Path, manifest: Manifest) -> Path:
    """Write the manifest as indented JSON."""
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(manifest.model_dump_json(indent=2) + "\n")
    return path
