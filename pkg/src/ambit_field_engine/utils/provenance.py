import csv
import hashlib
import json
import logging
import subprocess
from datetime import UTC, datetime
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path
from typing import Any, Iterable, Sequence

logger = logging.getLogger(__name__)

DISTRIBUTION_NAME = "ambit-field-engine"


def package_version() -> str:
    try:
        return version(DISTRIBUTION_NAME)
    except PackageNotFoundError:
        return "0+unknown"


def git_describe() -> str | None:
    """Return ``git describe --always --dirty`` for the working tree, if there is one."""
    try:
        output = subprocess.check_output(
            ["git", "describe", "--always", "--dirty"],
            text=True,
            stderr=subprocess.DEVNULL,
        )
        return output.strip() or None
    except (subprocess.CalledProcessError, FileNotFoundError, OSError):
        return None


def version_string() -> str:
    """Package version, suffixed with the git description when available."""
    described = git_describe()
    if described:
        return f"{package_version()}+git.{described}"
    return package_version()


def canonical_json(payload: Any) -> str:
    return json.dumps(payload, sort_keys=True, separators=(",", ":"), default=_json_default)


def sha256_hex(payload: Any) -> str:
    text = payload if isinstance(payload, str) else canonical_json(payload)
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _json_default(value: Any):
    # numpy scalars and arrays end up in reports
    if hasattr(value, "tolist"):
        return value.tolist()
    if hasattr(value, "to_dict"):
        return value.to_dict()
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


def provenance_line(config_hash: str, version: str) -> str:
    return f"# config_sha256={config_hash} version={version}"


def write_csv(
    path: Path | str,
    header: Sequence[str],
    rows: Iterable[Sequence[Any]],
    provenance: str,
) -> Path:
    """Write a CSV file whose first line is the provenance comment."""
    _path = Path(path)
    _path.parent.mkdir(parents=True, exist_ok=True)
    with _path.open("w", newline="", encoding="utf-8") as handle:
        handle.write(provenance + "\n")
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_format_cell(value) for value in row])
    logger.info(f"Wrote {_path}")
    return _path


def _format_cell(value: Any) -> Any:
    if hasattr(value, "item"):
        value = value.item()
    if isinstance(value, float):
        return repr(value)
    return value


def write_json(path: Path | str, payload: Any, config_hash: str, version: str) -> Path:
    """Write a JSON report; provenance is embedded under ``"provenance"``."""
    _path = Path(path)
    _path.parent.mkdir(parents=True, exist_ok=True)
    document = {"provenance": {"config_sha256": config_hash, "version": version}, **payload}
    _path.write_text(
        json.dumps(document, indent=2, sort_keys=True, default=_json_default) + "\n",
        encoding="utf-8",
    )
    logger.info(f"Wrote {_path}")
    return _path


def write_metadata(path: Path | str, argv: Sequence[str], config_hash: str, version: str) -> Path:
    """Timestamps live here so that every other output is byte-reproducible."""
    _path = Path(path)
    _path.parent.mkdir(parents=True, exist_ok=True)
    document = {
        "argv": list(argv),
        "config_sha256": config_hash,
        "version": version,
        "finished_at": datetime.now(UTC).isoformat(),
    }
    _path.write_text(json.dumps(document, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return _path
