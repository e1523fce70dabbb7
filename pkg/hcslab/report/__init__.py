"""
Writers for command outputs. Every file starts from a Manifest: CSV files carry
it as a leading "# manifest: {...}" comment line, JSON files under the
"manifest" key. Keys are sorted and non-finite numbers are refused so reruns
produce byte-identical files.
"""

import json
import logging
import math
from typing import Any, Sequence

import numpy as np

from hcslab.custom_exceptions import ConfigurationError, ToleranceError
from hcslab.validator import Manifest

logger = logging.getLogger(__name__)

FORMATS = ("csv", "json")


class NonFiniteOutputError(ToleranceError):
    pass


class OutputFormatError(ConfigurationError):
    pass


def _plain(value: Any) -> Any:
    # numpy scalars and arrays to JSON-ready python values
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if isinstance(value, (np.floating, np.integer, np.bool_)):
        return value.item()
    if isinstance(value, complex):
        return [value.real, value.imag]
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


def check_finite(value: Any, where: str = "output"):
    """
    Raise NonFiniteOutputError on the first NaN or infinity found in ``value``.
    """
    if isinstance(value, float) and not math.isfinite(value):
        raise NonFiniteOutputError(f"non-finite value {value} in {where}")
    if isinstance(value, dict):
        for key, item in value.items():
            check_finite(item, f"{where}.{key}")
    elif isinstance(value, (list, tuple)):
        for item in value:
            check_finite(item, where)


def manifest_line(manifest: Manifest) -> str:
    return "# manifest: " + json.dumps(manifest.model_dump(mode="json"), sort_keys=True)


def _cell(value: Any) -> str:
    if isinstance(value, bool) or value is None:
        return json.dumps(value)
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def format_csv(header: Sequence[str], rows: Sequence[Sequence[Any]], manifest: Manifest) -> str:
    rows = _plain(list(rows))
    check_finite(rows, "rows")
    lines = [manifest_line(manifest), ",".join(header)]
    for row in rows:
        if len(row) != len(header):
            raise OutputFormatError(f"row of {len(row)} cells under a header of {len(header)}")
        lines.append(",".join(_cell(v) for v in row))
    return "\n".join(lines) + "\n"


def format_json(payload: dict, manifest: Manifest) -> str:
    document = _plain(dict(payload))
    check_finite(document, "payload")
    document["manifest"] = manifest.model_dump(mode="json")
    return json.dumps(document, sort_keys=True, indent=4, allow_nan=False) + "\n"


def write_output(
    path: str,
    fmt: str,
    manifest: Manifest,
    header: Sequence[str] = (),
    rows: Sequence[Sequence[Any]] = (),
    payload: dict = None,
):
    """
    Write a table (CSV, or JSON with "columns" and "rows") or a report payload
    (JSON only) to ``path``.

    Parameters:
    - path (str): The output file.
    - fmt (str): "csv" or "json".
    - manifest (Manifest): Provenance of the run.
    - header, rows: The table, when the command produces one.
    - payload (dict): Extra JSON fields.
    """
    if fmt not in FORMATS:
        raise OutputFormatError(f"unknown format {fmt}")
    if fmt == "csv":
        if not header:
            raise OutputFormatError("this command writes a report; use --format json")
        text = format_csv(header, rows, manifest)
    else:
        document = dict(payload or {})
        if header:
            document["columns"] = list(header)
            document["rows"] = [list(row) for row in rows]
        text = format_json(document, manifest)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(text)
    logger.info(f"wrote {path} ({fmt})")
