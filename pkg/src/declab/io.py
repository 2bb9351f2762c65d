"""Text serialization of instances, DEC values and run results.

Instances are stored as a single JSON document.  Floats are written with
``repr`` precision by the standard library, so a save/load round trip
reproduces every kernel entry bit for bit.  Tables are comma-separated with a
fixed header, or JSON lines.  Every write goes to a temporary file in the
target directory followed by an atomic rename.
"""

from __future__ import annotations

import csv
import io as _io
import json
import math
import os
import tempfile
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .dec import DecProfile, DecValue
from .models import FiniteModel, ModelClass

FORMAT_TAG = "declab-instance"
FORMAT_VERSION = 1
TABLE_FORMATS = ("csv", "json-lines")


class ParseError(ValueError):
    """Raised for malformed instance documents."""


def atomic_write_text(path: str | os.PathLike, text: str) -> None:
    """Write ``text`` to ``path`` through a temporary file and a rename."""
    path = Path(path)
    directory = path.parent if str(path.parent) else Path(".")
    directory.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# ---------------------------------------------------------------------------
# Instances
# ---------------------------------------------------------------------------


def class_to_dict(model_class: ModelClass) -> dict:
    return {
        "format": FORMAT_TAG,
        "version": FORMAT_VERSION,
        "decisions": model_class.decision_count,
        "reward_support": [float(r) for r in model_class.reward_support],
        "obs_count": model_class.obs_count,
        "models": [
            {"label": label, "kernel": model.kernel.tolist()}
            for label, model in zip(model_class.labels, model_class.models)
        ],
    }


def dumps_class(model_class: ModelClass) -> str:
    return json.dumps(class_to_dict(model_class), indent=1) + "\n"


def class_from_dict(doc: Mapping) -> ModelClass:
    if doc.get("format") != FORMAT_TAG:
        raise ParseError(f"not a {FORMAT_TAG} document")
    if doc.get("version") != FORMAT_VERSION:
        raise ParseError(f"unsupported version {doc.get('version')!r}")
    try:
        support = tuple(float(r) for r in doc["reward_support"])
        obs = int(doc["obs_count"])
        models, labels = [], []
        for entry in doc["models"]:
            kernel = np.array(entry["kernel"], dtype=float)
            models.append(FiniteModel(support, obs, kernel))
            labels.append(str(entry["label"]))
    except (KeyError, TypeError) as exc:
        raise ParseError(f"missing or malformed field: {exc}") from exc
    except ValueError as exc:
        raise ParseError(str(exc)) from exc
    if not models:
        raise ParseError("instance has no models")
    out = ModelClass(tuple(models), tuple(labels))
    if out.decision_count != int(doc.get("decisions", out.decision_count)):
        raise ParseError("declared decision count does not match the kernels")
    return out


def loads_class(text: str) -> ModelClass:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from exc
    return class_from_dict(doc)


def save_class(model_class: ModelClass, path: str | os.PathLike) -> None:
    atomic_write_text(path, dumps_class(model_class))


def load_class(path: str | os.PathLike) -> ModelClass:
    return loads_class(Path(path).read_text(encoding="utf-8"))


def dumps_model(model: FiniteModel, label: str = "model") -> str:
    return dumps_class(ModelClass((model,), (label,)))


def loads_model(text: str) -> FiniteModel:
    return loads_class(text)[0]


# ---------------------------------------------------------------------------
# Tables
# ---------------------------------------------------------------------------


def _cell(value) -> str | float | int | None:
    if isinstance(value, (np.floating, float)):
        return float(value)
    if isinstance(value, (np.integer, int, bool)):
        return int(value) if not isinstance(value, bool) else value
    return value


def format_table(header: Sequence[str], rows: Iterable[Sequence], fmt: str = "csv") -> str:
    """Render rows as CSV (with header) or JSON lines (one object per row)."""
    if fmt not in TABLE_FORMATS:
        raise ValueError(f"unknown table format {fmt!r}")
    rows = [[_cell(v) for v in row] for row in rows]
    if fmt == "csv":
        buf = _io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(v) if isinstance(v, float) else v for v in row])
        return buf.getvalue()
    return "".join(json.dumps(dict(zip(header, row))) + "\n" for row in rows)


def write_table(path: str | os.PathLike, header: Sequence[str], rows: Iterable[Sequence], fmt: str = "csv") -> None:
    atomic_write_text(path, format_table(header, rows, fmt))


def read_table(text: str, fmt: str = "csv") -> tuple[list[str], list[list[str]]]:
    """Parse a table written by :func:`format_table` (cells come back as strings)."""
    if fmt == "csv":
        reader = list(csv.reader(_io.StringIO(text)))
        return reader[0], reader[1:]
    objs = [json.loads(line) for line in text.splitlines() if line.strip()]
    header = list(objs[0].keys()) if objs else []
    return header, [[str(o[h]) for h in header] for o in objs]


DEC_HEADER = ("variant", "scale", "value", "lower", "upper", "witness_p", "witness_q", "active_set", "lp_solves")


def _support_str(dist) -> str:
    if dist is None:
        return ""
    return " ".join(f"{i}:{float(dist.probs[i])!r}" for i in dist.support())


def dec_row(dec: DecValue) -> list:
    return [
        dec.variant,
        dec.scale,
        dec.value,
        dec.lower,
        dec.upper,
        _support_str(dec.witness_p),
        _support_str(dec.witness_q),
        " ".join(str(i) for i in dec.active_set),
        dec.diagnostics.lp_solves,
    ]


PROFILE_HEADER = ("radius", "value", "lower", "upper", "witness_p", "witness_q")


def profile_rows(profile: DecProfile) -> list[list]:
    return [
        [x, v.value, v.lower, v.upper, _support_str(v.witness_p), _support_str(v.witness_q)]
        for x, v in zip(profile.grid, profile.values)
    ]


def parse_float(cell: str) -> float:
    value = float(cell)
    if math.isnan(value):
        raise ParseError("NaN in table")
    return value
