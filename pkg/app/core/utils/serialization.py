# app/core/utils/serialization.py
import csv
import hashlib
import json
import math
from dataclasses import asdict, is_dataclass
from pathlib import Path
from typing import Any, Iterable, List, Sequence

import numpy as np
from pydantic import BaseModel


def to_jsonable(value: Any) -> Any:
    """
    Converts models, dataclasses and numpy values into plain JSON types.

    Floats become 17-significant-digit numbers; non-finite floats become the
    strings "inf", "-inf" and "nan".
    """
    if isinstance(value, BaseModel):
        return to_jsonable(value.model_dump())
    if is_dataclass(value) and not isinstance(value, type):
        return to_jsonable(asdict(value))
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return _float(float(value))
    return value


def _float(x: float):
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


def _emit(value: Any, level: int) -> str:
    # value is already plain: dict, list, str, bool, int, float or None
    if isinstance(value, dict):
        if not value:
            return "{}"
        pad = "  " * (level + 1)
        items = [
            f"{pad}{json.dumps(key, ensure_ascii=False)}: {_emit(value[key], level + 1)}"
            for key in sorted(value)
        ]
        return "{\n" + ",\n".join(items) + "\n" + "  " * level + "}"
    if isinstance(value, list):
        if not value:
            return "[]"
        pad = "  " * (level + 1)
        items = [f"{pad}{_emit(v, level + 1)}" for v in value]
        return "[\n" + ",\n".join(items) + "\n" + "  " * level + "]"
    if isinstance(value, float):
        return format(value, ".17g")
    return json.dumps(value, ensure_ascii=False)


def dumps(value: Any) -> str:
    """Deterministic JSON: sorted keys, two-space indent, 17 significant digits."""
    return _emit(to_jsonable(value), 0)


def inputs_digest(value: Any) -> str:
    """sha256 of the canonical JSON of the parsed inputs."""
    return hashlib.sha256(dumps(value).encode("utf-8")).hexdigest()


def write_json(path: Path, value: Any) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(value) + "\n", encoding="utf-8")
    return path


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        for row in rows:
            writer.writerow([format(v, ".17g") if isinstance(v, float) else v for v in row])
    return path


def field_rows(coordinates: np.ndarray, values: np.ndarray) -> List[list]:
    """Rows (x[, y], component, value) of a nodal field of shape (N, m)."""
    rows = []
    for node, point in enumerate(coordinates):
        for component, value in enumerate(values[node]):
            rows.append([*map(float, point), component, float(value)])
    return rows
