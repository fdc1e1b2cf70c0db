"""Lineage CSV files, parameter and plan files, JSON reports.

Lineage files have a ``cell_id,value`` header; ``#`` comment lines and blank
lines are skipped. Decimals use a dot separator whatever the locale. Reports
are JSON with floats written to 17 significant digits so they read back to
the same doubles; non-finite floats become ``null``.
"""

from __future__ import annotations

import json
import math
import re
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .bar import BarParams, make_root
from .errors import DataError, DuplicateId, NonFiniteValue, NonPositiveId, ParseError
from .experiments import LEVELS, ExperimentPlan
from .kernel import Categorical, Dirac, FiniteKernel
from .lineage import Lineage
from .treekit import MAX_NODE

__all__ = [
    "SCHEMA_VERSION",
    "LineageFileStats",
    "dumps_report",
    "load_params",
    "load_plan",
    "params_from_dict",
    "parse_lineage",
    "plan_from_dict",
    "read_lineage",
    "write_lineage",
    "write_report",
]

SCHEMA_VERSION = 1
HEADER = "cell_id,value"

_INT = re.compile(r"^[+-]?\d+$")
_DECIMAL = re.compile(r"^[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?$")
_NONFINITE = re.compile(r"^[+-]?(nan|inf|infinity)$", re.IGNORECASE)


class LineageFileStats(NamedTuple):
    rows: int
    comments: int
    blanks: int


def parse_lineage(text: str) -> tuple[Lineage, LineageFileStats]:
    """Parse lineage CSV text; line numbers in errors are 1-based."""
    ids, values = [], []
    seen = set()
    comments = blanks = 0
    header_seen = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            blanks += 1
            continue
        if line.startswith("#"):
            comments += 1
            continue
        if not header_seen:
            if line.replace(" ", "") != HEADER:
                raise ParseError(lineno, f"expected header {HEADER!r}, got {line!r}")
            header_seen = True
            continue
        fields = [f.strip() for f in line.split(",")]
        if len(fields) != 2:
            raise ParseError(lineno, f"expected 2 fields, got {len(fields)}")
        cid, val = fields
        if not _INT.match(cid):
            raise ParseError(lineno, f"cell_id {cid!r} is not an integer")
        n = int(cid)
        if n < 1:
            raise NonPositiveId(n)
        if n > MAX_NODE:
            raise ParseError(lineno, f"cell_id {n} exceeds 2**63 - 1")
        if _NONFINITE.match(val):
            raise NonFiniteValue(lineno)
        if not _DECIMAL.match(val):
            raise ParseError(lineno, f"value {val!r} is not a decimal number")
        x = float(val)
        if not math.isfinite(x):
            raise NonFiniteValue(lineno)
        if n in seen:
            raise DuplicateId(n)
        seen.add(n)
        ids.append(n)
        values.append(x)
    if not header_seen:
        raise ParseError(1, f"missing header {HEADER!r}")
    lineage = Lineage(np.array(ids, dtype=np.int64), np.array(values, dtype=float))
    return lineage, LineageFileStats(len(ids), comments, blanks)


def read_lineage(path) -> Lineage:
    return parse_lineage(Path(path).read_text())[0]


def write_lineage(lineage: Lineage, path) -> None:
    """Write with ``repr`` floats, which read back bit-for-bit."""
    lines = [HEADER]
    lines.extend(f"{int(i)},{float(v)!r}" for i, v in zip(lineage.ids, lineage.values))
    Path(path).write_text("\n".join(lines) + "\n")


def params_from_dict(d: dict):
    """``(BarParams, root distribution)`` from a parameter mapping."""
    try:
        params = BarParams(
            float(d["alpha0"]),
            float(d["beta0"]),
            float(d["alpha1"]),
            float(d["beta1"]),
            float(d.get("sigma2", 1.0)),
            float(d.get("rho", 0.0)),
        )
    except KeyError as exc:
        raise DataError(f"parameter {exc.args[0]!r} missing") from None
    except (TypeError, ValueError) as exc:
        raise DataError(f"bad parameter value: {exc}") from None
    root = d.get("root") or {"kind": "stationary"}
    try:
        return params, make_root(params, root.get("kind", "stationary"), tuple(root.get("args", ())))
    except (TypeError, ValueError) as exc:
        raise DataError(f"bad root specification {root!r}: {exc}") from None


def load_params(path):
    return params_from_dict(_load_json(path))


def _finite_model(d: dict):
    name = d.get("name")
    if name == "swap":
        kernel = FiniteKernel.swap()
    elif name == "constant_pair":
        kernel = FiniteKernel.constant_pair()
    elif name is None:
        kernel = FiniteKernel(d["table"], d.get("states"))
    else:
        raise DataError(f"unknown named kernel {name!r}")
    root = d.get("root")
    if root is None:
        raise DataError("finite-kernel models need a root")
    kind, args = root.get("kind"), tuple(root.get("args", ()))
    if kind == "dirac":
        return kernel, Dirac(*args)
    if kind == "categorical":
        return kernel, Categorical(*args)
    raise DataError(f"unknown root kind {kind!r} for a finite kernel")


def plan_from_dict(d: dict, seed: int | None = None):
    """Build an :class:`ExperimentPlan`; ``seed`` overrides the file's."""
    model = d.get("model")
    if not isinstance(model, dict):
        raise DataError("plan needs a 'model' object")
    kind = model.get("type", "bar")
    if kind == "bar":
        params, root = params_from_dict(model)
    elif kind == "finite":
        params, root = _finite_model(model)
    else:
        raise DataError(f"unknown model type {kind!r}")
    if seed is None:
        seed = d.get("seed")
    if seed is None:
        raise DataError("a seed is required (plan field 'seed' or --seed)")
    tolerances = {
        k: tuple(v) if isinstance(v, list) else v for k, v in d.get("tolerances", {}).items()
    }
    try:
        return ExperimentPlan(
            kind=d["kind"],
            model=params,
            depths=tuple(d["depths"]),
            replications=int(d["replications"]),
            seed=int(seed),
            root=root,
            functional=d.get("functional", "x"),
            test=d.get("test", "equal-dynamics"),
            null_holds=d.get("null_holds"),
            levels=tuple(d.get("levels", LEVELS)),
            tolerances=tolerances,
            replication_offset=int(d.get("replication_offset", 0)),
        )
    except KeyError as exc:
        raise DataError(f"plan field {exc.args[0]!r} missing") from None


def load_plan(path, seed: int | None = None):
    return plan_from_dict(_load_json(path), seed)


def _load_json(path) -> dict:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(data, dict):
        raise DataError(f"{path}: expected a JSON object")
    return data


def _encode(obj, indent: int, level: int) -> str:
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return format(x, ".17g") if math.isfinite(x) else "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    if hasattr(obj, "to_dict"):
        return _encode(obj.to_dict(), indent, level)
    if hasattr(obj, "_asdict"):
        return _encode(obj._asdict(), indent, level)
    pad = "\n" + " " * (indent * (level + 1))
    end = "\n" + " " * (indent * level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = (f"{json.dumps(str(k))}: {_encode(v, indent, level + 1)}" for k, v in obj.items())
        return "{" + pad + ("," + pad).join(items) + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        if len(obj) == 0:
            return "[]"
        items = [_encode(v, indent, level + 1) for v in obj]
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in obj):
            return "[" + ", ".join(items) + "]"
        return "[" + pad + ("," + pad).join(items) + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps_report(obj) -> str:
    """JSON text for a fit, test or experiment report (or a plain dict)."""
    body = obj.to_dict() if hasattr(obj, "to_dict") else dict(obj)
    return _encode({"bifurk_schema": SCHEMA_VERSION, **body}, 2, 0) + "\n"


def write_report(obj, path) -> None:
    Path(path).write_text(dumps_report(obj))
