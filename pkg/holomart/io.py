"""Readers and writers for the on-disk formats: CSV tables, JSON reports and path dumps."""

from __future__ import annotations

import json
import logging
import math
from pathlib import Path
from typing import Any, Sequence, Union

import numpy as np
from pydantic import BaseModel

from .exceptions import HolomartError, InputFormatError
from .martingale import PathBatch
from .models import is_grid_size
from .spectral import AnalyticFn, BoundaryFn, CircleGrid, GridMask

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

THETA_TOL = 1e-9
FLOAT_FMT = "%.17g"

DUMP_MAGIC = b"HMPD"
DUMP_VERSION = 1
DUMP_HEADER = np.dtype(
    [
        ("n_paths", "<i8"),
        ("dt", "<f8"),
        ("r_exit", "<f8"),
        ("seed", "<u8"),
        ("lam", "<f8"),
        ("start", "<c16"),
    ]
)
DUMP_RECORD = np.dtype(
    [
        ("path_index", "<i8"),
        ("exit_point", "<c16"),
        ("stopped_value", "<c16"),
        ("terminal_value", "<c16"),
        ("tau_point", "<c16"),
        ("tau_fired", "?"),
        ("exhausted", "?"),
        ("f_star", "<f8"),
        ("n_steps", "<i8"),
    ]
)


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------


def _read_table(path: PathLike, header: str) -> np.ndarray:
    path = Path(path)
    try:
        with path.open("r", encoding="utf-8") as fh:
            first = fh.readline().strip()
            if first != header:
                raise InputFormatError(f"{path}: expected header {header!r}, found {first!r}")
            table = np.loadtxt(fh, delimiter=",", ndmin=2)
    except OSError as exc:
        raise InputFormatError(f"cannot read {path}: {exc}") from exc
    except ValueError as exc:
        raise InputFormatError(f"{path}: malformed row ({exc})") from exc
    width = header.count(",") + 1
    if table.size == 0:
        table = table.reshape(0, width)
    if table.shape[1] != width:
        raise InputFormatError(f"{path}: expected {width} columns, found {table.shape[1]}")
    if not np.all(np.isfinite(table)):
        raise InputFormatError(f"{path}: non-finite values")
    return table


def _write_table(path: PathLike, header: str, columns: Sequence[np.ndarray], fmt: Any = FLOAT_FMT) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savetxt(path, np.column_stack(columns), delimiter=",", header=header, comments="", fmt=fmt)
    return path


def read_boundary_csv(path: PathLike) -> BoundaryFn:
    """Read ``theta,re,im`` rows on the uniform grid ``theta_j = 2 pi j / n``.

    The result is real when every imaginary part is zero.
    """
    table = _read_table(path, "theta,re,im")
    n = table.shape[0]
    if not is_grid_size(n):
        raise InputFormatError(f"{path}: {n} rows is not a power of two in [8, 2**22]")
    grid = CircleGrid(n)
    theta = table[:, 0]
    if np.max(np.abs(theta - grid.points)) > THETA_TOL:
        raise InputFormatError(f"{path}: theta must start at 0 with uniform spacing 2*pi/{n}")
    if np.any(table[:, 2] != 0.0):
        return BoundaryFn(grid, table[:, 1] + 1j * table[:, 2], "complex")
    return BoundaryFn(grid, table[:, 1], "real")


def write_boundary_csv(path: PathLike, u: BoundaryFn) -> Path:
    v = np.asarray(u.values)
    return _write_table(path, "theta,re,im", [u.grid.points, v.real, np.imag(v)])


def read_coefficients_csv(path: PathLike) -> AnalyticFn:
    table = _read_table(path, "k,re,im")
    if table.shape[0] == 0:
        raise InputFormatError(f"{path}: no coefficients")
    k = table[:, 0].astype(np.int64)
    if np.any(k != table[:, 0]) or np.any(k < 0) or len(np.unique(k)) != k.size:
        raise InputFormatError(f"{path}: k must be distinct nonnegative integers")
    coeffs = np.zeros(int(k.max()) + 1, dtype=complex)
    coeffs[k] = table[:, 1] + 1j * table[:, 2]
    return AnalyticFn(coeffs)


def write_coefficients_csv(path: PathLike, F: AnalyticFn) -> Path:
    c = F.coeffs
    return _write_table(
        path, "k,re,im", [np.arange(c.size), c.real, c.imag], fmt=["%d", FLOAT_FMT, FLOAT_FMT]
    )


def read_mask_csv(path: PathLike, grid: CircleGrid) -> GridMask:
    table = _read_table(path, "index")
    idx = table[:, 0]
    if np.any(idx != np.round(idx)) or np.any(idx < 0) or np.any(idx >= grid.n):
        raise InputFormatError(f"{path}: indices must be integers in [0, {grid.n})")
    return GridMask.from_indices(grid, idx.astype(np.int64))


def write_mask_csv(path: PathLike, mask: GridMask) -> Path:
    return _write_table(path, "index", [mask.indices()], fmt="%d")


def write_series_csv(path: PathLike, x: Sequence[float], y: Sequence[float]) -> Path:
    return _write_table(path, "x,y", [np.asarray(x, dtype=float), np.asarray(y, dtype=float)])


# ---------------------------------------------------------------------------
# JSON
# ---------------------------------------------------------------------------


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, BaseModel):
        return _jsonable(obj.model_dump(mode="json"))
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.generic):
        return _jsonable(obj.item())
    if isinstance(obj, complex):
        return [_jsonable(obj.real), _jsonable(obj.imag)]
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, Path):
        return str(obj)
    return obj


def to_json(obj: Any) -> str:
    """Deterministic JSON text: sorted keys, two-space indent, no timestamps.

    Non-finite floats are written as ``null``.
    """
    return json.dumps(_jsonable(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_json(path: PathLike, obj: Any) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(to_json(obj), encoding="utf-8")
    return path


def error_payload(exc: HolomartError) -> dict:
    return {"error": type(exc).__name__, "message": str(exc), "exit_code": exc.exit_code}


# ---------------------------------------------------------------------------
# Path dumps
# ---------------------------------------------------------------------------


def write_path_dump(path: PathLike, batch: PathBatch) -> Path:
    """Write *batch* as little-endian binary so it can be re-analysed without re-simulating."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = np.zeros(1, dtype=DUMP_HEADER)
    header["n_paths"] = len(batch)
    header["dt"] = batch.dt
    header["r_exit"] = batch.r_exit
    header["seed"] = batch.seed
    header["lam"] = batch.lam
    header["start"] = batch.start
    records = np.zeros(len(batch), dtype=DUMP_RECORD)
    for name in DUMP_RECORD.names:
        records[name] = getattr(batch, name)
    with path.open("wb") as fh:
        fh.write(DUMP_MAGIC)
        fh.write(np.array([DUMP_VERSION], dtype="<u4").tobytes())
        fh.write(header.tobytes())
        fh.write(records.tobytes())
    logger.debug("wrote %d paths to %s", len(batch), path)
    return path


def read_path_dump(path: PathLike) -> PathBatch:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise InputFormatError(f"cannot read {path}: {exc}") from exc
    if raw[:4] != DUMP_MAGIC:
        raise InputFormatError(f"{path}: not a path dump")
    offset = 4 + 4
    if len(raw) < offset + DUMP_HEADER.itemsize:
        raise InputFormatError(f"{path}: truncated header")
    version = int(np.frombuffer(raw, dtype="<u4", count=1, offset=4)[0])
    if version != DUMP_VERSION:
        raise InputFormatError(f"{path}: unsupported dump version {version}")
    header = np.frombuffer(raw, dtype=DUMP_HEADER, count=1, offset=offset)[0]
    offset += DUMP_HEADER.itemsize
    n_paths = int(header["n_paths"])
    if len(raw) - offset != n_paths * DUMP_RECORD.itemsize:
        raise InputFormatError(f"{path}: expected {n_paths} records")
    records = np.frombuffer(raw, dtype=DUMP_RECORD, count=n_paths, offset=offset)
    return PathBatch(
        **{name: np.array(records[name]) for name in DUMP_RECORD.names},
        lam=float(header["lam"]),
        start=complex(header["start"]),
        dt=float(header["dt"]),
        r_exit=float(header["r_exit"]),
        seed=int(header["seed"]),
    )
