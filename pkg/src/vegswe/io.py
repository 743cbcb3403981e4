"""File formats: ASCII-grid rasters, run configuration and CSV output.

Rasters use the common ESRI ASCII header (``ncols``, ``nrows``,
``xllcorner``/``xllcenter``, ``yllcorner``/``yllcenter``, ``cellsize``,
optional ``NODATA_value``) followed by ``nrows`` rows of values listed from
north to south. Model arrays are indexed ``[i1, i2]`` with ``i1`` west to east
and ``i2`` south to north, so ``array = rows[::-1].T``.

All parsing is total: malformed input raises :class:`ParseError` carrying the
line number, never an unrelated exception.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .verify.diagnostics import COLUMNS

SNAPSHOT_COLUMNS = ("y1", "y2", "h", "v1", "v2", "theta", "z")


class ParseError(ValueError):
    def __init__(self, path, line: int | None, message: str):
        self.path = str(path)
        self.line = line
        where = f"{self.path}:{line}" if line is not None else self.path
        super().__init__(f"{where}: {message}")


def _fmt(x: float) -> str:
    return "%.17g" % x


def _read_lines(path) -> list[str]:
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise ParseError(path, None, f"cannot read file ({exc.strerror or exc})") from None
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        line = raw[: exc.start].count(b"\n") + 1
        raise ParseError(path, line, "file is not valid UTF-8 text") from None
    return text.splitlines()


def _number(token: str, path, line: int, what: str) -> float:
    try:
        value = float(token)
    except ValueError:
        raise ParseError(path, line, f"non-numeric {what} {token!r}") from None
    if not math.isfinite(value):
        raise ParseError(path, line, f"non-finite {what} {token!r}")
    return value


# -- rasters -----------------------------------------------------------------
_HEADER_KEYS = ("ncols", "nrows", "xllcorner", "yllcorner", "xllcenter", "yllcenter", "cellsize", "nodata_value")


@dataclass(frozen=True)
class RasterFile:
    """Header and payload of an ASCII-grid raster; ``rows`` run north to south."""

    ncols: int
    nrows: int
    xllcorner: float
    yllcorner: float
    cellsize: float
    rows: np.ndarray
    nodata_value: float | None = None

    def __post_init__(self):
        rows = np.array(self.rows, dtype=float)
        if rows.shape != (self.nrows, self.ncols):
            raise ValueError(f"payload shape {rows.shape} does not match header {self.nrows} x {self.ncols}")
        if not self.cellsize > 0:
            raise ValueError("cellsize must be positive")
        if not np.all(np.isfinite(rows)):
            raise ValueError("raster values must be finite")
        rows.setflags(write=False)
        object.__setattr__(self, "rows", rows)

    @classmethod
    def from_array(cls, array, cellsize: float, origin=(0.0, 0.0), nodata_value=None) -> "RasterFile":
        """Raster from a model array ``[i1, i2]``; ``origin`` is the lower-left corner."""
        a = np.asarray(array, dtype=float)
        return cls(a.shape[0], a.shape[1], float(origin[0]), float(origin[1]), float(cellsize),
                   a.T[::-1], nodata_value)

    @property
    def nodata(self) -> np.ndarray:
        """Mask of NODATA cells in model layout."""
        if self.nodata_value is None:
            return np.zeros((self.ncols, self.nrows), dtype=bool)
        return self.to_array() == self.nodata_value

    def to_array(self) -> np.ndarray:
        return self.rows[::-1].T.copy()

    @property
    def cell_centre(self) -> tuple[float, float]:
        """Centre of the south-west cell."""
        return self.xllcorner + 0.5 * self.cellsize, self.yllcorner + 0.5 * self.cellsize

    def require_complete(self, what: str) -> np.ndarray:
        """Model array, rejecting NODATA cells (terrain and porosity must be defined everywhere)."""
        mask = self.nodata
        if np.any(mask):
            i1, i2 = (int(k) for k in np.argwhere(mask)[0])
            row = self.nrows - i2
            raise ValueError(f"{what} raster has NODATA at column {i1 + 1}, row {row} (counted from the north)")
        return self.to_array()


def read_raster(path) -> RasterFile:
    lines = _read_lines(path)
    header: dict[str, float] = {}
    where: dict[str, int] = {}
    lineno = 0
    # header lines are "key value"; the payload starts at the first numeric line
    while lineno < len(lines):
        parts = lines[lineno].split()
        if not parts:
            lineno += 1
            continue
        key = parts[0].lower()
        if key not in _HEADER_KEYS:
            break
        if len(parts) != 2:
            raise ParseError(path, lineno + 1, f"header line must be 'key value', got {lines[lineno]!r}")
        if key in header:
            raise ParseError(path, lineno + 1, f"duplicate header key {parts[0]!r}")
        header[key] = _number(parts[1], path, lineno + 1, f"value for {parts[0]}")
        where[key] = lineno + 1
        lineno += 1
    for key in ("ncols", "nrows", "cellsize"):
        if key not in header:
            raise ParseError(path, lineno + 1, f"missing header key {key!r}")
    for key in ("ncols", "nrows"):
        v = header[key]
        if v != int(v) or v < 1:
            raise ParseError(path, where[key], f"{key} must be a positive integer, got {v:g}")
    if not header["cellsize"] > 0:
        raise ParseError(path, where["cellsize"], f"cellsize must be positive, got {header['cellsize']:g}")
    ncols, nrows, cs = int(header["ncols"]), int(header["nrows"]), header["cellsize"]
    for axis in ("x", "y"):
        if f"{axis}llcorner" in header and f"{axis}llcenter" in header:
            raise ParseError(path, where[f"{axis}llcenter"], f"both {axis}llcorner and {axis}llcenter given")
    x0 = header.get("xllcorner", header.get("xllcenter", 0.5 * cs) - 0.5 * cs)
    y0 = header.get("yllcorner", header.get("yllcenter", 0.5 * cs) - 0.5 * cs)

    rows = []
    for k in range(lineno, len(lines)):
        tokens = lines[k].split()
        if not tokens:
            continue
        if len(rows) == nrows:
            raise ParseError(path, k + 1, f"extra data after {nrows} rows")
        if len(tokens) != ncols:
            raise ParseError(path, k + 1, f"row {len(rows) + 1} has {len(tokens)} values, header says ncols={ncols}")
        rows.append([_number(t, path, k + 1, "value") for t in tokens])
    if len(rows) != nrows:
        raise ParseError(path, len(lines), f"found {len(rows)} rows, header says nrows={nrows}")
    return RasterFile(ncols, nrows, x0, y0, cs, np.array(rows), header.get("nodata_value"))


def write_raster(raster: RasterFile, path) -> None:
    out = [
        f"ncols {raster.ncols}",
        f"nrows {raster.nrows}",
        f"xllcorner {_fmt(raster.xllcorner)}",
        f"yllcorner {_fmt(raster.yllcorner)}",
        f"cellsize {_fmt(raster.cellsize)}",
    ]
    if raster.nodata_value is not None:
        out.append(f"NODATA_value {_fmt(raster.nodata_value)}")
    out.extend(" ".join(_fmt(v) for v in row) for row in raster.rows)
    Path(path).write_text("\n".join(out) + "\n")


# -- configuration -----------------------------------------------------------
_BOUNDARY_KINDS = ("wall", "outflow")


@dataclass(frozen=True)
class ConfigFile:
    """Parsed run configuration; paths are absolute."""

    terrain_path: Path
    model: str = "simplified"
    porosity_path: Path | None = None
    stem_density_path: Path | None = None
    stem_diameter: float | None = None
    initial_depth_path: Path | None = None
    initial_surface: float | None = None
    initial_depth: float | None = None
    cfl: float = 0.5
    t_end: float = 1.0
    output_every: float | None = None
    dry_threshold: float = 1e-8
    g: float = 9.81
    C_d: float = 0.0
    C_b: float = math.inf
    rain_rate: float = 0.0
    infiltration_rate: float = 0.0
    boundaries: dict = field(default_factory=lambda: {s: "wall" for s in ("north", "south", "east", "west")})
    output_dir: Path = Path("output")
    workers: int = 1
    source: Path | None = None


_FLOAT_KEYS = {
    "stem_diameter", "initial_surface", "initial_depth", "cfl", "t_end", "output_every", "dry_threshold", "g",
    "C_d", "C_b", "rain_rate", "infiltration_rate",
}
_PATH_KEYS = {"terrain_path", "porosity_path", "stem_density_path", "initial_depth_path", "output_dir"}
_KEYS = _FLOAT_KEYS | _PATH_KEYS | {"model", "workers"} | {f"boundary_{s}" for s in ("north", "south", "east", "west")}


def parse_config(path) -> ConfigFile:
    """Read ``key = value`` lines; ``#`` starts a comment. Unknown keys are errors."""
    path = Path(path)
    lines = _read_lines(path)
    base = path.resolve().parent
    values: dict = {}
    bounds = {s: "wall" for s in ("north", "south", "east", "west")}
    seen: dict[str, int] = {}
    for k, line in enumerate(lines, start=1):
        text = line.split("#", 1)[0].strip()
        if not text:
            continue
        if "=" not in text:
            raise ParseError(path, k, f"expected 'key = value', got {text!r}")
        key, value = (s.strip() for s in text.split("=", 1))
        if key not in _KEYS:
            raise ParseError(path, k, f"unknown key {key!r}")
        if key in seen:
            raise ParseError(path, k, f"key {key!r} already set on line {seen[key]}")
        seen[key] = k
        if not value:
            raise ParseError(path, k, f"empty value for {key!r}")
        if key in _FLOAT_KEYS:
            try:
                num = float(value)
            except ValueError:
                raise ParseError(path, k, f"{key} must be a number, got {value!r}") from None
            if math.isnan(num) or (math.isinf(num) and key != "C_b"):
                raise ParseError(path, k, f"{key} must be finite, got {value!r}")
            values[key] = num
        elif key in _PATH_KEYS:
            values[key] = (base / value).resolve()
        elif key == "model":
            if value not in ("simplified", "full"):
                raise ParseError(path, k, f"model must be 'simplified' or 'full', got {value!r}")
            values[key] = value
        elif key == "workers":
            if not value.isdigit() or int(value) < 1:
                raise ParseError(path, k, f"workers must be a positive integer, got {value!r}")
            values[key] = int(value)
        else:
            if value not in _BOUNDARY_KINDS:
                raise ParseError(path, k, f"{key} must be 'wall' or 'outflow', got {value!r}")
            bounds[key.split("_", 1)[1]] = value
    if "terrain_path" not in values:
        raise ParseError(path, None, "missing required key 'terrain_path'")
    if "porosity_path" in values and "stem_density_path" in values:
        raise ParseError(path, seen["stem_density_path"], "give either porosity_path or stem_density_path, not both")
    if "stem_density_path" in values and "stem_diameter" not in values:
        raise ParseError(path, seen["stem_density_path"], "stem_density_path needs stem_diameter")
    initial = [k for k in ("initial_depth_path", "initial_surface", "initial_depth") if k in values]
    if len(initial) > 1:
        raise ParseError(path, seen[initial[1]], f"conflicting initial conditions: {', '.join(initial)}")
    values.setdefault("output_dir", (base / "output").resolve())
    return ConfigFile(boundaries=bounds, source=path.resolve(), **values)


# -- snapshots and diagnostics -----------------------------------------------
@dataclass(frozen=True)
class Snapshot:
    """Cell-centred fields of one output time, arrays indexed ``[i1, i2]``."""

    y1: np.ndarray
    y2: np.ndarray
    h: np.ndarray
    v1: np.ndarray
    v2: np.ndarray
    theta: np.ndarray
    z: np.ndarray

    def __post_init__(self):
        shape = np.shape(self.h)
        for name in SNAPSHOT_COLUMNS:
            a = np.array(getattr(self, name), dtype=float)
            if a.shape != shape:
                raise ValueError(f"field {name} has shape {a.shape}, expected {shape}")
            object.__setattr__(self, name, a)

    @classmethod
    def from_flow(cls, flow, grid) -> "Snapshot":
        Y1, Y2 = np.meshgrid(grid.y1, grid.y2, indexing="ij")
        return cls(Y1, Y2, flow.h, flow.v[..., 0], flow.v[..., 1], grid.theta, grid.z)


def write_table(path, header, columns) -> None:
    rows = np.column_stack([np.ravel(c) for c in columns])
    try:
        with open(path, "w", newline="") as fh:
            fh.write(",".join(header) + "\n")
            for row in rows:
                fh.write(",".join("%.16e" % v for v in row) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from None


def read_table(path, header):
    lines = _read_lines(path)
    if not lines or lines[0].strip() != ",".join(header):
        raise ParseError(path, 1, f"expected header {','.join(header)!r}")
    data = []
    for k, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        tokens = line.split(",")
        if len(tokens) != len(header):
            raise ParseError(path, k, f"expected {len(header)} fields, got {len(tokens)}")
        data.append([_number(t, path, k, "value") for t in tokens])
    return np.array(data, dtype=float).reshape(-1, len(header))


def write_snapshot(snapshot: Snapshot, path) -> None:
    """CSV with one row per cell in row-major ``[i1, i2]`` order."""
    write_table(path, SNAPSHOT_COLUMNS, [getattr(snapshot, c) for c in SNAPSHOT_COLUMNS])


def read_snapshot(path) -> Snapshot:
    table = read_table(path, SNAPSHOT_COLUMNS)
    if table.shape[0] == 0:
        raise ParseError(path, None, "snapshot has no cells")
    # row-major order: y1 is constant along the first run of rows
    n2 = int(np.argmax(table[:, 0] != table[0, 0])) or table.shape[0]
    if table.shape[0] % n2:
        raise ParseError(path, None, f"{table.shape[0]} rows do not form a rectangular grid")
    shape = (table.shape[0] // n2, n2)
    return Snapshot(*(table[:, k].reshape(shape) for k in range(len(SNAPSHOT_COLUMNS))))


def write_diagnostics(report, path) -> None:
    write_table(path, COLUMNS, [np.asarray(getattr(report, c), dtype=float) for c in COLUMNS])


def read_diagnostics(path) -> dict[str, np.ndarray]:
    table = read_table(path, COLUMNS)
    return {c: table[:, k] for k, c in enumerate(COLUMNS)}


def ensure_dir(path) -> Path:
    path = Path(path)
    try:
        os.makedirs(path, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {path}: {exc.strerror or exc}") from None
    return path
