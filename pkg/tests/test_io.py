import math
import tempfile
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from vegswe import io
from vegswe.solver import FlowField, Grid, RunConfig, Solver
from vegswe.verify.scenarios import bumpy_terrain

ZEROS_3X3 = """ncols 3
nrows 3
xllcorner 0
yllcorner 0
cellsize 1
0 0 0
0 0 0
0 0 0
"""


def write(path, text):
    path.write_text(text)
    return path


def test_read_flat_raster(tmp_path):
    r = io.read_raster(write(tmp_path / "z.asc", ZEROS_3X3))
    assert (r.ncols, r.nrows, r.cellsize) == (3, 3, 1.0)
    assert np.all(r.to_array() == 0)
    assert r.cell_centre == (0.5, 0.5)


def test_raster_orientation(tmp_path):
    text = "ncols 2\nnrows 3\nxllcenter 10\nyllcenter 20\ncellsize 2\n1 2\n3 4\n5 6\n"
    r = io.read_raster(write(tmp_path / "o.asc", text))
    a = r.to_array()
    # first model index runs east, second north; the last payload row is the south edge
    assert a.shape == (2, 3)
    assert a[0, 0] == 5 and a[1, 0] == 6 and a[0, 2] == 1
    assert r.cell_centre == (10.0, 20.0)


def test_row_length_mismatch_names_row(tmp_path):
    text = ZEROS_3X3.replace("ncols 3", "ncols 4")
    with pytest.raises(io.ParseError) as info:
        io.read_raster(write(tmp_path / "bad.asc", text))
    assert info.value.line == 6
    assert "row 1" in str(info.value)


@pytest.mark.parametrize(
    "text, line",
    [
        (ZEROS_3X3.replace("0 0 0\n0 0 0\n0 0 0\n", "0 0 0\n0 x 0\n0 0 0\n"), 7),
        (ZEROS_3X3.replace("cellsize 1", "cellsize -1"), 5),
        (ZEROS_3X3.replace("nrows 3", "nrows 4"), None),
        ("ncols 3\n0 0 0\n", None),
        (ZEROS_3X3 + "1 1 1\n", 9),
    ],
)
def test_malformed_rasters(tmp_path, text, line):
    with pytest.raises(io.ParseError) as info:
        io.read_raster(write(tmp_path / "bad.asc", text))
    if line is not None:
        assert info.value.line == line


def test_nodata_cells_are_rejected_for_model_fields(tmp_path):
    text = ZEROS_3X3.replace("cellsize 1\n", "cellsize 1\nNODATA_value -9999\n").replace("0 0 0\n0 0 0\n0 0 0", "0 0 0\n0 -9999 0\n0 0 0")
    r = io.read_raster(write(tmp_path / "nd.asc", text))
    assert r.nodata[1, 1]
    with pytest.raises(ValueError, match="NODATA"):
        r.require_complete("terrain")


finite = st.floats(-1e12, 1e12, allow_nan=False, allow_infinity=False) | st.floats(-1e-300, 1e-300)


@settings(max_examples=60, deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture])
@given(hnp.arrays(float, st.tuples(st.integers(1, 5), st.integers(1, 5)), elements=finite))
def test_raster_round_trip_is_exact(tmp_path, values):
    path = tmp_path / "rt.asc"
    io.write_raster(io.RasterFile.from_array(values, 0.1, (1.5, -2.0)), path)
    back = io.read_raster(path)
    np.testing.assert_array_equal(back.to_array(), values)
    assert back.cellsize == 0.1 and back.xllcorner == 1.5


def test_snapshot_single_cell_has_two_lines(tmp_path):
    snap = io.Snapshot(*([[1.0]] * 7))
    io.write_snapshot(snap, tmp_path / "s.csv")
    lines = (tmp_path / "s.csv").read_text().splitlines()
    assert len(lines) == 2
    assert lines[0] == ",".join(io.SNAPSHOT_COLUMNS)


def test_snapshot_write_read_write_is_byte_identical(tmp_path):
    grid, flow = bumpy_terrain(7)
    flow = Solver(grid, RunConfig()).advance(FlowField(flow.h, np.random.default_rng(0).normal(size=(7, 7, 2))), 3)
    first = tmp_path / "a.csv"
    second = tmp_path / "b.csv"
    io.write_snapshot(io.Snapshot.from_flow(flow, grid), first)
    snap = io.read_snapshot(first)
    io.write_snapshot(snap, second)
    assert first.read_bytes() == second.read_bytes()
    np.testing.assert_array_equal(snap.h, flow.h)
    assert snap.h.shape == (7, 7)


def test_snapshot_to_unwritable_path(tmp_path):
    with pytest.raises(OSError):
        io.write_snapshot(io.Snapshot(*([[1.0]] * 7)), tmp_path / "missing" / "s.csv")


def test_diagnostics_round_trip(tmp_path):
    grid, flow = bumpy_terrain(10)
    _, report = Solver(grid, RunConfig(t_end=0.05, output_every=0.05)).run(flow)
    io.write_diagnostics(report, tmp_path / "d.csv")
    d = io.read_diagnostics(tmp_path / "d.csv")
    assert len(d["t"]) == len(report)
    assert np.all(d["max_v"] < 1e-12) and np.all(d["lake_residual"] < 1e-12)


def test_config_defaults_and_relative_paths(tmp_path):
    sub = tmp_path / "case"
    sub.mkdir()
    cfg = io.parse_config(write(sub / "run.cfg", "terrain_path = dem.asc\n# comment\nt_end = 4  # trailing\n"))
    assert cfg.terrain_path == (sub / "dem.asc").resolve()
    assert cfg.output_dir == (sub / "output").resolve()
    assert (cfg.g, cfg.cfl, cfg.dry_threshold, cfg.t_end) == (9.81, 0.5, 1e-8, 4.0)
    assert cfg.boundaries == {s: "wall" for s in ("north", "south", "east", "west")}
    assert math.isinf(cfg.C_b)


@pytest.mark.parametrize(
    "text, fragment",
    [
        ("terrain_path = a\nspeed = 3\n", "unknown key"),
        ("terrain_path = a\nt_end = 1\nt_end = 2\n", "already set"),
        ("terrain_path = a\ncfl = fast\n", "must be a number"),
        ("terrain_path = a\nmodel = exotic\n", "model must be"),
        ("terrain_path = a\nboundary_west = sticky\n", "boundary_west"),
        ("terrain_path = a\nworkers = 0\n", "workers"),
        ("t_end = 1\n", "terrain_path"),
        ("terrain_path = a\njust words\n", "key = value"),
        ("terrain_path = a\nporosity_path = p\nstem_density_path = m\nstem_diameter = 0.01\n", "either"),
        ("terrain_path = a\ninitial_depth = 1\ninitial_surface = 2\n", "conflicting"),
        ("terrain_path = a\ng = nan\n", "finite"),
    ],
)
def test_config_errors(tmp_path, text, fragment):
    with pytest.raises(io.ParseError, match=fragment):
        io.parse_config(write(tmp_path / "bad.cfg", text))


@settings(max_examples=300, deadline=None)
@given(st.binary(max_size=300) | st.text(alphabet="ncolsrwxyle0123456789 .-+e\n\t=#_NODATAvu", max_size=300))
def test_parsing_is_total(data):
    """Any input yields a value or a positioned ParseError, never another exception."""
    with tempfile.TemporaryDirectory() as d:
        path = Path(d) / "fuzz"
        if isinstance(data, str):
            path.write_text(data)
        else:
            path.write_bytes(data)
        for reader in (io.read_raster, io.parse_config, io.read_snapshot, io.read_diagnostics):
            try:
                reader(path)
            except io.ParseError as exc:
                assert str(path) in str(exc)


def test_grid_from_raster_matches_model_layout(tmp_path):
    z = np.arange(12.0).reshape(4, 3)
    io.write_raster(io.RasterFile.from_array(z, 2.0), tmp_path / "z.asc")
    raster = io.read_raster(tmp_path / "z.asc")
    grid = Grid(raster.to_array(), 1.0, (2.0, 2.0), raster.cell_centre)
    np.testing.assert_array_equal(grid.z, z)
    assert grid.y1[0] == 1.0 and grid.y2[-1] == 5.0
