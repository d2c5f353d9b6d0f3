import json

import numpy as np
import pytest

from resgap import io
from resgap.bands import sweep_bands
from resgap.design import TargetGaps, design
from resgap.errors import ValidationError
from resgap.geometry import CellGeometry2D
from resgap.limit_model import UnitCellModel, compute_betas, model_from_arrays
from resgap.raster import SOLID, passage_epsilon, rasterize


def test_json_roundtrip_domain_types(tmp_path):
    sol, geom = design(TargetGaps((1.0, 3.0), (2.0, 4.0)))
    model = model_from_arrays([1.0, 3.0], [1.5, 1 / 6], 1.0)
    report = compute_betas(model)
    for obj, cls in [(geom, CellGeometry2D), (model, UnitCellModel),
                     (TargetGaps((1.0,), (2.0,)), TargetGaps)]:
        path = io.write_json(tmp_path / "x.json", obj.to_dict())
        assert cls.from_dict(io.read_json(path)) == obj
    path = io.write_json(tmp_path / "r.json", report.to_dict())
    assert np.allclose(io.read_json(path)["betas"], report.betas, rtol=0, atol=0)
    io.write_json(tmp_path / "s.json", sol.to_dict())


def test_write_json_converts_numpy(tmp_path):
    path = io.write_json(tmp_path / "n.json", {"a": np.arange(3), "b": np.float64(0.5)})
    assert json.loads(path.read_text()) == {"a": [0, 1, 2], "b": 0.5}


def test_read_json_diagnostics(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{"alphas": [1,\n')
    with pytest.raises(ValidationError, match="line 2"):
        io.read_json(p)
    with pytest.raises(ValidationError):
        io.read_json(tmp_path / "missing.json")


@pytest.fixture(scope="module")
def cell():
    geom = design(TargetGaps((1.0,), (2.0,)))[1]
    return rasterize(geom, passage_epsilon(geom, 96, 3), 96)


def test_bands_csv_roundtrip(tmp_path, cell):
    sweep = sweep_bands(cell, theta_grid=2, check_bracketing=False)
    rows = io.read_bands_csv(io.write_bands_csv(tmp_path / "bands.csv", sweep))
    assert len(rows) == 4 * 3
    got = np.array([r["lambda"] for r in rows])
    want = np.concatenate([s.eigenvalues for s in sweep.slices])
    assert np.array_equal(got, want)
    assert (tmp_path / "bands.csv").read_text().splitlines()[0] == ",".join(io.BANDS_COLUMNS)


def test_gaps_csv(tmp_path):
    path = io.write_gaps_csv(tmp_path / "g.csv", [(0.9, 1.8)], [1.0], [2.0])
    lines = path.read_text().splitlines()
    assert lines[0] == ",".join(io.GAPS_COLUMNS)
    k, lo, hi, a, b, dev = lines[1].split(",")
    assert float(dev) == pytest.approx(0.1)
    empty = io.write_gaps_csv(tmp_path / "e.csv", [])
    assert empty.read_text().splitlines() == [",".join(io.GAPS_COLUMNS)]


def test_pgm_roundtrip(tmp_path, cell):
    img = io.read_pgm(io.write_pgm(tmp_path / "m.pgm", cell))
    assert img.shape == (96, 96)
    assert np.array_equal(img[::-1] == 0, cell.labels == SOLID)
