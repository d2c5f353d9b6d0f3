import numpy as np
import pytest

from resgap.design import TargetGaps, design
from resgap.errors import PassageExceedsClearance, UnresolvedPassage
from resgap.geometry import CellGeometry2D
from resgap.raster import EXTERIOR, SOLID, exterior_labels, passage_epsilon, rasterize


@pytest.fixture(scope="module")
def geom1():
    return design(TargetGaps((1.0,), (2.0,)))[1]


@pytest.fixture(scope="module")
def geom2():
    return design(TargetGaps((1.0, 3.0), (2.0, 4.0)))[1]


def test_empty_square_is_all_fluid():
    cell = rasterize(CellGeometry2D.empty(), 1.0, 16)
    assert cell.mask.all()
    assert cell.fluid_area() == pytest.approx(1.0)


@pytest.mark.parametrize("cells", [3, 5, 8])
def test_passage_snaps_to_requested_width(geom1, cells):
    N = 256
    eps = passage_epsilon(geom1, N, cells)
    cell = rasterize(geom1, eps, N)
    assert cell.passage_cells == (cells,)
    assert cell.snapped_etas()[0] == pytest.approx(geom1.passages[0].eta, rel=1e-9)
    # the passage label occupies exactly `cells` columns
    cols = np.any(cell.labels == 2, axis=0)
    assert cols.sum() == cells


def test_regions_and_connectivity(geom2):
    N = 256
    cell = rasterize(geom2, passage_epsilon(geom2, N, 3), N)
    labels = set(np.unique(cell.labels))
    assert labels == {SOLID, EXTERIOR, 1, 2, 3, 4}
    assert np.array_equal(cell.mask, cell.labels != SOLID)


def test_effective_model_near_design(geom1):
    N = 512
    cell = rasterize(geom1, passage_epsilon(geom1, N, 3), N)
    eff = cell.effective_model()
    assert eff.b0_volume == pytest.approx(geom1.b0_area, rel=0.02)
    assert eff.resonators[0].b_volume == pytest.approx(geom1.rects_B[0].area, rel=0.02)


def test_exterior_labels_cover_shells(geom1):
    lab = exterior_labels(geom1, 64)
    area = np.count_nonzero(lab == SOLID) / 64**2
    assert area == pytest.approx(1 - geom1.b0_area, rel=0.1)


def test_unresolved_passage(geom1):
    N = 128
    with pytest.raises(UnresolvedPassage):
        rasterize(geom1, passage_epsilon(geom1, N, 2), N)


def test_passage_wider_than_clearance(geom1):
    with pytest.raises(PassageExceedsClearance):
        rasterize(geom1, 5.0, 256)
