"""Cell-centred rasterisation of the perforated period cell Y_eps."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .errors import PassageExceedsClearance, UnresolvedPassage, ValidationError
from .geometry import CellGeometry2D, Rect
from .limit_model import ResonatorSpec, UnitCellModel

MIN_PASSAGE_CELLS = 3

SOLID = -1
EXTERIOR = 0  # B_0; chamber j is labelled j, passage j is labelled m + j (1-based j)


def _rows_cols(rect: Rect, centers: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    rows = (centers >= rect.y0) & (centers <= rect.y1)
    cols = (centers >= rect.x0) & (centers <= rect.x1)
    return rows, cols


@dataclass(frozen=True)
class RasterCell:
    grid_n: int
    epsilon: float
    mask: np.ndarray = field(repr=False)
    geometry: CellGeometry2D = field(repr=False)
    labels: np.ndarray = field(repr=False)
    passage_cells: tuple[int, ...] = ()

    @property
    def dx(self) -> float:
        return 1.0 / self.grid_n

    @property
    def m(self) -> int:
        return self.geometry.m

    @property
    def n_fluid(self) -> int:
        return int(self.mask.sum())

    def snapped_etas(self) -> tuple[float, ...]:
        """Width constants of the rasterised passages (width = k cells)."""
        return tuple(k * self.dx / self.epsilon**2 for k in self.passage_cells)

    def fluid_area(self) -> float:
        return self.n_fluid * self.dx**2

    def effective_model(self) -> UnitCellModel:
        """Limit model of the rasterised cell, with pixel-counted sizes."""
        m = self.m
        a = self.dx**2
        b0 = float(np.count_nonzero(self.labels == EXTERIOR)) * a
        res = []
        for j in range(1, m + 1):
            vol = float(np.count_nonzero(self.labels == j)) * a
            rows = np.any(self.labels == m + j, axis=1).sum()
            k = self.passage_cells[j - 1]
            res.append(ResonatorSpec(h=rows * self.dx, eta=k * self.dx / self.epsilon**2,
                                     d_profile_measure=1.0, b_volume=vol))
        return UnitCellModel(n=2, resonators=tuple(res), b0_volume=b0)


def exterior_labels(geometry: CellGeometry2D, grid_n: int) -> np.ndarray:
    """Labels with only B_0 fluid; shells (with chambers) are solid."""
    centers = (np.arange(grid_n) + 0.5) / grid_n
    labels = np.full((grid_n, grid_n), EXTERIOR, dtype=np.int32)
    for f in geometry.rects_F:
        rows, cols = _rows_cols(f, centers)
        labels[np.ix_(rows, cols)] = SOLID
    return labels


def rasterize(geometry: CellGeometry2D, epsilon: float, grid_n: int) -> RasterCell:
    """Rasterise Y_eps on a ``grid_n`` x ``grid_n`` cell-centred grid.

    Array index order is ``[row, col] = [y, x]``. A cell belongs to a region
    when its centre does. Each passage is snapped to an integer number ``k``
    of columns nearest to ``eta * epsilon**2 * grid_n``; the snapped widths are
    recorded in ``passage_cells``.
    """
    if epsilon <= 0:
        raise ValidationError(f"epsilon must be positive, got {epsilon!r}")
    if grid_n < 4:
        raise ValidationError(f"grid_n must be at least 4, got {grid_n!r}")
    m = geometry.m
    centers = (np.arange(grid_n) + 0.5) / grid_n
    labels = exterior_labels(geometry, grid_n)
    cells = []
    for j, (f, b, p) in enumerate(zip(geometry.rects_F, geometry.rects_B, geometry.passages), 1):
        width = p.width(epsilon)
        if width > p.d:
            raise PassageExceedsClearance(
                f"passage {j} width {width:.4g} exceeds clearance d={p.d:.4g}; reduce epsilon"
            )
        k = int(round(width * grid_n))
        if width * grid_n < MIN_PASSAGE_CELLS * (1 - 1e-9) or k < MIN_PASSAGE_CELLS:
            raise UnresolvedPassage(
                f"passage {j} is {width * grid_n:.2f} cells wide at grid_n={grid_n}; "
                f"need >= {MIN_PASSAGE_CELLS}"
            )
        rows, cols = _rows_cols(b, centers)
        labels[np.ix_(rows, cols)] = j
        c0 = int(round(p.zx * grid_n - k / 2))
        f_rows, _ = _rows_cols(f, centers)
        p_rows = f_rows & (centers > b.y1)
        labels[np.ix_(p_rows, np.arange(c0, c0 + k))] = m + j
        cells.append(k)
    mask = labels != SOLID
    _, ncomp = ndimage.label(mask)
    if ncomp != 1:
        raise ValidationError(f"fluid region has {ncomp} connected components, expected 1")
    return RasterCell(grid_n=grid_n, epsilon=float(epsilon), mask=mask, geometry=geometry,
                      labels=labels, passage_cells=tuple(cells))


def passage_epsilon(geometry: CellGeometry2D, grid_n: int, cells: int) -> float:
    """Scale at which the narrowest passage is exactly ``cells`` grid cells wide."""
    eta_min = min(p.eta for p in geometry.passages)
    return float(np.sqrt(cells / (grid_n * eta_min)))
