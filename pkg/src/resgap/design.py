"""Inverse design: resonator geometry realising prescribed limit gaps.

Given interlacing targets a_1 < b_1 < a_2 < ... < a_m < b_m the volume ratios
rho_j = |B_j| / |B_0| are the unique solution of

    1 + sum_j rho_j a_j / (a_j - b_k) = 0,   k = 1..m,

which has a product closed form. Shells F_j of area tau_j and chambers
B_j = gamma (F_j - y_j) + y_j then reproduce those ratios, and the passage
width constants eta_j are chosen so the Helmholtz frequencies equal a_j.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    GammaTooLarge,
    InfeasibleLayout,
    NonPositiveRho,
    RoundtripMismatch,
    SingularSystem,
    ValidationError,
)
from .geometry import CellGeometry2D, Passage, Rect
from .limit_model import GapReport, ResonatorSpec, UnitCellModel, compute_betas

DEFAULT_GAMMA = 0.5
DEFAULT_MARGIN = 0.01
ROUNDTRIP_RTOL = 1e-9


@dataclass(frozen=True)
class TargetGaps:
    alphas_t: tuple[float, ...]
    betas_t: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "alphas_t", tuple(float(a) for a in self.alphas_t))
        object.__setattr__(self, "betas_t", tuple(float(b) for b in self.betas_t))
        a, b = self.alphas_t, self.betas_t
        if len(a) != len(b) or not a:
            raise ValidationError("target alphas and betas must be non-empty and equally long")
        for j in range(len(a)):
            if not (np.isfinite(a[j]) and np.isfinite(b[j]) and 0 < a[j] < b[j]):
                raise ValidationError(f"interlacing violated: need 0 < alpha_{j+1} < beta_{j+1}")
            if j + 1 < len(a) and not b[j] < a[j + 1]:
                raise ValidationError(
                    f"interlacing violated: beta_{j+1}={b[j]} must be below alpha_{j+2}={a[j+1]}"
                )

    @property
    def m(self) -> int:
        return len(self.alphas_t)

    def to_dict(self) -> dict:
        return {"alphas": list(self.alphas_t), "betas": list(self.betas_t)}

    @classmethod
    def from_dict(cls, d: dict) -> "TargetGaps":
        try:
            return cls(alphas_t=tuple(d["alphas"]), betas_t=tuple(d["betas"]))
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed TargetGaps: {exc!r}") from exc


@dataclass(frozen=True)
class DesignSolution:
    rhos: tuple[float, ...]
    taus: tuple[float, ...]
    gamma: float
    etas: tuple[float, ...]

    def to_dict(self) -> dict:
        return {"rhos": list(self.rhos), "taus": list(self.taus),
                "gamma": self.gamma, "etas": list(self.etas)}


def solve_rho_closed_form(targets: TargetGaps) -> np.ndarray:
    a = np.asarray(targets.alphas_t)
    b = np.asarray(targets.betas_t)
    rho = np.empty(len(a))
    for j in range(len(a)):
        others = np.arange(len(a)) != j
        rho[j] = (b[j] - a[j]) / a[j] * np.prod((b[others] - a[j]) / (a[others] - a[j]))
    if np.any(rho <= 0):
        raise NonPositiveRho(f"non-positive volume ratio {rho.min()!r}; targets do not interlace")
    return rho


def solve_rho_linear_system(targets: TargetGaps) -> np.ndarray:
    """Dense solve of the m equations; independent check of the closed form."""
    a = np.asarray(targets.alphas_t)
    b = np.asarray(targets.betas_t)
    M = a[None, :] / (a[None, :] - b[:, None])
    try:
        return np.linalg.solve(M, -np.ones(len(a)))
    except np.linalg.LinAlgError as exc:
        raise SingularSystem(str(exc)) from exc


def compute_taus(rhos: Sequence[float], gamma: float, n: int = 2) -> np.ndarray:
    """Shell areas tau_j = rho_j / (gamma**n + sum rho); positive with sum below 1."""
    if not 0 < gamma < 1:
        raise ValidationError(f"gamma must lie in (0, 1), got {gamma!r}")
    rhos = np.asarray(rhos, dtype=float)
    if np.any(rhos <= 0):
        raise NonPositiveRho("volume ratios must be positive")
    return rhos / (gamma**n + rhos.sum())


def _layout(taus: np.ndarray, margin: float) -> list[Rect]:
    m = len(taus)
    free = 1.0 - (m + 1) * margin
    sides = np.sqrt(taus)
    if free > 0 and sides.sum() <= free and sides.max() <= 1.0 - 2 * margin:
        widths, heights = sides, sides
    else:
        # common height, as short as the row allows
        H = taus.sum() / free if free > 0 else np.inf
        if not H <= 1.0 - 2 * margin:
            raise InfeasibleLayout(
                f"{m} shells of total area {taus.sum():.4f} do not fit in one row with "
                f"margin {margin}; lower the margin or raise gamma"
            )
        heights = np.full(m, H)
        widths = taus / H
    gap = (1.0 - widths.sum()) / (m + 1)
    rects, x = [], gap
    for w, h in zip(widths, heights):
        rects.append(Rect(x, 0.5 - h / 2, x + w, 0.5 + h / 2))
        x += w + gap
    return rects


def design(
    targets: TargetGaps,
    gamma: float = DEFAULT_GAMMA,
    layout_margin: float = DEFAULT_MARGIN,
    epsilon: float | None = None,
) -> tuple[DesignSolution, CellGeometry2D]:
    """Volume ratios, shell areas and the explicit cell geometry for ``targets``.

    Shells are laid out in one row along x; each is square when the row has
    room, otherwise all share the smallest common height that fits. When
    ``epsilon`` is given the passage width ``eta_j * epsilon**2`` must stay
    inside the clearance ``d_j``, else GammaTooLarge.
    """
    if not 0 < gamma < 1:
        raise ValidationError(f"gamma must lie in (0, 1), got {gamma!r}")
    if not 0 <= layout_margin < 0.5:
        raise ValidationError(f"layout_margin must lie in [0, 0.5), got {layout_margin!r}")
    rhos = solve_rho_closed_form(targets)
    taus = compute_taus(rhos, gamma, n=2)
    shells = _layout(taus, layout_margin)

    chambers, passages, etas = [], [], []
    for j, (f, a) in enumerate(zip(shells, targets.alphas_t)):
        cx, cy = f.center
        b = Rect(cx + gamma * (f.x0 - cx), cy + gamma * (f.y0 - cy),
                 cx + gamma * (f.x1 - cx), cy + gamma * (f.y1 - cy))
        h = f.y1 - b.y1
        d = b.width / 4
        # profile D_j is the unit interval, |D_j| = 1
        eta = a * h * b.area
        if epsilon is not None and not d > eta * epsilon**2:
            raise GammaTooLarge(
                f"resonator {j + 1}: clearance d={d:.4g} does not exceed the passage width "
                f"{eta * epsilon**2:.4g} at epsilon={epsilon}; choose a smaller gamma or epsilon"
            )
        chambers.append(b)
        passages.append(Passage(zx=cx, zy=0.5 * (b.y1 + f.y1), h=h, eta=eta, d=d))
        etas.append(eta)

    geometry = CellGeometry2D(
        rects_F=tuple(shells),
        rects_B=tuple(chambers),
        passages=tuple(passages),
        b0_area=1.0 - sum(f.area for f in shells),
    )
    solution = DesignSolution(rhos=tuple(rhos), taus=tuple(taus), gamma=gamma, etas=tuple(etas))
    return solution, geometry


def synthesize_geometry(
    targets: TargetGaps,
    gamma: float = DEFAULT_GAMMA,
    layout_margin: float = DEFAULT_MARGIN,
    epsilon: float | None = None,
) -> CellGeometry2D:
    return design(targets, gamma, layout_margin, epsilon)[1]


def geometry_to_model(geometry: CellGeometry2D) -> UnitCellModel:
    resonators = tuple(
        ResonatorSpec(h=p.h, eta=p.eta, d_profile_measure=1.0, b_volume=b.area)
        for b, p in zip(geometry.rects_B, geometry.passages)
    )
    return UnitCellModel(n=2, resonators=resonators, b0_volume=geometry.b0_area)


def roundtrip_verify(
    geometry: CellGeometry2D, targets: TargetGaps, rtol: float = ROUNDTRIP_RTOL
) -> GapReport:
    """Run the forward model on ``geometry`` and check it hits ``targets``."""
    report = compute_betas(geometry_to_model(geometry))
    if report.m != targets.m:
        raise RoundtripMismatch(f"geometry has {report.m} resonators, targets {targets.m}")
    got = np.concatenate([report.alphas, report.betas])
    want = np.concatenate([targets.alphas_t, targets.betas_t])
    dev = np.abs(got - want) / np.abs(want)
    k = int(np.argmax(dev))
    if dev[k] >= rtol:
        which = "alpha" if k < targets.m else "beta"
        idx = k % targets.m
        raise RoundtripMismatch(
            f"{which}_{idx + 1} deviates by {dev[k]:.3e} (relative) from the target",
            index=idx, deviation=float(dev[k]),
        )
    return report
