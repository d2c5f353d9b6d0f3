"""Limiting (epsilon -> 0) spectral quantities of the resonator-perforated cell.

Each resonator j contributes a Helmholtz frequency

    alpha_j = eta_j**(n-1) * |D_j| / (h_j * |B_j|)

and the upper gap edges beta_j are the zeros of the rational function

    F(lam) = 1 + sum_j alpha_j |B_j| / (|B_0| (alpha_j - lam)),

which interlace with the alphas. The same numbers are the eigenvalues of two
small matrices (``build_matrix_AN`` / ``eigenvalues_AD``) that serve as an
independent check on the root finder.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DuplicateAlpha, PoleEvaluation, RootNotBracketed, ValidationError

DUPLICATE_RTOL = 1e-12
BISECTION_RTOL = 1e-13
NEWTON_STEPS = 5


@dataclass(frozen=True)
class ResonatorSpec:
    h: float
    eta: float
    d_profile_measure: float
    b_volume: float

    def __post_init__(self):
        for name in ("h", "eta", "d_profile_measure", "b_volume"):
            value = getattr(self, name)
            if not np.isfinite(value) or value <= 0:
                raise ValidationError(f"ResonatorSpec.{name} must be positive, got {value!r}")

    def to_dict(self) -> dict:
        return {
            "h": self.h,
            "eta": self.eta,
            "d_profile_measure": self.d_profile_measure,
            "b_volume": self.b_volume,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ResonatorSpec":
        return cls(
            h=float(d["h"]),
            eta=float(d["eta"]),
            d_profile_measure=float(d["d_profile_measure"]),
            b_volume=float(d["b_volume"]),
        )


@dataclass(frozen=True)
class UnitCellModel:
    """Space dimension, the resonator list and the exterior volume |B_0|.

    Construction fails with :class:`DuplicateAlpha` when two resonators share
    a Helmholtz frequency, since the gap structure then degenerates.
    """

    n: int
    resonators: tuple[ResonatorSpec, ...]
    b0_volume: float

    def __post_init__(self):
        object.__setattr__(self, "resonators", tuple(self.resonators))
        if int(self.n) != self.n or self.n < 2:
            raise ValidationError(f"n must be an integer >= 2, got {self.n!r}")
        if len(self.resonators) < 1:
            raise ValidationError("model needs at least one resonator (m >= 1)")
        if not np.isfinite(self.b0_volume) or self.b0_volume <= 0:
            raise ValidationError(f"b0_volume must be positive, got {self.b0_volume!r}")
        a = np.sort(compute_alphas(self))
        close = np.diff(a) <= DUPLICATE_RTOL * a[1:]
        if np.any(close):
            k = int(np.argmax(close))
            raise DuplicateAlpha(
                f"resonator frequencies must be pairwise distinct; alpha={a[k]!r} repeats"
            )

    @property
    def m(self) -> int:
        return len(self.resonators)

    @property
    def order(self) -> tuple[int, ...]:
        """Permutation sorting the resonators by ascending alpha."""
        return tuple(int(i) for i in np.argsort(compute_alphas(self), kind="stable"))

    def b_volumes(self) -> np.ndarray:
        return np.array([r.b_volume for r in self.resonators])

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "b0_volume": self.b0_volume,
            "resonators": [r.to_dict() for r in self.resonators],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "UnitCellModel":
        try:
            return cls(
                n=int(d["n"]),
                b0_volume=float(d["b0_volume"]),
                resonators=tuple(ResonatorSpec.from_dict(r) for r in d["resonators"]),
            )
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed UnitCellModel: {exc!r}") from exc


@dataclass(frozen=True)
class GapReport:
    """Limiting gap intervals (alpha_j, beta_j), sorted by alpha.

    ``order`` maps the sorted position back to the resonator index of the
    originating model.
    """

    alphas: tuple[float, ...]
    betas: tuple[float, ...]
    lambda_cap: float | None = None
    order: tuple[int, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "alphas", tuple(float(a) for a in self.alphas))
        object.__setattr__(self, "betas", tuple(float(b) for b in self.betas))
        if self.order is not None:
            object.__setattr__(self, "order", tuple(int(i) for i in self.order))
        a, b = self.alphas, self.betas
        if len(a) != len(b) or not a:
            raise ValidationError("alphas and betas must be non-empty and of equal length")
        for j in range(len(a)):
            upper_ok = j == len(a) - 1 or b[j] < a[j + 1]
            if not (0 < a[j] < b[j] and upper_ok):
                raise ValidationError(f"interlacing alpha_j < beta_j < alpha_j+1 fails at j={j}")
        if self.lambda_cap is not None and not self.lambda_cap > 0:
            raise ValidationError("lambda_cap must be positive")

    @property
    def m(self) -> int:
        return len(self.alphas)

    def to_dict(self) -> dict:
        d = {"alphas": list(self.alphas), "betas": list(self.betas), "lambda_cap": self.lambda_cap}
        if self.order is not None:
            d["order"] = list(self.order)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "GapReport":
        cap = d.get("lambda_cap")
        order = d.get("order")
        return cls(
            alphas=tuple(d["alphas"]),
            betas=tuple(d["betas"]),
            lambda_cap=None if cap is None else float(cap),
            order=None if order is None else tuple(order),
        )


@dataclass(frozen=True)
class WeightedMatrix:
    """Square matrix that is self-adjoint for the inner product diag(weights)."""

    dim: int
    entries: np.ndarray = field(repr=False)
    weights: np.ndarray

    def is_weighted_symmetric(self, atol: float = 0.0) -> bool:
        W = np.diag(self.weights)
        return bool(np.max(np.abs(W @ self.entries - self.entries.T @ W)) <= atol)

    def symmetrized(self) -> np.ndarray:
        """W^1/2 A W^-1/2, real symmetric with the same spectrum."""
        s = np.sqrt(self.weights)
        sym = s[:, None] * self.entries / s[None, :]
        return 0.5 * (sym + sym.T)


def compute_alphas(model: UnitCellModel) -> np.ndarray:
    """Helmholtz frequencies in the model's resonator order (not sorted)."""
    n = model.n
    return np.array(
        [r.eta ** (n - 1) * r.d_profile_measure / (r.h * r.b_volume) for r in model.resonators]
    )


def _sorted_coefficients(model: UnitCellModel) -> tuple[np.ndarray, np.ndarray]:
    """Sorted alphas and the matching residues alpha_j |B_j| / |B_0|."""
    order = np.array(model.order)
    alphas = compute_alphas(model)[order]
    weights = model.b_volumes()[order] / model.b0_volume
    return alphas, alphas * weights


def _F(alphas, coef, lam):
    lam = np.asarray(lam, dtype=float)
    return 1.0 + np.sum(coef / (alphas - lam[..., None]), axis=-1)


def _dF(alphas, coef, lam):
    lam = np.asarray(lam, dtype=float)
    return np.sum(coef / (alphas - lam[..., None]) ** 2, axis=-1)


def evaluate_F(model: UnitCellModel, lam: float) -> float:
    alphas, coef = _sorted_coefficients(model)
    if np.any(np.abs(alphas - lam) <= 4 * np.finfo(float).eps * np.abs(alphas)):
        raise PoleEvaluation(f"F has a pole at lambda={lam!r}")
    return float(_F(alphas, coef, lam))


def evaluate_dF(model: UnitCellModel, lam: float) -> float:
    alphas, coef = _sorted_coefficients(model)
    return float(_dF(alphas, coef, lam))


def _find_zeros(alphas: np.ndarray, coef: np.ndarray) -> np.ndarray:
    # F increases from -inf to +inf between consecutive poles, and from -inf
    # to F(alpha_m + S + 1) > 0 on the last bracket.
    S = coef.sum()
    lo = alphas.copy()
    hi = np.append(alphas[1:], alphas[-1] + S + 1.0)
    if not _F(alphas, coef, hi[-1]) > 0:
        raise RootNotBracketed("F is not positive at the upper bracket alpha_m + S + 1")
    lo0, hi0 = lo.copy(), hi.copy()
    target = BISECTION_RTOL * (hi0 - lo0)
    with np.errstate(divide="ignore", invalid="ignore"):
        while True:
            mid = 0.5 * (lo + hi)
            # stop per bracket at the target width or when it is one ulp wide
            active = (hi - lo > target) & (mid > lo) & (mid < hi)
            if not active.any():
                break
            neg = _F(alphas, coef, mid) < 0
            lo = np.where(active & neg, mid, lo)
            hi = np.where(active & ~neg, mid, hi)
        x = 0.5 * (lo + hi)
        for _ in range(NEWTON_STEPS):
            f = _F(alphas, coef, x)
            step = f / _dF(alphas, coef, x)
            cand = x - step
            inside = (cand > lo0) & (cand < hi0)
            better = np.abs(_F(alphas, coef, cand)) < np.abs(f)
            take = inside & better
            if not np.any(take):
                break
            x = np.where(take, cand, x)
        # settle on the neighbouring float with the smallest |F|
        for _ in range(4):
            nbrs = np.stack([np.nextafter(x, -np.inf), x, np.nextafter(x, np.inf)])
            best = np.argmin(np.abs(_F(alphas, coef, nbrs)), axis=0)
            if np.all(best == 1):
                break
            x = nbrs[best, np.arange(len(x))]
    if np.any(~((x > lo0) & (x < hi0))):
        bad = int(np.argmax(~((x > lo0) & (x < hi0))))
        raise RootNotBracketed(f"zero {bad} collapsed onto the bracket edge")
    return x


def compute_betas(model: UnitCellModel) -> GapReport:
    """Zeros of F, bracketed between consecutive poles, as a GapReport."""
    alphas, coef = _sorted_coefficients(model)
    betas = _find_zeros(alphas, coef)
    return GapReport(alphas=tuple(alphas), betas=tuple(betas), order=model.order)


def build_matrix_AN(model: UnitCellModel) -> WeightedMatrix:
    """(m+1)x(m+1) Neumann limit matrix; index 0 is the exterior region B_0."""
    order = np.array(model.order)
    alphas = compute_alphas(model)[order]
    vols = model.b_volumes()[order]
    m = model.m
    A = np.zeros((m + 1, m + 1))
    top = alphas * vols / model.b0_volume
    A[0, 0] = top.sum()
    A[0, 1:] = -top
    A[1:, 0] = -alphas
    A[np.arange(1, m + 1), np.arange(1, m + 1)] = alphas
    weights = np.concatenate(([model.b0_volume], vols))
    return WeightedMatrix(dim=m + 1, entries=A, weights=weights)


def _arrow_factor(matrix: WeightedMatrix) -> np.ndarray | None:
    """L with L L^T = symmetrized A^N, or None if the entries are not of that form."""
    A = matrix.entries
    m = matrix.dim - 1
    diag = np.diag(A)[1:]
    inner = A[1:, 1:] - np.diag(diag)
    if (np.any(inner != 0) or np.any(diag <= 0) or np.any(A[0, 1:] > 0)
            or not np.allclose(A[1:, 0], -diag, rtol=1e-14, atol=0)):
        return None
    L = np.zeros((m + 1, m))
    L[0] = -np.sqrt(-A[0, 1:])
    L[np.arange(1, m + 1), np.arange(m)] = np.sqrt(diag)
    return L


def eigenvalues_AN(matrix: WeightedMatrix) -> np.ndarray:
    """Ascending eigenvalues of the symmetrized matrix.

    For the arrow-shaped limit matrix the symmetrized form factors as L L^T
    (one column per resonator), and the squared singular values of L keep
    full relative accuracy for eigenvalues far below the matrix norm, which
    a plain symmetric eigensolver does not.
    """
    L = _arrow_factor(matrix)
    if L is None:
        return np.linalg.eigvalsh(matrix.symmetrized())
    sv = np.linalg.svd(L, compute_uv=False)
    return np.concatenate(([0.0], np.sort(sv**2)))


def eigenvalues_AD(model: UnitCellModel) -> np.ndarray:
    return np.sort(compute_alphas(model))


def maxwell_gaps(report: GapReport) -> list[tuple[float, float]]:
    """Frequency gaps +-(sqrt(alpha_j), sqrt(beta_j)) of the 2D photonic crystal.

    Positive intervals come first, then their mirror images.
    """
    pos = [(float(np.sqrt(a)), float(np.sqrt(b))) for a, b in zip(report.alphas, report.betas)]
    return pos + [(-hi, -lo) for lo, hi in pos]


def model_from_arrays(
    alphas: Sequence[float], b_volumes: Sequence[float], b0_volume: float, n: int = 2
) -> UnitCellModel:
    """Build a model realising the given alphas with h = |D| = 1.

    Handy for tests and for users who think in terms of the limit parameters
    rather than the resonator geometry.
    """
    res = []
    for a, vol in zip(alphas, b_volumes):
        eta = (a * vol) ** (1.0 / (n - 1))
        res.append(ResonatorSpec(h=1.0, eta=eta, d_profile_measure=1.0, b_volume=float(vol)))
    return UnitCellModel(n=n, resonators=tuple(res), b0_volume=float(b0_volume))
