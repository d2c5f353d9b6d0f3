"""Floquet-Bloch band solver for the rasterised period cell.

The operator is -eps^-2 Laplacian discretised with the cell-centred 5-point
stencil in flux form: a missing neighbour across a solid wall contributes no
flux (Neumann), the outer faces of the unit square are either glued with the
Bloch phase exp(i theta_k), left open (Neumann), or mirrored antisymmetrically
(Dirichlet on the face).
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .design import DEFAULT_GAMMA, DEFAULT_MARGIN, TargetGaps, design
from .errors import BracketingViolation, NoConvergence, ValidationError
from .geometry import CellGeometry2D
from .raster import EXTERIOR, RasterCell, exterior_labels, rasterize

log = logging.getLogger(__name__)

RESIDUAL_TOL = 1e-8
BRACKET_RTOL = 1e-6
SHIFT = -1.0
SEED = 20240601
DENSE_LIMIT = 400
TWO_PI = 2 * np.pi


@dataclass(frozen=True)
class BoundaryCondition:
    """Outer-face condition: ``"quasi"`` (with theta), ``"neumann"`` or ``"dirichlet"``."""

    kind: str
    theta: tuple[float, float] | None = None

    def __post_init__(self):
        if self.kind not in ("quasi", "neumann", "dirichlet"):
            raise ValidationError(f"unknown boundary condition kind {self.kind!r}")
        if self.kind == "quasi":
            if self.theta is None or len(self.theta) != 2:
                raise ValidationError("quasi-periodic condition needs a theta pair")
            theta = tuple(float(t) % TWO_PI for t in self.theta)
            object.__setattr__(self, "theta", theta)
        elif self.theta is not None:
            raise ValidationError(f"{self.kind} condition takes no theta")

    @classmethod
    def quasi(cls, tx: float, ty: float) -> "BoundaryCondition":
        return cls("quasi", (tx, ty))

    def __str__(self):
        if self.kind == "quasi":
            return f"quasi({self.theta[0]:.4f},{self.theta[1]:.4f})"
        return self.kind


NEUMANN = BoundaryCondition("neumann")
DIRICHLET = BoundaryCondition("dirichlet")


@dataclass(frozen=True)
class SpectrumSlice:
    bc: BoundaryCondition
    eigenvalues: np.ndarray
    residuals: np.ndarray


@dataclass
class BandSweep:
    theta_samples: list[tuple[float, float]]
    slices: list[SpectrumSlice] = field(repr=False)
    bands: list[tuple[float, float]]
    gaps: list[tuple[float, float]]
    neumann: SpectrumSlice | None = None
    dirichlet: SpectrumSlice | None = None
    bracket_violations: list[tuple[int, int, float]] = field(default_factory=list)
    failed: list[int] = field(default_factory=list)

    def gaps_below(self, cutoff: float) -> list[tuple[float, float]]:
        return [g for g in self.gaps if g[1] <= cutoff]


def _edges(mask: np.ndarray, axis: int, wrap: bool):
    """Pairs of flat fluid indices that are neighbours along ``axis``."""
    shifted = np.roll(mask, -1, axis=axis)
    both = mask & shifted
    if not wrap:
        if axis == 1:
            both[:, -1] = False
        else:
            both[-1, :] = False
    r, c = np.nonzero(both)
    if axis == 1:
        r2, c2 = r, (c + 1) % mask.shape[1]
        crosses = c == mask.shape[1] - 1
    else:
        r2, c2 = (r + 1) % mask.shape[0], c
        crosses = r == mask.shape[0] - 1
    return (r, c), (r2, c2), crosses


def assemble_mask(mask: np.ndarray, bc: BoundaryCondition, scale: float = 1.0) -> sp.csr_matrix:
    """Discrete -Laplacian on the True cells of ``mask`` (unit square, spacing 1/N)."""
    N = mask.shape[0]
    index = -np.ones(mask.shape, dtype=np.int64)
    index[mask] = np.arange(int(mask.sum()))
    nf = int(mask.sum())
    coef = scale * N * N
    quasi = bc.kind == "quasi"
    # phases of 0 or pi keep the matrix real
    complex_ = quasi and any(t not in (0.0, np.pi) for t in bc.theta)
    dtype = np.complex128 if complex_ else np.float64

    rows, cols, vals = [], [], []
    diag = np.zeros(nf)
    for axis in (1, 0):
        (r, c), (r2, c2), crosses = _edges(mask, axis, wrap=quasi)
        i, j = index[r, c], index[r2, c2]
        w = np.ones(len(i), dtype=dtype)
        if quasi:
            theta = bc.theta[0] if axis == 1 else bc.theta[1]
            # u(x + e_k) = exp(i theta_k) u(x): the wrapped neighbour of the last
            # cell is the first cell times the Bloch phase
            w[crosses] = np.exp(1j * theta) if complex_ else np.cos(theta)
        np.add.at(diag, i, 1.0)
        np.add.at(diag, j, 1.0)
        rows += [i, j]
        cols += [j, i]
        vals += [-w, -np.conj(w)]
    if bc.kind == "dirichlet":
        # ghost value -u on each outer face: flux u / (dx / 2)
        np.add.at(diag, index[:, 0][mask[:, 0]], 2.0)
        np.add.at(diag, index[:, -1][mask[:, -1]], 2.0)
        np.add.at(diag, index[0, :][mask[0, :]], 2.0)
        np.add.at(diag, index[-1, :][mask[-1, :]], 2.0)
    rows.append(np.arange(nf))
    cols.append(np.arange(nf))
    vals.append(diag.astype(dtype))
    A = sp.coo_matrix(
        (np.concatenate(vals) * coef, (np.concatenate(rows), np.concatenate(cols))),
        shape=(nf, nf),
    )
    return A.tocsr()


def assemble(cell: RasterCell, bc: BoundaryCondition) -> sp.csr_matrix:
    """Hermitian PSD matrix of -eps^-2 Laplacian on the fluid cells of ``cell``."""
    return assemble_mask(cell.mask, bc, scale=cell.epsilon**-2)


def _start_vector(n: int, complex_: bool) -> np.ndarray:
    rng = np.random.default_rng(SEED)
    v = rng.standard_normal(n)
    if complex_:
        v = v + 1j * rng.standard_normal(n)
    return v


def rayleigh_quotients(operator: sp.spmatrix, V: np.ndarray) -> np.ndarray:
    """Rayleigh quotients of the columns of V, summed in edge-difference form.

    For Hermitian A, u*Au = sum_{i<j} |a_ij| |u_i + s_ij u_j|^2 + sum_i d_i |u_i|^2
    with s_ij = a_ij / |a_ij| and d_i = a_ii - sum_j |a_ij|. Unlike u*Au this
    has no cancellation for smooth u, so a constant kernel vector gives 0.
    """
    A = sp.coo_matrix(operator)
    off = A.row < A.col
    i, j, a = A.row[off], A.col[off], A.data[off]
    mag = np.abs(a)
    s = a / mag
    on = A.row == A.col
    excess = np.zeros(A.shape[0])
    np.add.at(excess, A.row[on], np.real(A.data[on]))
    np.add.at(excess, i, -mag)
    np.add.at(excess, j, -mag)
    diff = V[i, :] + s[:, None] * V[j, :]
    num = mag @ (np.abs(diff) ** 2) + excess @ (np.abs(V) ** 2)
    return num / np.sum(np.abs(V) ** 2, axis=0)


def _refine(A, lu, V: np.ndarray) -> np.ndarray:
    """One block inverse-iteration step followed by Rayleigh-Ritz."""
    W, _ = np.linalg.qr(lu.solve(V))
    H = W.conj().T @ (A @ W)
    _, Q = np.linalg.eigh(0.5 * (H + H.conj().T))
    return W @ Q


def _residuals(operator, w, V) -> np.ndarray:
    R = operator @ V - V * w
    return np.linalg.norm(R, axis=0) / np.linalg.norm(V, axis=0)


def lowest_eigenvalues(
    operator: sp.spmatrix,
    k_max: int,
    bc: BoundaryCondition | None = None,
    tol: float = RESIDUAL_TOL,
) -> SpectrumSlice:
    """The ``k_max`` smallest eigenvalues by shift-invert Lanczos about SHIFT.

    Raises NoConvergence when ARPACK stalls or any residual
    ||A u - lam u|| / ||u|| exceeds ``tol``.
    """
    n = operator.shape[0]
    if k_max < 1:
        raise ValidationError("k_max must be positive")
    if k_max >= n:
        raise ValidationError(f"k_max={k_max} must be smaller than the dimension {n}")
    complex_ = np.iscomplexobj(operator.data)
    if n <= DENSE_LIMIT:
        w, V = scipy.linalg.eigh(operator.toarray(), subset_by_index=[0, k_max - 1])
    else:
        A = operator.tocsc()
        shifted = A - SHIFT * sp.identity(n, dtype=A.dtype, format="csc")
        lu = spla.splu(shifted, permc_spec="MMD_AT_PLUS_A")
        op = spla.LinearOperator(A.shape, matvec=lu.solve, dtype=A.dtype)
        v0 = _start_vector(n, complex_)
        # a loose ARPACK tolerance usually suffices; fall back to machine precision
        for arpack_tol in (1e-12, 0):
            try:
                w, V = spla.eigsh(A, k=k_max, sigma=SHIFT, which="LM", OPinv=op,
                                  v0=v0, tol=arpack_tol)
            except spla.ArpackNoConvergence as exc:
                if arpack_tol == 0:
                    raise NoConvergence(f"ARPACK did not converge: {exc}") from exc
                continue
            V = _refine(A, lu, V)
            if _residuals(operator, rayleigh_quotients(operator, V), V).max() <= tol:
                break
    w = rayleigh_quotients(operator, V)
    order = np.argsort(w)
    w, V = w[order], V[:, order]
    res = _residuals(operator, w, V)
    if np.any(res > tol):
        raise NoConvergence(
            f"eigenpair residual {res.max():.3e} exceeds {tol:.1e}", best_residual=float(res.max())
        )
    return SpectrumSlice(bc=bc, eigenvalues=w, residuals=res)


def solve(cell: RasterCell, bc: BoundaryCondition, k_max: int) -> SpectrumSlice:
    return lowest_eigenvalues(assemble(cell, bc), k_max, bc=bc)


def theta_samples(theta_grid: int) -> list[tuple[float, float]]:
    """Uniform theta grid on [0, pi]^2, containing (0, 0) and (pi, pi).

    theta and -theta give complex-conjugate problems with equal spectra, so
    this quarter covers the whole Brillouin zone.
    """
    if theta_grid < 2:
        raise ValidationError("theta_grid must be at least 2")
    t = np.linspace(0.0, np.pi, theta_grid)
    return [(float(a), float(b)) for a in t for b in t]


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("RESGAP_THREADS", "1")))
    except ValueError:
        return 1


def _band_gaps(bands: Sequence[tuple[float, float]]) -> list[tuple[float, float]]:
    gaps = []
    top = bands[0][1]
    for lo, hi in bands[1:]:
        if lo > top:
            gaps.append((top, lo))
        top = max(top, hi)
    return gaps


def sweep_bands(
    cell: RasterCell,
    theta_grid: int = 5,
    k_max: int | None = None,
    check_bracketing: bool = True,
    strict: bool = True,
) -> BandSweep:
    """Band edges over a theta grid, with min-max bracketing against N/D.

    With ``strict`` a bracketing failure raises BracketingViolation and a
    solver failure raises NoConvergence carrying the partial sweep; otherwise
    both are recorded on the returned sweep.
    """
    if k_max is None:
        k_max = cell.m + 2
    thetas = theta_samples(theta_grid)

    def run(t):
        try:
            return solve(cell, BoundaryCondition.quasi(*t), k_max)
        except NoConvergence as exc:
            log.warning("theta=%s: %s", t, exc)
            return exc

    with ThreadPoolExecutor(max_workers=_threads()) as pool:
        results = list(pool.map(run, thetas))
    failed = [i for i, r in enumerate(results) if isinstance(r, NoConvergence)]
    slices = [r for r in results if not isinstance(r, NoConvergence)]
    if not slices:
        raise NoConvergence("every theta sample failed", partial=None)
    lam = np.array([s.eigenvalues for s in slices])
    bands = [(float(lam[:, k].min()), float(lam[:, k].max())) for k in range(k_max)]
    sweep = BandSweep(theta_samples=thetas, slices=slices, bands=bands,
                      gaps=_band_gaps(bands), failed=failed)
    if check_bracketing:
        sweep.neumann = solve(cell, NEUMANN, k_max)
        sweep.dirichlet = solve(cell, DIRICHLET, k_max)
        sweep.bracket_violations = bracketing_violations(sweep)
        if strict and sweep.bracket_violations:
            i, k, excess = sweep.bracket_violations[0]
            raise BracketingViolation(
                f"min-max enclosure fails at theta sample {i}, k={k + 1} (excess {excess:.3e})"
            )
    if strict and failed:
        raise NoConvergence(f"{len(failed)} theta samples failed", partial=sweep)
    return sweep


def bracketing_violations(sweep: BandSweep, rtol: float = BRACKET_RTOL):
    """(slice index, k, excess) for each sample outside [lam_k(N), lam_k(D)]."""
    lN = sweep.neumann.eigenvalues
    lD = sweep.dirichlet.eigenvalues
    out = []
    for i, s in enumerate(sweep.slices):
        for k, lam in enumerate(s.eigenvalues):
            tol = rtol * abs(lD[k])
            excess = max(lN[k] - tol - lam, lam - lD[k] - tol)
            if excess > 0:
                out.append((i, k, float(excess)))
    return out


def lambda_profile(geometry: CellGeometry2D, theta_grid: int = 5, grid_n: int = 512):
    """Smallest theta-eigenvalue of -Laplacian on B_0 alone, per theta sample."""
    mask = exterior_labels(geometry, grid_n) == EXTERIOR
    thetas = theta_samples(theta_grid)

    def run(t):
        bc = BoundaryCondition.quasi(*t)
        return float(lowest_eigenvalues(assemble_mask(mask, bc), 1, bc=bc).eigenvalues[0])

    with ThreadPoolExecutor(max_workers=_threads()) as pool:
        values = list(pool.map(run, thetas))
    return thetas, np.array(values)


def estimate_lambda(geometry: CellGeometry2D, theta_grid: int = 5, grid_n: int = 512) -> float:
    """Sampled lower estimate of the gap-counting cutoff constant Lambda.

    The gap count is taken below ``estimate_lambda(...) * epsilon**-2``.
    """
    _, values = lambda_profile(geometry, theta_grid, grid_n)
    return float(values.max())


@dataclass
class StudyRow:
    epsilon: float
    passage_cells: tuple[int, ...]
    neumann: np.ndarray
    dirichlet: np.ndarray
    gaps: list[tuple[float, float]]
    cutoff: float
    dev_alpha_D: np.ndarray
    dev_beta_N: np.ndarray
    dev_gap_lo: np.ndarray
    dev_gap_hi: np.ndarray
    bracket_violations: int


@dataclass
class StudyTable:
    targets: TargetGaps
    geometry: CellGeometry2D
    lambda_hat: float
    grid_n: int
    rows: list[StudyRow]

    def series(self, name: str) -> np.ndarray:
        """Deviation series (eps-ladder x resonator) for one of the dev_* fields."""
        return np.array([getattr(r, name) for r in self.rows])

    def trend_ok(self) -> dict[str, bool]:
        out = {}
        for name in ("dev_alpha_D", "dev_beta_N", "dev_gap_lo", "dev_gap_hi"):
            s = self.series(name)
            out[name] = bool(s.size and np.all(np.isfinite(s)) and np.all(np.diff(s, axis=0) <= 0))
        return out


def _relative(got, want):
    got = np.asarray(got, dtype=float)
    want = np.asarray(want, dtype=float)
    return np.abs(got - want) / np.abs(want)


def convergence_study(
    targets: TargetGaps,
    gamma: float = DEFAULT_GAMMA,
    eps_list: Sequence[float] = (),
    grid_n: int = 512,
    theta_grid: int = 5,
    layout_margin: float = DEFAULT_MARGIN,
    geometry: CellGeometry2D | None = None,
) -> StudyTable:
    """Neumann/Dirichlet eigenvalues and swept gaps along a decreasing eps ladder.

    Deviations are relative to the targets. A gap that is missing at some eps
    gives an infinite endpoint deviation.
    """
    eps_list = list(eps_list)
    if not eps_list or any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise ValidationError("eps_list must be non-empty and strictly decreasing")
    if geometry is None:
        geometry = design(targets, gamma, layout_margin)[1]
    m = targets.m
    alpha = np.array(targets.alphas_t)
    beta = np.array(targets.betas_t)
    lam_hat = estimate_lambda(geometry, theta_grid, grid_n)
    rows = []
    for eps in eps_list:
        cell = rasterize(geometry, eps, grid_n)
        sweep = sweep_bands(cell, theta_grid, k_max=m + 2, strict=False)
        cutoff = lam_hat / eps**2
        gaps = sweep.gaps_below(cutoff)
        lN = sweep.neumann.eigenvalues
        lD = sweep.dirichlet.eigenvalues
        if len(gaps) == m:
            lo = np.array([g[0] for g in gaps])
            hi = np.array([g[1] for g in gaps])
            dev_lo, dev_hi = _relative(lo, alpha), _relative(hi, beta)
        else:
            dev_lo = dev_hi = np.full(m, np.inf)
        rows.append(StudyRow(
            epsilon=float(eps),
            passage_cells=cell.passage_cells,
            neumann=lN[: m + 1],
            dirichlet=lD[:m],
            gaps=gaps,
            cutoff=cutoff,
            dev_alpha_D=_relative(lD[:m], alpha),
            dev_beta_N=_relative(lN[1: m + 1], beta),
            dev_gap_lo=dev_lo,
            dev_gap_hi=dev_hi,
            bracket_violations=len(sweep.bracket_violations),
        ))
        log.info("eps=%.4f gaps=%s N=%s D=%s", eps, gaps, lN[: m + 1], lD[:m])
    return StudyTable(targets=targets, geometry=geometry, lambda_hat=lam_hat,
                      grid_n=grid_n, rows=rows)
