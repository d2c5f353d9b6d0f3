"""Spectral gaps of periodic media perforated by Helmholtz resonators.

The limit model maps resonator geometry to gap endpoints, the inverse
design maps prescribed gaps back to geometry, and the band solver checks
both against a finite-difference Floquet-Bloch computation at finite scale.
"""

from .bands import (
    DIRICHLET,
    NEUMANN,
    BandSweep,
    BoundaryCondition,
    StudyTable,
    convergence_study,
    estimate_lambda,
    sweep_bands,
)
from .design import (
    DesignSolution,
    TargetGaps,
    design,
    geometry_to_model,
    roundtrip_verify,
    solve_rho_closed_form,
    solve_rho_linear_system,
    synthesize_geometry,
)
from .errors import (ResgapError, ValidationError, DuplicateAlpha, PoleEvaluation, RootNotBracketed, NonPositiveRho, SingularSystem, InfeasibleLayout, GammaTooLarge, RoundtripMismatch, UnresolvedPassage, PassageExceedsClearance, NoConvergence, BracketingViolation)
from .geometry import CellGeometry2D, Passage, Rect
from .limit_model import (
    GapReport,
    ResonatorSpec,
    UnitCellModel,
    build_matrix_AN,
    compute_alphas,
    compute_betas,
    eigenvalues_AD,
    eigenvalues_AN,
    evaluate_F,
    maxwell_gaps,
)
from .raster import RasterCell, passage_epsilon, rasterize

__version__ = "0.1.0"
