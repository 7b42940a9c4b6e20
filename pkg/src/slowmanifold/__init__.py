"""Slow invariant manifolds for fast-slow evolution equations on the torus.

Two constructions of the slow manifold of

    eps u' = A u + f(u, v),    v' = B v + g(u, v)

on the 1-D torus: a direct Lyapunov-Perron fixed point on exponentially
weighted histories and a spectral Galerkin truncation, plus experiments that
measure how close the two graphs are.
"""

from .errors import (
    ConfigError,
    ContractionViolated,
    CriticalSolveFailed,
    DefectBelowFloor,
    InsufficientPoints,
    IterationCap,
    NegativeTimeOnFastModes,
    NoConvergence,
    NonpositiveGap,
    NotResonant,
    ResonantEpsilon,
    SlowManifoldError,
    StepRejected,
    TailToleranceUnreachable,
    TimescaleOrderViolated,
    ZetaTooLarge,
)
from .manifolds import (
    ManifoldGraph,
    ResonanceSet,
    critical_manifold_explicit,
    critical_manifold_solve,
    galerkin_manifold_explicit,
    resonance_set,
    resonant_constraint_check,
    safe_epsilon_bound,
)
from .lyapunov_perron import (
    HistoryTrajectory,
    LPOptions,
    extract_graph,
    lp_apply_direct,
    lp_apply_galerkin,
    lp_graph,
    solve_fixed_point,
)
from .spectral import (
    DiagonalOperator,
    FourierField,
    SobolevIndex,
    SpectralSplit,
    convolve,
    project_fast,
    project_slow,
    semigroup_apply,
    shifted_laplacian,
    sobolev_norm,
    split_cutoff,
    split_for_k0,
    x_norm,
    y_norm,
)
from .system import (
    AssumptionConstants,
    FastSlowSystem,
    PolynomialNonlinearity,
    contraction_constant,
    evaluate_nonlinearity,
    timescale_gate,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
