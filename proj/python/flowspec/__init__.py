"""Spectral theory and Monte Carlo for gradient-flow weight matrices."""

from ._core import (
    BulkEdges,
    CellStatus,
    DensityCurve,
    EdgeAnalysis,
    EdgeFactors,
    Histogram,
    ModelParams,
    OutlierResult,
    OutlierSide,
    OverlapCurve,
    PhaseDiagramTL,
    PhaseDiagramTT,
    PowerLawSpec,
    QuadraticForms,
    Regime,
    RegimeReport,
    SimConfig,
    SpectrumKind,
    SpectrumSample,
    StoppingResult,
    ThetaCCurve,
    ThetaCPoint,
    TransitionRow,
    __version__,
    analyze_edges,
    bulk_edges,
    classify_regime,
    critical_theta,
    critical_theta_lower,
    edge_discriminant,
    empirical_density,
    empirical_overlap_curve,
    log_grid,
    optimal_stopping,
    outlier_location,
    outlier_side,
    overlap_theory,
    phase_diagram_theta_lambda,
    phase_diagram_theta_time,
    powerlaw_singular_values,
    quadratic_forms,
    realization_seed,
    refine_transition,
    sample_powerlaw_flow,
    sample_two_block,
    sample_two_block_original,
    spectral_density,
    theta_c_curve,
)

__all__ = [name for name in dir() if not name.startswith("_")] + [
    "__version__"
]
