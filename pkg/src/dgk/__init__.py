"""Geometry of Gaussian detector states: information metrics, reconstructed spacetime metrics,
lattice curvature and deformation-field dynamics."""

__version__ = "0.1.0"

from .errors import (
    ConditioningError,
    ConfigError,
    DegeneracyError,
    DgkError,
    DimensionError,
    DomainError,
    IntegrationError,
    LatticeMismatchError,
    MarginError,
)
from .gaussian_states import (
    SpatialDetectorParams,
    TemporalDetectorParams,
    density,
    eval_state,
    fidelity,
    gaussian_kl,
    normalization,
    overlap,
)
from .info_geometry import (
    Coordinate,
    ParamChart,
    QGTResult,
    berry_connection,
    chart_metric,
    qgt_numeric,
    spatial_metric_closed,
    state_space_connection,
    temporal_metric_closed,
)
from .lattice import Lattice
from .profiles import Profile
from .metric_field import (
    DetectorFieldGrid,
    MetricField,
    assemble_lorentzian,
    metric_variation_lorentzian,
    metric_variation_spatial,
    metric_variation_temporal,
    pullback_lapse,
    pullback_spatial,
    reconstruct,
)
from .analytic import AnalyticMetric, preset
from .curvature import CurvatureBundle, ball_volume, curvature_bundle, holonomy_defect, loop_bivector
from .dynamics import (
    ChartFieldMetric,
    ConstantFieldMetric,
    Couplings,
    DeformationPotentialSpec,
    FieldConfig,
    ScalarKineticMetric,
    ScalarSectorSpec,
    StressEnergyField,
    canonical_scalar_reduce,
    conservation_check,
    consistency_functional,
    deformation_potential,
    einstein_residual,
    eom_projection,
    frw_solve,
    quadratic_expansion,
    sigma_residual,
    stress_energy,
)
