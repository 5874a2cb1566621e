"""Semiclassical trace identities on exactly solvable systems.

The package pairs exact quantum spectra with periodic-component
expansions of the smoothed spectral density and certifies their
agreement as h decreases.  The linear-algebra layer (symplectic,
density) works for any Hamiltonian handed a monodromy matrix; the
spectra and sweep layers are specialized to decoupled oscillators and
flat-torus lattices, where completeness of the eigenvalue enumeration
can be guaranteed structurally.
"""

from .berrytabor import (
    ActionAngleSystem,
    IntegrableModelCheck,
    PeriodicTorus,
    check_integrable_normal_form,
    curvature_from_frequencies,
    curvature_from_parametrization,
    enumerate_tori,
    isochronicity_bracket,
    kinetic_actions,
    model_monodromy,
    quadratic_actions,
    torus_amplitude,
    torus_phase_candidates,
    torus_phase_integer,
)
from .config import RunConfig, load_config, parse_config
from .density import (
    BranchTrack,
    DensityMethod,
    DensityResult,
    assemble_component_amplitude,
    branch_track,
    density_general,
    density_nondegenerate,
    density_periodic_flow,
    density_simple,
    density_weyl,
    oscillator_density_closed,
    reduced_poincare_det,
)
from .dynamics import (
    HamiltonianSystem,
    QuadraticHamiltonian,
    action,
    flow,
    liouville_measure,
    monodromy,
    oscillator_shell_measure,
    resonant_shell_measure,
)
from .errors import (
    CalibrationError,
    ConfigError,
    EnergyDriftError,
    IncompleteSpectrumError,
    MonteCarloError,
    NonPeriodicError,
    RankInstabilityError,
    SemitraceError,
    SpectrumError,
    SymplecticityError,
    VanishingCurvatureError,
)
from .harness import (
    BumpWindow,
    EnergyCutoff,
    Spectrum,
    SweepComponent,
    SweepReport,
    SweepRow,
    TriangleWindow,
    calibrate_phases,
    components_payload,
    convolution_identity_check,
    load_report_csv,
    oscillator_components,
    oscillator_spectrum,
    quantum_density,
    report_csv_lines,
    run_sweep,
    semiclassical_density,
    torus_components,
    torus_spectrum,
    validate_window_pair,
    window_from_quadrature,
)
from .orbits import (
    ComponentLabel,
    FirstIntegral,
    FirstIntegralFamily,
    FrequencyClass,
    FrequencyClassification,
    PeriodSet,
    PeriodicComponent,
    classify_frequencies,
    clean_flow_check,
    enumerate_periods,
    is_group_nondegenerate,
    is_nondegenerate,
    is_normal,
    is_shell_normal,
    kernel_square_saturates,
    moment_map,
    oscillator_component,
    oscillator_periodic_point,
    oscillator_symmetry_family,
    oscillator_tangent_basis,
    quadratic_integral_family,
    resonant_indices,
    resonant_subspace,
)
from .symplectic import (
    EigenspaceSplit,
    Monodromy,
    generalized_eigenspace,
    invariant_split,
    isotropic_pair_bound,
    restricted_det,
    restricted_form_det,
    shell_refine,
    symplectic_defect,
    symplectic_j,
)

__version__ = "0.1.0"

__all__ = [
    "ActionAngleSystem",
    "BranchTrack",
    "BumpWindow",
    "CalibrationError",
    "ComponentLabel",
    "ConfigError",
    "DensityMethod",
    "DensityResult",
    "EigenspaceSplit",
    "EnergyCutoff",
    "EnergyDriftError",
    "FirstIntegral",
    "FirstIntegralFamily",
    "FrequencyClass",
    "FrequencyClassification",
    "HamiltonianSystem",
    "IncompleteSpectrumError",
    "IntegrableModelCheck",
    "Monodromy",
    "MonteCarloError",
    "NonPeriodicError",
    "PeriodSet",
    "PeriodicComponent",
    "PeriodicTorus",
    "QuadraticHamiltonian",
    "RankInstabilityError",
    "RunConfig",
    "SemitraceError",
    "Spectrum",
    "SpectrumError",
    "SweepComponent",
    "SweepReport",
    "SweepRow",
    "SymplecticityError",
    "TriangleWindow",
    "VanishingCurvatureError",
    "action",
    "assemble_component_amplitude",
    "branch_track",
    "calibrate_phases",
    "check_integrable_normal_form",
    "classify_frequencies",
    "clean_flow_check",
    "components_payload",
    "convolution_identity_check",
    "curvature_from_frequencies",
    "curvature_from_parametrization",
    "density_general",
    "density_nondegenerate",
    "density_periodic_flow",
    "density_simple",
    "density_weyl",
    "enumerate_periods",
    "enumerate_tori",
    "flow",
    "generalized_eigenspace",
    "invariant_split",
    "is_group_nondegenerate",
    "is_nondegenerate",
    "is_normal",
    "is_shell_normal",
    "isochronicity_bracket",
    "isotropic_pair_bound",
    "kernel_square_saturates",
    "kinetic_actions",
    "liouville_measure",
    "load_config",
    "load_report_csv",
    "model_monodromy",
    "moment_map",
    "monodromy",
    "oscillator_component",
    "oscillator_components",
    "oscillator_density_closed",
    "oscillator_periodic_point",
    "oscillator_shell_measure",
    "oscillator_spectrum",
    "oscillator_symmetry_family",
    "oscillator_tangent_basis",
    "parse_config",
    "quadratic_actions",
    "quadratic_integral_family",
    "quantum_density",
    "reduced_poincare_det",
    "report_csv_lines",
    "resonant_indices",
    "resonant_shell_measure",
    "resonant_subspace",
    "restricted_det",
    "restricted_form_det",
    "run_sweep",
    "semiclassical_density",
    "shell_refine",
    "symplectic_defect",
    "symplectic_j",
    "torus_amplitude",
    "torus_components",
    "torus_phase_candidates",
    "torus_phase_integer",
    "torus_spectrum",
    "validate_window_pair",
    "window_from_quadrature",
]
