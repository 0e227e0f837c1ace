"""Screening toolkit for glob-top encapsulants on pressure-molded packages.

The package answers a packaging question: which encapsulant material, and how
thick, keeps the dome over a MEMS die from deflecting more than the die can
tolerate while the package is overmolded at tens of atmospheres.  It combines
a closed-form thin-shell deflection model, an axisymmetric shell finite
element solver, a 9-run orthogonal screening plan with variance
decomposition, and constraint-based thickness selection, wired together
behind a config-driven study pipeline and CLI.
"""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    FitError,
    GlobtopError,
    InputDomainError,
    MeshError,
    ResponderError,
    SolverError,
    StageError,
)
from .geometry import (
    CapGeometry,
    REFERENCE_GEOMETRY,
    ThinShellWarning,
    cap_from_config,
    from_radius_angle,
    solve_cap,
    thinness_ratio,
)
from .materials import (
    Material,
    MaterialLibrary,
    default_library,
    load_library,
    load_library_file,
    serialize_library,
)
from .shell_model import (
    DeflectionProfile,
    ShellCase,
    apex_coefficient,
    apex_deflection,
    meridional_v,
    profile,
    radial_w,
)
from .doe import (
    ExperimentPlan,
    Factor,
    L9_CODES,
    RunResult,
    RunSpec,
    audit_orthogonality,
    build_l9,
    default_plan,
    is_orthogonal,
    material_factor,
    plan_to_csv,
    read_responses_csv,
    realize_responses,
    results_to_csv,
)
from .stats import (
    AnovaTable,
    EffectTest,
    ScreeningFit,
    anova_from_components,
    anova_table,
    effect_tests,
    f_lower_tail,
    f_upper_tail,
    fit_screening_model,
    regularized_incomplete_beta,
)
from .fem import (
    ConvergenceReport,
    FemSolution,
    ShellMesh,
    converge,
    mesh_cap,
    solve_case,
)
from .screening import (
    ScreeningCriteria,
    Verdict,
    classify,
    desirability,
    min_thickness,
    screen,
    thickness_profile,
)
from .report import (
    StudyConfig,
    StudyReport,
    compare_columns,
    parse_config,
    parse_config_file,
    run_study,
)
from .units import ATM_PA, atm_to_pa, gpa_to_pa, pa_to_atm

__all__ = [
    "__version__",
    "ATM_PA",
    "AnovaTable",
    "CapGeometry",
    "ConfigError",
    "ConvergenceReport",
    "DeflectionProfile",
    "EffectTest",
    "ExperimentPlan",
    "Factor",
    "FemSolution",
    "FitError",
    "GlobtopError",
    "InputDomainError",
    "L9_CODES",
    "Material",
    "MaterialLibrary",
    "MeshError",
    "REFERENCE_GEOMETRY",
    "ResponderError",
    "RunResult",
    "RunSpec",
    "ScreeningCriteria",
    "ScreeningFit",
    "ShellCase",
    "ShellMesh",
    "SolverError",
    "StageError",
    "StudyConfig",
    "StudyReport",
    "ThinShellWarning",
    "Verdict",
    "anova_from_components",
    "anova_table",
    "apex_coefficient",
    "apex_deflection",
    "atm_to_pa",
    "audit_orthogonality",
    "build_l9",
    "cap_from_config",
    "classify",
    "compare_columns",
    "converge",
    "default_library",
    "default_plan",
    "desirability",
    "effect_tests",
    "f_lower_tail",
    "f_upper_tail",
    "fit_screening_model",
    "from_radius_angle",
    "gpa_to_pa",
    "is_orthogonal",
    "load_library",
    "load_library_file",
    "material_factor",
    "mesh_cap",
    "meridional_v",
    "min_thickness",
    "pa_to_atm",
    "parse_config",
    "parse_config_file",
    "plan_to_csv",
    "profile",
    "radial_w",
    "read_responses_csv",
    "realize_responses",
    "regularized_incomplete_beta",
    "results_to_csv",
    "run_study",
    "screen",
    "serialize_library",
    "solve_cap",
    "solve_case",
    "thickness_profile",
    "thinness_ratio",
]
