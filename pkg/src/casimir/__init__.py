"""Casimir forces, equilibria and suspension design in immersion fluids.

The package computes zero-temperature fluctuation forces between bodies
separated by a dielectric fluid, in two geometries: layered planar
walls (Lifshitz theory over imaginary frequency) and compact spheres
against walls or each other (spherical-wave scattering with a
log-determinant round trip). On top of the force curves sit equilibrium
finding and classification, parameter sweeps with fold detection,
gravitational suspension heights, equal-height radius pairing, and
two-sphere dicluster design. The `casimir` command line exposes the
same operations; see the README for the config format.
"""

from .constants import C, HBAR, NM
from .equilibria import (
    EquilibriumPoint,
    FoldPoint,
    ParameterScan,
    find_equilibria,
    find_fold,
    scan_parameter,
)
from .materials import (
    Constant,
    Drude,
    Material,
    MaterialDb,
    MaterialLookupError,
    MaterialParseError,
    MaterialValidationError,
    OscillatorSum,
    PerfectMetal,
    Tabulated,
    find_crossings,
    load_materials,
    permittivity_at,
    repulsion_criterion,
)
from .numerics import (
    BracketError,
    ConvergenceError,
    QuadratureError,
    RootResult,
    SemiInfiniteRule,
    find_root_bracketed,
    integrate_semi_infinite,
)
from .planar import (
    DenominatorError,
    Layer,
    LayerStack,
    PlanarGap,
    fresnel_reflection,
    lifshitz_energy_per_area,
    lifshitz_pressure,
    normalized_pressure,
    perfect_metal_pressure,
)
from .scattering import (
    AccuracyError,
    EvaluationError,
    PlateSphereGeometry,
    SphereBody,
    SphereSphereGeometry,
    WaveBasis,
    basis_order,
    casimir_energy,
    casimir_force,
    mie_matrix,
    normalized_force,
    plate_roundtrip,
    translation_matrix,
)
from .suspension import (
    ConfigurationError,
    DiclusterDesign,
    HeightCurve,
    PairingRangeError,
    SuspendedSphere,
    SuspensionResult,
    design_dicluster,
    height_curve,
    net_vertical_force,
    pair_radii,
    solve_heights,
    sphere_weight,
)

__version__ = "0.1.0"

__all__ = [
    "C",
    "HBAR",
    "NM",
    "AccuracyError",
    "BracketError",
    "Constant",
    "ConfigurationError",
    "ConvergenceError",
    "DenominatorError",
    "DiclusterDesign",
    "Drude",
    "EquilibriumPoint",
    "EvaluationError",
    "FoldPoint",
    "HeightCurve",
    "Layer",
    "LayerStack",
    "Material",
    "MaterialDb",
    "MaterialLookupError",
    "MaterialParseError",
    "MaterialValidationError",
    "OscillatorSum",
    "PairingRangeError",
    "ParameterScan",
    "PerfectMetal",
    "PlanarGap",
    "PlateSphereGeometry",
    "QuadratureError",
    "RootResult",
    "SemiInfiniteRule",
    "SphereBody",
    "SphereSphereGeometry",
    "SuspendedSphere",
    "SuspensionResult",
    "Tabulated",
    "WaveBasis",
    "basis_order",
    "casimir_energy",
    "casimir_force",
    "design_dicluster",
    "find_crossings",
    "find_equilibria",
    "find_fold",
    "find_root_bracketed",
    "fresnel_reflection",
    "height_curve",
    "integrate_semi_infinite",
    "lifshitz_energy_per_area",
    "lifshitz_pressure",
    "load_materials",
    "mie_matrix",
    "net_vertical_force",
    "normalized_force",
    "normalized_pressure",
    "pair_radii",
    "perfect_metal_pressure",
    "permittivity_at",
    "plate_roundtrip",
    "repulsion_criterion",
    "scan_parameter",
    "solve_heights",
    "sphere_weight",
    "translation_matrix",
]
