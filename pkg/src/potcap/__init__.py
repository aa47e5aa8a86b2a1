"""Numerical laboratory for the (V, inf)-capacity of compact sets.

Modules
-------
geometry
    Domains, grids, compact sets, regularized distances and the transition ``H``.
rearrange
    Rearrangements, Lorentz norms and the refinement membership test.
capacity
    The capacity norm, cutoff families, estimators and the density construction.
solver
    Truncated-potential finite differences, the radial solver and the Kato check.
experiments
    Dichotomy and removability runs built on the solver.
cli
    The ``potcap`` command-line harness.
"""

from .capacity import (
    CapacityEstimate,
    TestFunctionField,
    VNorm,
    build_cutoff,
    combine_cutoffs,
    decay_rates,
    density_approximation,
    estimate_capacity,
    irregular_set,
    vnorm,
)
from .experiments import DichotomyReport, dichotomy_experiment, removability_check
from .geometry import CompactSetSpec, Domain, Grid, distance_to_set, regularized_distance, transition_H
from .potential import PotentialSpec
from .rearrange import (
    LorentzNorm,
    Rearrangement,
    WeightedSamples,
    decreasing_rearrangement,
    distribution_function,
    double_star,
    lorentz_norm,
    membership_diagnosis,
)
from .solver import (
    MeasureData,
    RadialMesh,
    TransportField,
    TruncatedSolveResult,
    kato_check,
    radial_solve,
    solve_truncated,
    truncate_potential,
    weak_residual,
)

__all__ = [
    "CapacityEstimate", "CompactSetSpec", "DichotomyReport", "Domain", "Grid", "LorentzNorm",
    "MeasureData", "PotentialSpec", "RadialMesh", "Rearrangement", "TestFunctionField",
    "TransportField", "TruncatedSolveResult", "VNorm", "WeightedSamples", "build_cutoff",
    "combine_cutoffs", "decay_rates", "decreasing_rearrangement", "density_approximation",
    "dichotomy_experiment", "distance_to_set", "distribution_function", "double_star",
    "estimate_capacity", "irregular_set", "kato_check", "lorentz_norm", "membership_diagnosis",
    "radial_solve", "regularized_distance", "removability_check", "solve_truncated",
    "transition_H", "truncate_potential", "vnorm", "weak_residual",
]
