"""Numerical toolkit for doubly-weighted almost periodic analysis.

Weight-class algebra, truncated weighted ergodic means, Bohr spectra with
the empty-or-equal dichotomy, convolution stability of decaying-in-mean
perturbations, and fixed-point mild solutions of hyperbolic nonautonomous
systems.
"""

from .backend import USE_NUMBA, backend_name
from .convolution import Kernel, convolve, convolve_at, convolve_trace, verify_pap0_stability
from .errors import PapkitError
from .evolution import (
    BlockMatrix,
    EvolutionProblem,
    Forcing,
    MildSolution,
    propagate,
    solve_mild,
    solver_constant,
    stable_green,
    unstable_green,
    verify_dichotomy,
    verify_solution_pap,
)
from .limits import MeanEstimate, Schedule
from .polyfactor import expand_factors, polynomial_weight_report
from .signals import (
    AffinePAPMap,
    ErgodicPerturbation,
    PAPFunction,
    Trace,
    TrigPolynomial,
    check_almost_periodic,
    compose_lipschitz,
    decompose,
    trace_weighted_mean_levels,
)
from .spectral import (
    OscillationCheck,
    SpectrumReport,
    bohr_transform,
    classical_mean,
    doubly_weighted_bohr,
    doubly_weighted_mean,
    oscillatory_decay,
    scan_spectrum,
    translated_mean,
    translation_invariance_probe,
)
from .weights import (
    Weight,
    WeightClassReport,
    classify_weight,
    enlarged_mass_ratio,
    equivalent_weights,
    mass_ratio_inf,
    mass_ratio_limit,
    mass_ratio_sup,
    translated_mass_ratio,
    weight_mass,
)

__version__ = "0.1.0"

__all__ = [
    "USE_NUMBA",
    "backend_name",
    "AffinePAPMap",
    "BlockMatrix",
    "ErgodicPerturbation",
    "EvolutionProblem",
    "Forcing",
    "Kernel",
    "MeanEstimate",
    "MildSolution",
    "OscillationCheck",
    "PAPFunction",
    "PapkitError",
    "Schedule",
    "SpectrumReport",
    "Trace",
    "TrigPolynomial",
    "Weight",
    "WeightClassReport",
    "bohr_transform",
    "check_almost_periodic",
    "classical_mean",
    "classify_weight",
    "compose_lipschitz",
    "convolve",
    "convolve_at",
    "convolve_trace",
    "decompose",
    "doubly_weighted_bohr",
    "doubly_weighted_mean",
    "enlarged_mass_ratio",
    "equivalent_weights",
    "expand_factors",
    "mass_ratio_inf",
    "mass_ratio_limit",
    "mass_ratio_sup",
    "oscillatory_decay",
    "polynomial_weight_report",
    "propagate",
    "scan_spectrum",
    "solve_mild",
    "solver_constant",
    "stable_green",
    "trace_weighted_mean_levels",
    "translated_mass_ratio",
    "translated_mean",
    "translation_invariance_probe",
    "unstable_green",
    "verify_dichotomy",
    "verify_pap0_stability",
    "verify_solution_pap",
    "weight_mass",
]
