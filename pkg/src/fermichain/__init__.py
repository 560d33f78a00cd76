"""Graded observable algebras, thermal states, and stability checks on
finite fermion chains.

Everything lives on a chain of at most twelve sites, represented exactly in
the occupation basis.  The layers, bottom to top:

- :mod:`fermichain.regions` — site subsets of a chain, the index language
  every other layer speaks;
- :mod:`fermichain.car` — creation and annihilation operators with the
  anticommutation relations, the fermion grading, local subalgebras with
  their trace-orthogonal monomial bases, conditional expectations, and
  commutants;
- :mod:`fermichain.potentials` — interactions as families of local terms,
  their standard form, local and total Hamiltonians;
- :mod:`fermichain.states` — density states: tracial, Gibbs, decoupled
  equilibria, restrictions, noneven perturbations, and a vector state that
  is even outside one site yet maximally noneven on it;
- :mod:`fermichain.entropy` — relative and conditional entropy, local free
  energy;
- :mod:`fermichain.stability` — variational checks of local thermal
  stability, the constrained free-energy maximizer, and the pipeline
  showing noneven states lose free energy strictly;
- :mod:`fermichain.probes` — symmetry probes: clustering, grading
  asymmetry, odd-correlation scans;
- :mod:`fermichain.cli` — the ``fermichain`` command.

Heavy kernels (operator composition and batched expectations over monomial
families) run through a compiled extension when it is available and fall
back to pure NumPy otherwise; see :mod:`fermichain.kernels`.
"""

from .car import (AlgebraElement, GradedSplit, Monomial, MonomialBasis,
                  annihilator, commutant_basis, conditional_expectation,
                  creator, even_odd_split, grading_unitary, monomial_basis,
                  number_operator, random_element, small_representation,
                  theta)
from .entropy import (EntropyValue, conditional_entropy,
                      conditional_free_energy, relative_entropy,
                      restricted_relative_entropy)
from .kernels import BACKEND
from .potentials import (MODELS, LocalHamiltonian, Potential,
                         PotentialReport, build_model, derivation_apply,
                         hopping_model, local_hamiltonian,
                         potential_from_records, potential_records, prune,
                         random_standard_potential, raw_number_model,
                         standardize, total_hamiltonian, tv_model,
                         validate_potential)
from .probes import (ProbeResult, cluster_coefficient, grading_asymmetry,
                     purely_imaginary_check, scan_odd_correlations)
from .regions import MAX_SITES, Region
from .stability import (FeasibleFamily, MaximizerDidNotConverge,
                        MaximizerInfo, StabilityReport, feasible_sampler,
                        free_energy, lts_check, lts_maximizer,
                        prop4_pipeline)
from .states import (DensityState, RestrictedState, gibbs_state,
                     kms_residual, max_perturbation_strength,
                     noneven_perturbation, odd_direction, perturbed_state,
                     product_check, random_pair_panel, remark2_construct,
                     restrict, snapshot, tracial_state)

__version__ = "0.1.0"

__all__ = [
    "AlgebraElement", "BACKEND", "DensityState", "EntropyValue",
    "FeasibleFamily", "GradedSplit", "LocalHamiltonian", "MAX_SITES",
    "MODELS", "MaximizerDidNotConverge", "MaximizerInfo", "Monomial",
    "MonomialBasis", "Potential", "PotentialReport", "ProbeResult",
    "Region", "RestrictedState", "StabilityReport", "annihilator",
    "build_model", "cluster_coefficient", "commutant_basis",
    "conditional_entropy", "conditional_expectation",
    "conditional_free_energy", "creator", "derivation_apply",
    "even_odd_split", "feasible_sampler", "free_energy", "gibbs_state",
    "grading_asymmetry", "grading_unitary", "hopping_model", "kms_residual",
    "local_hamiltonian", "lts_check", "lts_maximizer",
    "max_perturbation_strength", "monomial_basis", "noneven_perturbation",
    "number_operator", "odd_direction", "perturbed_state",
    "potential_from_records", "potential_records", "product_check",
    "prop4_pipeline", "prune", "purely_imaginary_check", "random_element",
    "random_pair_panel", "random_standard_potential", "raw_number_model",
    "relative_entropy", "remark2_construct", "restrict",
    "restricted_relative_entropy", "scan_odd_correlations",
    "small_representation", "snapshot", "standardize", "theta",
    "total_hamiltonian", "tracial_state", "tv_model", "validate_potential",
    "__version__",
]
