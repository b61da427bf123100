"""Ultra-long-range Rb(5S)-Rb(nS) Rydberg molecules: mean-field binding model and spectroscopic fits."""

__version__ = "0.1.0"

from .constants import DEFAULT_CONSTANTS, PhysicalConstants, energy_au_to_mhz, energy_mhz_to_au, reduced_mass_rb2
from .potential import ScatteringModel, build_potential, local_momentum, scattering_length, validity_check
from .vibrational import numerov_bound_states, rotational_constant, select_outer_well_levels, solve_bound_states
from .wavefunction import (
    HYDROGEN,
    RB_NS_DEFECTS,
    QuantumDefectModel,
    RadialGrid,
    compute_wavefunction,
    probability_density_s,
    quantum_defect,
    rydberg_energy,
)
from .analysis import (
    BindingEnergyDatum,
    fit_lifetime,
    fit_line,
    fit_scattering_length,
    fit_stark,
    model_binding_energies,
)
