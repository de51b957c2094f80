"""Semiclassical grids, propagators, phase-space transforms, coupling costs."""

from .dynamics import (
    coupled_quantum_advance,
    doubled_grid,
    hartree_energy,
    hartree_potential,
    hartree_step,
    partial_trace,
    permute_particles,
    split_step_linear,
    split_step_nbody,
)
from .grids import (
    DensityMatrix,
    GridSpec,
    GuardBandError,
    ResourceCapError,
    WaveFunction,
    check_guard_band,
    guard_band_mass,
    load_state,
    memory_cap_bytes,
    save_state,
    trace_product,
)
from .metrics import (
    coupling_to_state_mixture,
    dobrushin_quantum_functional,
    mk_eps_lower,
    mk_eps_upper,
    product_coupling_symbol,
    qp_cost_trace,
    reduced_density,
    state_density_matrix,
    symbol_dobrushin_cost,
    symmetrize_initial_coupling,
)
from .phase_space import (
    PhaseSpaceFunction,
    SymbolMeasure,
    coherent_product_state,
    coherent_state,
    husimi_transform,
    husimi_values,
    smooth_wigner_to,
    toeplitz_operator,
    toeplitz_trace_against,
    wigner_transform,
    write_phase_space_csv,
)

__all__ = [
    "DensityMatrix",
    "GridSpec",
    "GuardBandError",
    "PhaseSpaceFunction",
    "ResourceCapError",
    "SymbolMeasure",
    "WaveFunction",
    "check_guard_band",
    "coherent_product_state",
    "coherent_state",
    "coupled_quantum_advance",
    "coupling_to_state_mixture",
    "dobrushin_quantum_functional",
    "doubled_grid",
    "guard_band_mass",
    "hartree_energy",
    "hartree_potential",
    "hartree_step",
    "husimi_transform",
    "husimi_values",
    "load_state",
    "memory_cap_bytes",
    "mk_eps_lower",
    "mk_eps_upper",
    "partial_trace",
    "permute_particles",
    "product_coupling_symbol",
    "qp_cost_trace",
    "reduced_density",
    "save_state",
    "smooth_wigner_to",
    "split_step_linear",
    "split_step_nbody",
    "state_density_matrix",
    "symbol_dobrushin_cost",
    "symmetrize_initial_coupling",
    "toeplitz_operator",
    "toeplitz_trace_against",
    "trace_product",
    "wigner_transform",
    "write_phase_space_csv",
]
