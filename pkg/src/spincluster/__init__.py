"""Simulator and analysis toolkit for quantum-dot spin-photon
cluster-state generation: cycle process maps from a central-spin model,
synthetic polarization tomography, and cluster figures of merit."""

from .centralspin import (
    PhysicalParams,
    ensemble_evolution,
    evolution_tensor,
    larmor_period,
    load_params,
    sample_overhauser,
)
from .cluster import (
    SweepRow,
    WitnessSet,
    le_length,
    localizable_entanglement,
    pulse_spacing,
    sweep_field,
    witnesses,
)
from .cycle import (
    CycleResult,
    EmissionMap,
    build_process_map,
    cycle_given_photon,
    emission_map,
)
from .indist import (
    EmitterTimescales,
    hom_from_areas,
    indistinguishability,
)
from .quantum import (
    ProcessMap,
    bloch_to_density,
    choi_of,
    density_to_bloch,
    ideal_cycle_map,
    process_fidelity,
    project_to_physical,
    state_fidelity,
)
from .tomography import (
    DcpTrace,
    TomographyDataset,
    generate_dataset,
    reconstruct_map,
    simulate_dcp,
)

__version__ = "0.1.0"

__all__ = [
    "PhysicalParams",
    "ProcessMap",
    "CycleResult",
    "DcpTrace",
    "EmissionMap",
    "EmitterTimescales",
    "SweepRow",
    "TomographyDataset",
    "WitnessSet",
    "bloch_to_density",
    "build_process_map",
    "choi_of",
    "cycle_given_photon",
    "density_to_bloch",
    "emission_map",
    "ensemble_evolution",
    "evolution_tensor",
    "generate_dataset",
    "hom_from_areas",
    "ideal_cycle_map",
    "indistinguishability",
    "larmor_period",
    "le_length",
    "load_params",
    "localizable_entanglement",
    "process_fidelity",
    "project_to_physical",
    "pulse_spacing",
    "reconstruct_map",
    "sample_overhauser",
    "simulate_dcp",
    "state_fidelity",
    "sweep_field",
    "witnesses",
]
