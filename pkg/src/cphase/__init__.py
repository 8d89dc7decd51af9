"""Simulation, tomography and model fitting for a linear-optics C-Phase gate."""

from .core import (
    BASIS_ORDER,
    chsh_fidelity_check,
    density,
    fidelity,
    fidelity_pure,
    log_negativity,
    pauli_basis,
    product_state,
    tensor,
)
from .gate import (
    GateConfig,
    apply_gate,
    apply_gate_normalized,
    build_operators,
    check_alignment,
    hom_scan,
    ideal_cphase,
    ideal_config,
    load_config,
    overlap_quality,
    visibility,
)
from .qpt import ideal_chi, process_fidelity, reconstruct_chi

__version__ = "0.1.0"
