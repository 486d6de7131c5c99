"""Measurement-device-independent characterization of entanglement and quantum memories."""

__version__ = "0.1.0"

from .bases import gell_mann_basis, heisenberg_weyl, qudit_kit
from .decomp import LocalDecomposition, ProbabilityTable, accept, decompose, mdi_value
from .game import (
    Faithful,
    ProductLosr,
    Separable,
    Trivial,
    eve_equivalent_state,
    postselected_states,
    run_protocol,
)
from .memory import memory_witness_value, quantify_memory, run_memory_protocol
from .numerics import DimensionError, partial_trace, partial_transpose
from .qkd import key_reports, run_qkd
from .quantum import ChoiState, DensityMatrix, Povm, max_entangled, random_density, random_separable
from .sdp import mdi_quantify_state, negativity, robustness_ppt
from .witness import Witness, bell_overlap, linear_mdi, swap_witness, transpose_nonlinear
