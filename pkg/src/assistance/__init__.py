"""Entanglement and tangle of assistance: bounds, brute-force oracles, the
two-qubit channel picture, and monogamy checks for n-qubit states."""

__version__ = "0.1.0"

from .bounds import AssistanceBounds, BoundReport, OptimizerConfig, build_a_blocks, eoa_lower_bound, eoa_upper_bound
from .channel import (
    extract_channel,
    final_chain_check,
    i_measure,
    i_measure_direct,
    normal_form,
    normalize_filter,
)
from .io import dump_state, parse_state_file
from .measures import (
    concurrence_of_assistance_2q,
    i_concurrence,
    linear_entropy,
    sigma_y_chain_lb,
    wootters_concurrence,
)
from .monogamy import MonogamyReport, MonogamyVerifier, monogamy_check, schmidt_compress, tripartite_step_check
from .oracle import DecompositionOracle, OracleConfig, POVMOracle, eoa_oracle, povm_tangle_oracle, tangle_oracle
from .qstate import QState, StateError, mixed, partial_trace, pure

__all__ = [
    "AssistanceBounds",
    "BoundReport",
    "DecompositionOracle",
    "MonogamyReport",
    "MonogamyVerifier",
    "OptimizerConfig",
    "OracleConfig",
    "POVMOracle",
    "QState",
    "StateError",
    "build_a_blocks",
    "concurrence_of_assistance_2q",
    "dump_state",
    "eoa_lower_bound",
    "eoa_oracle",
    "eoa_upper_bound",
    "extract_channel",
    "final_chain_check",
    "i_concurrence",
    "i_measure",
    "i_measure_direct",
    "linear_entropy",
    "mixed",
    "monogamy_check",
    "normal_form",
    "normalize_filter",
    "parse_state_file",
    "partial_trace",
    "povm_tangle_oracle",
    "pure",
    "schmidt_compress",
    "sigma_y_chain_lb",
    "tangle_oracle",
    "tripartite_step_check",
    "wootters_concurrence",
]
