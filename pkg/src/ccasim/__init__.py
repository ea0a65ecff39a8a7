"""Microwave coupled-cavity array with embedded transmon qubits.

Band structure, atom-photon bound states, two-excitation spectra,
transmission, Kerr power calibration, and flux-pulse dynamics for a
finite chain of high-impedance resonators, plus the circuit-level
parameter derivations tying them to element values.
"""

__version__ = "0.1.0"

from .boundstate import (
    BoundStateSolution,
    TwoAtomBoundStates,
    existence_check,
    localization_length,
    melting_cond,
    self_energy,
    solve_single_bs,
    solve_two_atom_bs,
)
from .circuit import (
    CircuitParams,
    FluxCalibration,
    QubitCircuit,
    derive_lattice_params,
    derive_qubit_params,
    omega_q_of_flux,
)
from .dynamics import (
    ChevronResult,
    DynamicsResult,
    FluxSegment,
    PulseSchedule,
    evolve,
    released_population,
    swap_chevron,
)
from .errors import (
    CalibrationError,
    ConfigError,
    NoBoundStateError,
    NoDiscreteStateError,
    NumericalError,
)
from .lattice import ModeSet, dispersion_circuit, mode_frequencies, mode_linewidths
from .params import HamiltonianModel, LatticeParams, QubitParams
from .presets import preset_table1, table1_circuit, table1_lattice, table1_model
from .spectra import (
    SpectrumResult,
    TwoExcitationResult,
    build_and_diag_1ex,
    build_and_diag_2ex,
    disorder_ensemble,
    dressed_anharmonicity,
    zz_interaction,
)
from .transport import (
    CrosstalkModel,
    KerrResponse,
    TransmissionTrace,
    apply_crosstalk,
    fit_kerr,
    kerr_response,
    transmission_linear,
)

__all__ = [
    "__version__",
    "BoundStateSolution",
    "CalibrationError",
    "ChevronResult",
    "CircuitParams",
    "ConfigError",
    "CrosstalkModel",
    "DynamicsResult",
    "FluxCalibration",
    "FluxSegment",
    "HamiltonianModel",
    "KerrResponse",
    "LatticeParams",
    "ModeSet",
    "NoBoundStateError",
    "NoDiscreteStateError",
    "NumericalError",
    "PulseSchedule",
    "QubitCircuit",
    "QubitParams",
    "SpectrumResult",
    "TransmissionTrace",
    "TwoAtomBoundStates",
    "TwoExcitationResult",
    "apply_crosstalk",
    "build_and_diag_1ex",
    "build_and_diag_2ex",
    "derive_lattice_params",
    "derive_qubit_params",
    "disorder_ensemble",
    "dispersion_circuit",
    "dressed_anharmonicity",
    "evolve",
    "existence_check",
    "fit_kerr",
    "kerr_response",
    "localization_length",
    "melting_cond",
    "mode_frequencies",
    "mode_linewidths",
    "omega_q_of_flux",
    "preset_table1",
    "released_population",
    "self_energy",
    "solve_single_bs",
    "solve_two_atom_bs",
    "swap_chevron",
    "table1_circuit",
    "table1_lattice",
    "table1_model",
    "transmission_linear",
    "zz_interaction",
]
