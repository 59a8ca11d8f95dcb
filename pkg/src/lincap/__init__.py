"""Channel capacity of entanglement-assisted linear-optical communication.

Submodules
----------
fock
    Fock bases and pure multi-photon states.
linop
    Mode unitaries, permanents and their lift to the photon-number sector.
channel
    Discrete channels, detector models and Blahut-Arimoto capacity.
optimize
    Multi-start maximization of mutual information over protocol parameters.
protocols
    The two-photon dense-coding protocol, Bell and entanglement-free
    baselines, detector studies and larger-mode extensions.
cli
    ``lincap`` command-line runner.
"""

__version__ = "0.1.0"

from .channel import (  # noqa: E402
    CapacityResult,
    ChannelMatrix,
    DetectorModel,
    blahut_arimoto,
    conditional_matrix,
    mutual_information,
)
from .fock import FockBasis, PureState, basis_state, enumerate_basis, state_from_terms  # noqa: E402
from .linop import lift, permanent, propagate, unitary_from_params  # noqa: E402
from .optimize import OptimizerConfig, ProblemSpec, maximize_capacity, sweep_constraint  # noqa: E402
from .protocols import bell_protocol, canonical_protocol, entanglement_free_baseline  # noqa: E402

__all__ = [
    "__version__",
    "CapacityResult",
    "ChannelMatrix",
    "DetectorModel",
    "FockBasis",
    "OptimizerConfig",
    "ProblemSpec",
    "PureState",
    "basis_state",
    "bell_protocol",
    "blahut_arimoto",
    "canonical_protocol",
    "conditional_matrix",
    "entanglement_free_baseline",
    "enumerate_basis",
    "lift",
    "maximize_capacity",
    "mutual_information",
    "permanent",
    "propagate",
    "state_from_terms",
    "sweep_constraint",
    "unitary_from_params",
]
