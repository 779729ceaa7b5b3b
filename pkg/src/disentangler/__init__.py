"""Learning which qubit pair to disentangle next from two-qubit reduced states."""

__version__ = "0.1.0"

from .qsim import (  # noqa: E402
    EntanglementPattern,
    Statevector,
    apply_two_qubit_gate,
    haar_random_state,
    parse_pattern,
    reduced_density_pair,
    reduced_density_single,
    sample_pattern_state,
    von_neumann_entropy,
)
from .entanglement import binary_entropy, concurrence, spin_flip  # noqa: E402
from .solver import apply_local_solver, build_disentangling_gate, hermitian_eig4  # noqa: E402
from .env import DisentangleEnv, Observation, StepOutcome  # noqa: E402
from .pqc import CircuitConfig, pqc_forward, pqc_gradient  # noqa: E402
from .policy import (  # noqa: E402
    EncoderConfig,
    PolicyConfig,
    count_parameters,
    init_parameters,
    load_checkpoint,
    save_checkpoint,
)
from .trainer import TrainConfig, evaluate, train  # noqa: E402

__all__ = [
    "EntanglementPattern",
    "Statevector",
    "apply_two_qubit_gate",
    "haar_random_state",
    "parse_pattern",
    "reduced_density_pair",
    "reduced_density_single",
    "sample_pattern_state",
    "von_neumann_entropy",
    "binary_entropy",
    "concurrence",
    "spin_flip",
    "apply_local_solver",
    "build_disentangling_gate",
    "hermitian_eig4",
    "DisentangleEnv",
    "Observation",
    "StepOutcome",
    "CircuitConfig",
    "pqc_forward",
    "pqc_gradient",
    "EncoderConfig",
    "PolicyConfig",
    "count_parameters",
    "init_parameters",
    "load_checkpoint",
    "save_checkpoint",
    "TrainConfig",
    "evaluate",
    "train",
]
