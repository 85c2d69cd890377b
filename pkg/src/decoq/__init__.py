"""decoq: short-time decoherence scales t_d for bipartite quantum systems.

The onset scale comes from the second derivative of the linear entropy
s = 1 - tr rho_a^2 at t = 0; every closed form is checked against exact
evolution of the composite state on a truncated Hilbert space.
"""

from .entropy import (
    EntropySeries,
    InitialCondition,
    TdResult,
    fd_derivative,
    linear_entropy,
    s2_direct,
    s2_eq3,
    td_from_s2,
)
from .errors import (
    CapacityError,
    ConsistencyError,
    DecoqError,
    PrecisionError,
    TruncationError,
    UsageError,
    ValidationError,
)
from .evolution import estimate_td, run_entropy_series
from .kernels import BACKEND
from .linalg import QOperator, SpaceLayout, commutator, evolve_unitary, kron, partial_trace, trace_of_product
from .models import (
    BathMode,
    CavityThermalSpec,
    PureDephasingSpec,
    SpinBosonSpec,
    ThermalMode,
    b2_expectation,
    build_cavity_thermal,
    build_pure_dephasing,
    build_spin_boson_eff,
    build_spin_boson_full,
    lie_transform_residual,
    td_cavity,
    td_pure_dephasing,
    td_spin_boson,
    td_spin_boson_limit,
)
from .states import BosonStateSpec, QubitStateSpec, ladder_ops, make_boson, make_qubit, pauli_ops, quadrature_stats

__version__ = "0.1.0"
