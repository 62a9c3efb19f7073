"""Steady-state load flow for coupled electricity, gas and heat networks."""
from .assembly import EquationSystem, assemble_system, finite_difference_jacobian
from .coupling import FREE, Coupling, CouplingKind, CouplingParams
from .equations import (
    gas_pipe_constant,
    heat_pipe_constant,
    heat_pipe_temperature_out,
    line_power_flows,
)
from .guess import GuessConfig, InitialGuess, default_initial_guess
from .model import (
    Carrier,
    CarrierParams,
    Dummy,
    GasParams,
    GasPipe,
    HeatParams,
    HeatPipe,
    Link,
    Network,
    NetworkError,
    Node,
    Terminal,
    TransmissionLine,
    build_network,
    registry_lookup,
)
from .solver import SolveResult, SolverConfig, SolveStatus, newton_solve, solve_network
from .wellposedness import (
    TEMPLATES,
    BoundaryConditionSet,
    apply_template,
    check_square,
    count_dofs,
    jacobian_rank_probe,
)

__version__ = "0.1.0"
