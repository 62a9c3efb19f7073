"""Newton-Raphson load-flow solver."""
from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .assembly import EquationSystem, assemble_system, finite_difference_jacobian
from .guess import GuessConfig, InitialGuess, default_initial_guess, guess_from_values
from .linalg import factorize
from .model import Network
from .wellposedness import Verdict, check_square, count_dofs

log = logging.getLogger(__name__)

__all__ = [
    "SolverConfig", "SolveStatus", "SolveResult", "IllPosedError",
    "assemble_system", "default_initial_guess", "newton_solve", "solve_network",
    "finite_difference_jacobian",
]


@dataclass(frozen=True)
class SolverConfig:
    tol: float = 1e-6
    max_iter: int = 50
    damping: float = 1.0
    min_pivot: float = 1e-12
    # heat-pipe flows at or below this abort the iteration
    flow_epsilon: float = 1e-9

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if not 0 < self.damping <= 1:
            raise ValueError("damping must lie in (0, 1]")


class SolveStatus(str, enum.Enum):
    CONVERGED = "Converged"
    MAX_ITERATIONS = "MaxIterations"
    SINGULAR_JACOBIAN = "SingularJacobian"
    DOMAIN_VIOLATION = "DomainViolation"


class IllPosedError(ValueError):
    """The posed system is not square."""

    def __init__(self, verdict: Verdict, n_eq: int, n_unknown: int):
        super().__init__(f"{verdict}: {n_eq} equations, {n_unknown} unknowns")
        self.verdict = verdict


@dataclass
class SolveResult:
    state: np.ndarray
    iterations: int
    residual_history: list[float]
    status: SolveStatus
    system: EquationSystem = field(repr=False)
    message: str = ""
    verdicts: dict = field(default_factory=dict)

    @property
    def converged(self) -> bool:
        return self.status is SolveStatus.CONVERGED

    @property
    def residual_norm(self) -> float:
        return self.residual_history[-1] if self.residual_history else math.nan

    def value(self, label: str) -> float:
        return float(self.state[self.system.registry.index(label)])

    def __getitem__(self, label: str) -> float:
        return self.value(label)

    def as_dict(self) -> dict[str, float]:
        return {s.label: float(v) for s, v in zip(self.system.registry, self.state)}


def newton_solve(system: EquationSystem, guess: InitialGuess | np.ndarray, config: SolverConfig | None = None) -> SolveResult:
    """Undamped (or damped) Newton iteration with a dense LU inner solve.

    Stops once the 2-norm of the residual is at most ``config.tol``.
    """
    cfg = config or SolverConfig()
    n_eq, n_unk = system.shape
    if n_eq != n_unk:
        raise ValueError(f"system is not square: {n_eq} x {n_unk}")
    x0 = guess.values if isinstance(guess, InitialGuess) else guess
    x = system.full_state(x0)
    history: list[float] = []

    def done(status, it, msg=""):
        log.debug("newton stopped: %s after %d iterations (%s)", status.value, it, msg)
        return SolveResult(x, it, history, status, system, msg)

    if np.any(x[system.heat_pipe_flows] < 0):
        return done(SolveStatus.DOMAIN_VIOLATION, 0, "negative heat-pipe flow in the initial guess")

    for it in range(cfg.max_iter + 1):
        F = system.residual(x)
        norm = float(np.linalg.norm(F))
        history.append(norm)
        log.debug("iteration %d: |F| = %.3e", it, norm)
        if not math.isfinite(norm):
            return done(SolveStatus.DOMAIN_VIOLATION, it, "non-finite residual")
        if norm <= cfg.tol:
            return done(SolveStatus.CONVERGED, it)
        if it == cfg.max_iter:
            break
        fac = factorize(system.jacobian(x), cfg.min_pivot)
        if fac.singular:
            return done(SolveStatus.SINGULAR_JACOBIAN, it,
                        f"pivot ratio {fac.pivot_ratio:.3g} below {cfg.min_pivot:g}")
        step = fac.solve(F)
        x = x.copy()
        x[system.unknown] -= cfg.damping * step
        flows = x[system.heat_pipe_flows]
        if np.any(flows <= cfg.flow_epsilon):
            bad = [system.registry[i].label for i in system.heat_pipe_flows[flows <= cfg.flow_epsilon]]
            return done(SolveStatus.DOMAIN_VIOLATION, it + 1, f"heat-pipe flow left the supported direction: {bad}")
    return done(SolveStatus.MAX_ITERATIONS, cfg.max_iter, f"|F| = {history[-1]:.3e} after {cfg.max_iter} iterations")


def solve_network(network: Network, bcs: Mapping[int, float], config: SolverConfig | None = None,
                  guess: InitialGuess | np.ndarray | Mapping[str, float] | None = None,
                  guess_config: GuessConfig | None = None) -> SolveResult:
    """Check squareness, assemble, build the guess and run Newton."""
    verdict = check_square(network, bcs)
    if not verdict.ok:
        raise IllPosedError(verdict, *count_dofs(network, bcs))
    system = assemble_system(network, bcs)
    if guess is None:
        guess = default_initial_guess(network, bcs, guess_config)
    elif isinstance(guess, Mapping):
        guess = guess_from_values(network, guess, bcs, guess_config)
    result = newton_solve(system, guess, config)
    result.verdicts["square"] = verdict
    return result
