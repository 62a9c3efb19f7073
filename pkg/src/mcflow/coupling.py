"""Coupling-unit models: electrolyser, power-to-gas unit and electrical boiler.

Every residual is written as ``lhs - rhs`` in SI units (W, kg/s, K) and
vanishes at a consistent operating point.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

FREE = "free"


class CouplingKind(str, enum.Enum):
    ELECTROLYSER = "electrolyser"
    P2G = "p2g"
    BOILER = "boiler"


@dataclass(frozen=True)
class CouplingParams:
    """Conversion efficiencies of a coupling unit.

    ``eta_h`` is the share of converted power released as heat. Pass
    :data:`FREE` to let the solver determine it (electrolyser only).
    ``hhv`` falls back to the network's gas HHV when omitted.
    """

    eta: float
    eta_h: float | str = 0.0
    hhv: float | None = None

    def __post_init__(self):
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError(f"eta must lie in [0, 1], got {self.eta}")
        if self.eta_h != FREE:
            if isinstance(self.eta_h, str) or not 0.0 <= self.eta_h <= 1.0:
                raise ValueError(f"eta_h must lie in [0, 1] or be {FREE!r}, got {self.eta_h!r}")
        if self.hhv is not None and self.hhv <= 0:
            raise ValueError("hhv must be positive")

    @property
    def free(self) -> bool:
        return self.eta_h == FREE


@dataclass(frozen=True)
class Coupling:
    kind: CouplingKind
    params: CouplingParams

    def __post_init__(self):
        object.__setattr__(self, "kind", CouplingKind(self.kind))
        if self.params.free and self.kind is not CouplingKind.ELECTROLYSER:
            raise ValueError("a free heat efficiency is only defined for electrolysers")


def electrolyser_energy_balance_residual(P, q, delta_phi, eta, hhv):
    """eta*P = HHV*q + dphi."""
    return eta * P - hhv * q - delta_phi


def electrolyser_residual_heat_residual(P, delta_phi, eta_h, eta):
    """Only a fixed share eta_h of the converted power leaves as heat."""
    return eta_h * eta * P - delta_phi


def p2g_residual(P, q, eta, hhv):
    return eta * P - hhv * q


def eboiler_residual(P, delta_phi, eta):
    return eta * P - delta_phi


def coupling_heat_terminal_residual(m, T_s, T_r, delta_phi, c_p):
    """Heat handed to the network by the coupling's heat link."""
    return c_p * m * (T_s - T_r) - delta_phi
