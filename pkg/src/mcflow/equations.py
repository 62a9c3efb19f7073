"""Single-carrier network equations and their analytic derivatives.

Sign conventions:

* electricity: ``P_i + sum_j P_ij = 0`` (terminal power positive when drawn);
* gas and heat mass: inflow - outflow - terminal draw = 0;
* heat energy: the same in/out balance on ``m * T`` for the supply and the
  return circuit, which run in opposite directions through each pipe.

A heat pipe ``i -> j`` owns ``m`` (positive from i to j), ``T_s`` (supply
temperature entering at i) and ``T_r`` (return temperature entering at j).
The temperatures leaving the pipe are not slots; they are replaced by the
exponential heat-loss law, which needs ``m > 0``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .model import GasParams, HeatParams


class DomainError(ValueError):
    """A heat-pipe mass flow is outside the supported direction."""


@dataclass(frozen=True)
class Residual:
    """One scalar equation of the network system.

    ``evaluate(values)`` receives the state restricted to ``slots`` and
    returns the residual and its partial derivatives in the same order.
    """

    label: str
    slots: tuple[int, ...]
    evaluate: Callable[[np.ndarray], tuple[float, np.ndarray]]

    def __call__(self, x: np.ndarray) -> float:
        return self.evaluate(x[list(self.slots)])[0]


# --- electricity -----------------------------------------------------------

def line_power_flows(v_i, delta_i, v_j, delta_j, g, b):
    """Sending and receiving end flows (P_ij, Q_ij, P_ji, Q_ji) of a short line."""
    d = delta_i - delta_j
    c, s = math.cos(d), math.sin(d)
    vv = v_i * v_j
    p_send = g * v_i**2 - vv * (g * c + b * s)
    q_send = -b * v_i**2 - vv * (g * s - b * c)
    p_recv = g * v_j**2 - vv * (g * c - b * s)
    q_recv = -b * v_j**2 + vv * (g * s + b * c)
    return p_send, q_send, p_recv, q_recv


def line_power_jacobian(v_i, delta_i, v_j, delta_j, g, b) -> np.ndarray:
    """4x4 derivatives of :func:`line_power_flows` w.r.t. (v_i, delta_i, v_j, delta_j)."""
    d = delta_i - delta_j
    c, s = math.cos(d), math.sin(d)
    vv = v_i * v_j
    rows = [
        # d/dv_i, d/dv_j, d/d(delta_ij)
        (2 * g * v_i - v_j * (g * c + b * s), -v_i * (g * c + b * s), vv * (g * s - b * c)),
        (-2 * b * v_i - v_j * (g * s - b * c), -v_i * (g * s - b * c), -vv * (g * c + b * s)),
        (-v_j * (g * c - b * s), 2 * g * v_j - v_i * (g * c - b * s), vv * (g * s + b * c)),
        (v_j * (g * s + b * c), -2 * b * v_j + v_i * (g * s + b * c), vv * (g * c - b * s)),
    ]
    return np.array([[dvi, dd, dvj, -dd] for dvi, dvj, dd in rows])


# --- pipes -----------------------------------------------------------------

def gas_pipe_residual(p_i, p_j, q_ij, cg, f):
    return p_i - p_j - f / cg**2 * abs(q_ij) * q_ij


def heat_pipe_hydraulic_residual(p_i, p_j, m_ij, ch, f):
    return p_i - p_j - f / ch**2 * abs(m_ij) * m_ij


def heat_loss_exponent(lam, length, c_p) -> float:
    """k in exp(-k/m) for the pipe heat-loss law [kg/s]."""
    return lam * length / c_p


def heat_pipe_temperature_out(T_in, m, lam, length, c_p, T_a):
    """Temperature at the outlet of a heat pipe with loss to ambient.

    ``m == 0`` returns the continuous limit ``T_a``; a negative flow is not
    supported.
    """
    if m < 0:
        raise DomainError(f"heat pipe flow must be non-negative, got {m}")
    if m == 0:
        return T_a
    return (T_in - T_a) * math.exp(-heat_loss_exponent(lam, length, c_p) / m) + T_a


def _outflow_energy(T_in, m, k, T_a):
    """m * T_out and its partials (d/dT_in, d/dm)."""
    if m < 0:
        raise DomainError(f"heat pipe flow must be non-negative, got {m}")
    if m == 0:
        return 0.0, 0.0, T_a
    e = math.exp(-k / m)
    return m * ((T_in - T_a) * e + T_a), m * e, (T_in - T_a) * e * (1 + k / m) + T_a


def terminal_heat_power_residual(m, T_s, T_r, delta_phi, c_p):
    return c_p * m * (T_s - T_r) - delta_phi


# --- pipe constants --------------------------------------------------------

def _check_geometry(length, diameter):
    if not (length > 0 and diameter > 0):
        raise ValueError("pipe length and diameter must be positive")


def _pipe_constant(length, diameter, rho):
    # Fanning form: dp = 2 f L x^2 / (D rho A^2) = C^-2 f x^2
    area = math.pi * diameter**2 / 4
    return math.sqrt(diameter * rho * area**2 / (2 * length))


def gas_pipe_constant(params: GasParams, length: float, diameter: float) -> float:
    """Gas pipe constant from geometry and the gas density at standard conditions."""
    _check_geometry(length, diameter)
    return _pipe_constant(length, diameter, params.density_n)


def heat_pipe_constant(params: HeatParams, length: float, diameter: float) -> float:
    _check_geometry(length, diameter)
    return _pipe_constant(length, diameter, params.rho)


# --- residual builders -------------------------------------------------------
#
# Builders take slot indices and parameters and return Residual objects. A
# term list of (sign, slot) pairs covers the linear parts of the balances.


def linear_residual(label: str, terms: Sequence[tuple[float, int]]) -> Residual:
    slots = tuple(s for _, s in terms)
    coef = np.array([c for c, _ in terms], dtype=float)

    def evaluate(v):
        return float(coef @ v), coef.copy()

    return Residual(label, slots, evaluate)


@dataclass(frozen=True)
class LineEnd:
    """A transmission line seen from one of its nodes."""

    v_other: int
    delta_other: int
    g: float
    b: float
    sending: bool


def electric_node_residuals(node_id, v, delta, lines: Sequence[LineEnd], linear_p, linear_q):
    """Active and reactive power balance at an electricity node.

    ``linear_p``/``linear_q`` hold the terminal and dummy-link slots, which
    enter the sum with coefficient one. Line flows are substituted.
    """
    out = []
    for which, linear in ((0, linear_p), (1, linear_q)):
        name = "P" if which == 0 else "Q"
        slots = list(linear)
        if lines:
            slots += [v, delta]
            for ln in lines:
                slots += [ln.v_other, ln.delta_other]
        n_lin = len(linear)

        def evaluate(vals, which=which, n_lin=n_lin):
            grad = np.zeros(len(vals))
            total = float(np.sum(vals[:n_lin]))
            grad[:n_lin] = 1.0
            if lines:
                vi, di = vals[n_lin], vals[n_lin + 1]
                for k, ln in enumerate(lines):
                    pos = n_lin + 2 + 2 * k
                    vj, dj = vals[pos], vals[pos + 1]
                    if ln.sending:
                        flows = line_power_flows(vi, di, vj, dj, ln.g, ln.b)
                        jac = line_power_jacobian(vi, di, vj, dj, ln.g, ln.b)
                        row = which
                        own, other = (0, 1), (2, 3)
                    else:
                        flows = line_power_flows(vj, dj, vi, di, ln.g, ln.b)
                        jac = line_power_jacobian(vj, dj, vi, di, ln.g, ln.b)
                        row = 2 + which
                        own, other = (2, 3), (0, 1)
                    total += flows[row]
                    grad[n_lin] += jac[row, own[0]]
                    grad[n_lin + 1] += jac[row, own[1]]
                    grad[pos] += jac[row, other[0]]
                    grad[pos + 1] += jac[row, other[1]]
            return total, grad

        out.append(Residual(f"{name}-balance[{node_id}]", tuple(slots), evaluate))
    return tuple(out)


def gas_node_residual(node_id, inflows: Sequence[int], outflows: Sequence[int], terminal: int | None):
    terms = [(1.0, s) for s in inflows] + [(-1.0, s) for s in outflows]
    if terminal is not None:
        terms.append((-1.0, terminal))
    return linear_residual(f"mass[{node_id}]", terms)


def pipe_residual(label, p_i, p_j, flow, resistance):
    """Quadratic pressure-drop law; either pressure may be absent (None)."""
    slots = tuple(s for s in (p_i, p_j) if s is not None) + (flow,)
    signs = [1.0] * (p_i is not None) + [-1.0] * (p_j is not None)

    def evaluate(vals):
        x = vals[-1]
        grad = np.empty(len(vals))
        grad[:-1] = signs
        grad[-1] = -2.0 * resistance * abs(x)
        return float(np.dot(signs, vals[:-1]) - resistance * abs(x) * x), grad

    return Residual(label, slots, evaluate)


@dataclass(frozen=True)
class PipeInflow:
    """Heat carried into a node through the far end of a pipe."""

    m: int
    T_in: int
    k: float


def heat_energy_residual(label, products: Sequence[tuple[float, int, int]], pipe_inflows: Sequence[PipeInflow], T_a: float):
    """sum(sign * m * T) + sum(m * T_out(T_in, m)).

    ``products`` holds (sign, m-slot, T-slot) bilinear terms with the
    temperature taken as is; ``pipe_inflows`` apply the heat-loss law.
    """
    slots = []
    for _, m, t in products:
        slots += [m, t]
    for pin in pipe_inflows:
        slots += [pin.m, pin.T_in]
    n_prod = len(products)

    def evaluate(vals):
        grad = np.zeros(len(vals))
        total = 0.0
        for k, (sign, _, _) in enumerate(products):
            m, t = vals[2 * k], vals[2 * k + 1]
            total += sign * m * t
            grad[2 * k] += sign * t
            grad[2 * k + 1] += sign * m
        for k, pin in enumerate(pipe_inflows):
            pos = 2 * (n_prod + k)
            val, d_t, d_m = _outflow_energy(vals[pos + 1], vals[pos], pin.k, T_a)
            total += val
            grad[pos] += d_m
            grad[pos + 1] += d_t
        return total, grad

    return Residual(label, tuple(slots), evaluate)


def heat_node_residuals(node_id, *, mass_in, mass_out, supply_in, supply_out, supply_pipes, return_in, return_out, return_pipes, T_a):
    """Mass, supply-energy and return-energy balances of a heat node.

    ``*_in`` / ``*_out`` are (m-slot, T-slot) pairs with the temperature taken
    as the slot value; ``*_pipes`` are :class:`PipeInflow` entries whose
    temperature is the decayed outlet of a pipe. The energy balances are
    omitted when no temperature term touches the node.
    """
    res = [linear_residual(f"mass[{node_id}]", [(1.0, s) for s in mass_in] + [(-1.0, s) for s in mass_out])]
    if supply_in or supply_out or supply_pipes:
        prods = [(1.0, m, t) for m, t in supply_in] + [(-1.0, m, t) for m, t in supply_out]
        res.append(heat_energy_residual(f"supply-energy[{node_id}]", prods, supply_pipes, T_a))
    if return_in or return_out or return_pipes:
        prods = [(1.0, m, t) for m, t in return_in] + [(-1.0, m, t) for m, t in return_out]
        res.append(heat_energy_residual(f"return-energy[{node_id}]", prods, return_pipes, T_a))
    return res


def heat_power_residual(label, m, T_s, T_r, dphi, c_p):
    """C_p m (T_s - T_r) - dphi for a terminal or a coupling heat link."""

    def evaluate(vals):
        mv, ts, tr, _ = vals
        value = terminal_heat_power_residual(mv, ts, tr, vals[3], c_p)
        return value, np.array([c_p * (ts - tr), c_p * mv, -c_p * mv, -1.0])

    return Residual(label, (m, T_s, T_r, dphi), evaluate)
