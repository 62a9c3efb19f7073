"""Assemble the residual system of a network.

Equations are emitted node by node in registry order: carrier balances,
then pipe laws, then coupling laws. Boundary conditions do not remove
equations; they freeze slots, and the solver works on the remaining columns.
"""
from __future__ import annotations

from typing import Mapping

import numpy as np

from .coupling import CouplingKind
from .equations import (
    LineEnd,
    PipeInflow,
    Residual,
    electric_node_residuals,
    gas_node_residual,
    heat_loss_exponent,
    heat_node_residuals,
    heat_power_residual,
    linear_residual,
    pipe_residual,
)
from .model import Carrier, GasPipe, HeatPipe, Network, TransmissionLine


class AssemblyError(ValueError):
    pass


def build_residuals(network: Network) -> list[Residual]:
    """All equations of ``network``, independent of boundary conditions."""
    reg = network.registry
    res: list[Residual] = []
    for nid in sorted(network.nodes):
        node = network.nodes[nid]
        if node.is_coupling:
            continue
        if node.carrier is Carrier.ELECTRICITY:
            res += _electric(network, nid)
        elif node.carrier is Carrier.GAS:
            r = _gas(network, nid)
            if r is not None:
                res.append(r)
        else:
            res += _heat(network, nid)

    for lid in sorted(network.links):
        link = network.links[lid]
        k = link.kind
        if isinstance(k, (GasPipe, HeatPipe)):
            flow = reg.lookup("q" if isinstance(k, GasPipe) else "m", lid)
            res.append(pipe_residual(
                f"pipe[{lid}]", reg.find("p", link.start), reg.find("p", link.end), flow, k.resistance))

    for nid in sorted(network.nodes):
        if network.nodes[nid].is_coupling:
            res += _coupling(network, nid)

    for nid in sorted(network.nodes):
        node = network.nodes[nid]
        if node.carrier is Carrier.HEAT and node.terminal and not node.terminal.mass_only:
            s = [reg.lookup(k, nid) for k in ("m", "T_s", "T_r", "dphi")]
            res.append(heat_power_residual(f"heat-power[{nid}]", *s, network.params.heat.c_p))
    return res


def _electric(net: Network, nid: str) -> list[Residual]:
    reg = net.registry
    lin_p, lin_q = [], []
    node = net.nodes[nid]
    if node.terminal:
        lin_p.append(reg.lookup("P", nid))
        lin_q.append(reg.lookup("Q", nid))
    lines = []
    for link in net.incident(nid):
        if link.is_dummy:
            lin_p.append(reg.lookup("P", link.id))
            lin_q.append(reg.lookup("Q", link.id))
        elif isinstance(link.kind, TransmissionLine):
            other = link.other(nid)
            lines.append(LineEnd(reg.lookup("V", other), reg.lookup("delta", other),
                                 link.kind.g, link.kind.b, sending=link.start == nid))
    if not (lin_p or lines):
        return []
    v = reg.find("V", nid)
    d = reg.find("delta", nid)
    return list(electric_node_residuals(nid, v, d, lines, lin_p, lin_q))


def _gas(net: Network, nid: str) -> Residual | None:
    reg = net.registry
    inflows, outflows = [], []
    for link in net.incident(nid):
        q = reg.lookup("q", link.id)
        if link.is_dummy or link.end == nid:
            inflows.append(q)
        else:
            outflows.append(q)
    term = reg.find("q", nid) if net.nodes[nid].terminal else None
    if not (inflows or outflows or term is not None):
        return None
    return gas_node_residual(nid, inflows, outflows, term)


def _heat(net: Network, nid: str) -> list[Residual]:
    reg = net.registry
    hp = net.params.heat
    mass_in, mass_out = [], []
    supply_in, supply_out, supply_pipes = [], [], []
    return_in, return_out, return_pipes = [], [], []
    node = net.nodes[nid]
    for link in net.incident(nid):
        m = reg.lookup("m", link.id)
        ts, tr = reg.lookup("T_s", link.id), reg.lookup("T_r", link.id)
        if link.is_dummy:
            mass_in.append(m)
            supply_in.append((m, ts))
            return_out.append((m, tr))
            continue
        k = heat_loss_exponent(link.kind.lam, link.kind.length, hp.c_p)
        if link.start == nid:
            mass_out.append(m)
            supply_out.append((m, ts))
            return_pipes.append(PipeInflow(m, tr, k))
        else:
            mass_in.append(m)
            supply_pipes.append(PipeInflow(m, ts, k))
            return_out.append((m, tr))
    if node.terminal:
        mt = reg.lookup("m", nid)
        mass_out.append(mt)
        if not node.terminal.mass_only:
            supply_out.append((mt, reg.lookup("T_s", nid)))
            return_in.append((mt, reg.lookup("T_r", nid)))
    if not (mass_in or mass_out):
        return []
    res = heat_node_residuals(
        nid, mass_in=mass_in, mass_out=mass_out,
        supply_in=supply_in, supply_out=supply_out, supply_pipes=supply_pipes,
        return_in=return_in, return_out=return_out, return_pipes=return_pipes,
        T_a=hp.T_a,
    )
    # branching nodes: every stream leaving a node carries the mixed temperature
    for circuit, outs in (("supply", supply_out), ("return", return_out)):
        for k, (_, t) in enumerate(outs[1:], start=1):
            res.append(linear_residual(f"{circuit}-mixing[{nid}#{k}]", [(1.0, t), (-1.0, outs[0][1])]))
    return res


def _coupling(net: Network, nid: str) -> list[Residual]:
    reg = net.registry
    unit = net.nodes[nid].coupling
    eta = unit.params.eta
    hhv = net.hhv(nid)
    e_link = net.coupling_link(nid, Carrier.ELECTRICITY)
    g_link = net.coupling_link(nid, Carrier.GAS)
    h_link = net.coupling_link(nid, Carrier.HEAT)
    P = reg.lookup("P", e_link.id)
    res = []

    # eta*P - HHV*q - dphi with absent outputs dropped
    terms = [(eta, P)]
    if g_link is not None:
        terms.append((-hhv, reg.lookup("q", g_link.id)))
    if h_link is not None:
        dphi = reg.lookup("dphi", h_link.id)
        terms.append((-1.0, dphi))
    res.append(linear_residual(f"energy-balance[{nid}]", terms))

    if h_link is not None:
        h = h_link.id
        res.append(heat_power_residual(
            f"coupling-heat-power[{nid}]", reg.lookup("m", h), reg.lookup("T_s", h),
            reg.lookup("T_r", h), dphi, net.params.heat.c_p))

    if unit.kind is CouplingKind.ELECTROLYSER and g_link is not None and h_link is not None:
        if unit.params.free:
            eh = reg.lookup("eta_h", nid)

            def evaluate(v):
                p, e, dp = v
                return e * eta * p - dp, np.array([e * eta, eta * p, -1.0])

            res.append(Residual(f"residual-heat[{nid}]", (P, eh, dphi), evaluate))
        else:
            res.append(linear_residual(f"residual-heat[{nid}]", [(unit.params.eta_h * eta, P), (-1.0, dphi)]))
    return res


class EquationSystem:
    """Residuals of a network with a set of frozen (boundary) slots."""

    def __init__(self, network: Network, residuals: list[Residual], fixed: Mapping[int, float]):
        self.network = network
        self.registry = network.registry
        self.residuals = residuals
        self.fixed = dict(fixed)
        n = len(self.registry)
        for i in self.fixed:
            if not 0 <= i < n:
                raise AssemblyError(f"boundary condition on nonexistent slot {i}")
        self.unknown = np.array([i for i in range(n) if i not in self.fixed], dtype=int)
        self.heat_pipe_flows = np.array(
            [network.registry.lookup("m", lid) for lid in sorted(network.links)
             if isinstance(network.links[lid].kind, HeatPipe)], dtype=int)

    @property
    def labels(self) -> list[str]:
        return [r.label for r in self.residuals]

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.residuals), len(self.unknown)

    def full_state(self, x) -> np.ndarray:
        """Copy of a full slot vector with the boundary values written in."""
        x = np.array(x, dtype=float)
        if x.shape != (len(self.registry),):
            raise ValueError(f"state has shape {x.shape}, expected ({len(self.registry)},)")
        for i, v in self.fixed.items():
            x[i] = v
        return x

    def residual(self, x: np.ndarray) -> np.ndarray:
        return np.array([r.evaluate(x[list(r.slots)])[0] for r in self.residuals])

    def jacobian(self, x: np.ndarray, reduced: bool = True) -> np.ndarray:
        """Analytic Jacobian; columns restricted to unknowns when ``reduced``."""
        J = np.zeros((len(self.residuals), len(self.registry)))
        for row, r in enumerate(self.residuals):
            _, grad = r.evaluate(x[list(r.slots)])
            for s, g in zip(r.slots, grad):
                J[row, s] += g
        return J[:, self.unknown] if reduced else J

    def evaluate(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return self.residual(x), self.jacobian(x)

    def sparsity(self) -> np.ndarray:
        pattern = np.zeros((len(self.residuals), len(self.registry)), dtype=bool)
        for row, r in enumerate(self.residuals):
            pattern[row, list(r.slots)] = True
        return pattern[:, self.unknown]


def assemble_system(network: Network, bcs: Mapping[int, float] | None = None, *, require_square: bool = True) -> EquationSystem:
    system = EquationSystem(network, build_residuals(network), bcs or {})
    n_eq, n_unk = system.shape
    if require_square and n_eq != n_unk:
        raise AssemblyError(f"system is not square: {n_eq} equations, {n_unk} unknowns")
    return system


def finite_difference_jacobian(system: EquationSystem, state, rel_step: float = 1e-6) -> np.ndarray:
    """Central-difference Jacobian over the unknown columns.

    The step for a slot scales with the largest magnitude among slots of the
    same kind, so a slot sitting at zero next to MW-sized terms still gets a
    step large enough to beat cancellation.
    """
    x = system.full_state(state)
    kinds = [s.kind for s in system.registry]
    kind_scale = {}
    for k, v in zip(kinds, x):
        kind_scale[k] = max(kind_scale.get(k, 1.0), abs(v))
    J = np.zeros(system.shape)
    for col, i in enumerate(system.unknown):
        h = rel_step * max(abs(x[i]), kind_scale[kinds[i]])
        xp, xm = x.copy(), x.copy()
        xp[i] += h
        xm[i] -= h
        J[:, col] = (system.residual(xp) - system.residual(xm)) / (2 * h)
    return J


def kink_mask(system: EquationSystem, state) -> np.ndarray:
    """Entries d(pipe law)/d(flow) evaluated at exactly zero flow.

    |x|x has derivative 0 there but its second derivative jumps, so central
    differences report R*h instead.
    """
    x = system.full_state(state)
    mask = np.zeros(system.shape, dtype=bool)
    col = {int(i): c for c, i in enumerate(system.unknown)}
    for row, r in enumerate(system.residuals):
        if r.label.startswith("pipe[") and x[r.slots[-1]] == 0 and r.slots[-1] in col:
            mask[row, col[r.slots[-1]]] = True
    return mask


def compare_jacobians(system: EquationSystem, state, rtol: float = 1e-5, atol: float = 0.0,
                      skip_kinks: bool = True) -> list[str]:
    """Entries where analytic and finite-difference Jacobians disagree, by label."""
    x = system.full_state(state)
    A = system.jacobian(x)
    F = finite_difference_jacobian(system, x)
    scale = np.maximum(np.abs(A), np.abs(F))
    # per-row floor: entries far below the row's magnitude are roundoff in FD
    floor = rtol * np.max(scale, axis=1, keepdims=True) + atol if scale.size else 0.0
    bad = np.abs(A - F) > np.maximum(rtol * scale, floor)
    if skip_kinks:
        bad &= ~kink_mask(system, x)
    out = []
    for r, c in zip(*np.nonzero(bad)):
        slot = system.registry[system.unknown[c]]
        out.append(f"{system.residuals[r].label} / {slot.label}: analytic {A[r, c]:.6g}, fd {F[r, c]:.6g}")
    return out
