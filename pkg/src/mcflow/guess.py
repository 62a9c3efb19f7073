"""Initial guesses for the Newton iteration."""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .model import Carrier, Network


@dataclass(frozen=True)
class GuessConfig:
    """Defaults for slots that no boundary condition pins down.

    Pressures are a fixed factor above the nearest reference pressure, so
    every pipe starts with a non-zero pressure drop. Mass flows start at a
    non-zero value because zero heat flows make the Jacobian singular.
    """

    pressure_factor: float = 1.05
    mass_flow: float = 1.0
    supply_temperature: float = 353.15
    return_temperature: float = 313.15
    voltage: float = 1.0
    pressure: float = 1e5
    eta_h: float = 0.5
    free_power: float = 1e6


@dataclass(frozen=True)
class InitialGuess:
    values: np.ndarray
    strategy: str = "flat-start"


def _nearest_fixed(net: Network, start: str, kind: str, carrier: Carrier, fixed: Mapping[int, float]):
    """BFS along physical links of one carrier for the closest fixed ``kind`` slot."""
    reg = net.registry
    seen = {start}
    queue = deque([start])
    while queue:
        nid = queue.popleft()
        idx = reg.find(kind, nid)
        if idx is not None and idx in fixed:
            return fixed[idx]
        for link in net.physical_links(nid):
            nxt = link.other(nid)
            if nxt not in seen and net.nodes[nxt].carrier is carrier:
                seen.add(nxt)
                queue.append(nxt)
    return None


def _free_power_estimate(net: Network, coupling_id: str, fixed: Mapping[int, float], cfg: GuessConfig) -> float:
    """Input power implied by fixed gas draws and heat demands, if any."""
    reg = net.registry
    gas = sum(v for i, v in fixed.items() if reg[i].kind == "q" and reg[i].location in net.nodes)
    heat = sum(v for i, v in fixed.items() if reg[i].kind == "dphi" and reg[i].location in net.nodes)
    eta = net.nodes[coupling_id].coupling.params.eta
    estimate = (net.hhv(coupling_id) * gas + heat) / eta if eta > 0 else 0.0
    return estimate if estimate > 0 else cfg.free_power


def default_initial_guess(network: Network, bcs: Mapping[int, float] | None = None, config: GuessConfig | None = None) -> InitialGuess:
    """Flat-start guess for every slot; boundary slots take their fixed value."""
    cfg = config or GuessConfig()
    bcs = dict(bcs or {})
    reg = network.registry
    x = np.zeros(len(reg))
    for i, slot in enumerate(reg):
        if i in bcs:
            x[i] = bcs[i]
            continue
        kind, loc = slot.kind, slot.location
        if kind == "V":
            v = _nearest_fixed(network, loc, "V", Carrier.ELECTRICITY, bcs)
            x[i] = cfg.voltage if v is None else v
        elif kind == "p":
            carrier = network.nodes[loc].carrier
            p = _nearest_fixed(network, loc, "p", carrier, bcs)
            x[i] = (cfg.pressure if p is None else p) * cfg.pressure_factor
        elif kind == "m":
            x[i] = cfg.mass_flow
        elif kind == "T_s":
            x[i] = cfg.supply_temperature
        elif kind == "T_r":
            x[i] = cfg.return_temperature
        elif kind == "eta_h":
            x[i] = cfg.eta_h
        # V angles, powers, gas flows and heat powers start at zero

    # with a free heat efficiency, P = 0 leaves the eta_h column empty
    for node in network.couplings():
        if node.coupling.params.free:
            link = network.coupling_link(node.id, Carrier.ELECTRICITY)
            i = reg.lookup("P", link.id)
            if i not in bcs:
                x[i] = _free_power_estimate(network, node.id, bcs, cfg)
    return InitialGuess(x, "flat-start")


def guess_from_values(network: Network, values: Mapping[str, float], bcs: Mapping[int, float] | None = None, config: GuessConfig | None = None) -> InitialGuess:
    """User guess keyed by slot label; unnamed slots fall back to the flat start."""
    base = default_initial_guess(network, bcs, config).values.copy()
    for label, v in values.items():
        if not math.isfinite(v):
            raise ValueError(f"guess for {label} is not finite")
        base[network.registry.index(label)] = v
    for i, v in (bcs or {}).items():
        base[i] = v
    return InitialGuess(base, "user")
