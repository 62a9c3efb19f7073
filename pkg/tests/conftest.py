"""Reference networks built directly through the model API.

These are independent of the shipped JSON fixtures so document parsing can
be checked against them.
"""
import math

import pytest

from mcflow import (
    Carrier,
    CarrierParams,
    Coupling,
    CouplingParams,
    Dummy,
    GasParams,
    GasPipe,
    HeatPipe,
    Link,
    Node,
    Terminal,
    TransmissionLine,
    build_network,
    gas_pipe_constant,
    heat_pipe_constant,
)

E, G, H = Carrier.ELECTRICITY, Carrier.GAS, Carrier.HEAT
V_LOAD = 690 / math.sqrt(3)
# admittance that reproduces the reference electrical solution
LINE_G, LINE_B = 6.3, -63.0


def dummy(a, b):
    return Link(f"{a}-{b}", a, b, Dummy())


def p2g_net(kind="p2g", eta_h=0.0, eta=0.9):
    params = CouplingParams(eta) if kind == "p2g" else CouplingParams(eta, eta_h)
    nodes = [Node("0e", E, Terminal()), Node("0g", G, Terminal()), Node("0c", coupling=Coupling(kind, params))]
    return build_network(nodes, [dummy("0e", "0c"), dummy("0c", "0g")])


def boiler_net(kind="boiler", eta_h=1.0, eta=0.9):
    params = CouplingParams(eta) if kind == "boiler" else CouplingParams(eta, eta_h)
    nodes = [Node("0e", E, Terminal()), Node("0h", H, Terminal()), Node("0c", coupling=Coupling(kind, params))]
    return build_network(nodes, [dummy("0e", "0c"), dummy("0c", "0h")])


def electrolyser_net(eta_h=1 / 6, eta=0.9):
    nodes = [Node("0e", E, Terminal()), Node("0g", G, Terminal()), Node("0h", H, Terminal()),
             Node("0c", coupling=Coupling("electrolyser", CouplingParams(eta, eta_h)))]
    return build_network(nodes, [dummy("0e", "0c"), dummy("0c", "0g"), dummy("0c", "0h")])


def linked_net(eta_h=1 / 6, gas=None, g=LINE_G, b=LINE_B):
    params = CarrierParams(gas=gas or GasParams.hydrogen())
    cg = gas_pipe_constant(params.gas, 500, 0.15)
    ch = heat_pipe_constant(params.heat, 500, 0.15)
    nodes = [Node("0e", E, Terminal()), Node("1e", E, Terminal()),
             Node("0g", G, Terminal()), Node("1g", G, Terminal()),
             Node("0h", H, Terminal(mass_only=True)), Node("1h", H, Terminal()),
             Node("0c", coupling=Coupling("electrolyser", CouplingParams(0.9, eta_h)))]
    links = [Link("0e-1e", "0e", "1e", TransmissionLine(g, b)),
             Link("0g-1g", "0g", "1g", GasPipe(cg, 6.5e-3)),
             Link("0h-1h", "0h", "1h", HeatPipe(ch, 6.5e-3, 0.2, 500, 0.15)),
             dummy("0e", "0c"), dummy("0c", "0g"), dummy("0c", "0h")]
    return build_network(nodes, links, params)


LINKED_KNOWN_VALUES = {"P@e_load": -2.5e6, "V@e_load": V_LOAD, "p@g_load": 1e5, "p@h_load": 6e5,
                       "T_r@h_load": 323.15, "T_s@h_link": 338.15}


@pytest.fixture
def fig4():
    return linked_net()
