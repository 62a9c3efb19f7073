"""Graph model of an integrated electricity, gas and heat network.

A network is a set of single-carrier nodes and coupling nodes joined by
physical links (transmission lines, pipes) and lossless dummy links. Every
quantity that enters an equation of the assembled system owns one slot in
the :class:`VariableRegistry`; the registry is the shared index space of
boundary conditions, initial guesses and solver states.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Mapping

from .coupling import Coupling, CouplingKind


class Carrier(str, enum.Enum):
    ELECTRICITY = "electricity"
    GAS = "gas"
    HEAT = "heat"


# symbol kind -> SI unit, in canonical slot order
SLOT_KINDS: dict[str, str] = {
    "V": "V",
    "delta": "rad",
    "P": "W",
    "Q": "var",
    "p": "Pa",
    "q": "kg/s",
    "m": "kg/s",
    "T_s": "K",
    "T_r": "K",
    "dphi": "W",
    "eta_h": "1",
}
_KIND_ORDER = {k: i for i, k in enumerate(SLOT_KINDS)}


class NetworkError(ValueError):
    """Inconsistent network definition."""


@dataclass(frozen=True)
class GasParams:
    hhv: float = 1.418e8
    specific_gravity: float = 0.589
    compressibility: float = 1.0
    p_n: float = 1e5
    T_n: float = 288.0
    R: float = 8.314413
    M_air: float = 28.97e-3

    def __post_init__(self):
        for name in ("hhv", "specific_gravity", "compressibility", "p_n", "T_n", "R", "M_air"):
            if not getattr(self, name) > 0:
                raise ValueError(f"gas parameter {name} must be positive")

    @classmethod
    def hydrogen(cls, **kw) -> "GasParams":
        """Same constants with the specific gravity of H2 (M_H2 / M_air)."""
        return cls(specific_gravity=HYDROGEN_SPECIFIC_GRAVITY, **kw)

    @property
    def density_n(self) -> float:
        """Density at standard conditions from the ideal-gas law [kg/m^3]."""
        return self.p_n * self.specific_gravity * self.M_air / (self.R * self.T_n * self.compressibility)


HYDROGEN_SPECIFIC_GRAVITY = 0.0696


@dataclass(frozen=True)
class HeatParams:
    rho: float = 960.0
    c_p: float = 4182.0
    T_a: float = 273.15
    # listed with the heat-system data but no equation uses it (no elevation)
    gravity: float = 9.81

    def __post_init__(self):
        for name in ("rho", "c_p", "T_a", "gravity"):
            if not getattr(self, name) > 0:
                raise ValueError(f"heat parameter {name} must be positive")


@dataclass(frozen=True)
class CarrierParams:
    gas: GasParams = field(default_factory=GasParams)
    heat: HeatParams = field(default_factory=HeatParams)


@dataclass(frozen=True)
class Terminal:
    """Terminal link: energy entering or leaving the network at a node.

    A heat terminal with ``mass_only`` carries a mass flow but no supply or
    return temperature; used for heat junctions.
    """

    mass_only: bool = False


@dataclass(frozen=True)
class Node:
    id: str
    carrier: Carrier | None = None
    terminal: Terminal | None = None
    coupling: Coupling | None = None

    def __post_init__(self):
        if self.carrier is not None:
            object.__setattr__(self, "carrier", Carrier(self.carrier))
        if (self.carrier is None) == (self.coupling is None):
            raise NetworkError(f"node {self.id!r} must have exactly one of carrier or coupling")
        if self.coupling is not None and self.terminal is not None:
            raise NetworkError(f"coupling node {self.id!r} cannot have a terminal link")
        if self.terminal is not None and self.terminal.mass_only and self.carrier is not Carrier.HEAT:
            raise NetworkError(f"mass-only terminal on non-heat node {self.id!r}")

    @property
    def is_coupling(self) -> bool:
        return self.coupling is not None


@dataclass(frozen=True)
class TransmissionLine:
    g: float
    b: float

    carrier = Carrier.ELECTRICITY


@dataclass(frozen=True)
class GasPipe:
    cg: float
    f: float

    carrier = Carrier.GAS

    def __post_init__(self):
        if not (self.cg > 0 and self.f > 0):
            raise NetworkError("gas pipe needs cg > 0 and f > 0")

    @property
    def resistance(self) -> float:
        return self.f / self.cg**2


@dataclass(frozen=True)
class HeatPipe:
    ch: float
    f: float
    lam: float
    length: float
    diameter: float

    carrier = Carrier.HEAT

    def __post_init__(self):
        if not (self.ch > 0 and self.f > 0 and self.length > 0 and self.diameter > 0):
            raise NetworkError("heat pipe needs ch, f, length, diameter > 0")
        if self.lam < 0:
            raise NetworkError("heat pipe needs lam >= 0")

    @property
    def resistance(self) -> float:
        return self.f / self.ch**2


@dataclass(frozen=True)
class Dummy:
    """Lossless link between a coupling node and a single-carrier node.

    Power on an electric dummy link is counted from the electricity node into
    the coupling; gas and heat flow is counted from the coupling outwards,
    whatever the declared endpoint order.
    """

    carrier: Carrier | None = None


LinkKind = TransmissionLine | GasPipe | HeatPipe | Dummy


@dataclass(frozen=True)
class Link:
    id: str
    start: str
    end: str
    kind: LinkKind

    @property
    def is_dummy(self) -> bool:
        return isinstance(self.kind, Dummy)

    def other(self, node_id: str) -> str:
        return self.end if node_id == self.start else self.start


@dataclass(frozen=True)
class Slot:
    kind: str
    location: str

    @property
    def unit(self) -> str:
        return SLOT_KINDS[self.kind]

    @property
    def label(self) -> str:
        return f"{self.kind}[{self.location}]"

    def __str__(self):
        return self.label


class VariableRegistry:
    """Ordered, immutable enumeration of the slots of a network."""

    def __init__(self, slots: Iterable[Slot]):
        self._slots = tuple(slots)
        self._index = {(s.kind, s.location): i for i, s in enumerate(self._slots)}
        if len(self._index) != len(self._slots):
            raise NetworkError("duplicate slot in registry")
        self._labels = {s.label: i for i, s in enumerate(self._slots)}

    def __len__(self):
        return len(self._slots)

    def __iter__(self):
        return iter(self._slots)

    def __getitem__(self, i: int) -> Slot:
        return self._slots[i]

    def __eq__(self, other):
        return isinstance(other, VariableRegistry) and self._slots == other._slots

    def __contains__(self, key):
        if isinstance(key, str):
            return key in self._labels
        return tuple(key) in self._index

    @property
    def slots(self) -> tuple[Slot, ...]:
        return self._slots

    @property
    def labels(self) -> list[str]:
        return [s.label for s in self._slots]

    def lookup(self, kind: str, location: str) -> int:
        try:
            return self._index[(kind, location)]
        except KeyError:
            raise KeyError(f"no slot {kind}[{location}] in registry") from None

    def index(self, label: str) -> int:
        try:
            return self._labels[label]
        except KeyError:
            raise KeyError(f"no slot {label!r} in registry") from None

    def find(self, kind: str, location: str) -> int | None:
        return self._index.get((kind, location))

    def of_kind(self, *kinds: str) -> list[int]:
        return [i for i, s in enumerate(self._slots) if s.kind in kinds]


@dataclass(frozen=True, eq=False)
class Network:
    nodes: Mapping[str, Node]
    links: Mapping[str, Link]
    params: CarrierParams
    registry: VariableRegistry
    _incident: Mapping[str, tuple[Link, ...]] = field(repr=False)

    def __eq__(self, other):
        return (
            isinstance(other, Network)
            and dict(self.nodes) == dict(other.nodes)
            and dict(self.links) == dict(other.links)
            and self.params == other.params
            and self.registry == other.registry
        )

    def incident(self, node_id: str) -> tuple[Link, ...]:
        return self._incident[node_id]

    def physical_links(self, node_id: str) -> list[Link]:
        return [l for l in self._incident[node_id] if not l.is_dummy]

    def dummy_links(self, node_id: str) -> list[Link]:
        return [l for l in self._incident[node_id] if l.is_dummy]

    def couplings(self) -> list[Node]:
        return [n for n in self.nodes.values() if n.is_coupling]

    def coupling_link(self, coupling_id: str, carrier: Carrier) -> Link | None:
        for link in self.dummy_links(coupling_id):
            if link.kind.carrier is carrier:
                return link
        return None

    def dummy_carrier_node(self, link: Link) -> str:
        """The single-carrier endpoint of a dummy link."""
        return link.start if not self.nodes[link.start].is_coupling else link.end

    def hhv(self, coupling_id: str) -> float:
        hhv = self.nodes[coupling_id].coupling.params.hhv
        return self.params.gas.hhv if hhv is None else hhv

    def lookup(self, kind: str, location: str) -> int:
        return registry_lookup(self, kind, location)


def build_network(nodes: Iterable[Node], links: Iterable[Link], params: CarrierParams | None = None) -> Network:
    """Validate a node/link description and construct its registry."""
    params = params or CarrierParams()
    nodes = list(nodes)
    links = list(links)
    node_map: dict[str, Node] = {}
    for n in nodes:
        if n.id in node_map:
            raise NetworkError(f"duplicate node id {n.id!r}")
        node_map[n.id] = n
    link_map: dict[str, Link] = {}
    for l in links:
        if l.id in link_map or l.id in node_map:
            raise NetworkError(f"duplicate id {l.id!r}")
        link_map[l.id] = l

    incident: dict[str, list[Link]] = {nid: [] for nid in node_map}
    resolved: dict[str, Link] = {}
    for l in links:
        for end in (l.start, l.end):
            if end not in node_map:
                raise NetworkError(f"link {l.id!r} refers to unknown node {end!r}")
        if l.start == l.end:
            raise NetworkError(f"link {l.id!r} is a self-loop")
        a, b = node_map[l.start], node_map[l.end]
        if l.is_dummy:
            if a.is_coupling == b.is_coupling:
                raise NetworkError(f"dummy link {l.id!r} must join one coupling and one carrier node")
            carrier_node = b if a.is_coupling else a
            if l.kind.carrier is not None and Carrier(l.kind.carrier) is not carrier_node.carrier:
                raise NetworkError(f"dummy link {l.id!r} declared {l.kind.carrier} but joins a {carrier_node.carrier.value} node")
            l = Link(l.id, l.start, l.end, Dummy(carrier_node.carrier))
        else:
            if a.is_coupling or b.is_coupling:
                raise NetworkError(f"physical link {l.id!r} touches a coupling node")
            if not (a.carrier is b.carrier is l.kind.carrier):
                raise NetworkError(f"carrier mismatch on link {l.id!r}")
        resolved[l.id] = l
        incident[l.start].append(l)
        incident[l.end].append(l)

    for n in node_map.values():
        if n.is_coupling:
            _check_coupling(n, incident[n.id])

    inc = {k: tuple(v) for k, v in incident.items()}
    registry = _build_registry(node_map, resolved, inc)
    return Network(
        nodes=MappingProxyType(dict(node_map)),
        links=MappingProxyType(resolved),
        params=params,
        registry=registry,
        _incident=MappingProxyType(inc),
    )


def _check_coupling(node: Node, links: list[Link]) -> None:
    carriers = [l.kind.carrier for l in links]
    if len(set(carriers)) != len(carriers):
        raise NetworkError(f"coupling {node.id!r} has two dummy links of one carrier")
    cs = set(carriers)
    kind = node.coupling.kind
    if Carrier.ELECTRICITY not in cs:
        raise NetworkError(f"coupling {node.id!r} has no electricity input")
    outputs = cs - {Carrier.ELECTRICITY}
    if kind is CouplingKind.P2G and outputs != {Carrier.GAS}:
        raise NetworkError(f"P2G unit {node.id!r} needs exactly a gas output")
    if kind is CouplingKind.BOILER and outputs != {Carrier.HEAT}:
        raise NetworkError(f"boiler {node.id!r} needs exactly a heat output")
    if kind is CouplingKind.ELECTROLYSER:
        p = node.coupling.params
        if not outputs:
            raise NetworkError(f"electrolyser {node.id!r} has no output link")
        if outputs != {Carrier.GAS, Carrier.HEAT}:
            # a single-output electrolyser is only consistent at the matching limit
            need = 0.0 if outputs == {Carrier.GAS} else 1.0
            if p.free or p.eta_h != need:
                raise NetworkError(
                    f"electrolyser {node.id!r} with only a {next(iter(outputs)).value} output needs eta_h = {need:g}"
                )


def _build_registry(nodes, links, incident) -> VariableRegistry:
    slots: list[Slot] = []

    def add(location, *kinds):
        slots.extend(Slot(k, location) for k in sorted(kinds, key=_KIND_ORDER.__getitem__))

    for nid in sorted(nodes):
        n = nodes[nid]
        if n.is_coupling:
            if n.coupling.params.free:
                add(nid, "eta_h")
            continue
        has_physical = any(not l.is_dummy for l in incident[nid])
        kinds = []
        if n.carrier is Carrier.ELECTRICITY:
            if has_physical:
                kinds += ["V", "delta"]
            if n.terminal:
                kinds += ["P", "Q"]
        elif n.carrier is Carrier.GAS:
            if has_physical:
                kinds.append("p")
            if n.terminal:
                kinds.append("q")
        else:
            if has_physical:
                kinds.append("p")
            if n.terminal:
                kinds += ["m"] if n.terminal.mass_only else ["m", "T_s", "T_r", "dphi"]
        add(nid, *kinds)

    for lid in sorted(links):
        k = links[lid].kind
        if isinstance(k, GasPipe):
            add(lid, "q")
        elif isinstance(k, HeatPipe):
            add(lid, "m", "T_s", "T_r")
        elif isinstance(k, Dummy):
            add(lid, *{
                Carrier.ELECTRICITY: ("P", "Q"),
                Carrier.GAS: ("q",),
                Carrier.HEAT: ("m", "T_s", "T_r", "dphi"),
            }[k.carrier])
    return VariableRegistry(slots)


def registry_lookup(network: Network, kind: str, location: str) -> int:
    """Slot index of symbol ``kind`` at a node or link id."""
    return network.registry.lookup(kind, location)
