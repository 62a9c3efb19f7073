"""Network documents: JSON scenario files and the shipped fixtures.

A document holds parameters, nodes, links, boundary conditions (a template
with values, or explicit slot labels), solver overrides and an optional
initial guess. Quantities are SI numbers, or ``{"value": x, "unit": u}``
with one of the units in :data:`UNITS`.
"""
from __future__ import annotations

import json
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Any, Mapping, NamedTuple

import jsonschema

from .coupling import FREE, Coupling, CouplingKind, CouplingParams
from .equations import gas_pipe_constant, heat_pipe_constant
from .model import (
    SLOT_KINDS,
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
)
from .solver import SolverConfig
from .wellposedness import BoundaryConditionSet, TemplateError, apply_template

SCHEMA_VERSION = 1

# unit -> (dimension, factor to SI)
UNITS: dict[str, tuple[str, float]] = {
    "Pa": ("pressure", 1.0),
    "bar": ("pressure", 1e5),
    "W": ("power", 1.0),
    "kW": ("power", 1e3),
    "MW": ("power", 1e6),
    "var": ("power", 1.0),
    "Mvar": ("power", 1e6),
    "K": ("temperature", 1.0),
    "kg/s": ("flow", 1.0),
    "V": ("voltage", 1.0),
    "rad": ("angle", 1.0),
    "1": ("dimensionless", 1.0),
}

KIND_DIMENSION = {
    "V": "voltage", "delta": "angle", "P": "power", "Q": "power", "dphi": "power",
    "p": "pressure", "q": "flow", "m": "flow", "T_s": "temperature", "T_r": "temperature",
    "eta_h": "dimensionless",
}

# units used in reports, one per slot kind
DISPLAY_UNITS = {
    "V": "V", "delta": "rad", "P": "MW", "Q": "MW", "dphi": "MW", "p": "bar",
    "q": "kg/s", "m": "kg/s", "T_s": "K", "T_r": "K", "eta_h": "1",
}

FIXTURES = (
    "fig2_p2g",
    "fig3_boiler",
    "fig3_electrolyser_known",
    "fig3_electrolyser_free",
    "fig4_known_eff",
    "fig4_free_eff",
    "fig4_known_eff_natural_gas",
)


class DocumentError(ValueError):
    """A document that cannot be turned into a valid model."""


class Scenario(NamedTuple):
    network: Network
    bcs: BoundaryConditionSet
    config: SolverConfig
    guess: dict[str, float] | None = None
    name: str = ""


_quantity = {"oneOf": [
    {"type": "number"},
    {"type": "object", "required": ["value", "unit"], "additionalProperties": False,
     "properties": {"value": {"type": "number"}, "unit": {"type": "string"}}},
]}
_geometry = {"type": "object", "required": ["length", "diameter"], "additionalProperties": False,
             "properties": {"length": {"type": "number"}, "diameter": {"type": "number"}}}

SCHEMA: dict[str, Any] = {
    "type": "object",
    "required": ["schema_version", "nodes", "links"],
    "additionalProperties": False,
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "name": {"type": "string"},
        "description": {"type": "string"},
        "params": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "gas": {"type": "object", "additionalProperties": _quantity},
                "heat": {"type": "object", "additionalProperties": _quantity},
            },
        },
        "nodes": {"type": "array", "items": {
            "type": "object", "required": ["id"], "additionalProperties": False,
            "properties": {
                "id": {"type": "string", "minLength": 1},
                "carrier": {"enum": [c.value for c in Carrier]},
                "terminal": {"enum": [True, False, "mass_only"]},
                "coupling": {
                    "type": "object", "required": ["kind", "eta"], "additionalProperties": False,
                    "properties": {
                        "kind": {"enum": [k.value for k in CouplingKind]},
                        "eta": {"type": ["number", "string"]},
                        "eta_h": {"type": ["number", "string"]},
                        "hhv": {"type": "number"},
                    },
                },
            },
        }},
        "links": {"type": "array", "items": {
            "type": "object", "required": ["id", "from", "to", "type"], "additionalProperties": False,
            "properties": {
                "id": {"type": "string", "minLength": 1},
                "from": {"type": "string"},
                "to": {"type": "string"},
                "type": {"enum": ["line", "gas_pipe", "heat_pipe", "dummy"]},
                "g": {"type": "number"}, "b": {"type": "number"},
                "f": {"type": "number"}, "cg": {"type": "number"}, "ch": {"type": "number"},
                "lambda": {"type": "number"},
                "geometry": _geometry,
            },
        }},
        "boundary_conditions": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "template": {"type": "string"},
                "values": {"type": "object", "additionalProperties": _quantity},
                "reference_pressure": {"enum": ["load", "junction"]},
                "fixed": {"type": "object", "additionalProperties": _quantity},
            },
        },
        "solver": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "tol": {"type": "number"}, "max_iter": {"type": "integer"},
                "damping": {"type": "number"}, "min_pivot": {"type": "number"},
                "flow_epsilon": {"type": "number"},
            },
        },
        "initial_guess": {"type": "object", "additionalProperties": _quantity},
    },
}


def to_si(q, dimension: str | None = None, where: str = "") -> float:
    """Convert a document quantity to SI, checking its dimension."""
    if isinstance(q, (int, float)) and not isinstance(q, bool):
        return float(q)
    unit = q["unit"]
    if unit not in UNITS:
        raise DocumentError(f"{where}: unknown unit {unit!r}")
    dim, factor = UNITS[unit]
    if dimension is not None and dim != dimension:
        raise DocumentError(f"{where}: unit {unit!r} is a {dim} unit, expected {dimension}")
    return float(q["value"]) * factor


def _ratio(v, where: str) -> float:
    if isinstance(v, str):
        try:
            return float(Fraction(v))
        except (ValueError, ZeroDivisionError):
            raise DocumentError(f"{where}: cannot read {v!r} as a number") from None
    return float(v)


def _slot_dimension(label: str) -> str:
    kind = label.split("[", 1)[0]
    if kind not in KIND_DIMENSION:
        raise DocumentError(f"unknown slot kind in {label!r}")
    return KIND_DIMENSION[kind]


def _params(doc: Mapping) -> CarrierParams:
    p = doc.get("params", {})
    gas_dims = {"hhv": None, "p_n": "pressure", "T_n": "temperature"}
    heat_dims = {"T_a": "temperature"}
    try:
        gas = GasParams(**{k: to_si(v, gas_dims.get(k), f"params.gas.{k}") for k, v in p.get("gas", {}).items()})
        heat = HeatParams(**{k: to_si(v, heat_dims.get(k), f"params.heat.{k}") for k, v in p.get("heat", {}).items()})
    except TypeError as exc:
        raise DocumentError(f"params: {exc}") from None
    return CarrierParams(gas, heat)


def _node(d: Mapping) -> Node:
    term = d.get("terminal", False)
    terminal = None if term is False else Terminal(mass_only=term == "mass_only")
    coupling = None
    if "coupling" in d:
        c = d["coupling"]
        where = f"nodes[{d['id']}].coupling"
        eta_h = c.get("eta_h", 0.0)
        eta_h = FREE if eta_h == FREE else _ratio(eta_h, where)
        coupling = Coupling(CouplingKind(c["kind"]), CouplingParams(_ratio(c["eta"], where), eta_h, c.get("hhv")))
    return Node(d["id"], d.get("carrier"), terminal, coupling)


def _link(d: Mapping, params: CarrierParams) -> Link:
    where = f"links[{d['id']}]"
    t = d["type"]

    def need(*keys):
        missing = [k for k in keys if k not in d]
        if missing:
            raise DocumentError(f"{where}: missing {', '.join(missing)}")

    if t == "line":
        need("g", "b")
        kind = TransmissionLine(d["g"], d["b"])
    elif t == "gas_pipe":
        need("f")
        if ("cg" in d) == ("geometry" in d):
            raise DocumentError(f"{where}: give exactly one of 'cg' or 'geometry'")
        cg = d["cg"] if "cg" in d else gas_pipe_constant(params.gas, **d["geometry"])
        kind = GasPipe(cg, d["f"])
    elif t == "heat_pipe":
        need("f", "lambda", "geometry")
        geo = d["geometry"]
        ch = d["ch"] if "ch" in d else heat_pipe_constant(params.heat, **geo)
        kind = HeatPipe(ch, d["f"], d["lambda"], geo["length"], geo["diameter"])
    else:
        kind = Dummy()
    return Link(d["id"], d["from"], d["to"], kind)


def _boundary_conditions(doc: Mapping, network: Network) -> BoundaryConditionSet:
    bc = doc.get("boundary_conditions", {})
    if "template" in bc and "fixed" in bc:
        raise DocumentError("boundary_conditions: give either 'template' or 'fixed', not both")
    if "template" in bc:
        values = {}
        for key, q in bc.get("values", {}).items():
            kind = key.split("@", 1)[0] if "@" in key else key.split("[", 1)[0]
            if kind not in KIND_DIMENSION:
                raise DocumentError(f"boundary_conditions.values: unknown symbol in {key!r}")
            values[key] = to_si(q, KIND_DIMENSION[kind], f"boundary_conditions.values.{key}")
        return apply_template(network, bc["template"], values, bc.get("reference_pressure", "load"))
    fixed = {k: to_si(q, _slot_dimension(k), f"boundary_conditions.fixed.{k}") for k, q in bc.get("fixed", {}).items()}
    try:
        return BoundaryConditionSet.from_labels(network, fixed)
    except KeyError as exc:
        raise DocumentError(f"boundary_conditions.fixed: {exc.args[0]}") from None


def load_document(doc: Mapping) -> Scenario:
    """Validate a parsed document and build the model it describes."""
    try:
        jsonschema.validate(doc, SCHEMA)
    except jsonschema.ValidationError as exc:
        path = ".".join(str(p) for p in exc.absolute_path) or "<root>"
        raise DocumentError(f"schema violation at {path}: {exc.message}") from None
    try:
        params = _params(doc)
        nodes = [_node(d) for d in doc["nodes"]]
        links = [_link(d, params) for d in doc["links"]]
        network = build_network(nodes, links, params)
        bcs = _boundary_conditions(doc, network)
        config = SolverConfig(**doc.get("solver", {}))
        guess = None
        if "initial_guess" in doc:
            guess = {k: to_si(q, _slot_dimension(k), f"initial_guess.{k}") for k, q in doc["initial_guess"].items()}
            for k in guess:
                if k not in network.registry:
                    raise DocumentError(f"initial_guess: no slot {k!r}")
    except DocumentError:
        raise
    except (NetworkError, TemplateError, ValueError, KeyError) as exc:
        raise DocumentError(str(exc)) from None
    return Scenario(network, bcs, config, guess, doc.get("name", ""))


def parse_network(text: str) -> Scenario:
    """Parse document text into (network, boundary conditions, solver config, guess)."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DocumentError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return load_document(doc)


def dump_document(scenario: Scenario) -> dict:
    """Inverse of :func:`load_document`; pipe constants and BCs are written explicitly."""
    net = scenario.network
    gp, hp = net.params.gas, net.params.heat
    doc: dict[str, Any] = {"schema_version": SCHEMA_VERSION}
    if scenario.name:
        doc["name"] = scenario.name
    doc["params"] = {
        "gas": {k: getattr(gp, k) for k in ("hhv", "specific_gravity", "compressibility", "p_n", "T_n", "R", "M_air")},
        "heat": {k: getattr(hp, k) for k in ("rho", "c_p", "T_a", "gravity")},
    }
    nodes = []
    for n in net.nodes.values():
        d: dict[str, Any] = {"id": n.id}
        if n.carrier is not None:
            d["carrier"] = n.carrier.value
        if n.terminal is not None:
            d["terminal"] = "mass_only" if n.terminal.mass_only else True
        if n.coupling is not None:
            p = n.coupling.params
            c = {"kind": n.coupling.kind.value, "eta": p.eta, "eta_h": p.eta_h}
            if p.hhv is not None:
                c["hhv"] = p.hhv
            d["coupling"] = c
        nodes.append(d)
    links = []
    for l in net.links.values():
        d = {"id": l.id, "from": l.start, "to": l.end}
        k = l.kind
        if isinstance(k, TransmissionLine):
            d.update(type="line", g=k.g, b=k.b)
        elif isinstance(k, GasPipe):
            d.update(type="gas_pipe", cg=k.cg, f=k.f)
        elif isinstance(k, HeatPipe):
            d.update(type="heat_pipe", ch=k.ch, f=k.f, **{"lambda": k.lam},
                     geometry={"length": k.length, "diameter": k.diameter})
        else:
            d["type"] = "dummy"
        links.append(d)
    doc["nodes"] = nodes
    doc["links"] = links
    doc["boundary_conditions"] = {"fixed": scenario.bcs.labelled(net)}
    c = scenario.config
    doc["solver"] = {"tol": c.tol, "max_iter": c.max_iter, "damping": c.damping,
                     "min_pivot": c.min_pivot, "flow_epsilon": c.flow_epsilon}
    if scenario.guess:
        doc["initial_guess"] = dict(scenario.guess)
    return doc


def serialize(scenario: Scenario) -> str:
    return json.dumps(dump_document(scenario), indent=2)


def load_fixture(name: str) -> Scenario:
    if name not in FIXTURES:
        raise DocumentError(f"unknown fixture {name!r}; available: {', '.join(FIXTURES)}")
    text = resources.files("mcflow").joinpath("fixtures", f"{name}.json").read_text()
    return parse_network(text)


def read_scenario(source: str) -> Scenario:
    """Load a document from a path, or a shipped fixture by name."""
    path = Path(source)
    if path.exists():
        return parse_network(path.read_text())
    if source in FIXTURES:
        return load_fixture(source)
    raise DocumentError(f"no such file or fixture: {source}")


def display_value(kind: str, value: float) -> tuple[float, str]:
    unit = DISPLAY_UNITS[kind]
    return value / UNITS[unit][1], unit

