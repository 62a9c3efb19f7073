"""Boundary conditions and well-posedness checks.

A posed problem is accepted when it is square and its Jacobian is
nonsingular at a probe state. That is local evidence of unique solvability,
not a proof for the nonlinear system.
"""
from __future__ import annotations

import enum
import math
from collections.abc import Mapping
from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np

from .assembly import assemble_system, build_residuals
from .equations import DomainError
from .guess import default_initial_guess, guess_from_values
from .linalg import factorize
from .model import Carrier, GasPipe, HeatPipe, Network

# --- boundary condition sets -------------------------------------------------


class BoundaryConditionSet(Mapping):
    """Fixed values keyed by registry slot index."""

    def __init__(self, entries: Iterable[tuple[int, float]] = ()):
        values: dict[int, float] = {}
        for idx, val in entries:
            idx = int(idx)
            if idx in values:
                raise ValueError(f"duplicate boundary condition on slot {idx}")
            val = float(val)
            if not math.isfinite(val):
                raise ValueError(f"boundary value for slot {idx} is not finite")
            values[idx] = val
        self._values = values

    @classmethod
    def from_labels(cls, network: Network, values: Mapping[str, float]) -> "BoundaryConditionSet":
        return cls((network.registry.index(k), v) for k, v in values.items())

    def __getitem__(self, idx: int) -> float:
        return self._values[idx]

    def __iter__(self) -> Iterator[int]:
        return iter(self._values)

    def __len__(self) -> int:
        return len(self._values)

    def __repr__(self):
        return f"BoundaryConditionSet({self._values!r})"

    def without(self, idx: int) -> "BoundaryConditionSet":
        return BoundaryConditionSet((k, v) for k, v in self._values.items() if k != idx)

    def with_value(self, idx: int, value: float) -> "BoundaryConditionSet":
        d = dict(self._values)
        d[idx] = value
        return BoundaryConditionSet(d.items())

    def labelled(self, network: Network) -> dict[str, float]:
        return {network.registry[i].label: v for i, v in self._values.items()}


# --- verdicts ----------------------------------------------------------------


class Status(str, enum.Enum):
    SQUARE = "Square"
    UNDERDETERMINED = "Underdetermined"
    OVERDETERMINED = "Overdetermined"
    NONSINGULAR = "Nonsingular"
    SINGULAR = "Singular"


@dataclass(frozen=True)
class Verdict:
    status: Status
    k: int = 0
    condition: float | None = None

    @property
    def ok(self) -> bool:
        return self.status in (Status.SQUARE, Status.NONSINGULAR)

    def __str__(self):
        if self.status in (Status.UNDERDETERMINED, Status.OVERDETERMINED):
            return f"{self.status.value}({self.k})"
        if self.status is Status.SINGULAR:
            return f"Singular(cond~{self.condition:.3g})"
        return self.status.value


def count_dofs(network: Network, bcs: Mapping[int, float] | None = None) -> tuple[int, int]:
    """(number of equations, number of unknowns)."""
    bcs = bcs or {}
    for i in bcs:
        if not 0 <= i < len(network.registry):
            raise KeyError(f"boundary condition on nonexistent slot {i}")
    return len(build_residuals(network)), len(network.registry) - len(bcs)


def check_square(network: Network, bcs: Mapping[int, float] | None = None) -> Verdict:
    n_eq, n_unk = count_dofs(network, bcs)
    if n_eq == n_unk:
        return Verdict(Status.SQUARE)
    if n_unk > n_eq:
        return Verdict(Status.UNDERDETERMINED, n_unk - n_eq)
    return Verdict(Status.OVERDETERMINED, n_eq - n_unk)


def jacobian_rank_probe(network: Network, bcs: Mapping[int, float], probe_state=None, min_pivot: float = 1e-12) -> Verdict:
    """Nonsingularity of the reduced Jacobian at ``probe_state``.

    ``probe_state`` is a full slot vector, a mapping of slot labels overriding
    the default initial guess, or None for the default guess itself.
    """
    system = assemble_system(network, bcs)
    if probe_state is None:
        x = default_initial_guess(network, bcs).values
    elif isinstance(probe_state, Mapping):
        x = guess_from_values(network, probe_state, bcs).values
    else:
        x = probe_state
    x = system.full_state(x)
    flows = x[system.heat_pipe_flows]
    if np.any(flows < 0):
        raise DomainError("probe state has a negative heat-pipe mass flow")
    fac = factorize(system.jacobian(x), min_pivot)
    if fac.singular:
        return Verdict(Status.SINGULAR, condition=fac.condition_estimate)
    return Verdict(Status.NONSINGULAR, condition=fac.condition_estimate)


def flows_from_pressures(network: Network, state) -> np.ndarray:
    """Set every pipe flow to the value implied by its end pressures."""
    x = np.array(state, dtype=float)
    reg = network.registry
    for lid, link in network.links.items():
        if isinstance(link.kind, (GasPipe, HeatPipe)):
            dp = x[reg.lookup("p", link.start)] - x[reg.lookup("p", link.end)]
            flow = math.copysign(math.sqrt(abs(dp) / link.kind.resistance), dp) if dp else 0.0
            x[reg.lookup("q" if isinstance(link.kind, GasPipe) else "m", lid)] = flow
    return x


# --- templates -----------------------------------------------------------------

E, G, H = Carrier.ELECTRICITY, Carrier.GAS, Carrier.HEAT


@dataclass(frozen=True)
class TemplateEntry:
    kind: str
    role: str
    default: float | None = None

    @property
    def key(self) -> str:
        return f"{self.kind}@{self.role}"


@dataclass(frozen=True)
class BCTemplate:
    """Known-variable column of a boundary-condition table.

    Roles name nodes relative to the single coupling node: ``e``, ``g``,
    ``h`` are the nodes on its dummy links, ``*_link`` the dummy links, and
    ``*_load`` the node one physical link further out.
    """

    name: str
    description: str
    carriers: frozenset
    with_links: bool
    free_eta: bool
    entries: tuple[TemplateEntry, ...]


def _t(name, description, carriers, with_links, free_eta, *entries):
    return BCTemplate(name, description, frozenset(carriers), with_links, free_eta,
                      tuple(TemplateEntry(*e) for e in entries))


TEMPLATES: dict[str, BCTemplate] = {t.name: t for t in [
    _t("p2g_known", "P2G unit, given input power", {E, G}, False, False,
       ("P", "e"), ("Q", "e_link", 0.0)),
    _t("boiler_known", "electrical boiler, given input power", {E, H}, False, False,
       ("T_r", "h"), ("P", "e"), ("Q", "e_link", 0.0), ("T_s", "h_link")),
    _t("electrolyser_known", "electrolyser, known heat efficiency", {E, G, H}, False, False,
       ("P", "e"), ("T_r", "h"), ("Q", "e_link", 0.0), ("T_s", "h_link")),
    _t("electrolyser_free", "electrolyser, free heat efficiency", {E, G, H}, False, True,
       ("q", "g"), ("dphi", "h"), ("T_r", "h"), ("Q", "e_link", 0.0), ("T_s", "h_link")),
    _t("electrolyser_links_known", "electrolyser with physical links, known heat efficiency", {E, G, H}, True, False,
       ("P", "e", 0.0), ("Q", "e", 0.0), ("P", "e_load"), ("V", "e_load"), ("delta", "e_load", 0.0),
       ("q", "g", 0.0), ("p", "g_load"), ("m", "h", 0.0), ("p", "h_load"), ("T_r", "h_load"),
       ("Q", "e_link", 0.0), ("T_s", "h_link")),
    _t("electrolyser_links_free", "electrolyser with physical links, free heat efficiency", {E, G, H}, True, True,
       ("P", "e", 0.0), ("Q", "e", 0.0), ("V", "e_load"), ("delta", "e_load", 0.0),
       ("q", "g", 0.0), ("q", "g_load"), ("p", "g_load"), ("m", "h", 0.0), ("p", "h_load"),
       ("dphi", "h_load"), ("T_r", "h_load"), ("Q", "e_link", 0.0), ("T_s", "h_link")),
]}


class TemplateError(ValueError):
    pass


_PREFIX = {E: "e", G: "g", H: "h"}


def resolve_roles(network: Network) -> tuple[dict[str, str], bool]:
    """Map template roles to node/link ids; also report whether physical links exist."""
    couplings = network.couplings()
    if len(couplings) != 1:
        raise TemplateError(f"templates need exactly one coupling node, found {len(couplings)}")
    c = couplings[0].id
    roles = {"c": c}
    shapes = set()
    for link in network.dummy_links(c):
        pre = _PREFIX[link.kind.carrier]
        attached = network.dummy_carrier_node(link)
        roles[f"{pre}_link"] = link.id
        roles[pre] = attached
        phys = network.physical_links(attached)
        if any(l.is_dummy for l in network.incident(attached) if l.id != link.id):
            raise TemplateError(f"node {attached!r} touches a second coupling")
        if not phys:
            shapes.add(False)
            continue
        if len(phys) != 1:
            raise TemplateError(f"node {attached!r} has {len(phys)} physical links, template shape needs one")
        remote = phys[0].other(attached)
        if len(network.incident(remote)) != 1:
            raise TemplateError(f"node {remote!r} is not a leaf")
        roles[f"{pre}_load"] = remote
        shapes.add(True)
    if len(shapes) != 1:
        raise TemplateError("carriers mix bare and linked attachments")
    if len(network.nodes) != 1 + len(network.dummy_links(c)) * (2 if True in shapes else 1):
        raise TemplateError("network has nodes outside the template's reference shape")
    return roles, shapes.pop()


def apply_template(network: Network, template: BCTemplate | str, values: Mapping[str, float] | None = None,
                   reference_pressure: str = "load") -> BoundaryConditionSet:
    """Boundary conditions of ``template`` on ``network``.

    ``values`` are keyed by entry key (``"P@e_load"``) or by the resolved slot
    label (``"P[1e]"``). Entries with a default may be omitted.
    ``reference_pressure="junction"`` moves reference pressures from the loads
    to the nodes next to the coupling.
    """
    if isinstance(template, str):
        try:
            template = TEMPLATES[template]
        except KeyError:
            raise TemplateError(f"unknown template {template!r}") from None
    if reference_pressure not in ("load", "junction"):
        raise ValueError("reference_pressure must be 'load' or 'junction'")
    roles, with_links = resolve_roles(network)
    c = roles["c"]
    carriers = {l.kind.carrier for l in network.dummy_links(c)}
    if carriers != template.carriers or with_links != template.with_links:
        raise TemplateError(f"network does not match the reference shape of template {template.name!r}")
    has_free = network.registry.find("eta_h", c) is not None
    if has_free != template.free_eta:
        raise TemplateError(f"template {template.name!r} needs a {'free' if template.free_eta else 'known'} heat efficiency")

    values = dict(values or {})
    used = set()
    entries = []
    for e in template.entries:
        role = e.role
        if e.kind == "p" and reference_pressure == "junction" and role.endswith("_load"):
            role = role[:-5]
        location = roles[role]
        idx = network.registry.lookup(e.kind, location)
        label = network.registry[idx].label
        if e.key in values:
            v = values[e.key]
            used.add(e.key)
        elif label in values:
            v = values[label]
            used.add(label)
        elif e.default is not None:
            v = e.default
        else:
            raise TemplateError(f"template {template.name!r} needs a value for {e.key} ({label})")
        entries.append((idx, v))
    unused = set(values) - used
    if unused:
        raise TemplateError(f"values not used by template {template.name!r}: {sorted(unused)}")
    return BoundaryConditionSet(entries)
