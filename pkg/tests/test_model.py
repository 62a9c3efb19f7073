import pytest

from mcflow import (
    FREE,
    Carrier,
    Coupling,
    CouplingParams,
    Dummy,
    GasPipe,
    Link,
    NetworkError,
    Node,
    Terminal,
    TransmissionLine,
    build_network,
    registry_lookup,
)
from mcflow.assembly import build_residuals

from conftest import E, G, H, boiler_net, dummy, electrolyser_net, linked_net, p2g_net


def test_p2g_registry_slots():
    net = p2g_net()
    assert sorted(net.registry.labels) == sorted(
        ["P[0e]", "Q[0e]", "q[0g]", "P[0e-0c]", "Q[0e-0c]", "q[0c-0g]"])


@pytest.mark.parametrize("build, size", [
    (p2g_net, 6),
    (electrolyser_net, 14),
    (lambda: electrolyser_net(FREE), 15),
    (linked_net, 30),
    (lambda: linked_net(FREE), 31),
    (boiler_net, 12),
])
def test_registry_sizes(build, size):
    assert len(build().registry) == size


def test_registry_is_deterministic():
    assert linked_net().registry.labels == linked_net().registry.labels


def test_registry_order_nodes_then_links():
    labels = linked_net().registry.labels
    first_link = labels.index("q[0c-0g]")
    assert all("-" not in lab for lab in labels[:first_link])
    assert all("-" in lab for lab in labels[first_link:])


def test_lookup_all_slots_distinct(fig4):
    idx = [registry_lookup(fig4, s.kind, s.location) for s in fig4.registry]
    assert idx == list(range(30))


def test_lookup_terminal_heat_power(fig4):
    assert fig4.registry[registry_lookup(fig4, "dphi", "1h")].label == "dphi[1h]"


def test_lookup_eta_h_absent_in_known_mode(fig4):
    with pytest.raises(KeyError):
        registry_lookup(fig4, "eta_h", "0c")


def test_eta_h_slot_in_free_mode():
    net = linked_net(FREE)
    assert net.registry[registry_lookup(net, "eta_h", "0c")].unit == "1"


def test_isolated_gas_node_has_only_terminal_flow():
    net = build_network([Node("n", G, Terminal())], [])
    assert net.registry.labels == ["q[n]"]
    assert len(build_residuals(net)) == 1


def test_every_equation_slot_is_in_registry(fig4):
    n = len(fig4.registry)
    used = set()
    for r in build_residuals(fig4):
        assert all(0 <= s < n for s in r.slots)
        used.update(r.slots)
    assert used == set(range(n))


def test_duplicate_node_id():
    with pytest.raises(NetworkError, match="duplicate"):
        build_network([Node("a", E), Node("a", G)], [])


def test_duplicate_link_id():
    nodes = [Node("a", E), Node("b", E)]
    line = TransmissionLine(1, -1)
    with pytest.raises(NetworkError, match="duplicate"):
        build_network(nodes, [Link("l", "a", "b", line), Link("l", "b", "a", line)])


def test_dangling_endpoint():
    with pytest.raises(NetworkError, match="unknown node"):
        build_network([Node("a", E)], [Link("l", "a", "zz", TransmissionLine(1, -1))])


def test_carrier_mismatch():
    with pytest.raises(NetworkError, match="carrier mismatch"):
        build_network([Node("a", E), Node("b", G)], [Link("l", "a", "b", TransmissionLine(1, -1))])


def test_gas_pipe_between_electric_nodes():
    with pytest.raises(NetworkError, match="carrier mismatch"):
        build_network([Node("a", E), Node("b", E)], [Link("l", "a", "b", GasPipe(1.0, 0.01))])


def test_dummy_must_touch_coupling():
    with pytest.raises(NetworkError, match="dummy"):
        build_network([Node("a", E), Node("b", E)], [Link("l", "a", "b", Dummy())])


def test_dummy_declared_carrier_checked():
    nodes = [Node("e", E, Terminal()), Node("g", G, Terminal()),
             Node("c", coupling=Coupling("p2g", CouplingParams(0.9)))]
    with pytest.raises(NetworkError, match="declared"):
        build_network(nodes, [Link("ec", "e", "c", Dummy()), Link("cg", "c", "g", Dummy(H))])


def test_coupling_node_cannot_have_terminal():
    with pytest.raises(NetworkError):
        Node("c", coupling=Coupling("p2g", CouplingParams(0.9)), terminal=Terminal())


def test_node_needs_carrier_or_coupling():
    with pytest.raises(NetworkError):
        Node("x")


def test_mass_only_terminal_only_on_heat():
    with pytest.raises(NetworkError):
        Node("x", G, Terminal(mass_only=True))


def test_p2g_needs_gas_output():
    nodes = [Node("e", E, Terminal()), Node("h", H, Terminal()),
             Node("c", coupling=Coupling("p2g", CouplingParams(0.9)))]
    with pytest.raises(NetworkError, match="gas output"):
        build_network(nodes, [dummy("e", "c"), dummy("c", "h")])


def test_single_output_electrolyser_needs_matching_limit():
    with pytest.raises(NetworkError, match="eta_h = 0"):
        p2g_net("electrolyser", eta_h=0.5)
    assert len(p2g_net("electrolyser", eta_h=0.0).registry) == 6


def test_free_eta_h_only_for_electrolyser():
    with pytest.raises(ValueError):
        Coupling("p2g", CouplingParams(0.9, FREE))


def test_coupling_params_ranges():
    with pytest.raises(ValueError):
        CouplingParams(1.2)
    with pytest.raises(ValueError):
        CouplingParams(0.9, -0.1)


def test_non_positive_pipe_constant():
    with pytest.raises(NetworkError):
        GasPipe(0.0, 0.01)


def test_network_is_immutable(fig4):
    with pytest.raises(TypeError):
        fig4.nodes["zz"] = Node("zz", E)
    assert fig4.nodes["0h"].carrier is Carrier.HEAT
