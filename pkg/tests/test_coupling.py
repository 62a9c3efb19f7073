import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mcflow import apply_template, solve_network
from mcflow.coupling import (
    coupling_heat_terminal_residual,
    eboiler_residual,
    electrolyser_energy_balance_residual,
    electrolyser_residual_heat_residual,
    p2g_residual,
)

from conftest import boiler_net, electrolyser_net, p2g_net

HHV = 1.418e8
finite = dict(allow_nan=False, allow_infinity=False)


def test_energy_balance_zero_state():
    assert electrolyser_energy_balance_residual(0, 0, 0, 0.9, HHV) == 0


def test_energy_balance_reference_values_within_rounding():
    r = electrolyser_energy_balance_residual(2.434e6, 0.0129, 0.365e6, 0.9, HHV)
    assert abs(r) <= 0.005 * 0.9 * 2.434e6


def test_energy_balance_closed_form_gas_only():
    q = 0.9 * 1e6 / HHV
    assert q == pytest.approx(6.347e-3, rel=1e-3)
    assert electrolyser_energy_balance_residual(1e6, q, 0, 0.9, HHV) == pytest.approx(0, abs=1e-6)


def test_residual_heat_reference_values():
    dphi = (1 / 6) * 0.9 * 2.434e6
    assert dphi / 1e6 == pytest.approx(0.3651, abs=1e-4)
    assert electrolyser_residual_heat_residual(2.434e6, dphi, 1 / 6, 0.9) == pytest.approx(0, abs=1e-6)


def test_residual_heat_limits():
    assert electrolyser_residual_heat_residual(2e6, 0.0, 0.0, 0.9) == 0
    # eta_h = 1: all converted power becomes heat and no gas is left
    P = 2e6
    assert electrolyser_residual_heat_residual(P, 0.9 * P, 1.0, 0.9) == 0
    assert electrolyser_energy_balance_residual(P, 0.0, 0.9 * P, 0.9, HHV) == 0


def test_p2g_closed_form():
    assert p2g_residual(0, 0, 0.9, HHV) == 0
    q = 0.9 * 2e6 / HHV
    assert q == pytest.approx(0.012694, abs=5e-7)
    assert p2g_residual(2e6, q, 0.9, HHV) == pytest.approx(0, abs=1e-6)


def test_boiler_closed_form():
    assert eboiler_residual(0, 0, 0.9) == 0
    assert eboiler_residual(1e6, 0.9e6, 0.9) == 0


def test_coupling_heat_terminal():
    assert coupling_heat_terminal_residual(1, 10, 0, 0, 4182) == 41820
    m = 0.365e6 / (4182 * (338.15 - 322.942))
    assert m == pytest.approx(5.74, rel=5e-3)
    assert coupling_heat_terminal_residual(m, 338.15, 322.942, 0.365e6, 4182) == pytest.approx(0, abs=1e-6)
    assert coupling_heat_terminal_residual(3.0, 330, 330, 0, 4182) == 0


def _solve(net, template, values):
    bcs = apply_template(net, template, values)
    result = solve_network(net, bcs)
    assert result.converged
    return result


def test_electrolyser_at_zero_heat_efficiency_equals_p2g():
    values = {"P@e": -2e6}
    a = _solve(p2g_net("p2g"), "p2g_known", values)
    b = _solve(p2g_net("electrolyser", eta_h=0.0), "p2g_known", values)
    assert a.system.registry == b.system.registry
    np.testing.assert_allclose(a.state, b.state, rtol=1e-9, atol=1e-9)


def test_electrolyser_at_unit_heat_efficiency_equals_boiler():
    values = {"P@e": -2e6, "T_r@h": 322.942, "T_s@h_link": 338.15}
    a = _solve(boiler_net("boiler"), "boiler_known", values)
    b = _solve(boiler_net("electrolyser", eta_h=1.0), "boiler_known", values)
    assert a.system.registry == b.system.registry
    np.testing.assert_allclose(a.state, b.state, rtol=1e-9, atol=1e-9)


def test_full_electrolyser_limits_match_dedicated_units():
    base = {"P@e": -2e6, "T_r@h": 322.942, "T_s@h_link": 338.15}
    gas_only = _solve(electrolyser_net(0.0), "electrolyser_known", base)
    p2g = _solve(p2g_net("p2g"), "p2g_known", {"P@e": -2e6})
    assert gas_only["q[0g]"] == pytest.approx(p2g["q[0g]"], rel=1e-9)
    assert gas_only["dphi[0h]"] == pytest.approx(0, abs=1e-6)
    heat_only = _solve(electrolyser_net(1.0), "electrolyser_known", base)
    boiler = _solve(boiler_net("boiler"), "boiler_known", base)
    assert heat_only["q[0g]"] == pytest.approx(0, abs=1e-12)
    for label in ("m[0h]", "dphi[0h]", "P[0e-0c]"):
        assert heat_only[label] == pytest.approx(boiler[label], rel=1e-9)


@given(st.floats(0, 1, **finite), st.floats(0.1e6, 5e6, **finite))
def test_output_split(eta_h, P):
    result = _solve(electrolyser_net(eta_h), "electrolyser_known",
                    {"P@e": -P, "T_r@h": 322.942, "T_s@h_link": 338.15})
    gas = HHV * result["q[0g]"]
    heat = result["dphi[0h]"]
    eta_p = 0.9 * P
    assert gas >= -1e-9 * eta_p and heat >= -1e-9 * eta_p
    assert gas + heat == pytest.approx(eta_p, rel=1e-9)
    assert heat / eta_p == pytest.approx(eta_h, rel=1e-9, abs=1e-12)
    assert gas / eta_p == pytest.approx(1 - eta_h, rel=1e-9, abs=1e-12)
