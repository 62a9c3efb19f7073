import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mcflow import (
    FREE,
    apply_template,
    assemble_system,
    build_network,
    default_initial_guess,
    finite_difference_jacobian,
    newton_solve,
    solve_network,
)
from mcflow.assembly import AssemblyError, build_residuals, compare_jacobians
from mcflow.documents import FIXTURES, load_fixture
from mcflow.solver import IllPosedError, SolverConfig, SolveStatus

from conftest import LINKED_KNOWN_VALUES, V_LOAD, boiler_net, electrolyser_net, linked_net, p2g_net

HHV = 1.418e8


@pytest.fixture(scope="module")
def known():
    net = linked_net()
    bcs = apply_template(net, "electrolyser_links_known", LINKED_KNOWN_VALUES)
    return net, bcs, solve_network(net, bcs)


def test_fig4_converges_quickly(known):
    _, _, r = known
    assert r.status is SolveStatus.CONVERGED
    assert r.iterations <= 10
    assert r.residual_history[-1] <= 1e-6 < r.residual_history[0]
    assert len(r.residual_history) == r.iterations + 1


def test_fig4_solution_values(known):
    _, _, r = known
    assert r["m[0c-0h]"] == pytest.approx(5.74, rel=5e-3)
    assert r["dphi[0c-0h]"] / 1e6 == pytest.approx(0.365, abs=5e-4)
    assert r["dphi[1h]"] / 1e6 == pytest.approx(0.354, abs=5e-4)
    assert r["T_s[1h]"] == pytest.approx(337.88, abs=0.01)
    assert r["T_r[0c-0h]"] == pytest.approx(322.942, abs=1e-3)
    assert r["q[0g-1g]"] == pytest.approx(0.013, abs=5e-4)
    assert (r["p[0h]"] - r["p[1h]"]) / 1e5 == pytest.approx(0.048, rel=0.02)
    # with the fitted admittance the electrical side matches the reference too
    assert r["P[0e-0c]"] / 1e6 == pytest.approx(2.434, abs=5e-4)
    assert r["Q[1e]"] / 1e6 == pytest.approx(-0.662, abs=5e-4)


def test_certificate_recomputed_from_scratch(known):
    net, bcs, r = known
    fresh = assemble_system(net, bcs)
    assert np.linalg.norm(fresh.residual(r.state)) <= 1e-6


def test_conservation_at_solution(known):
    net, bcs, r = known
    for res in build_residuals(net):
        if res.label.startswith(("mass", "P-balance", "Q-balance", "supply-energy", "return-energy")):
            assert abs(res(r.state)) <= 1e-6, res.label
    assert abs(0.9 * r["P[0e-0c]"] - HHV * r["q[0c-0g]"] - r["dphi[0c-0h]"]) <= 1e-6


def test_boundary_slots_unchanged(known):
    net, bcs, r = known
    for i, v in bcs.items():
        assert r.state[i] == v


def test_determinism():
    net = linked_net()
    bcs = apply_template(net, "electrolyser_links_known", LINKED_KNOWN_VALUES)
    a, b = solve_network(net, bcs), solve_network(net, bcs)
    assert a.iterations == b.iterations
    assert np.array_equal(a.state, b.state)
    assert a.residual_history == b.residual_history


def test_known_free_round_trip(known):
    _, _, r = known
    net = linked_net(FREE)
    bcs = apply_template(net, "electrolyser_links_free", {
        "V@e_load": V_LOAD, "q@g_load": r["q[1g]"], "p@g_load": 1e5, "p@h_load": 6e5,
        "dphi@h_load": r["dphi[1h]"], "T_r@h_load": 323.15, "T_s@h_link": 338.15})
    free = solve_network(net, bcs)
    assert free.converged
    assert abs(free["eta_h[0c]"] - 1 / 6) <= 1e-8
    for label, v in r.as_dict().items():
        assert free[label] == pytest.approx(v, abs=1e-6), label


def test_small_line_admittance_has_no_solution():
    net = linked_net(g=0.03, b=-0.3)
    bcs = apply_template(net, "electrolyser_links_known", LINKED_KNOWN_VALUES)
    assert not solve_network(net, bcs).converged


def test_assembled_equation_labels(known):
    net, bcs, _ = known
    labels = assemble_system(net, bcs).labels
    assert len(labels) == 18
    assert set(labels) == {
        "P-balance[0e]", "Q-balance[0e]", "P-balance[1e]", "Q-balance[1e]",
        "mass[0g]", "mass[1g]", "mass[0h]", "supply-energy[0h]", "return-energy[0h]",
        "mass[1h]", "supply-energy[1h]", "return-energy[1h]",
        "pipe[0g-1g]", "pipe[0h-1h]",
        "energy-balance[0c]", "residual-heat[0c]", "coupling-heat-power[0c]", "heat-power[1h]",
    }


def test_p2g_system_is_affine():
    net = p2g_net()
    system = assemble_system(net, apply_template(net, "p2g_known", {"P@e": -2e6}))
    assert system.shape == (4, 4)
    rng = np.random.default_rng(0)
    J0 = system.jacobian(system.full_state(rng.normal(size=6)))
    for _ in range(5):
        x = system.full_state(rng.normal(size=6) * [1e6, 1e6, 0.01, 0.01, 1e6, 1e6])
        assert np.array_equal(system.jacobian(x), J0)
        np.testing.assert_allclose(finite_difference_jacobian(system, x), J0, rtol=1e-6)


def test_empty_network():
    net = build_network([], [])
    system = assemble_system(net, {})
    assert system.shape == (0, 0)
    r = newton_solve(system, np.zeros(0))
    assert r.converged and r.iterations == 0


def test_assembly_rejects_non_square_and_bad_slot():
    net = p2g_net()
    with pytest.raises(AssemblyError):
        assemble_system(net, {})
    with pytest.raises(AssemblyError):
        assemble_system(net, {0: 1.0, 17: 1.0})


# Powers up to 100 MW, gas flows up to 10 kg/s. Far larger flows leave a
# rounding error in x - dx that HHV lifts above the tolerance.
powers = st.floats(-1e8, 1e8, allow_nan=False)
flows = st.floats(-10, 10, allow_nan=False)


@settings(max_examples=200)
@given(st.tuples(powers, powers, flows, flows, powers, powers))
def test_p2g_solves_in_one_iteration_from_any_guess(guess):
    net = p2g_net()
    bcs = apply_template(net, "p2g_known", {"P@e": -2e6})
    r = newton_solve(assemble_system(net, bcs), np.array(guess))
    assert r.converged
    assert r.iterations == (0 if r.residual_history[0] <= 1e-6 else 1)
    assert r["q[0g]"] == pytest.approx(0.9 * 2e6 / HHV, rel=1e-12)


def test_duplicated_constraint_rejected_before_solving():
    net = linked_net()
    values = dict(LINKED_KNOWN_VALUES)
    bcs = apply_template(net, "electrolyser_links_known", values)
    bcs = bcs.with_value(net.registry.index("q[1g]"), 0.0128)
    with pytest.raises(IllPosedError, match="Overdetermined"):
        solve_network(net, bcs)


def test_default_initial_guess_values():
    net = linked_net()
    bcs = apply_template(net, "electrolyser_links_known", LINKED_KNOWN_VALUES)
    g = default_initial_guess(net, bcs)
    unknown = {net.registry[i].label: v for i, v in enumerate(g.values) if i not in bcs}
    assert unknown == pytest.approx({
        "V[0e]": V_LOAD, "delta[0e]": 0, "p[0g]": 1.05e5, "q[1g]": 0, "T_s[1h]": 353.15,
        "T_r[0c-0h]": 313.15, "p[0h]": 6.3e5, "T_s[0h-1h]": 353.15, "m[0h-1h]": 1, "P[0e-0c]": 0,
        "q[0c-0g]": 0, "m[0c-0h]": 1, "T_r[0h-1h]": 313.15, "dphi[0c-0h]": 0,
        "Q[1e]": 0, "q[0g-1g]": 0, "m[1h]": 1, "dphi[1h]": 0,
    })
    for i, v in bcs.items():
        assert g.values[i] == v


def test_heat_only_guess_has_nonzero_flows():
    net = boiler_net()
    g = default_initial_guess(net, {})
    assert all(g.values[i] == 1.0 for i in net.registry.of_kind("m"))


def test_zero_flow_guess_is_singular(known):
    net, bcs, _ = known
    zeros = {s.label: 0.0 for i, s in enumerate(net.registry) if s.kind == "m" and i not in bcs}
    r = solve_network(net, bcs, guess=zeros)
    assert r.status is SolveStatus.SINGULAR_JACOBIAN


def test_negative_flow_guess_is_domain_violation(known):
    net, bcs, _ = known
    r = solve_network(net, bcs, guess={"m[0h-1h]": -1.0})
    assert r.status is SolveStatus.DOMAIN_VIOLATION


def test_iteration_limit(known):
    net, bcs, _ = known
    r = solve_network(net, bcs, SolverConfig(max_iter=2))
    assert r.status is SolveStatus.MAX_ITERATIONS
    assert r.iterations == 2


def test_damped_newton_still_converges(known):
    net, bcs, r = known
    d = solve_network(net, bcs, SolverConfig(damping=0.7, max_iter=200))
    assert d.converged and d.iterations > r.iterations
    np.testing.assert_allclose(d.state, r.state, rtol=1e-8, atol=1e-6)


@pytest.mark.parametrize("kw", [dict(tol=0), dict(max_iter=0), dict(damping=0), dict(damping=1.5)])
def test_solver_config_validation(kw):
    with pytest.raises(ValueError):
        SolverConfig(**kw)


def test_free_efficiency_from_given_outputs():
    net = electrolyser_net(FREE)
    bcs = apply_template(net, "electrolyser_free",
                         {"q@g": 0.0129, "dphi@h": 0.365e6, "T_r@h": 322.942, "T_s@h_link": 338.15})
    r = solve_network(net, bcs)
    assert r.converged
    assert r["eta_h[0c]"] == pytest.approx(0.365e6 / (HHV * 0.0129 + 0.365e6), rel=1e-9)
    assert r["eta_h[0c]"] == pytest.approx(1 / 6, abs=1e-3)


def test_fixed_efficiency_ratio():
    net = electrolyser_net()
    r = solve_network(net, apply_template(net, "electrolyser_known",
                                          {"P@e": -2.434e6, "T_r@h": 322.942, "T_s@h_link": 338.15}))
    assert r["dphi[0h]"] / (0.9 * r["P[0e-0c]"]) == pytest.approx(1 / 6, rel=1e-9)


@pytest.mark.parametrize("name", FIXTURES)
def test_fixture_jacobians_match_finite_differences(name):
    sc = load_fixture(name)
    system = assemble_system(sc.network, sc.bcs)
    guess = default_initial_guess(sc.network, sc.bcs).values
    sol = solve_network(sc.network, sc.bcs).state
    for state in (guess, sol):
        assert compare_jacobians(system, state, rtol=1e-5) == []


def test_kink_entries_are_flagged_without_exclusion():
    sc = load_fixture("fig4_known_eff")
    system = assemble_system(sc.network, sc.bcs)
    guess = default_initial_guess(sc.network, sc.bcs).values
    assert compare_jacobians(system, guess, skip_kinks=False) == [
        "pipe[0g-1g] / q[0g-1g]: analytic 0, fd -1.64795"]


@pytest.mark.parametrize("name", FIXTURES)
def test_fixture_final_residual_below_first(name):
    sc = load_fixture(name)
    r = solve_network(sc.network, sc.bcs, sc.config, sc.guess)
    assert r.converged
    assert r.residual_history[-1] < r.residual_history[0] or r.iterations == 0
    assert all(math.isfinite(v) for v in r.state)
