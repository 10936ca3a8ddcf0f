import pytest

from econsim.agents import agent_ids
from econsim.scenarios import get_scenario
from econsim.training import scripted_indices

# Frozen parameter tables, written out by hand.
HOUSEHOLDS = [(0.1, 0.4), (0.2, 0.2), (0.3, 0.1)]
FROZEN = {
    "A": {
        "learners": ("household_0", "household_1", "household_2", "firm", "central_bank"),
        "rates": {"household_0": 0.01, "household_1": 0.01, "household_2": 0.01,
                  "firm": 0.005, "central_bank": 0.001},
        "credit_mode": "fixed", "credit": 0.0, "eta": False, "tax": 0.10,
    },
    "B": {
        "learners": ("household_0", "household_1", "household_2", "firm", "central_bank"),
        "rates": {"household_0": 0.002, "household_1": 0.002, "household_2": 0.002,
                  "firm": 0.005, "central_bank": 0.005},
        "credit_mode": "fixed", "credit": 5000.0, "eta": True, "tax": 0.10,
    },
    "C": {
        "learners": ("household_0", "household_1", "household_2", "firm", "central_bank", "government"),
        "rates": {"household_0": 0.002, "household_1": 0.002, "household_2": 0.002,
                  "firm": 0.005, "central_bank": 0.005, "government": 0.001},
        "credit_mode": "revenue", "credit": 0.0, "eta": True, "tax": 0.10,
    },
}


@pytest.mark.parametrize("name", ["A", "B", "C"])
def test_scenario_matches_frozen_table(name):
    s = get_scenario(name)
    f = FROZEN[name]
    assert s.learners == f["learners"]
    assert s.learning_rates == f["rates"]
    assert (s.credit_mode, s.fixed_credit, s.eta_enabled, s.fixed_tax) == (
        f["credit_mode"], f["credit"], f["eta"], f["tax"])
    assert [(p.gamma, p.mu) for p in s.prefs] == HOUSEHOLDS
    assert all(p.nu == 0.5 and p.beta == 0.99 for p in s.prefs)
    assert s.horizon == 12
    assert (s.firm.alpha, s.firm.rho, s.firm.sigma, s.firm.chi) == (0.67, 0.97, 0.1, 0.1)
    assert (s.bank.lam, s.bank.pi_star) == (1.0, 1.02)
    assert s.government.theta == 0.1
    econ = s.economy()
    assert econ.initial_savings == 0.0


def test_liquidity_decreases_along_the_table():
    mus = [p.mu for p in get_scenario("A").prefs]
    assert mus == sorted(mus, reverse=True)


@pytest.mark.parametrize("name, scripted", [
    ("A", {"government"}),
    ("B", {"government"}),
    ("C", set()),
])
def test_scripted_agents(name, scripted):
    s = get_scenario(name)
    assert set(s.scripted_values()) == scripted
    assert set(scripted_indices(s)) | set(s.learners) == set(agent_ids(s.economy()))


def test_scripted_government_plays_flat_tax():
    assert get_scenario("B").scripted_values()["government"][0] == 0.10


def test_credit_override_switches_to_fixed_mode():
    econ = get_scenario("C").economy(credit_override=5000.0)
    assert econ.credit_mode == "fixed" and econ.fixed_credit == 5000.0


def test_unknown_scenario():
    with pytest.raises(ValueError, match="unknown scenario"):
        get_scenario("D")
