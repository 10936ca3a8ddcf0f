import math

import numpy as np
import pytest

from econsim.grids import CONSUMPTION, LABOR, NormConstants
from econsim.rewards import (
    GovPrefs,
    HouseholdPrefs,
    central_bank_reward,
    firm_reward,
    government_reward,
    household_utility,
    household_utility_aug,
    inverse_liquidity,
    normalize_firm_reward,
    normalize_household_args,
)

NORM = NormConstants()
# mpmath, 50 digits: 6**0.8 / 0.8
SIX_POW_08_OVER_08 = 5.241203390786844


def test_norm_constants():
    assert (NORM.labor, NORM.wage, NORM.price, NORM.consumption) == (480, 32.06, 322, 12)
    assert NORM.output == pytest.approx(1440 ** 0.67, rel=1e-14)
    assert NormConstants(n_households=2).output == pytest.approx(960 ** 0.67, rel=1e-14)


def test_household_utility_examples():
    p = HouseholdPrefs(gamma=0.1, nu=0.5, mu=0.4)
    assert household_utility(0, 0, 0, p) == 0
    assert household_utility(1, 0, 0, p) == pytest.approx(1 / 0.9, rel=1e-12)
    assert household_utility(0, 1, 0, p) == pytest.approx(-0.5, rel=1e-12)


def test_household_utility_savings_term_is_odd():
    p = HouseholdPrefs(gamma=0.2, nu=0.5, mu=0.2)
    up = household_utility(0, 0, 2.0, p)
    down = household_utility(0, 0, -2.0, p)
    assert up == pytest.approx(-down) == pytest.approx(0.2 * 2 ** 0.8 / 0.8)


def test_augmented_utility():
    p = HouseholdPrefs(gamma=0.2, nu=0.5, mu=0.2)
    assert household_utility_aug(0, 12, 1, 0.5, p) == household_utility(12, 1, 0.5, p)
    base = household_utility(12, 0, 0, p)
    assert household_utility_aug(1, 12, 0, 0, p) == pytest.approx(2 * base, rel=1e-12)
    gain = household_utility_aug(0.5, 12, 0, 0, p) - household_utility(12, 0, 0, p)
    assert gain == pytest.approx(SIX_POW_08_OVER_08, rel=1e-12)


@pytest.mark.parametrize("gamma, mu", [(0.1, 0.4), (0.2, 0.2), (0.3, 0.1)])
def test_household_utility_monotone(gamma, mu):
    p = HouseholdPrefs(gamma=gamma, nu=0.5, mu=mu)
    cs = [household_utility(c, 1.0, 1.0, p) for c in CONSUMPTION]
    assert all(b > a for a, b in zip(cs, cs[1:]))
    ns = [household_utility(12, n / 480, 1.0, p) for n in LABOR[1:]]
    assert all(b < a for a, b in zip(ns, ns[1:]))
    ms = [household_utility(12, 1.0, m, p) for m in np.linspace(0.01, 10, 30)]
    assert all(b > a for a, b in zip(ms, ms[1:]))


@pytest.mark.parametrize("eta", [0.0, 0.25, 0.5, 1.0])
@pytest.mark.parametrize("c", [0.0, 6.0, 24.0])
def test_augmented_dominates_base(eta, c):
    p = HouseholdPrefs(gamma=0.3, nu=0.5, mu=0.1)
    aug, base = household_utility_aug(eta, c, 1, 1, p), household_utility(c, 1, 1, p)
    if eta * c == 0:
        assert aug == base
    else:
        assert aug > base


def test_firm_reward():
    assert firm_reward(0, 0, 0, 0, 0, 0.1) == 0
    assert firm_reward(322, 12, 32.06, 480, 0, 0.1) == pytest.approx(-11524.8, rel=1e-12)
    assert firm_reward(322, 0, 0, 0, 10, 0.1) == pytest.approx(-322, rel=1e-12)


def test_normalized_firm_reward():
    assert normalize_firm_reward(322, 36, 32.06, 1440, 0, 3, 0.1, NORM) == pytest.approx(0, abs=1e-15)
    assert normalize_firm_reward(0, 0, 0, 0, 0, 3, 0.1, NORM) == 0
    y_next = 3 * math.e * 480
    assert normalize_firm_reward(322, 0, 0, 0, y_next, 3, 0.1, NORM) == pytest.approx(-0.1, rel=1e-12)


def test_central_bank_reward():
    assert central_bank_reward(1.02, 0, 1, 1.02) == 0
    assert central_bank_reward(1.02, NORM.output / NORM.output, 1, 1.02) == pytest.approx(1.0)
    assert central_bank_reward(2.02, 0, 1, 1.02) == pytest.approx(-1.0, rel=1e-12)


def test_central_bank_reward_peaks_at_target():
    grid = np.linspace(0.4, 2.4, 201)
    values = [central_bank_reward(pi, 0.7, 1.0, 1.02) for pi in grid]
    assert grid[int(np.argmax(values))] == pytest.approx(1.02)
    # Ratios reachable on the price grid.
    prices = [188, 255, 322, 389, 456]
    ratios = sorted({a / b for a in prices for b in prices})
    best = max(ratios, key=lambda pi: central_bank_reward(pi, 0.7, 1.0, 1.02))
    assert best == 1.0  # the reachable ratio closest to 1.02


def test_inverse_liquidity():
    assert inverse_liquidity(1000, 100, 1) == pytest.approx(0.1, rel=1e-12)
    assert inverse_liquidity(1000, 100, 0) == 0
    assert inverse_liquidity(0, 322, 6, iota_cap=100) == 100
    assert inverse_liquidity(-5000, 322, 6, iota_cap=100) == 100
    # lower liquidity never gets a smaller weight
    ms = [1e5, 1e4, 1e3, 10, 1, 0, -10]
    iotas = [inverse_liquidity(m, 322, 12) for m in ms]
    assert all(b >= a for a, b in zip(iotas, iotas[1:]))


def test_government_reward():
    assert government_reward(0.0, [1, 1, 1], [0, 0, 0], 0.1, norm=NORM) == 0
    assert government_reward(1.0, [1, 2, 3], [0, 0, 0], 0.1, norm=NORM) == pytest.approx(0.1)
    r = government_reward(1.0, [0.1, 0.2, 0.3], [100, 100, 100], 0.1, norm=NORM)
    assert r == pytest.approx(0.1 + 60 / 11592, rel=1e-12)


def test_government_reward_linear_in_credits():
    iota = [0.3, 5.0, 100.0]
    k = np.array([1200.0, 300.0, 4000.0])
    one = government_reward(0.0, iota, k, 0.1, norm=NORM)
    two = government_reward(0.0, iota, 2 * k, 0.1, norm=NORM)
    assert two == pytest.approx(2 * one, rel=1e-12)


def test_normalize_household_args():
    assert normalize_household_args(12, 480, 0, 3, NORM) == (12, 1.0, 0.0)
    _, _, m = normalize_household_args(0, 0, 46166.4, 3, NORM)
    assert m == pytest.approx(1.0, rel=1e-12)
    with pytest.raises(ValueError):
        normalize_household_args(0, 0, 0, 0, NORM)


def test_prefs_validation():
    with pytest.raises(ValueError):
        HouseholdPrefs(gamma=1.0)
    with pytest.raises(ValueError):
        GovPrefs(theta=1.5)
