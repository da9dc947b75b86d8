import math

import pytest

import reference as R
from absentminded.core import GameParams
from absentminded.equilibria import greedy_profile, mixing_profile
from absentminded.errors import SupportMismatch, ValidationError
from absentminded.montecarlo import SimConfig, compare, simulate
from absentminded.offers import (OfferSpace, construct_delay_mpe, construct_patient_delay,
                                 outcome_distribution)
from absentminded.oracle import enumerate_outcomes


def dates_of(profile):
    out = {1: 0.0, 2: 0.0, "none": 0.0}
    for k, v in outcome_distribution(profile).items():
        out[k if k == "none" else k[0]] += v
    return out


def test_config_validation():
    with pytest.raises(ValidationError):
        SimConfig(0, 1)
    with pytest.raises(ValidationError):
        SimConfig(10, -1)
    with pytest.raises(ValidationError):
        SimConfig(10, 1, workers=0)
    with pytest.raises(ValidationError):
        SimConfig(True, 1)


def test_mixing_histogram_and_payoffs():
    prof = mixing_profile(GameParams(3, 0.95))
    stats = simulate(prof, SimConfig(200_000, 2024))
    analytic = enumerate_outcomes(prof.sigma, prof.p_G, prof.params)
    assert compare(stats, analytic.date_distribution()).passed
    cells, _, up, ur = R.paths(prof.sigma, prof.p_G, 0.95)
    assert abs(stats.proposer_payoff - up) <= 4 * stats.se_proposer
    assert abs(stats.respondent_payoff - ur) <= 4 * stats.se_respondent
    for (t, tag), count in stats.cells:
        assert R.z_ok(count, stats.runs, cells[t][0 if tag == "G" else 1])


def test_reproducible_and_parallel():
    prof = mixing_profile(GameParams(2, 0.9))
    a = simulate(prof, SimConfig(100_000, 7))
    assert a == simulate(prof, SimConfig(100_000, 7))
    assert a == simulate(prof, SimConfig(100_000, 7, workers=4))
    assert a.counts != simulate(prof, SimConfig(100_000, 8)).counts


def test_numpy_backend_same_counts():
    prof = mixing_profile(GameParams(2, 0.9))
    a = simulate(prof, SimConfig(50_000, 3, backend="numba"))
    b = simulate(prof, SimConfig(50_000, 3, backend="numpy"))
    assert a == b


def test_greedy_trades_at_once():
    stats = simulate(greedy_profile(GameParams(2, 0.9)), SimConfig(10_000, 1))
    assert stats.counts == (10_000, 0, 0)
    assert stats.mean_date_given_deal == 1.0


def test_detects_perturbation():
    prof = mixing_profile(GameParams(2, 0.9))
    stats = simulate((prof.sigma, prof.p_G + 0.01), SimConfig(1_000_000, 12345, prof.params))
    cmp = compare(stats, enumerate_outcomes(prof.sigma, prof.p_G, prof.params).date_distribution())
    assert not cmp.passed
    assert cmp.max_abs_z > 10


def test_support_mismatch():
    stats = simulate(greedy_profile(GameParams(2, 0.9)), SimConfig(100, 1))
    with pytest.raises(SupportMismatch):
        compare(stats, {1: 1.0, "none": 0.0})


def test_zero_variance_cells():
    stats = simulate(greedy_profile(GameParams(2, 0.9)), SimConfig(100, 1))
    cmp = compare(stats, {1: 1.0, 2: 0.0, "none": 0.0})
    assert cmp.passed and cmp.max_abs_z == 0.0
    assert math.isinf(compare(stats, {1: 0.0, 2: 1.0, "none": 0.0}).max_abs_z)


@pytest.mark.parametrize("make", [
    lambda: construct_delay_mpe(OfferSpace.finite([0.25, 0.5]), 0.6),
    lambda: construct_patient_delay(0.25, 0.5),
])
def test_general_profiles(make):
    prof = make()
    stats = simulate(prof, SimConfig(200_000, 11, workers=2))
    assert compare(stats, dates_of(prof)).passed
    assert stats == simulate(prof, SimConfig(200_000, 11))
