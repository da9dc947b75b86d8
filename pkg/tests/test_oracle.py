import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import reference as R
from absentminded.core import GameParams
from absentminded.equilibria import fair_profiles, greedy_profile, mixing_profile
from absentminded.errors import ValidationError
from absentminded.oracle import (ahpe_check, check_profile, deviation_gain, enumerate_outcomes,
                                 grid_search_equilibria, kkt_residual, label_cluster,
                                 sequential_certificate, tremble_beliefs)

probs = st.floats(0.0, 1.0, allow_nan=False)


def test_kkt_and_gain():
    assert kkt_residual(0.0, -0.3) == 0.0
    assert kkt_residual(1.0, 0.3) == 0.0
    assert kkt_residual(0.5, 0.2) == pytest.approx(0.2)
    assert deviation_gain(0.25, 0.4) == pytest.approx(0.3)
    assert deviation_gain(0.25, -0.4) == pytest.approx(0.1)
    assert deviation_gain(1.0, 0.4) == 0.0


@settings(max_examples=150, deadline=None)
@given(st.lists(probs, min_size=1, max_size=6), probs, st.floats(0.05, 1.0))
def test_enumeration_matches_path_walk(sigma, p, delta):
    params = GameParams(len(sigma), delta)
    out = enumerate_outcomes(sigma, p, params)
    cells, none, up, ur = R.paths(sigma, p, delta)
    assert out.pr_no_deal == pytest.approx(none, abs=1e-12)
    assert out.proposer_payoff == pytest.approx(up, abs=1e-12)
    assert out.respondent_payoff == pytest.approx(ur, abs=1e-12)
    for t, (g, f) in cells.items():
        assert out.cells.get((t, "G"), 0.0) == pytest.approx(g, abs=1e-12)
        assert out.cells.get((t, "F"), 0.0) == pytest.approx(f, abs=1e-12)
    dist = out.date_distribution()
    assert sum(dist.values()) == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=150, deadline=None)
@given(st.lists(probs, min_size=2, max_size=5), probs, st.floats(0.05, 1.0))
def test_gains_nonnegative(sigma, p, delta):
    params = GameParams(len(sigma), delta)
    belief = np.zeros(len(sigma))
    belief[0] = 1.0
    rep = ahpe_check(sigma, p, belief, belief, params)
    assert rep.max_proposer_gain >= -1e-12
    assert rep.max_respondent_gain >= -1e-12


def test_perturbed_mixing_fails():
    prof = mixing_profile(GameParams(2, 0.9))
    rep = ahpe_check(prof.sigma, prof.p_G + 0.01, prof.alpha_G, prof.alpha_F, prof.params)
    assert not rep.passed
    assert rep.verdict == "fail"
    rep = ahpe_check((1.0, prof.sigma[1] + 0.01), prof.p_G, None, None, prof.params)
    assert not rep.passed


def test_wrong_belief_flagged():
    prof = mixing_profile(GameParams(2, 0.9))
    rep = ahpe_check(prof.sigma, prof.p_G, (0.5, 0.5), prof.alpha_F, prof.params)
    assert rep.belief_consistency_error > 0.1
    assert not rep.passed


def test_fair_bound_respected():
    params = GameParams(2, 0.8)
    # acceptance above the bound gives the proposer a reason to go greedy
    rep = ahpe_check((0.0, 0.0), 2 / 7 + 0.01, (1.0, 0.0), (1.0, 0.0), params)
    assert not rep.passed


def test_label_cluster():
    assert label_cluster(1.0, 1.0) == "Greedy"
    assert label_cluster(0.7, 0.66) == "Mixing"
    assert label_cluster(0.0, 0.1) == "Fair"
    assert label_cluster(0.5, 0.2) == "unclassified"


@pytest.mark.parametrize("delta", [0.7, 0.9])
def test_grid_search_three_clusters(delta):
    clusters = grid_search_equilibria(GameParams(2, delta), grid_step=1e-3)
    assert sorted(c.label for c in clusters) == ["Fair", "Greedy", "Mixing"]
    mix = next(c for c in clusters if c.label == "Mixing")
    assert mix.representative[0] == pytest.approx((6 * delta - 3) / (5 * delta), abs=5e-3)


def test_grid_search_low_delta_finding():
    # a band of approximate equilibria near delta = 1/2 joins the mixing and fair regions
    clusters = grid_search_equilibria(GameParams(2, 0.5), grid_step=1e-3)
    odd = [c for c in clusters if c.label == "unclassified"]
    assert len(odd) == 1
    assert odd[0].prefix == (1.0,)
    assert odd[0].sigma_T_range[1] < 0.01


def test_grid_search_validation():
    with pytest.raises(ValidationError):
        grid_search_equilibria(GameParams(2, 0.9), grid_step=1e-4)
    with pytest.raises(ValidationError):
        grid_search_equilibria(GameParams(5, 0.9), grid_step=0.05)


def test_grid_search_backends_agree():
    a = grid_search_equilibria(GameParams(3, 0.95), grid_step=0.01, backend="numba")
    b = grid_search_equilibria(GameParams(3, 0.95), grid_step=0.01, backend="numpy")
    assert a == b


def test_tremble_beliefs_limit():
    gamma, alpha = tremble_beliefs(1e6, 3, 0.0)
    assert abs(alpha[0] - 1.0) < 1e-5
    assert gamma.sum() == pytest.approx(1.0)


@pytest.mark.parametrize("T", [2, 3])
def test_sequential_certificates(T):
    low, *rest = fair_profiles(GameParams(T, 0.9))
    rep = sequential_certificate(low)
    assert rep.certified
    assert rep.alpha1_error[-1] <= 1e-6
    for prof in rest:
        # the member with interior acceptance needs belief mass on T, which trembles never give
        assert not sequential_certificate(prof).certified
    assert sequential_certificate(greedy_profile(GameParams(T, 0.9))).certified


def test_check_profile_mixing():
    rep = check_profile(mixing_profile(GameParams(3, 0.95)))
    assert rep.passed
    assert rep.respondent_residual < 1e-12
