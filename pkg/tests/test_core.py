import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import reference as R
from absentminded.core import (GameParams, ProposerPolicy, as_sigma, conditional_beliefs,
                               continuation_terms, proposer_slopes, proposer_value,
                               respondent_value, time_beliefs, unconditional_beliefs,
                               value_tables)
from absentminded.errors import OffPathError, ValidationError
from absentminded.oracle import ahpe_check

probs = st.floats(0.0, 1.0, allow_nan=False)
deltas = st.floats(0.05, 1.0, allow_nan=False)


def test_params_validation():
    with pytest.raises(ValidationError):
        GameParams(0, 0.9)
    with pytest.raises(ValidationError):
        GameParams(2, 0.0)
    with pytest.raises(ValidationError):
        GameParams(2, 1.2)
    with pytest.raises(ValidationError):
        GameParams(2, 0.9, V=-1.0)
    with pytest.raises(ValidationError):
        as_sigma([0.5, 1.5])


def test_beliefs_mixing_t2():
    sigma, p = (1.0, 8 / 15), 2 / 3
    np.testing.assert_allclose(unconditional_beliefs(sigma, p), [0.75, 0.25], atol=1e-15)
    a_g, a_f = conditional_beliefs(sigma, p)
    np.testing.assert_allclose(a_g, [45 / 53, 8 / 53], atol=1e-15)
    np.testing.assert_allclose(a_f, [0.0, 1.0], atol=1e-15)


def test_offpath_belief_required():
    a_g, a_f = conditional_beliefs((0.0, 0.0), 0.0)
    assert a_g is None and a_f.tolist() == [1.0, 0.0]
    with pytest.raises(OffPathError):
        ahpe_check((0.0, 0.0), 0.0, None, None, GameParams(2, 0.8))
    tb = time_beliefs((0.0, 0.0), 0.0, offpath_belief=[1.0, 0.0])
    assert tb.alpha_G[0] == 1.0


def test_value_tables_frozen():
    up, ur = value_tables((1.0, 8 / 15), 2 / 3, GameParams(2, 0.9))
    np.testing.assert_allclose(up, [0.65, 0.5, 0.0], atol=1e-15)
    np.testing.assert_allclose(ur, [79 / 300, 29 / 90, 0.0], atol=1e-15)


def test_slopes_frozen():
    params = GameParams(2, 0.9)
    np.testing.assert_allclose(proposer_slopes((1.0, 8 / 15), 2 / 3, params), [0.15, 0.0],
                               atol=1e-15)
    np.testing.assert_allclose(continuation_terms((1.0, 8 / 15), 2 / 3, params),
                               [-0.04, 0.225], atol=1e-15)


def test_policy_constructors():
    assert ProposerPolicy.greedy(3).as_array().tolist() == [1.0, 1.0, 1.0]
    assert ProposerPolicy.fair(2).as_array().tolist() == [0.0, 0.0]
    assert ProposerPolicy.mixing(3, 0.25).as_array().tolist() == [1.0, 1.0, 0.25]


@settings(max_examples=150, deadline=None)
@given(st.lists(probs, min_size=1, max_size=6), probs, deltas)
def test_values_match_path_walk(sigma, p, delta):
    params = GameParams(len(sigma), delta)
    _, none, up, ur = R.paths(sigma, p, delta)
    assert proposer_value(sigma, p, 1, params) == pytest.approx(up, abs=1e-12)
    assert respondent_value(sigma, p, 1, params) == pytest.approx(ur, abs=1e-12)


@settings(max_examples=150, deadline=None)
@given(st.lists(probs, min_size=1, max_size=6), probs)
def test_unconditional_beliefs_are_distributions(sigma, p):
    g = unconditional_beliefs(sigma, p)
    assert g.min() >= 0.0
    assert g.sum() == pytest.approx(1.0, abs=1e-12)
