import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from absentminded.errors import ValidationError
from absentminded.protocols import (Q, delta_bar, mixed_acceptance, mixing_accept,
                                    mixing_accept_alt, mixing_sigma, proposer_absent_equilibria,
                                    proposer_absent_gains, quadratic_roots, two_absent_equilibria,
                                    two_absent_residuals)


def test_delta_bar():
    d = delta_bar()
    assert d == pytest.approx(0.640388203, abs=1e-9)
    assert abs(4 * d * d - d - 1) <= 1e-12


def test_mixed_acceptance_frozen():
    assert mixed_acceptance(0.6) == pytest.approx(4 / 19, abs=1e-12)
    assert mixed_acceptance(0.5) == pytest.approx(0.5, abs=1e-12)


def test_proposer_absent_kinds():
    kinds = lambda d: [p.kind for p in proposer_absent_equilibria(d)]
    assert kinds(0.4) == ["Greedy"]
    assert kinds(0.6) == ["Greedy", "Fair", "Mixed"]
    assert kinds(0.7) == ["Greedy", "Fair"]


def test_mixed_on_exact_range():
    has = [any(p.kind == "Mixed" for p in proposer_absent_equilibria(k / 1000))
           for k in range(1, 1001)]
    flips = np.flatnonzero(np.diff(np.array(has, dtype=int)))
    assert len(flips) == 2
    lo, hi = (flips[0] + 2) / 1000, (flips[1] + 1) / 1000
    assert lo == 0.5
    assert hi <= delta_bar() < hi + 1e-3


def test_mixed_gains_vanish():
    for d in (0.5, 0.55, 0.6, 0.64):
        mix = next(p for p in proposer_absent_equilibria(d) if p.kind == "Mixed")
        assert mix.phi == pytest.approx(2 - 1 / d)
        assert max(proposer_absent_gains(mix.phi, mix.q1, d)) <= 1e-12


def test_limiting_delay_probability():
    mix = next(p for p in proposer_absent_equilibria(delta_bar()) if p.kind == "Mixed")
    # at the top of the range acceptance hits zero, so delay probability is phi
    assert mix.q1 == pytest.approx(0.0, abs=1e-9)
    assert mix.delay_probability == pytest.approx(2 - 1 / delta_bar(), abs=1e-9)


def test_two_absent_at_three_quarters():
    sig = mixing_sigma(0.75)
    assert sig == pytest.approx(1 - math.sqrt(0.5), abs=1e-12)
    p = mixing_accept(sig)
    assert p == pytest.approx(0.4530818393, abs=1e-9)
    assert mixing_accept_alt(sig, 0.75) == pytest.approx(p, abs=1e-12)
    assert max(abs(r) for r in two_absent_residuals(sig, p, 0.75)) <= 1e-12
    kinds = [e.kind for e in two_absent_equilibria(0.75)]
    assert kinds == ["Greedy", "Fair", "Fair", "Mixing"]


@settings(max_examples=100, deadline=None)
@given(st.floats(0.5, 1.0))
def test_two_absent_closed_forms_agree(d):
    s = mixing_sigma(d)
    assert s is not None
    assert abs(Q(s, d)) <= 1e-12
    if s > 1e-6:
        assert mixing_accept_alt(s, d) == pytest.approx(mixing_accept(s), abs=1e-9)
        assert max(abs(r) for r in two_absent_residuals(s, mixing_accept(s), d)) <= 1e-10


def test_quadratic_roots_stable():
    assert quadratic_roots(1.0, -1e8, 1.0)[0] == pytest.approx(1e-8, rel=1e-12)
    assert quadratic_roots(1.0, 0.0, 1.0) == ()
    assert Q(1.0, 0.3) == pytest.approx(-2.0, abs=1e-15)


def test_delta_validation():
    with pytest.raises(ValidationError):
        proposer_absent_equilibria(0.0)
    with pytest.raises(ValidationError):
        two_absent_equilibria(1.5)
