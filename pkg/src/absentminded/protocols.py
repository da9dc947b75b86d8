"""Two-period variants: an absentminded proposer facing a respondent with
perfect recall, and a game where both players are absentminded."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import FAIR_SPLIT, GREEDY_GIVE, GREEDY_KEEP
from .errors import ValidationError
from .equilibria import fair_bound

BR_GRID = 1001


def _check_delta(delta):
    delta = float(delta)
    if not (0.0 < delta <= 1.0):
        raise ValidationError(f"delta must lie in (0, 1], got {delta}")
    return delta


def delta_bar() -> float:
    """Positive root of 4 d^2 - d - 1: the top of the mixed-equilibrium range."""
    return (1.0 + math.sqrt(17.0)) / 8.0


# ------------------------------------------------------ absentminded proposer

@dataclass(frozen=True)
class ProposerAbsentProfile:
    kind: str
    phi: float
    q1: float
    q2: float
    alpha: float
    delta: float
    V: float = 1.0
    proposer_gain: Optional[float] = None
    respondent_gain: Optional[float] = None

    @property
    def delay_probability(self):
        return self.phi * (1.0 - self.q1)

    @property
    def agreement_probability(self):
        # period-2 greedy offers are accepted for sure and fair ones always are
        return 1.0 - self.delay_probability * (1.0 - self.q2)


def proposer_belief(phi, q1):
    return 1.0 / (1.0 + (1.0 - q1) * phi)


def _greedy_continuation(phi, V):
    return phi * GREEDY_KEEP * V + (1.0 - phi) * FAIR_SPLIT * V


def proposer_absent_payoffs(phi_dev, q_dev, phi, q1, delta, V=1.0):
    """(proposer payoff at phi_dev, respondent payoff at q_dev) holding (phi, q1) fixed."""
    alpha = proposer_belief(phi, q1)
    K = _greedy_continuation(phi, V)
    first = phi_dev * q1 * GREEDY_KEEP * V + (1 - phi_dev) * FAIR_SPLIT * V \
        + delta * phi_dev * (1 - q1) * K
    second = phi_dev * GREEDY_KEEP * V + (1 - phi_dev) * FAIR_SPLIT * V
    prop = alpha * first + (1 - alpha) * second
    resp_cont = delta * (phi * GREEDY_GIVE * V + (1 - phi) * FAIR_SPLIT * V)
    resp = q_dev * GREEDY_GIVE * V + (1 - q_dev) * resp_cont
    return prop, resp


def proposer_absent_gains(phi, q1, delta, V=1.0, grid=BR_GRID):
    """Best deviation gains for both players found on a strategy grid."""
    g = np.linspace(0.0, 1.0, grid)
    prop_dev, resp_dev = proposer_absent_payoffs(g, g, phi, q1, delta, V)
    prop, resp = proposer_absent_payoffs(phi, q1, phi, q1, delta, V)
    return float(prop_dev.max() - prop), float(resp_dev.max() - resp)


def mixed_acceptance(delta, V=1.0):
    """First-period acceptance that keeps the proposer indifferent, with phi = 2 - 1/delta."""
    phi = 2.0 - 1.0 / delta
    K = _greedy_continuation(phi, V)
    num = FAIR_SPLIT * V - phi * V / 4.0 - delta * K
    den = GREEDY_KEEP * V - phi * V / 4.0 - delta * K
    return num / den


def proposer_absent_equilibria(delta, V=1.0, tol=1e-9):
    """Greedy always; Fair when delta >= 1/2; Mixed when 1/2 <= delta <= delta_bar.

    Every profile is checked by grid best responses; a profile whose gains
    exceed `tol * V` is dropped.
    """
    delta = _check_delta(delta)
    cands = [("Greedy", 1.0, 1.0)]
    if delta >= 0.5:
        cands.append(("Fair", 0.0, 0.0))
    if 0.5 <= delta <= delta_bar() + 1e-15:
        q1 = mixed_acceptance(delta, V)
        cands.append(("Mixed", 2.0 - 1.0 / delta, min(max(q1, 0.0), 1.0)))
    out = []
    for kind, phi, q1 in cands:
        gp, gr = proposer_absent_gains(phi, q1, delta, V)
        if max(gp, gr) <= tol * V:
            out.append(ProposerAbsentProfile(kind, phi, q1, 1.0, proposer_belief(phi, q1),
                                             delta, V, gp, gr))
    return out


# --------------------------------------------------- both players absentminded

@dataclass(frozen=True)
class TwoAbsentProfile:
    kind: str
    sigma: float
    p: float
    gamma: float
    alpha: float
    delta: float
    V: float = 1.0
    proposer_gain: Optional[float] = None
    respondent_gain: Optional[float] = None


def Q(sigma, delta):
    """(1 + 4d) s^2 + (1 - 12d) s + 8d - 4."""
    return (1 + 4 * delta) * sigma ** 2 + (1 - 12 * delta) * sigma + 8 * delta - 4


def quadratic_roots(a, b, c):
    """Real roots of a x^2 + b x + c without cancellation, ascending."""
    disc = b * b - 4 * a * c
    if disc < 0:
        return ()
    sq = math.sqrt(disc)
    q = -0.5 * (b + math.copysign(sq, b))
    roots = []
    if q != 0.0:
        roots.extend([q / a, c / q])
    else:
        roots.append(-b / (2 * a))
    return tuple(sorted(roots))


def mixing_sigma(delta) -> Optional[float]:
    roots = [r for r in quadratic_roots(1 + 4 * delta, 1 - 12 * delta, 8 * delta - 4)
             if -1e-12 <= r <= 1 + 1e-12]
    if not roots:
        return None
    return min(max(roots[0], 0.0), 1.0)


def mixing_accept(sigma):
    return 2 * (1 - sigma) / (4 - 3 * sigma)


def mixing_accept_alt(sigma, delta):
    """Second closed form for the acceptance probability (undefined at sigma = 0)."""
    if sigma == 0.0:
        return None
    return (1 - 2 * delta + sigma * (1 + 2 * delta)) / (sigma * (1 + delta))


def two_absent_gamma(sigma, p):
    return 1.0 / (1.0 + (1.0 - p) * sigma)


def two_absent_payoffs(s_dev, p_dev, sigma, p, alpha, delta, V=1.0):
    gamma = two_absent_gamma(sigma, p)
    prop = s_dev * p * GREEDY_KEEP * V + (1 - s_dev) * FAIR_SPLIT * V \
        + s_dev * (1 - p) * gamma * delta * (sigma * p * GREEDY_KEEP * V + (1 - sigma) * FAIR_SPLIT * V)
    resp = p_dev * GREEDY_GIVE * V \
        + (1 - p_dev) * alpha * delta * (sigma * p * GREEDY_GIVE * V + (1 - sigma) * FAIR_SPLIT * V)
    return prop, resp


def two_absent_gains(sigma, p, alpha, delta, V=1.0, grid=BR_GRID):
    g = np.linspace(0.0, 1.0, grid)
    prop_dev, resp_dev = two_absent_payoffs(g, g, sigma, p, alpha, delta, V)
    prop, resp = two_absent_payoffs(sigma, p, sigma, p, alpha, delta, V)
    return float(prop_dev.max() - prop), float(resp_dev.max() - resp)


def two_absent_residuals(sigma, p, delta, V=1.0):
    """Residuals of the proposer and respondent indifference conditions."""
    gamma = two_absent_gamma(sigma, p)
    r1 = p * GREEDY_KEEP * V + (1 - p) * gamma * delta * (
        sigma * p * GREEDY_KEEP * V + (1 - sigma) * FAIR_SPLIT * V) - FAIR_SPLIT * V
    r2 = GREEDY_GIVE * V - gamma * delta * (sigma * p * GREEDY_GIVE * V + (1 - sigma) * FAIR_SPLIT * V)
    return float(r1), float(r2)


def two_absent_equilibria(delta, V=1.0, tol=1e-9):
    """Greedy always; Fair members p = 0 and p = bound and Mixing when delta >= 1/2."""
    delta = _check_delta(delta)
    out = []
    cands = [("Greedy", 1.0, 1.0, 1.0)]
    if delta >= 0.5:
        bound = fair_bound(delta)
        cands.append(("Fair", 0.0, 0.0, 1.0))
        if bound > 0.0:
            cands.append(("Fair", 0.0, bound, 1.0 / (2 * delta)))
        s = mixing_sigma(delta)
        if s is not None:
            p = mixing_accept(s)
            cands.append(("Mixing", s, p, two_absent_gamma(s, p)))
    for kind, s, p, alpha in cands:
        if s > 0.0:
            alpha = two_absent_gamma(s, p)
        gp, gr = two_absent_gains(s, p, alpha, delta, V)
        if max(gp, gr) <= tol * V:
            out.append(TwoAbsentProfile(kind, s, p, two_absent_gamma(s, p), alpha, delta, V, gp, gr))
    return out
