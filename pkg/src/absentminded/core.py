"""Binary-offer game: parameters, behavioral strategies, beliefs and values.

The proposer makes a greedy offer (proposer keeps 3V/4) or a fair offer
(V/2 each) in each of T periods.  The respondent cannot tell periods apart,
accepts fair offers and accepts greedy offers with probability p_G.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .errors import OffPathError, ValidationError

PROB_TOL = 1e-12
GREEDY_KEEP = 0.75
GREEDY_GIVE = 0.25
FAIR_SPLIT = 0.5


@dataclass(frozen=True)
class GameParams:
    T: int
    delta: float
    V: float = 1.0

    def __post_init__(self):
        if isinstance(self.T, bool) or int(self.T) != self.T:
            raise ValidationError(f"T must be an integer, got {self.T!r}")
        object.__setattr__(self, "T", int(self.T))
        object.__setattr__(self, "delta", float(self.delta))
        object.__setattr__(self, "V", float(self.V))
        if self.T < 1:
            raise ValidationError(f"T must be >= 1, got {self.T}")
        if not (0.0 < self.delta <= 1.0):
            raise ValidationError(f"delta must lie in (0, 1], got {self.delta}")
        if not (math.isfinite(self.V) and self.V > 0.0):
            raise ValidationError(f"V must be positive, got {self.V}")


@dataclass(frozen=True)
class ProposerPolicy:
    """Per-period probabilities of a greedy offer."""

    sigma: tuple

    def __post_init__(self):
        s = tuple(float(v) for v in np.atleast_1d(np.asarray(self.sigma, dtype=float)))
        if not s:
            raise ValidationError("sigma must have at least one period")
        for v in s:
            if not (0.0 <= v <= 1.0):
                raise ValidationError(f"sigma entries must lie in [0, 1], got {v}")
        object.__setattr__(self, "sigma", s)

    @property
    def T(self):
        return len(self.sigma)

    def as_array(self):
        return np.array(self.sigma, dtype=float)

    @classmethod
    def greedy(cls, T):
        return cls((1.0,) * T)

    @classmethod
    def fair(cls, T):
        return cls((0.0,) * T)

    @classmethod
    def mixing(cls, T, sigma_T):
        return cls((1.0,) * (T - 1) + (float(sigma_T),))


@dataclass(frozen=True)
class RespondentPolicy:
    p_G: float
    p_F: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "p_G", _check_prob(self.p_G, "p_G"))
        if float(self.p_F) != 1.0:
            raise ValidationError("fair offers are always accepted (p_F = 1)")


@dataclass(frozen=True)
class TimeBeliefs:
    """Calendar-time beliefs. None marks an offer that is never made."""

    gamma: tuple
    alpha_G: Optional[tuple]
    alpha_F: Optional[tuple]


SigmaLike = Union[ProposerPolicy, Sequence[float], np.ndarray]


def _check_prob(p, name="p"):
    p = float(p)
    if not (0.0 <= p <= 1.0):
        raise ValidationError(f"{name} must lie in [0, 1], got {p}")
    return p


def as_sigma(sigma: SigmaLike, T: Optional[int] = None) -> np.ndarray:
    if not isinstance(sigma, ProposerPolicy):
        sigma = ProposerPolicy(tuple(np.atleast_1d(np.asarray(sigma, dtype=float))))
    arr = sigma.as_array()
    if T is not None and arr.size != T:
        raise ValidationError(f"sigma has length {arr.size}, expected T={T}")
    return arr


def check_distribution(vec, T, name="belief"):
    arr = np.asarray(vec, dtype=float)
    if arr.shape != (T,):
        raise ValidationError(f"{name} must have length {T}, got shape {arr.shape}")
    if np.any(arr < -PROB_TOL) or abs(arr.sum() - 1.0) > PROB_TOL:
        raise ValidationError(f"{name} must be a probability vector")
    return arr


def unconditional_beliefs(sigma: SigmaLike, p_G: float) -> np.ndarray:
    """Long-run frequency of each period given the strategies."""
    s = as_sigma(sigma)
    p = _check_prob(p_G, "p_G")
    # period t is reached only if every earlier offer was greedy and rejected
    w = np.ones(s.size)
    if s.size > 1:
        w[1:] = np.cumprod((1.0 - p) * s[:-1])
    return w / w.sum()


def conditional_beliefs(sigma: SigmaLike, p_G: float, offpath_belief=None):
    """Posterior over periods after a greedy and after a fair offer.

    Returns (alpha_G, alpha_F).  An offer that is never made gets
    `offpath_belief` when supplied and None otherwise.
    """
    s = as_sigma(sigma)
    if offpath_belief is not None:
        offpath_belief = check_distribution(offpath_belief, s.size, "offpath_belief")
    gamma = unconditional_beliefs(s, p_G)

    def posterior(weights):
        total = weights.sum()
        if total > 0.0:
            return weights / total
        return None if offpath_belief is None else offpath_belief.copy()

    return posterior(s * gamma), posterior((1.0 - s) * gamma)


def time_beliefs(sigma: SigmaLike, p_G: float, offpath_belief=None) -> TimeBeliefs:
    gamma = unconditional_beliefs(sigma, p_G)
    a_g, a_f = conditional_beliefs(sigma, p_G, offpath_belief)
    tup = lambda v: None if v is None else tuple(float(x) for x in v)
    return TimeBeliefs(tup(gamma), tup(a_g), tup(a_f))


def value_tables(sigma: SigmaLike, p_G: float, params: GameParams):
    """Backward pass for both continuation values.

    Entry k of each array is the value at period k+1; entry T is the
    post-deadline value 0.
    """
    s = as_sigma(sigma, params.T)
    p = _check_prob(p_G, "p_G")
    d, V = params.delta, params.V
    up = np.zeros(params.T + 1)
    ur = np.zeros(params.T + 1)
    for k in range(params.T - 1, -1, -1):
        g = s[k]
        up[k] = g * p * GREEDY_KEEP * V + (1 - g) * FAIR_SPLIT * V + d * g * (1 - p) * up[k + 1]
        ur[k] = g * p * GREEDY_GIVE * V + (1 - g) * FAIR_SPLIT * V + d * g * (1 - p) * ur[k + 1]
    return up, ur


def _check_period(t, T):
    if isinstance(t, bool) or int(t) != t or not (1 <= t <= T + 1):
        raise ValidationError(f"period must lie in 1..{T + 1}, got {t}")
    return int(t)


def proposer_value(sigma: SigmaLike, p_G: float, t: int, params: GameParams) -> float:
    t = _check_period(t, params.T)
    return float(value_tables(sigma, p_G, params)[0][t - 1])


def respondent_value(sigma: SigmaLike, p_G: float, t: int, params: GameParams) -> float:
    t = _check_period(t, params.T)
    return float(value_tables(sigma, p_G, params)[1][t - 1])


def proposer_slopes(sigma: SigmaLike, p_G: float, params: GameParams) -> np.ndarray:
    """d(period-t proposer payoff)/d(sigma_t), holding other periods fixed."""
    up, _ = value_tables(sigma, p_G, params)
    p, V = float(p_G), params.V
    return p * GREEDY_KEEP * V - FAIR_SPLIT * V + params.delta * (1 - p) * up[1:]


def continuation_terms(sigma: SigmaLike, p_G: float, params: GameParams) -> np.ndarray:
    """Gain from accepting a greedy offer known to arrive in period t.

    c_t = delta^(t-1) V/4 - delta^t U^R_{t+1}; the respondent's slope is the
    belief-weighted sum of these terms.
    """
    _, ur = value_tables(sigma, p_G, params)
    t = np.arange(1, params.T + 1)
    d = params.delta
    return d ** (t - 1) * GREEDY_GIVE * params.V - d ** t * ur[1:]


def accept_indifference_slope(sigma: SigmaLike, p_G: float, alpha_G, params: GameParams) -> float:
    """Slope L of the respondent's objective in its acceptance probability."""
    if alpha_G is None:
        raise OffPathError("greedy offers are off-path; supply a belief")
    alpha = check_distribution(alpha_G, params.T, "alpha_G")
    return float(alpha @ continuation_terms(sigma, p_G, params))
