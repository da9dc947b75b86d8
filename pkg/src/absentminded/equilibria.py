"""Equilibrium classes of the binary-offer game, thresholds and delay statistics."""
from __future__ import annotations

import enum
import functools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from .core import (PROB_TOL, GameParams, ProposerPolicy, accept_indifference_slope,
                   conditional_beliefs, continuation_terms)
from .errors import ValidationError
from .exante import MIX_ACCEPT, exante_threshold_quantity

ROOT_TOL = 1e-10
BRACKET_EPS = 1e-9


class Kind(str, enum.Enum):
    GREEDY = "Greedy"
    FAIR = "Fair"
    MIXING = "Mixing"


@dataclass(frozen=True)
class EquilibriumProfile:
    kind: Kind
    sigma: tuple
    p_G: float
    alpha_G: Optional[tuple]
    alpha_F: Optional[tuple]
    params: GameParams
    residual: Optional[float] = None

    @property
    def policy(self):
        return ProposerPolicy(self.sigma)


def _tup(v):
    return None if v is None else tuple(float(x) for x in v)


def fair_bound(delta) -> float:
    """Largest greedy acceptance probability compatible with always-fair offers."""
    delta = float(delta)
    if not (0.0 < delta <= 1.0):
        raise ValidationError(f"delta must lie in (0, 1], got {delta}")
    return (1.0 - delta) / (1.5 - delta)


def mixing_slope(sigma_T, params: GameParams) -> float:
    """Respondent slope L along sigma = (1, ..., 1, sigma_T), p_G = 2/3."""
    sig = np.ones(params.T)
    sig[-1] = sigma_T
    alpha_G, _ = conditional_beliefs(sig, MIX_ACCEPT)
    return accept_indifference_slope(sig, MIX_ACCEPT, alpha_G, params)


def solve_mixing(params: GameParams) -> Optional[float]:
    """sigma_T making the respondent indifferent, or None.

    Returns 0.0 when the indifference holds exactly at sigma_T = 0 (the
    boundary case delta = 1/2 for T = 2) and None when L has no sign change
    on (0, 1).
    """
    if params.T < 2:
        raise ValidationError("the mixing equation needs T >= 2")
    f = lambda s: mixing_slope(s, params)
    tie = PROB_TOL * params.V
    if abs(f(0.0)) <= tie:
        return 0.0
    lo, hi = BRACKET_EPS, 1.0 - BRACKET_EPS
    flo, fhi = f(lo), f(hi)
    if not (flo < 0.0 < fhi):
        grid = np.linspace(0.0, 1.0, 201)
        vals = np.array([f(s) for s in grid])
        change = np.flatnonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)
        if change.size == 0:
            return None
        lo, hi = grid[change[0]], grid[change[0] + 1]
    root = brentq(f, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    if abs(f(root)) > ROOT_TOL * params.V:
        return None
    return float(root)


def mixing_root_derivative(sigma_T, params: GameParams, h=1e-6) -> float:
    lo, hi = max(0.0, sigma_T - h), min(1.0, sigma_T + h)
    return (mixing_slope(hi, params) - mixing_slope(lo, params)) / (hi - lo)


def _mixing_admissible(delta, T):
    try:
        root = solve_mixing(GameParams(T, delta))
    except ValidationError:
        return False
    if root is None or not (0.0 < root < 1.0):
        return False
    return exante_threshold_quantity(root, GameParams(T, delta)) <= 0.0


@functools.lru_cache(maxsize=None)
def mixing_threshold(T: int, xtol: float = 1e-10) -> float:
    """Smallest delta with an interior mixing root at which p = 2/3 is ex-ante optimal.

    Ex-ante optimality is the local condition: the objective's second
    derivative at p = 2/3 is nonpositive (the first-order condition holds
    automatically at the indifference root).
    """
    if T < 2:
        raise ValidationError("the mixing threshold needs T >= 2")
    coarse = np.linspace(0.0, 1.0, 41)[1:]
    ok = [_mixing_admissible(d, T) for d in coarse]
    if not ok[-1]:
        raise ValidationError(f"no admissible mixing equilibrium even at delta=1 (T={T})")
    k = ok.index(True)
    if k == 0:
        return float(coarse[0])
    lo, hi = float(coarse[k - 1]), float(coarse[k])
    while hi - lo > xtol:
        mid = 0.5 * (lo + hi)
        if _mixing_admissible(mid, T):
            hi = mid
        else:
            lo = mid
    return hi


def greedy_profile(params: GameParams) -> EquilibriumProfile:
    sig = np.ones(params.T)
    a_g, a_f = conditional_beliefs(sig, 1.0)
    return EquilibriumProfile(Kind.GREEDY, _tup(sig), 1.0, _tup(a_g), _tup(a_f), params)


def fair_support_belief(p_G, params: GameParams):
    """Off-path belief after a greedy offer that makes p_G optimal when sigma = 0.

    Uses alpha_1 = 1 when the respondent weakly prefers rejection there;
    otherwise nothing supports p_G.  For interior p_G the belief mixes
    periods 1 and T so that the respondent is exactly indifferent.
    """
    sig = np.zeros(params.T)
    c = continuation_terms(sig, p_G, params)
    tol = PROB_TOL * params.V
    alpha = np.zeros(params.T)
    if p_G <= 0.0 or abs(c[0]) <= tol:
        alpha[0] = 1.0
        return alpha if c[0] <= tol else None
    if c[0] > 0.0 or c[-1] <= 0.0:
        return None
    w = -c[0] / (c[-1] - c[0])
    alpha[0], alpha[-1] = 1.0 - w, w
    return alpha


def fair_profiles(params: GameParams):
    """The p_G = 0 and p_G = fair_bound members (one member when the bound is 0)."""
    if params.delta < 0.5:
        return []
    sig = np.zeros(params.T)
    out = []
    bound = fair_bound(params.delta)
    members = [0.0] + ([bound] if bound > PROB_TOL else [])
    for p in members:
        belief = fair_support_belief(p, params)
        if belief is None:
            continue
        _, a_f = conditional_beliefs(sig, p)
        out.append(EquilibriumProfile(Kind.FAIR, _tup(sig), float(p), _tup(belief), _tup(a_f), params))
    return out


def mixing_profile(params: GameParams) -> Optional[EquilibriumProfile]:
    if params.T < 2:
        return None
    root = solve_mixing(params)
    if root is None:
        return None
    thr = mixing_threshold(params.T)
    interior = 0.0 < root < 1.0 and params.delta >= thr
    # at the exact threshold the root sits on the boundary sigma_T = 0
    boundary_tie = root == 0.0 and abs(params.delta - thr) <= 1e-8
    if not (interior or boundary_tie):
        return None
    sig = np.ones(params.T)
    sig[-1] = root
    a_g, a_f = conditional_beliefs(sig, MIX_ACCEPT)
    return EquilibriumProfile(Kind.MIXING, _tup(sig), MIX_ACCEPT, _tup(a_g), _tup(a_f), params,
                              residual=mixing_slope(root, params))


def enumerate_equilibria(params: GameParams):
    """Greedy, Fair (two members) and Mixing profiles, where they exist."""
    if params.T < 2:
        raise ValidationError("enumeration needs T >= 2")
    out = [greedy_profile(params)]
    out.extend(fair_profiles(params))
    mix = mixing_profile(params)
    if mix is not None:
        out.append(mix)
    return out


@dataclass(frozen=True)
class DelayStats:
    pr_trade_at: tuple
    pr_no_deal: float
    expected_date_given_deal: float
    expected_date_closed_form: float


def delay_stats(sigma_T, p_G, T) -> DelayStats:
    """Trade-date distribution of a mixing profile.

    `expected_date_given_deal` is E[date | deal] of this distribution.
    `expected_date_closed_form` is the closed form p/(1 - sigma_T (1-p)^T) *
    sum_t t (1-p)^(t-1), which treats the deadline period like the others.
    """
    s, p = float(sigma_T), float(p_G)
    q = 1.0 - p
    pr = [p * q ** (t - 1) for t in range(1, T)]
    pr.append(q ** (T - 1) * (s * p + 1.0 - s))
    none = s * q ** T
    dates = np.arange(1, T + 1)
    e_true = float(np.dot(dates, pr) / (1.0 - none))
    e_closed = float(p / (1.0 - s * q ** T) * np.sum(q ** (dates - 1) * dates))
    return DelayStats(tuple(float(x) for x in pr), float(none), e_true, e_closed)


@dataclass(frozen=True)
class SweepRow:
    param: float
    T: int
    delta: float
    sigma_T: Optional[float]
    stats: Optional[DelayStats]


@dataclass(frozen=True)
class SweepTable:
    parameter: str
    rows: tuple
    diagnostics: dict


def _sweep_row(parameter, value, base: GameParams):
    if parameter == "delta":
        params = GameParams(base.T, value, base.V)
    else:
        params = GameParams(int(value), base.delta, base.V)
    prof = mixing_profile(params)
    if prof is None:
        return SweepRow(float(value), params.T, params.delta, None, None)
    sT = prof.sigma[-1]
    return SweepRow(float(value), params.T, params.delta, sT, delay_stats(sT, prof.p_G, params.T))


def _monotone(xs, direction):
    d = np.diff(np.asarray(xs, dtype=float))
    if d.size == 0:
        return True
    return bool(np.all(d >= -1e-15)) if direction > 0 else bool(np.all(d <= 1e-15))


def sweep(params: GameParams, parameter: str, grid, workers: Optional[int] = None) -> SweepTable:
    """Mixing-profile statistics along a delta grid or a T grid."""
    if parameter not in ("delta", "T"):
        raise ValidationError("parameter must be 'delta' or 'T'")
    grid = list(grid)
    if parameter == "T":
        if any(int(v) != v or v < 2 for v in grid):
            raise ValidationError("T grid must contain integers >= 2")
    else:
        for v in grid:
            GameParams(params.T, v, params.V)
    run = functools.partial(_sweep_row, parameter, base=params)
    if workers and workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            rows = tuple(ex.map(run, grid))
    else:
        rows = tuple(run(v) for v in grid)
    defined = [r for r in rows if r.stats is not None]
    diag = {"defined_rows": len(defined), "undefined_rows": len(rows) - len(defined)}
    cols = {
        "sigma_T": [r.sigma_T for r in defined],
        "pr_no_deal": [r.stats.pr_no_deal for r in defined],
        "e_date": [r.stats.expected_date_given_deal for r in defined],
        "e_date_closed_form": [r.stats.expected_date_closed_form for r in defined],
    }
    for name, xs in cols.items():
        diag[f"{name}_nondecreasing"] = _monotone(xs, +1)
        diag[f"{name}_nonincreasing"] = _monotone(xs, -1)
    return SweepTable(parameter, rows, diag)
