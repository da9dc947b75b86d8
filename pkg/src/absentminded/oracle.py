"""Independent checks for the binary-offer game.

Everything here works from the equilibrium definition directly: deviation
gains per information set, an explicit walk over the game tree, a brute
force scan over strategy grids and tremble sequences for off-path beliefs.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import ndimage

from . import kernels
from .core import (GREEDY_GIVE, GREEDY_KEEP, FAIR_SPLIT, PROB_TOL, GameParams, as_sigma,
                   check_distribution, conditional_beliefs, continuation_terms, proposer_slopes)
from .errors import OffPathError, ValidationError


def kkt_residual(x, slope):
    """Violation of optimality for choosing x in [0, 1] against a linear objective."""
    if x >= 1.0:
        return max(0.0, -slope)
    if x <= 0.0:
        return max(0.0, slope)
    return abs(slope)


def deviation_gain(x, slope):
    """Payoff gained by moving x to the best endpoint of a linear objective."""
    return slope * (1.0 - x) if slope > 0.0 else -slope * x


@dataclass(frozen=True)
class DeviationReport:
    max_proposer_gain: float
    max_respondent_gain: float
    belief_consistency_error: float
    proposer_residual: float
    respondent_residual: float
    respondent_slope: float
    tol: float
    passed: bool

    @property
    def verdict(self):
        return "pass" if self.passed else "fail"


def ahpe_check(sigma, p_G, alpha_G, alpha_F, params: GameParams, tol=1e-9) -> DeviationReport:
    """Deviation report for a profile of the binary-offer game.

    Beliefs for offers that are made are compared against Bayes' rule;
    a belief after an offer that is never made must be supplied (for the
    greedy offer) and is taken as given.  Gains and residuals are in units
    of payoff; the verdict compares residuals and belief error with `tol`.
    """
    s = as_sigma(sigma, params.T)
    p = float(p_G)
    if not (0.0 <= p <= 1.0):
        raise ValidationError("p_G must lie in [0, 1]")
    bayes_G, bayes_F = conditional_beliefs(s, p)
    err = 0.0
    used = {}
    for name, given, bayes in (("alpha_G", alpha_G, bayes_G), ("alpha_F", alpha_F, bayes_F)):
        if given is not None:
            given = check_distribution(given, params.T, name)
        if bayes is not None:
            if given is not None:
                err = max(err, float(np.max(np.abs(given - bayes))))
            used[name] = bayes if given is None else given
        else:
            used[name] = given
    if used["alpha_G"] is None:
        raise OffPathError("greedy offers are never made; supply alpha_G")

    slopes = proposer_slopes(s, p, params)
    prop_res = max(kkt_residual(x, m) for x, m in zip(s, slopes))
    prop_gain = max(deviation_gain(x, m) for x, m in zip(s, slopes))
    L = float(used["alpha_G"] @ continuation_terms(s, p, params))
    resp_res = kkt_residual(p, L)
    resp_gain = deviation_gain(p, L)
    passed = prop_res <= tol and resp_res <= tol and err <= tol
    return DeviationReport(float(prop_gain), float(resp_gain), float(err), float(prop_res),
                           float(resp_res), L, float(tol), bool(passed))


def check_profile(profile, tol=1e-9) -> DeviationReport:
    """ahpe_check applied to an EquilibriumProfile."""
    return ahpe_check(profile.sigma, profile.p_G, profile.alpha_G, profile.alpha_F,
                      profile.params, tol)


@dataclass(frozen=True)
class Outcomes:
    """Exact outcome distribution: cells (t, 'G'|'F') for trades and 'none'."""

    T: int
    cells: dict
    pr_no_deal: float
    proposer_payoff: float
    respondent_payoff: float

    def date_distribution(self):
        """{1..T, 'none'} -> probability."""
        out = {t: 0.0 for t in range(1, self.T + 1)}
        for (t, _), pr in self.cells.items():
            out[t] += pr
        out["none"] = self.pr_no_deal
        return out


def enumerate_outcomes(sigma, p_G, params: GameParams) -> Outcomes:
    """Walk every branch of the game tree and accumulate probabilities and payoffs."""
    s = as_sigma(sigma, params.T)
    p = float(p_G)
    d, V = params.delta, params.V
    cells = {}
    acc = {"none": 0.0, "P": 0.0, "R": 0.0}

    def walk(t, reach, disc):
        if t > params.T:
            acc["none"] += reach
            return
        g = s[t - 1]
        branches = (
            ("G", "accept", reach * g * p, GREEDY_KEEP, GREEDY_GIVE),
            ("F", "accept", reach * (1 - g), FAIR_SPLIT, FAIR_SPLIT),
        )
        for offer, _, pr, kp, kr in branches:
            if pr > 0.0:
                cells[(t, offer)] = cells.get((t, offer), 0.0) + pr
                acc["P"] += pr * disc * kp * V
                acc["R"] += pr * disc * kr * V
        rejected = reach * g * (1 - p)
        if rejected > 0.0:
            walk(t + 1, rejected, disc * d)

    walk(1, 1.0, 1.0)
    return Outcomes(params.T, cells, acc["none"], acc["P"], acc["R"])


# ------------------------------------------------------------ grid search

@dataclass(frozen=True)
class Cluster:
    label: str
    prefix: tuple
    size: int
    sigma_T_centroid: float
    p_centroid: float
    sigma_centroid: float
    sigma_T_range: tuple
    p_range: tuple
    representative: tuple
    representative_residual: float


def label_cluster(sigma_centroid, p_centroid):
    if sigma_centroid > 0.95 and p_centroid > 0.95:
        return "Greedy"
    if abs(p_centroid - 2.0 / 3.0) <= 0.05:
        return "Mixing"
    if sigma_centroid < 0.05:
        return "Fair"
    return "unclassified"


def grid_search_equilibria(params: GameParams, grid_step=1e-3, tol=None, backend=None):
    """Brute-force approximate equilibria on the (sigma_T, p_G) grid.

    Earlier periods are pure and must agree with the sign of the proposer's
    slope; exact ties admit both choices.  A cell is kept when its residual
    is at most `tol` (default 2 * grid_step * V).  Kept cells are grouped by
    pure prefix and 8-connected adjacency on the grid.
    """
    if not (1e-3 - 1e-15 <= grid_step <= 0.1):
        raise ValidationError("grid_step must lie in [1e-3, 0.1]")
    if not (2 <= params.T <= 4):
        raise ValidationError("grid search supports 2 <= T <= 4")
    n = int(round(1.0 / grid_step))
    tol = 2.0 * grid_step * params.V if tol is None else float(tol)
    axis = np.arange(n + 1) / n
    clusters = []
    for prefix in itertools.product((1.0, 0.0), repeat=params.T - 1):
        res = kernels.grid_residuals(np.array(prefix), n, params.delta, params.V, tol,
                                     PROB_TOL * params.V, backend)
        mask = res <= tol
        if not mask.any():
            continue
        labels, count = ndimage.label(mask, structure=np.ones((3, 3), dtype=int))
        for lab in range(1, count + 1):
            ii, jj = np.nonzero(labels == lab)
            sT, pp = axis[ii], axis[jj]
            sig_mean = (sum(prefix) + sT) / params.T
            best = int(np.argmin(res[ii, jj]))
            clusters.append(Cluster(
                label=label_cluster(float(sig_mean.mean()), float(pp.mean())),
                prefix=tuple(prefix), size=int(ii.size),
                sigma_T_centroid=float(sT.mean()), p_centroid=float(pp.mean()),
                sigma_centroid=float(sig_mean.mean()),
                sigma_T_range=(float(sT.min()), float(sT.max())),
                p_range=(float(pp.min()), float(pp.max())),
                representative=(float(sT[best]), float(pp[best])),
                representative_residual=float(res[ii[best], jj[best]])))
    clusters.sort(key=lambda c: (c.prefix, c.sigma_T_range[0], c.p_range[0]))
    return clusters


# ------------------------------------------------- sequential certificate

@dataclass(frozen=True)
class SequentialReport:
    kind: str
    certified: bool
    reason: str
    n_values: tuple = ()
    alpha1_error: tuple = ()
    later_max: tuple = ()
    limit_belief: Optional[tuple] = None
    target_belief: Optional[tuple] = None
    target_gap: Optional[float] = None
    gamma_gap: Optional[float] = None


def tremble_beliefs(n, T, p_G):
    """(gamma, alpha_G) under sigma_t = n**-t, computed in log space."""
    t = np.arange(1, T + 1)
    log_sig = -t * np.log(n)
    p = p_G if 0.0 < p_G < 1.0 else min(max(p_G, 1.0 / n), 1.0 - 1.0 / n)
    log_w = np.concatenate(([0.0], np.cumsum(np.log1p(-p) + log_sig[:-1])))
    gamma = np.exp(log_w - log_w.max())
    gamma /= gamma.sum()
    log_num = log_sig + log_w
    alpha = np.exp(log_num - log_num.max())
    alpha /= alpha.sum()
    return gamma, alpha


def sequential_certificate(profile, params: GameParams = None, n_max=1e6, tol=1e-6):
    """Check that the profile's off-path belief is a limit of tremble beliefs.

    Fair profiles (the only class with an off-path information set) use
    trembles sigma_t = n**-t and respondent trembles p = p_G (or 1/n when
    p_G sits on the boundary).  Certification needs |alpha_1 - 1| and
    max_{t>1} alpha_t below `tol` at n_max, monotone decay over the last
    decade of n, and agreement of the limit with the profile's belief.
    """
    params = params or profile.params
    kind = getattr(profile.kind, "value", str(profile.kind))
    if kind in ("Greedy", "Mixing"):
        return SequentialReport(kind, True, "both offers on-path; no off-path belief to justify")
    T = params.T
    ns = np.unique(np.round(np.geomspace(10.0, float(n_max), 51)))
    a1, later = [], []
    for n in ns:
        gamma, alpha = tremble_beliefs(n, T, profile.p_G)
        a1.append(float(abs(alpha[0] - 1.0)))
        later.append(float(alpha[1:].max()) if T > 1 else 0.0)
    gamma, alpha = tremble_beliefs(ns[-1], T, profile.p_G)
    decade = ns >= ns[-1] / 10.0
    decay = bool(np.all(np.diff(np.array(a1)[decade]) <= 0.0)
                 and np.all(np.diff(np.array(later)[decade]) <= 0.0))
    target = np.asarray(profile.alpha_G, dtype=float)
    target_gap = float(np.max(np.abs(alpha - target)))
    star_gamma = np.zeros(T)
    star_gamma[0] = 1.0
    converged = a1[-1] <= tol and later[-1] <= tol
    ok = converged and decay and target_gap <= tol
    if ok:
        reason = "tremble beliefs converge to the profile's off-path belief"
    elif converged and decay:
        reason = "tremble beliefs converge to alpha_1 = 1, which differs from the profile's belief"
    else:
        reason = "tremble beliefs have not converged by n_max"
    return SequentialReport(kind, bool(ok), reason, tuple(float(x) for x in ns), tuple(a1),
                            tuple(later), tuple(float(x) for x in alpha),
                            tuple(float(x) for x in target), target_gap,
                            float(np.max(np.abs(gamma - star_gamma))))
