"""Search for Markov delay equilibria on a finite offer space.

Supports of both period distributions are limited to two points.  For each
support pattern the free parameters (mixing weights, acceptance at the
lowest second-period offer and at first-period-only offers) are scanned on a
coarse grid, and the best cells are polished by least squares.  Offers that
are never made get the acceptance choice (reject if some belief justifies
it, accept otherwise) that hurts a deviating proposer most.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import least_squares

from ._accel import njit
from .errors import ValidationError
from .kernels import _use_numba
from .offers import (Distribution, GeneralProfile, OfferRule, OfferSpace, Sigma2,
                     bayes_belief, general_ahpe_check)

RESIDUAL_TOL = 1e-6
DELAY_MIN = 1e-4
CHOICE_TOL = 1e-12


def skeletons(n):
    """Support patterns (a1, b1, a2, b2); b = -1 marks a one-point support."""
    sets = [(i, -1) for i in range(n)] + list(itertools.combinations(range(n), 2))
    return [s1 + s2 for s1 in sets for s2 in sets]


def n_params(skel):
    a1, b1, a2, b2 = skel
    k = 1 + (b1 >= 0) + (b2 >= 0)
    for i in (a1, b1):
        if i >= 0 and i != a2 and i != b2:
            k += 1
    return k


@njit(cache=True)
def _evaluate(xs, delta, skel, theta, comp, p):
    """Fill comp (length 3n) with residuals and p with acceptance; return (max residual, delay)."""
    n = xs.shape[0]
    sig1 = np.zeros(n)
    sig2 = np.zeros(n)
    p[:] = -1.0
    a1, b1, a2, b2 = skel[0], skel[1], skel[2], skel[3]
    k = 0
    if b1 >= 0:
        sig1[a1] = theta[k]
        sig1[b1] = 1.0 - theta[k]
        k += 1
    else:
        sig1[a1] = 1.0
    if b2 >= 0:
        sig2[a2] = theta[k]
        sig2[b2] = 1.0 - theta[k]
        k += 1
    else:
        sig2[a2] = 1.0
    p[a2] = theta[k]
    k += 1
    W = (1.0 - xs[a2]) * p[a2]
    if b2 >= 0:
        if 1.0 - xs[b2] > 0.0:
            p[b2] = min(1.0, W / (1.0 - xs[b2]))
        else:
            p[b2] = 1.0
    for i in (a1, b1):
        if i >= 0 and i != a2 and i != b2:
            p[i] = theta[k]
            k += 1

    reach2 = 0.0
    C = 0.0
    W2 = 0.0
    for i in range(n):
        if sig1[i] > 0.0:
            reach2 += sig1[i] * (1.0 - p[i])
        if sig2[i] > 0.0:
            C += sig2[i] * xs[i] * p[i]
            W2 += sig2[i] * (1.0 - xs[i]) * p[i]
    v1 = np.inf
    w2 = np.inf
    for i in range(n):
        if sig1[i] > 0.0:
            v1 = min(v1, (1.0 - xs[i]) * p[i] + (1.0 - p[i]) * delta * W2)
        if sig2[i] > 0.0:
            w2 = min(w2, (1.0 - xs[i]) * p[i])

    worst = 0.0
    delay = 0.0
    for i in range(n):
        x = xs[i]
        on = sig1[i] > 0.0 or reach2 * sig2[i] > 0.0
        if p[i] < 0.0 or not on:
            # offer never made: accept, or reject when a belief allows it
            g_acc = max((1.0 - x) - v1, (1.0 - x) - w2)
            best = 1.0
            if x <= delta * C + CHOICE_TOL:
                g_rej = max(delta * W2 - v1, -w2)
                if g_rej < g_acc:
                    best = 0.0
            if p[i] < 0.0:
                p[i] = best
        pi = p[i]
        comp[i] = max(0.0, (1.0 - x) * pi + (1.0 - pi) * delta * W2 - v1)
        comp[n + i] = max(0.0, (1.0 - x) * pi - w2)
        r = 0.0
        if on:
            den = sig1[i] + reach2 * sig2[i]
            alpha = sig1[i] / den
            m = alpha * (x - delta * C) + (1.0 - alpha) * delta * x
            r = abs(pi - min(1.0, max(0.0, pi + m)))
        comp[2 * n + i] = r
        worst = max(worst, comp[i], comp[n + i], r)
        delay += sig1[i] * (1.0 - pi)
    return worst, delay


@njit(cache=True)
def _scan_numba(xs, delta, skel, k, m):
    total = m ** k
    res = np.empty(total)
    dl = np.empty(total)
    theta = np.empty(k)
    comp = np.empty(3 * xs.shape[0])
    p = np.empty(xs.shape[0])
    for idx in range(total):
        r = idx
        for j in range(k):
            theta[j] = (r % m) / (m - 1.0)
            r //= m
        res[idx], dl[idx] = _evaluate(xs, delta, skel, theta, comp, p)
    return res, dl


def _thetas(k, m):
    idx = np.arange(m ** k)
    out = np.empty((idx.size, k))
    r = idx.copy()
    for j in range(k):
        out[:, j] = (r % m) / (m - 1.0)
        r //= m
    return out


def _scan_numpy(xs, delta, skel, k, m):
    """Vectorized twin of _scan_numba."""
    th = _thetas(k, m)
    N, n = th.shape[0], xs.size
    a1, b1, a2, b2 = (int(v) for v in skel)
    sig1 = np.zeros((N, n))
    sig2 = np.zeros((N, n))
    p = np.full((N, n), -1.0)
    j = 0
    if b1 >= 0:
        sig1[:, a1], sig1[:, b1] = th[:, j], 1.0 - th[:, j]
        j += 1
    else:
        sig1[:, a1] = 1.0
    if b2 >= 0:
        sig2[:, a2], sig2[:, b2] = th[:, j], 1.0 - th[:, j]
        j += 1
    else:
        sig2[:, a2] = 1.0
    p[:, a2] = th[:, j]
    j += 1
    W = (1.0 - xs[a2]) * p[:, a2]
    if b2 >= 0:
        p[:, b2] = np.minimum(1.0, W / (1.0 - xs[b2])) if 1.0 - xs[b2] > 0.0 else 1.0
    for i in (a1, b1):
        if i >= 0 and i != a2 and i != b2:
            p[:, i] = th[:, j]
            j += 1

    in1, in2 = sig1 > 0.0, sig2 > 0.0
    pset = np.where(p < 0.0, 0.0, p)
    reach2 = np.sum(np.where(in1, sig1 * (1.0 - pset), 0.0), axis=1)
    C = np.sum(np.where(in2, sig2 * xs * pset, 0.0), axis=1)
    W2 = np.sum(np.where(in2, sig2 * (1.0 - xs) * pset, 0.0), axis=1)
    P1 = (1.0 - xs) * pset + (1.0 - pset) * delta * W2[:, None]
    v1 = np.min(np.where(in1, P1, np.inf), axis=1)
    w2 = np.min(np.where(in2, (1.0 - xs) * pset, np.inf), axis=1)

    on = in1 | (reach2[:, None] * sig2 > 0.0)
    g_acc = np.maximum((1.0 - xs) - v1[:, None], (1.0 - xs) - w2[:, None])
    g_rej = np.maximum(delta * W2 - v1, -w2)[:, None]
    can_rej = xs <= delta * C[:, None] + CHOICE_TOL
    choice = np.where(can_rej & (g_rej < g_acc), 0.0, 1.0)
    p = np.where(p < 0.0, choice, p)

    c1 = np.maximum(0.0, (1.0 - xs) * p + (1.0 - p) * delta * W2[:, None] - v1[:, None])
    c2 = np.maximum(0.0, (1.0 - xs) * p - w2[:, None])
    with np.errstate(divide="ignore", invalid="ignore"):
        alpha = sig1 / (sig1 + reach2[:, None] * sig2)
    m_ = alpha * (xs - delta * C[:, None]) + (1.0 - alpha) * delta * xs
    c3 = np.where(on, np.abs(p - np.clip(p + m_, 0.0, 1.0)), 0.0)
    worst = np.maximum(np.maximum(c1.max(axis=1), c2.max(axis=1)), c3.max(axis=1))
    delay = np.sum(sig1 * (1.0 - p), axis=1)
    return worst, delay


def scan(xs, delta, skel, m=11, backend=None):
    """Residual and delay on the coarse parameter grid of one support pattern."""
    xs = np.ascontiguousarray(xs, dtype=float)
    sk = np.asarray(skel, dtype=np.int64)
    k = n_params(skel)
    if _use_numba(backend):
        return _scan_numba(xs, float(delta), sk, k, int(m))
    return _scan_numpy(xs, float(delta), sk, k, int(m))


@dataclass(frozen=True)
class SearchResult:
    found: bool
    residual: float
    delay: float
    skeleton: Optional[tuple]
    theta: Optional[tuple]
    profile: Optional[GeneralProfile]
    patterns: int
    polished: int


def profile_from_params(X: OfferSpace, delta, skel, theta) -> GeneralProfile:
    """GeneralProfile for one parameter vector, with off-path responses filled in."""
    xs = np.asarray(X.points, dtype=float)
    th = np.asarray(theta, dtype=float)
    comp, p = np.empty(3 * xs.size), np.empty(xs.size)
    _evaluate(xs, float(delta), np.asarray(skel, dtype=np.int64), th, comp, p)
    a1, b1, a2, b2 = skel
    k = 0
    s1 = [(xs[a1], 1.0)]
    if b1 >= 0:
        s1 = [(xs[a1], th[0]), (xs[b1], 1.0 - th[0])]
        k += 1
    s2 = [(xs[a2], 1.0)]
    if b2 >= 0:
        s2 = [(xs[a2], th[k]), (xs[b2], 1.0 - th[k])]
    sigma1, sigma2 = Distribution(tuple(s1)), Distribution(tuple(s2))
    accept = OfferRule(tuple(zip(xs, p)))
    prof = GeneralProfile(sigma1, Sigma2(sigma2), accept, OfferRule.constant(1.0), delta)
    beliefs = []
    for x in xs:
        b = bayes_belief(prof, x)
        if b is None:
            # off path: rejecting needs alpha = 1, accepting is justified by alpha = 0
            b = 1.0 if accept(x) == 0.0 else 0.0
        beliefs.append((x, b))
    return GeneralProfile(sigma1, Sigma2(sigma2), accept, OfferRule(tuple(beliefs)), delta,
                          note="search")


GRID_POINTS = {1: 41, 2: 21, 3: 11, 4: 7, 5: 5}


def find_markov_delay(X: OfferSpace, delta, grid_points=None, polish=40, coarse_tol=0.1,
                      backend=None, tol=RESIDUAL_TOL) -> SearchResult:
    """Look for a Markov equilibrium with delay on a finite X.

    Every support pattern is scanned on a grid whose density depends on the
    number of free parameters (`grid_points`, keyed by dimension).  The best
    coarse cell of each pattern with delay and residual under `coarse_tol`
    is kept; the `polish` best of those are refined by least squares.  A hit
    needs residual <= `tol`, delay >= DELAY_MIN and a passing
    general_ahpe_check at `tol`.
    """
    if not X.is_finite:
        raise ValidationError("the search needs a finite offer space")
    sizes = dict(GRID_POINTS, **(grid_points or {}))
    xs = np.asarray(X.points, dtype=float)
    delta = float(delta)
    comp, pbuf = np.empty(3 * xs.size), np.empty(xs.size)
    evaluate = _evaluate if _use_numba(backend) else getattr(_evaluate, "py_func", _evaluate)

    def residuals(th, sk):
        evaluate(xs, delta, sk, np.clip(th, 0.0, 1.0), comp, pbuf)
        return comp.copy()

    pats = skeletons(xs.size)
    cands = []
    for skel in pats:
        k = n_params(skel)
        m = sizes[k]
        res, dl = scan(xs, delta, skel, m, backend)
        ok = np.flatnonzero((dl >= DELAY_MIN) & (res <= coarse_tol))
        if ok.size:
            i = ok[np.argmin(res[ok])]
            cands.append((float(res[i]), skel, _thetas(k, m)[i]))
    cands.sort(key=lambda c: c[0])

    best = (np.inf, 0.0, None, None)
    polished = 0
    for _, skel, start in cands[:polish]:
        sk = np.asarray(skel, dtype=np.int64)
        sol = least_squares(residuals, start, args=(sk,), bounds=(0.0, 1.0), xtol=1e-15,
                            ftol=1e-15, gtol=1e-15, max_nfev=400)
        polished += 1
        th = np.clip(sol.x, 0.0, 1.0)
        r, d = evaluate(xs, delta, sk, th, comp, pbuf)
        if d >= DELAY_MIN and r < best[0]:
            best = (r, d, skel, tuple(float(v) for v in th))
        if r <= tol and d >= DELAY_MIN:
            prof = profile_from_params(X, delta, skel, th)
            rep = general_ahpe_check(prof, X, tol=tol)
            if rep.passed and rep.delay >= DELAY_MIN:
                return SearchResult(True, float(r), float(d), skel,
                                    tuple(float(v) for v in th), prof, len(pats), polished)
    r, d, skel, th = best
    return SearchResult(False, float(r), float(d), skel, th, None, len(pats), polished)
