"""Planning-optimal (ex-ante) respondent problem.

A respondent who commits to one acceptance probability before play faces a
lottery over decision problems.  With sigma_t = 1 for t < T the objective is
sigma_T * A(p) + (1 - sigma_T) * B(p).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .core import FAIR_SPLIT, GREEDY_GIVE, GameParams, as_sigma
from .errors import NoEquilibriumError, ValidationError

MIX_ACCEPT = 2.0 / 3.0
FLAT_TOL = 1e-12


def _check_unit(x, name):
    x = float(x)
    if not (0.0 <= x <= 1.0):
        raise ValidationError(f"{name} must lie in [0, 1], got {x}")
    return x


def _survival_powers(q, k):
    """q**k with the convention q**negative = 0 (the term's coefficient is 0)."""
    if k < 0:
        return np.zeros_like(q)
    return q ** k


@dataclass(frozen=True)
class ExAnteObjective:
    sigma_T: float
    params: GameParams

    def __post_init__(self):
        object.__setattr__(self, "sigma_T", _check_unit(self.sigma_T, "sigma_T"))

    def _sums(self, p, order):
        # sum over t of delta^(t-1) d^order/dp^order [p (1-p)^(t-1)]
        p = np.asarray(p, dtype=float)
        q = 1.0 - p
        d = self.params.delta
        full = np.zeros_like(p)
        last = np.zeros_like(p)
        for t in range(1, self.params.T + 1):
            k = t - 1
            if order == 0:
                term = p * _survival_powers(q, k)
            elif order == 1:
                term = _survival_powers(q, k) - k * p * _survival_powers(q, k - 1)
            else:
                term = -2 * k * _survival_powers(q, k - 1) + k * (k - 1) * p * _survival_powers(q, k - 2)
            term = d ** k * term
            full = full + term
            if t == self.params.T:
                last = term
        return full, full - last

    def _deadline(self, p, order):
        p = np.asarray(p, dtype=float)
        q = 1.0 - p
        n = self.params.T - 1
        if order == 0:
            g = _survival_powers(q, n)
        elif order == 1:
            g = -n * _survival_powers(q, n - 1)
        else:
            g = n * (n - 1) * _survival_powers(q, n - 2)
        return self.params.delta ** n * g

    def components(self, p, order=0):
        """(A, B) or their p-derivatives of the given order (0, 1 or 2)."""
        V = self.params.V
        full, head = self._sums(p, order)
        A = GREEDY_GIVE * V * full
        B = GREEDY_GIVE * V * head + FAIR_SPLIT * V * self._deadline(p, order)
        return A, B

    def value(self, p):
        A, B = self.components(p)
        return self.sigma_T * A + (1.0 - self.sigma_T) * B

    def derivative(self, p):
        A, B = self.components(p, 1)
        return self.sigma_T * A + (1.0 - self.sigma_T) * B

    def second_derivative(self, p):
        A, B = self.components(p, 2)
        return self.sigma_T * A + (1.0 - self.sigma_T) * B


def exante_value(sigma_T, p, params: GameParams):
    """Ex-ante respondent payoff when sigma_t = 1 before the deadline period."""
    val = ExAnteObjective(sigma_T, params).value(np.asarray(p, dtype=float))
    return float(val) if np.ndim(val) == 0 else val


def exante_value_policy(sigma, p, params: GameParams):
    """Ex-ante payoff for an arbitrary proposer policy.

    Averages the respondent's realised payoff over the proposer's offer
    sequence; offers are independent across periods, so the sum over
    sequences factorises period by period.
    """
    s = as_sigma(sigma, params.T)
    p = np.asarray(p, dtype=float)
    d, V = params.delta, params.V
    total = np.zeros_like(p)
    reach = np.ones_like(p)
    for k in range(params.T):
        total = total + d ** k * reach * (s[k] * p * GREEDY_GIVE * V + (1 - s[k]) * FAIR_SPLIT * V)
        reach = reach * s[k] * (1.0 - p)
    return float(total) if total.ndim == 0 else total


def exante_threshold_quantity(sigma_T, params: GameParams):
    """Curvature of the ex-ante objective at p = 2/3 (nonpositive at a local max)."""
    return float(ExAnteObjective(sigma_T, params).second_derivative(MIX_ACCEPT))


@dataclass(frozen=True)
class BestResponse:
    points: tuple
    value: float
    flat: bool

    @property
    def argmax(self):
        return self.points[0]


def exante_best_response(sigma, params: GameParams, grid_step=1e-4, xtol=1e-9) -> BestResponse:
    """Global maximizers of the ex-ante objective over p in [0, 1].

    Dense grid, then each near-best grid maximum is refined: by solving the
    analytic first-order condition when the window brackets a sign change,
    by bounded Brent search otherwise.

    `sigma` is either a scalar sigma_T (earlier periods greedy) or a full
    proposer policy.  A flat objective returns the whole interval as
    points (0.0, 1.0) with flat=True.
    """
    slope = None
    if np.ndim(sigma) == 0:
        obj = ExAnteObjective(float(sigma), params)
        objective, slope = obj.value, obj.derivative
    else:
        s = as_sigma(sigma, params.T)
        objective = lambda p: exante_value_policy(s, p, params)

    n = int(round(1.0 / grid_step))
    grid = np.linspace(0.0, 1.0, n + 1)
    vals = np.asarray(objective(grid), dtype=float)
    top = vals.max()
    if top - vals.min() < FLAT_TOL * params.V:
        return BestResponse((0.0, 1.0), float(top), True)

    # every grid local max within reach of the best value gets refined
    left = np.concatenate(([-np.inf], vals[:-1]))
    right = np.concatenate((vals[1:], [-np.inf]))
    idx = np.flatnonzero((vals >= left) & (vals >= right) & (vals >= top - 1e-6 * params.V))
    h = 1.0 / n
    found = []
    for i in idx:
        lo, hi = max(0.0, grid[i] - h), min(1.0, grid[i] + h)
        cands = [lo, hi, float(grid[i])]
        if slope is not None and slope(lo) > 0.0 > slope(hi):
            # interior stationary point: solve the first-order condition
            cands.append(brentq(lambda x: float(slope(x)), lo, hi, xtol=1e-15))
        else:
            res = minimize_scalar(lambda x: -float(objective(x)), bounds=(lo, hi),
                                  method="bounded", options={"xatol": xtol * 0.1})
            cands.append(float(res.x))
        best = max(cands, key=lambda x: (float(objective(x)), -x))
        found.append((float(objective(best)), best))
    vmax = max(v for v, _ in found)
    pts = sorted({round(x, 12) for v, x in found if v >= vmax - FLAT_TOL * params.V})
    merged = []
    for x in pts:
        if not merged or x - merged[-1] > 1e-7:
            merged.append(x)
    return BestResponse(tuple(merged), float(vmax), False)


@dataclass(frozen=True)
class EquivalenceReport:
    T: int
    delta: float
    sigma_T: float
    argmax: tuple
    gap: float
    foc: float
    second_derivative: float
    second_difference: float
    local_max: bool
    passed: bool
    tol: float


def certify_equivalence(params: GameParams, tol=1e-6) -> EquivalenceReport:
    """Check that the AHPE mixing weight makes p = 2/3 ex-ante optimal.

    `passed` requires the global maximizer to sit within `tol` of 2/3; the
    local diagnostics (first/second derivative, second finite difference
    on a 1e-3 step) are reported separately.
    """
    from .equilibria import solve_mixing

    sigma_T = solve_mixing(params)
    if sigma_T is None or not (0.0 < sigma_T < 1.0):
        raise NoEquilibriumError(
            f"mixing equilibrium absent at T={params.T}, delta={params.delta}")
    obj = ExAnteObjective(sigma_T, params)
    br = exante_best_response(sigma_T, params)
    gap = min(abs(x - MIX_ACCEPT) for x in br.points)
    h = 1e-3
    sd = float(obj.value(MIX_ACCEPT + h) - 2 * obj.value(MIX_ACCEPT) + obj.value(MIX_ACCEPT - h))
    curv = float(obj.second_derivative(MIX_ACCEPT))
    return EquivalenceReport(
        T=params.T, delta=params.delta, sigma_T=float(sigma_T), argmax=br.points,
        gap=float(gap), foc=float(obj.derivative(MIX_ACCEPT)), second_derivative=curv,
        second_difference=sd, local_max=bool(sd <= 0.0),
        passed=bool((not br.flat) and gap <= tol), tol=tol)
