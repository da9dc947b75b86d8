"""Two-period bargaining over an arbitrary offer space X in [0, 1].

Offers are the respondent's share.  A Markov profile uses one second-period
distribution for every first-period history; the non-Markov profiles here
condition it on the rejected first offer.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from .errors import NoEquilibriumError, StructuralViolation, ValidationError
from .oracle import deviation_gain

OFFER_TOL = 1e-12
WEIGHT_TOL = 1e-12


def _unit(x, name):
    x = float(x)
    if not (math.isfinite(x) and -OFFER_TOL <= x <= 1.0 + OFFER_TOL):
        raise ValidationError(f"{name} must lie in [0, 1], got {x}")
    return min(max(x, 0.0), 1.0)


def _same(a, b):
    return abs(a - b) <= OFFER_TOL


@dataclass(frozen=True)
class OfferSpace:
    """Either a finite grid of offers or the full interval [0, 1]."""

    kind: str
    points: tuple = ()

    def __post_init__(self):
        if self.kind not in ("grid", "interval"):
            raise ValidationError(f"unknown offer space kind {self.kind!r}")
        if self.kind == "interval":
            object.__setattr__(self, "points", ())
            return
        pts = sorted(_unit(x, "offer") for x in self.points)
        if not pts:
            raise ValidationError("a finite offer space needs at least one offer")
        dedup = [pts[0]]
        for x in pts[1:]:
            if not _same(x, dedup[-1]):
                dedup.append(x)
        object.__setattr__(self, "points", tuple(dedup))

    @classmethod
    def finite(cls, points):
        return cls("grid", tuple(points))

    @classmethod
    def interval(cls):
        return cls("interval")

    @classmethod
    def uniform_grid(cls, eps):
        """{k * eps : k >= 1, k * eps <= 1}."""
        if not (0.0 < eps <= 1.0):
            raise ValidationError("grid spacing must lie in (0, 1]")
        n = int(math.floor(1.0 / eps + 1e-9))
        return cls.finite([k * eps for k in range(1, n + 1)])

    @classmethod
    def load(cls, path):
        """Read offers from a text file (one per line) or a JSON array."""
        text = Path(path).read_text()
        try:
            data = json.loads(text)
        except json.JSONDecodeError:
            data = [float(tok) for tok in text.split()]
        if not isinstance(data, list):
            raise ValidationError("offer file must hold a numeric array")
        return cls.finite(data)

    @property
    def is_finite(self):
        return self.kind == "grid"

    def __len__(self):
        return len(self.points)


@dataclass(frozen=True)
class Distribution:
    """Finite-support distribution over offers: ((offer, weight), ...)."""

    support: tuple

    def __post_init__(self):
        merged = []
        for x, w in self.support:
            x, w = _unit(x, "offer"), float(w)
            if not (w >= -WEIGHT_TOL):
                raise ValidationError("distribution weights must be nonnegative")
            for k, (y, v) in enumerate(merged):
                if _same(x, y):
                    merged[k] = (y, v + w)
                    break
            else:
                merged.append((x, w))
        merged = sorted((x, max(w, 0.0)) for x, w in merged if w > WEIGHT_TOL)
        total = sum(w for _, w in merged)
        if abs(total - 1.0) > WEIGHT_TOL * max(1, len(merged)):
            raise ValidationError(f"distribution weights sum to {total}, not 1")
        object.__setattr__(self, "support", tuple((x, w / total) for x, w in merged))

    @classmethod
    def point(cls, x):
        return cls(((x, 1.0),))

    @property
    def points(self):
        return tuple(x for x, _ in self.support)

    def mass(self, x):
        for y, w in self.support:
            if _same(x, y):
                return w
        return 0.0

    def expect(self, f):
        return sum(w * f(x) for x, w in self.support)

    def close_to(self, other, tol=WEIGHT_TOL):
        pts = set(self.points) | set(other.points)
        return all(abs(self.mass(x) - other.mass(x)) <= tol for x in pts)


@dataclass(frozen=True)
class OfferRule:
    """Map offer -> value in [0, 1].

    Explicit `points` win; otherwise offers below `threshold` get `below`
    and the rest get `above`.
    """

    points: tuple = ()
    threshold: Optional[float] = None
    below: float = 0.0
    above: float = 1.0

    def __post_init__(self):
        pts = tuple((_unit(x, "offer"), _unit(v, "rule value")) for x, v in self.points)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "below", _unit(self.below, "rule value"))
        object.__setattr__(self, "above", _unit(self.above, "rule value"))
        if self.threshold is not None:
            object.__setattr__(self, "threshold", float(self.threshold))

    @classmethod
    def constant(cls, v):
        return cls((), None, v, v)

    def __call__(self, x):
        for y, v in self.points:
            if _same(x, y):
                return v
        if self.threshold is not None and x < self.threshold - OFFER_TOL:
            return self.below
        return self.above


@dataclass(frozen=True)
class Sigma2:
    """Second-period offer distribution, optionally conditioned on the first offer."""

    default: Distribution
    by_offer: tuple = ()

    def __call__(self, x1):
        for y, d in self.by_offer:
            if _same(x1, y):
                return d
        return self.default

    @property
    def is_markov(self):
        return all(d.close_to(self.default) for _, d in self.by_offer)


@dataclass(frozen=True)
class GeneralProfile:
    sigma1: Distribution
    sigma2: Sigma2
    accept: OfferRule
    belief: OfferRule
    delta: float
    note: str = ""

    @property
    def is_markov(self):
        return self.sigma2.is_markov


@dataclass(frozen=True)
class PuncturedWitness:
    a: float
    direction: str
    gap: tuple


# ----------------------------------------------------------- puncture test

def _check_delta(delta):
    delta = float(delta)
    if delta >= 1.0:
        raise ValidationError("the puncture test needs delta < 1")
    if not (delta > 0.0):
        raise ValidationError(f"delta must lie in (0, 1), got {delta}")
    return delta


def is_delta_punctured(X: OfferSpace, delta) -> Optional[PuncturedWitness]:
    """Smallest a > 0 whose gap (a, a/delta) or (delta a, a) misses X.

    Gaps are open intervals and must sit inside [min X, max X].  Returns
    None when X is not punctured.
    """
    delta = _check_delta(delta)
    if not X.is_finite:
        return None
    pts = X.points
    lo, hi = pts[0], pts[-1]
    for k, a in enumerate(pts):
        if a <= OFFER_TOL:
            continue
        up = a / delta
        nxt = pts[k + 1] if k + 1 < len(pts) else math.inf
        if up <= hi + OFFER_TOL and nxt >= up - OFFER_TOL:
            return PuncturedWitness(a, "UpGap", (a, up))
        down = delta * a
        prv = pts[k - 1] if k > 0 else -math.inf
        if down >= lo - OFFER_TOL and prv <= down + OFFER_TOL:
            return PuncturedWitness(a, "DownGap", (down, a))
    return None


# ------------------------------------------------------------- constructions

def _mpe_weight(x, xbar, delta):
    """Weight on x in the second period that makes the respondent indifferent at x."""
    p = (1.0 - xbar) / (1.0 - x)

    def f(s):
        alpha = 1.0 / (1.0 + (1.0 - p) * s)
        cont = s * x * p + (1.0 - s) * xbar
        return alpha * (x - delta * cont) + (1.0 - alpha) * delta * x

    f0, f1 = f(0.0), f(1.0)
    if abs(f0) <= 1e-14:
        return 0.0
    if abs(f1) <= 1e-14:
        return 1.0
    return brentq(f, 0.0, 1.0, xtol=1e-14, rtol=4 * np.finfo(float).eps)


def delay_mpe_points(X: OfferSpace, delta):
    """(x, xbar) used by the delay construction on a punctured X."""
    w = is_delta_punctured(X, delta)
    if w is None:
        raise NoEquilibriumError("X is not delta-punctured; no Markov delay equilibrium")
    pts = X.points
    if w.direction == "UpGap":
        x = w.a
    else:
        x = max(y for y in pts if y <= delta * w.a + OFFER_TOL)
    xbar = min(y for y in pts if y > x + OFFER_TOL and y >= x / delta - OFFER_TOL)
    return x, xbar


def construct_delay_mpe(X: OfferSpace, delta) -> GeneralProfile:
    """Markov equilibrium with delay on a punctured finite X.

    The proposer offers x first and mixes x / xbar second; the respondent
    rejects below x, accepts from xbar on and mixes at x.
    """
    delta = _check_delta(delta)
    x, xbar = delay_mpe_points(X, delta)
    p = (1.0 - xbar) / (1.0 - x)
    s = _mpe_weight(x, xbar, delta)
    alpha_x = 1.0 / (1.0 + (1.0 - p) * s)
    sigma2 = Distribution(((x, s), (xbar, 1.0 - s)))
    belief_pts = [(x, alpha_x)] + ([(xbar, 0.0)] if s < 1.0 else [])
    return GeneralProfile(
        sigma1=Distribution.point(x), sigma2=Sigma2(sigma2),
        accept=OfferRule(((x, p),), threshold=xbar, below=0.0, above=1.0),
        belief=OfferRule(tuple(belief_pts), threshold=None, below=1.0, above=1.0),
        delta=delta, note="markov delay")


@dataclass(frozen=True)
class CompleteSpaceOutcome:
    delta: float
    offer: float
    threshold: float
    family: bool

    def profile(self):
        """The outcome as a profile (respondent accepts iff x >= threshold)."""
        d = Distribution.point(self.offer)
        return GeneralProfile(d, Sigma2(d), OfferRule((), self.threshold, 0.0, 1.0),
                              OfferRule.constant(1.0), self.delta, note="complete space")


def complete_space_outcome(delta, x_prime=None) -> CompleteSpaceOutcome:
    """Equilibrium outcome on X = [0, 1].

    With delta < 1 the proposer offers 0 in both periods and every offer is
    accepted.  With delta = 1 any x_prime can be sustained: offered in both
    periods and accepted iff x >= x_prime (default x_prime = 0).
    """
    delta = float(delta)
    if not (0.0 < delta <= 1.0):
        raise ValidationError(f"delta must lie in (0, 1], got {delta}")
    if delta < 1.0:
        if x_prime not in (None, 0, 0.0):
            raise ValidationError("with delta < 1 the only outcome offers 0")
        return CompleteSpaceOutcome(delta, 0.0, 0.0, False)
    xp = 0.0 if x_prime is None else _unit(x_prime, "x_prime")
    return CompleteSpaceOutcome(delta, xp, xp, True)


def construct_patient_delay(x_L, x_H) -> GeneralProfile:
    """Non-Markov equilibrium with delay for delta = 1.

    After the on-path first offer x_L the proposer mixes x_L / x_H; after
    any other first offer it offers x_H for sure.
    """
    x_L, x_H = _unit(x_L, "x_L"), _unit(x_H, "x_H")
    if not x_L < x_H:
        raise ValidationError("need x_L < x_H")
    p = (1.0 - x_H) / (1.0 - x_L)

    def g(q):
        alpha = 1.0 / (1.0 + (1.0 - p) * (1.0 - q))
        return x_L - alpha * (q * x_H + (1.0 - q) * x_L * p)

    if x_L <= OFFER_TOL and x_H >= 1.0 - OFFER_TOL:
        q = 0.5  # every payoff is zero; any weight works
    elif x_L <= OFFER_TOL:
        raise NoEquilibriumError(
            "x_L = 0 with x_H < 1: the indifference only holds at q = 0")
    else:
        q = brentq(g, 0.0, 1.0, xtol=1e-14, rtol=4 * np.finfo(float).eps)
    alpha = 1.0 / (1.0 + (1.0 - p) * (1.0 - q))
    on_path = Distribution(((x_L, 1.0 - q), (x_H, q)))
    return GeneralProfile(
        sigma1=Distribution.point(x_L),
        sigma2=Sigma2(Distribution.point(x_H), ((x_L, on_path),)),
        accept=OfferRule(((x_L, p),), threshold=x_H, below=0.0, above=1.0),
        belief=OfferRule(((x_L, alpha), (x_H, 0.0)), None, 1.0, 1.0),
        delta=1.0, note="patient delay")


def patient_delay_weight(profile: GeneralProfile):
    """Second-period weight on the high offer after the on-path first offer."""
    x_L = profile.sigma1.points[0]
    d = profile.sigma2(x_L)
    return d.mass(d.points[-1]) if len(d.points) > 1 else 0.0


# ------------------------------------------------------------------ checker

@dataclass(frozen=True)
class GeneralCheckReport:
    max_gain_t1: float
    max_gain_t2: float
    max_respondent_gain: float
    belief_consistency_error: float
    delay: float
    markov: bool
    tol: float
    passed: bool
    worst: dict = field(default_factory=dict)

    @property
    def max_deviation(self):
        return max(self.max_gain_t1, self.max_gain_t2, self.max_respondent_gain)


def _eval_points(profile, X, grid):
    pts = list(profile.sigma1.points)
    for d in [profile.sigma2.default] + [d for _, d in profile.sigma2.by_offer]:
        pts.extend(d.points)
    pts.extend(x for x, _ in profile.sigma2.by_offer)
    if X.is_finite:
        extra = [x for x in pts if not any(_same(x, y) for y in X.points)]
        if extra:
            raise ValidationError(f"profile uses offers outside X: {extra[:3]}")
        return list(X.points)
    grid = np.linspace(0.0, 1.0, 101) if grid is None else grid
    out = sorted(set(pts) | {float(g) for g in grid})
    dedup = [out[0]]
    for x in out[1:]:
        if not _same(x, dedup[-1]):
            dedup.append(x)
    return dedup


def bayes_belief(profile: GeneralProfile, x) -> Optional[float]:
    """Posterior that the period is 1 after offer x; None if x is never offered."""
    first = profile.sigma1.mass(x)
    second = sum(w * (1.0 - profile.accept(x1)) * profile.sigma2(x1).mass(x)
                 for x1, w in profile.sigma1.support)
    total = first + second
    return first / total if total > WEIGHT_TOL else None


def general_ahpe_check(profile: GeneralProfile, X: OfferSpace, delta=None, grid=None,
                       tol=1e-9) -> GeneralCheckReport:
    """Deviation report for a two-period profile over X.

    Checks proposer optimality after every first-period history, Bayes
    consistency of the supplied beliefs on path, and the respondent's
    acceptance choice at every offer.  For X = [0, 1] the offers checked
    are the profile's support plus `grid`.
    """
    delta = profile.delta if delta is None else float(delta)
    if not (0.0 < delta <= 1.0):
        raise ValidationError(f"delta must lie in (0, 1], got {delta}")
    xs = _eval_points(profile, X, grid)
    p = {x: profile.accept(x) for x in xs}
    P2 = {x: (1.0 - x) * p[x] for x in xs}
    best2 = max(P2.values())
    worst = {}

    histories = xs
    gain2 = 0.0
    W2 = {}
    for x1 in histories:
        d = profile.sigma2(x1)
        W2[x1] = d.expect(lambda y: (1.0 - y) * profile.accept(y))
        g = best2 - min(P2.get(y, (1.0 - y) * profile.accept(y)) for y in d.points)
        if g > gain2:
            gain2, worst["t2_history"] = g, x1

    P1 = {x: (1.0 - x) * p[x] + (1.0 - p[x]) * delta * W2[x] for x in xs}
    on1 = [P1.get(x) for x in profile.sigma1.points]
    gain1 = max(P1.values()) - min(on1)
    if gain1 > 0.0:
        worst["t1_best"] = max(P1, key=P1.get)

    gain_r, err = 0.0, 0.0
    for x in xs:
        bayes = bayes_belief(profile, x)
        alpha = profile.belief(x)
        if bayes is not None:
            err = max(err, abs(alpha - bayes))
            alpha = bayes
        cont = profile.sigma2(x).expect(lambda y: y * profile.accept(y))
        m = alpha * (x - delta * cont) + (1.0 - alpha) * delta * x
        g = deviation_gain(p[x], m)
        if g > gain_r:
            gain_r, worst["respondent"] = g, x
    delay = 1.0 - profile.sigma1.expect(profile.accept)
    gain1, gain2 = max(gain1, 0.0), max(gain2, 0.0)
    passed = max(gain1, gain2, gain_r, err) <= tol
    return GeneralCheckReport(float(gain1), float(gain2), float(gain_r), float(err),
                              float(delay), bool(profile.is_markov), float(tol), bool(passed),
                              worst)


# ---------------------------------------------------------- structure checks

@dataclass(frozen=True)
class StructureReport:
    case: int
    first_support: tuple
    second_support: tuple


def _on_path_second(profile):
    pts = set()
    for x1, w in profile.sigma1.support:
        if w * (1.0 - profile.accept(x1)) > WEIGHT_TOL:
            pts.update(profile.sigma2(x1).points)
    return tuple(sorted(pts))


def structural_diagnostics(profile: GeneralProfile) -> StructureReport:
    """Support structure of a Markov delay equilibrium.

    Raises StructuralViolation on a strong-set-order failure between the
    period supports, a support pattern outside the four admissible cases,
    or two interior-acceptance on-path offers whose acceptance is not
    strictly increasing in the offer.
    """
    if not profile.is_markov:
        raise ValidationError("structural diagnostics need a Markov profile")
    S1 = profile.sigma1.points
    S2 = _on_path_second(profile)
    if not S2:
        raise ValidationError("profile has no delay")
    s1, s2 = set(S1), set(S2)
    for a in S1:
        for b in S2:
            if max(a, b) not in s2 or min(a, b) not in s1:
                raise StructuralViolation(
                    f"second-period support does not dominate: {a} vs {b}",
                    pair=(a, b), check="sso")

    onpath = sorted(s1 | s2)
    interior = [x for x in onpath if 0.0 < profile.accept(x) < 1.0]
    for lo, hi in zip(interior, interior[1:]):
        if not profile.accept(hi) > profile.accept(lo):
            raise StructuralViolation(
                f"acceptance not increasing between {lo} and {hi}", pair=(lo, hi),
                check="monotone")

    lo2, hi2 = S2[0], S2[-1]
    below = [x for x in S1 if x < lo2 - OFFER_TOL]
    case = None
    if len(S2) == 1:
        if len(below) == 1 and len(S1) == 2 and _same(S1[1], lo2):
            case = 1
        elif len(below) == 1 and len(S1) == 1:
            case = 2
    elif len(S2) == 2 and hi2 > lo2:
        if len(S1) == 1 and _same(S1[0], lo2):
            case = 3
        elif len(below) == 1 and len(S1) == 2 and _same(S1[1], lo2):
            case = 4
    if case is None:
        raise StructuralViolation(
            f"supports {S1} / {S2} match none of the four delay patterns",
            pair=(S1, S2), check="cases")
    return StructureReport(case, S1, S2)


def profile_offers(profile: GeneralProfile):
    """Sorted offers appearing in either period's distributions."""
    pts = set(profile.sigma1.points)
    for x1 in profile.sigma1.points:
        pts.update(profile.sigma2(x1).points)
    return tuple(sorted(pts))


def outcome_distribution(profile: GeneralProfile):
    """Exact {(period, offer): probability} plus 'none' for the no-deal event."""
    out = {}
    none = 0.0
    for x1, w in profile.sigma1.support:
        a = profile.accept(x1)
        if w * a > 0.0:
            out[(1, x1)] = out.get((1, x1), 0.0) + w * a
        for x2, v in profile.sigma2(x1).support:
            b = profile.accept(x2)
            reach = w * (1.0 - a) * v
            if reach * b > 0.0:
                out[(2, x2)] = out.get((2, x2), 0.0) + reach * b
            none += reach * (1.0 - b)
    out["none"] = none
    return out
