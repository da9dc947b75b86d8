"""Seeded path simulation of baseline and general-offer profiles."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import kernels
from .core import FAIR_SPLIT, GREEDY_GIVE, GREEDY_KEEP, GameParams, as_sigma
from .errors import SupportMismatch, ValidationError
from .offers import GeneralProfile, profile_offers

Z_THRESHOLD = 4.0
SEED_MAX = 2 ** 64


@dataclass(frozen=True)
class SimConfig:
    runs: int
    seed: int
    params: Optional[GameParams] = None
    workers: int = 1
    backend: Optional[str] = None

    def __post_init__(self):
        if isinstance(self.runs, bool) or int(self.runs) != self.runs or self.runs < 1:
            raise ValidationError(f"runs must be a positive integer, got {self.runs!r}")
        if int(self.seed) != self.seed or not (0 <= self.seed < SEED_MAX):
            raise ValidationError("seed must be an unsigned 64-bit integer")
        if int(self.workers) < 1:
            raise ValidationError("workers must be >= 1")
        object.__setattr__(self, "runs", int(self.runs))
        object.__setattr__(self, "seed", int(self.seed))


@dataclass(frozen=True)
class SimStats:
    runs: int
    seed: int
    dates: tuple
    counts: tuple
    cells: tuple
    mean_date_given_deal: float
    se_mean_date: float
    proposer_payoff: float
    respondent_payoff: float
    se_proposer: float
    se_respondent: float

    @property
    def frequencies(self):
        return {d: c / self.runs for d, c in zip(self.dates, self.counts)}

    def count(self, date):
        return dict(zip(self.dates, self.counts))[date]


def _chunks(runs, workers):
    bounds = np.linspace(0, runs, workers + 1).astype(np.int64)
    return [(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]


def _run(fn, config):
    parts = _chunks(config.runs, max(1, config.workers))
    if len(parts) == 1:
        return fn(*parts[0])
    with ThreadPoolExecutor(len(parts)) as ex:
        results = list(ex.map(lambda ab: fn(*ab), parts))
    return sum(results[1:], results[0])


def _moments(values, counts, runs):
    values = np.asarray(values, dtype=float)
    counts = np.asarray(counts, dtype=float)
    mean = float(np.dot(values, counts) / runs)
    var = max(float(np.dot(values ** 2, counts) / runs) - mean ** 2, 0.0)
    return mean, math.sqrt(var / runs)


def _stats(config, dates, date_counts, cells, values_p, values_r, cell_counts, date_of_cell):
    runs = config.runs
    deals = runs - date_counts[-1]
    if deals > 0:
        d = np.array([date_of_cell[c] for c in cells], dtype=float)
        w = np.asarray(cell_counts, dtype=float)
        mean_date = float(np.dot(d, w) / deals)
        var = max(float(np.dot(d ** 2, w) / deals) - mean_date ** 2, 0.0)
        se_date = math.sqrt(var / deals)
    else:
        mean_date, se_date = float("nan"), float("nan")
    # the no-deal cell pays zero to both players
    mp, sp = _moments(values_p, cell_counts, runs)
    mr, sr = _moments(values_r, cell_counts, runs)
    return SimStats(runs, config.seed, tuple(dates), tuple(int(c) for c in date_counts),
                    tuple(zip(cells, (int(c) for c in cell_counts))), mean_date, se_date,
                    mp, mr, sp, sr)


def simulate_baseline(sigma, p_G, config: SimConfig) -> SimStats:
    params = config.params
    if params is None:
        raise ValidationError("baseline simulation needs params in the config")
    s = as_sigma(sigma, params.T)
    p = float(p_G)
    if not (0.0 <= p <= 1.0):
        raise ValidationError("p_G must lie in [0, 1]")
    fn = lambda a, b: kernels.mc_baseline_counts(s, p, config.seed, a, b, config.backend)
    counts = _run(fn, config)
    T, d, V = params.T, params.delta, params.V
    cells, vp, vr, cc, when = [], [], [], [], {}
    for t in range(T):
        for j, (tag, kp, kr) in enumerate((("G", GREEDY_KEEP, GREEDY_GIVE),
                                           ("F", FAIR_SPLIT, FAIR_SPLIT))):
            cell = (t + 1, tag)
            cells.append(cell)
            vp.append(d ** t * kp * V)
            vr.append(d ** t * kr * V)
            cc.append(counts[t, j])
            when[cell] = t + 1
    date_counts = [int(counts[t].sum()) for t in range(T)] + [int(counts[T, 0])]
    dates = list(range(1, T + 1)) + ["none"]
    return _stats(config, dates, date_counts, cells, vp, vr, cc, when)


def simulate_general(profile: GeneralProfile, config: SimConfig) -> SimStats:
    offers = profile_offers(profile)
    n = len(offers)
    idx = {x: i for i, x in enumerate(offers)}
    w1 = np.array([profile.sigma1.mass(x) for x in offers])
    cdf1 = np.cumsum(w1)
    cdf2 = np.ones((n, n))
    for x1 in offers:
        row = np.array([profile.sigma2(x1).mass(x) for x in offers])
        if row.sum() > 0.0:
            cdf2[idx[x1]] = np.cumsum(row)
    accept = np.array([profile.accept(x) for x in offers])
    fn = lambda a, b: kernels.mc_general_counts(cdf1, cdf2, accept, config.seed, a, b,
                                                config.backend)
    counts = _run(fn, config)
    d = profile.delta
    cells, vp, vr, cc, when = [], [], [], [], {}
    for t in (1, 2):
        disc = 1.0 if t == 1 else d
        for i, x in enumerate(offers):
            cell = (t, x)
            cells.append(cell)
            vp.append(disc * (1.0 - x))
            vr.append(disc * x)
            cc.append(counts[t - 1, i])
            when[cell] = t
    date_counts = [int(counts[0].sum()), int(counts[1].sum()), int(counts[2, 0])]
    return _stats(config, [1, 2, "none"], date_counts, cells, vp, vr, cc, when)


def simulate(profile, config: SimConfig) -> SimStats:
    """Simulate `config.runs` independent plays of a profile.

    Accepts an EquilibriumProfile (binary offers), a (sigma, p_G) pair with
    config.params set, or a GeneralProfile.  Run r uses its own random
    stream keyed by (seed, r), so results do not depend on `workers`.
    """
    if isinstance(profile, GeneralProfile):
        return simulate_general(profile, config)
    if isinstance(profile, tuple) and len(profile) == 2:
        return simulate_baseline(profile[0], profile[1], config)
    params = config.params or profile.params
    cfg = SimConfig(config.runs, config.seed, params, config.workers, config.backend)
    return simulate_baseline(profile.sigma, profile.p_G, cfg)


@dataclass(frozen=True)
class Comparison:
    max_abs_z: float
    z: dict
    threshold: float
    passed: bool


def compare(stats: SimStats, analytic, threshold=Z_THRESHOLD) -> Comparison:
    """Standardized deviation of each empirical cell from `analytic`.

    `analytic` maps the same date labels as `stats.dates` to probabilities.
    The standard error uses the analytic probability; a cell with zero
    analytic variance counts as 0 if matched exactly and inf otherwise.
    """
    if set(analytic) != set(stats.dates):
        raise SupportMismatch(
            f"analytic cells {sorted(map(str, analytic))} differ from {list(map(str, stats.dates))}")
    n = stats.runs
    z = {}
    for date, count in zip(stats.dates, stats.counts):
        p = float(analytic[date])
        emp = count / n
        se = math.sqrt(max(p * (1.0 - p), 0.0) / n)
        if se == 0.0:
            z[date] = 0.0 if abs(emp - p) <= 1e-15 else math.inf
        else:
            z[date] = (emp - p) / se
    worst = max(abs(v) for v in z.values())
    return Comparison(float(worst), z, float(threshold), bool(worst <= threshold))
