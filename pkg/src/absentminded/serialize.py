"""JSON and CSV encodings for profiles, reports and sweeps."""
from __future__ import annotations

import csv
import dataclasses
import enum
import io
import json
import math
from pathlib import Path

import numpy as np

from .core import GameParams, check_distribution
from .equilibria import EquilibriumProfile, Kind, SweepTable
from .errors import ValidationError
from .offers import Distribution, GeneralProfile, OfferRule, Sigma2

SCHEMA_VERSION = 1


def to_jsonable(obj):
    """Plain JSON types for dataclasses, enums, numpy scalars and tuples."""
    if isinstance(obj, GeneralProfile):
        return general_profile_to_dict(obj)
    if isinstance(obj, EquilibriumProfile):
        return baseline_profile_to_dict(obj)
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: to_jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        if math.isfinite(x):
            return x
        return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    return obj


def dumps(obj):
    """Deterministic JSON text with a schema version on top-level objects."""
    data = to_jsonable(obj)
    if isinstance(data, dict):
        data = {"schema_version": SCHEMA_VERSION, **data}
    return json.dumps(data, sort_keys=True, indent=2, allow_nan=False) + "\n"


# ------------------------------------------------------------ baseline

def baseline_profile_to_dict(p: EquilibriumProfile):
    return {
        "game": "baseline",
        "kind": p.kind.value,
        "params": {"T": p.params.T, "delta": p.params.delta, "V": p.params.V},
        "sigma": list(p.sigma),
        "p_G": p.p_G,
        "alpha_G": None if p.alpha_G is None else list(p.alpha_G),
        "alpha_F": None if p.alpha_F is None else list(p.alpha_F),
    }


def baseline_profile_from_dict(d) -> EquilibriumProfile:
    try:
        pr = d["params"]
        params = GameParams(pr["T"], pr["delta"], pr.get("V", 1.0))
        sigma = tuple(float(x) for x in d["sigma"])
        if len(sigma) != params.T:
            raise ValidationError("sigma length does not match T")
        beliefs = []
        for name in ("alpha_G", "alpha_F"):
            v = d.get(name)
            beliefs.append(None if v is None else tuple(check_distribution(v, params.T, name)))
        kind = Kind(d.get("kind", "Mixing"))
        return EquilibriumProfile(kind, sigma, float(d["p_G"]), beliefs[0], beliefs[1], params)
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"malformed baseline profile: {exc}") from None


# ------------------------------------------------------------- general

def _dist(d: Distribution):
    return [[x, w] for x, w in d.support]


def _rule(r: OfferRule):
    return {"points": [[x, v] for x, v in r.points], "threshold": r.threshold,
            "below": r.below, "above": r.above}


def general_profile_to_dict(p: GeneralProfile):
    return {
        "game": "general",
        "delta": p.delta,
        "markov": p.is_markov,
        "note": p.note,
        "sigma1": _dist(p.sigma1),
        "sigma2": {"default": _dist(p.sigma2.default),
                   "by_offer": [{"offer": x, "distribution": _dist(d)}
                                for x, d in p.sigma2.by_offer]},
        "accept": _rule(p.accept),
        "belief": _rule(p.belief),
    }


def _dist_from(v):
    return Distribution(tuple((float(x), float(w)) for x, w in v))


def _rule_from(v):
    return OfferRule(tuple((float(x), float(y)) for x, y in v.get("points", [])),
                     v.get("threshold"), v.get("below", 0.0), v.get("above", 1.0))


def general_profile_from_dict(d) -> GeneralProfile:
    try:
        s2 = d["sigma2"]
        if isinstance(s2, list):
            sigma2 = Sigma2(_dist_from(s2))
        else:
            sigma2 = Sigma2(_dist_from(s2["default"]),
                            tuple((float(e["offer"]), _dist_from(e["distribution"]))
                                  for e in s2.get("by_offer", [])))
        delta = float(d["delta"])
        if not (0.0 < delta <= 1.0):
            raise ValidationError("delta must lie in (0, 1]")
        return GeneralProfile(_dist_from(d["sigma1"]), sigma2, _rule_from(d["accept"]),
                              _rule_from(d.get("belief", {"below": 1.0, "above": 1.0})),
                              delta, d.get("note", ""))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ValidationError):
            raise
        raise ValidationError(f"malformed general profile: {exc}") from None


def load_profile(path):
    """Read a baseline or general profile from a JSON file."""
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(f"cannot read profile {path}: {exc}") from None
    if not isinstance(data, dict):
        raise ValidationError("profile file must hold a JSON object")
    game = data.get("game")
    if game == "baseline":
        return baseline_profile_from_dict(data)
    if game == "general":
        return general_profile_from_dict(data)
    raise ValidationError(f"unknown game {game!r} in profile")


# ----------------------------------------------------------------- CSV

def sweep_columns(table: SweepTable):
    T_max = max(r.T for r in table.rows) if table.rows else 0
    return (["param", "sigma_T"] + [f"pr_trade_{t}" for t in range(1, T_max + 1)]
            + ["pr_no_deal", "e_date"])


def _fmt(x):
    return "" if x is None else repr(float(x))


def sweep_csv(table: SweepTable) -> str:
    """Fixed columns: param, sigma_T, pr_trade_1..pr_trade_T, pr_no_deal, e_date."""
    cols = sweep_columns(table)
    T_max = len(cols) - 4
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in table.rows:
        param = str(int(r.param)) if table.parameter == "T" else _fmt(r.param)
        if r.stats is None:
            w.writerow([param] + [""] * (len(cols) - 1))
            continue
        trades = list(r.stats.pr_trade_at) + [None] * (T_max - len(r.stats.pr_trade_at))
        w.writerow([param, _fmt(r.sigma_T)] + [_fmt(x) for x in trades]
                   + [_fmt(r.stats.pr_no_deal), _fmt(r.stats.expected_date_given_deal)])
    return buf.getvalue()


def histogram_csv(stats) -> str:
    """Columns: date, count, frequency (date 'none' is the no-deal event)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["date", "count", "frequency"])
    for d, c in zip(stats.dates, stats.counts):
        w.writerow([d, c, repr(c / stats.runs)])
    return buf.getvalue()
