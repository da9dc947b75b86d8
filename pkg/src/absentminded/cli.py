"""Command-line interface.

Exit codes: 0 success, 1 invalid input, 2 a legitimate negative answer (no
equilibrium, no witness, a profile that fails its check).
"""
from __future__ import annotations

import argparse
import sys
from collections import defaultdict
from pathlib import Path

import numpy as np

from . import equilibria, exante, montecarlo, oracle, protocols, serialize
from .core import GameParams
from .equilibria import EquilibriumProfile, delay_stats, enumerate_equilibria, mixing_threshold
from .errors import AbsentmindedError, NoEquilibriumError, ValidationError
from .offers import (GeneralProfile, OfferSpace, construct_delay_mpe, construct_patient_delay,
                     general_ahpe_check, is_delta_punctured, outcome_distribution,
                     patient_delay_weight, structural_diagnostics)

OK, INVALID, NEGATIVE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ValidationError(message)


def _params(a):
    return GameParams(a.T, a.delta, a.V)


def _with_params(payload, params):
    return {"params": {"T": params.T, "delta": params.delta, "V": params.V}, **payload}


# ---------------------------------------------------------------- commands

def cmd_solve_baseline(a):
    params = _params(a)
    out = []
    for prof in enumerate_equilibria(params):
        out.append({"profile": prof, "check": oracle.check_profile(prof)})
    return OK, serialize.dumps(_with_params({"command": "solve-baseline", "equilibria": out}, params))


def cmd_threshold(a):
    return OK, serialize.dumps({"command": "threshold", "T": a.T, "threshold": mixing_threshold(a.T)})


def cmd_delay_stats(a):
    params = _params(a)
    prof = equilibria.mixing_profile(params)
    if prof is None:
        raise NoEquilibriumError(f"no mixing equilibrium at T={params.T}, delta={params.delta}")
    sT = prof.sigma[-1]
    stats = delay_stats(sT, prof.p_G, params.T)
    return OK, serialize.dumps(_with_params(
        {"command": "delay-stats", "sigma_T": sT, "p_G": prof.p_G, "stats": stats}, params))


def _grid(lo, hi, step):
    if step <= 0 or hi < lo:
        raise ValidationError("need --step > 0 and --to >= --from")
    n = int(np.floor((hi - lo) / step + 1e-9))
    return [round(lo + k * step, 12) for k in range(n + 1)]


def cmd_sweep(a):
    grid = _grid(a.start, a.stop, a.step)
    if a.param == "delta":
        if a.T is None:
            raise ValidationError("--T is required for a delta sweep")
        base = GameParams(a.T, grid[0] if grid[0] > 0 else 1.0, a.V)
    else:
        if a.delta is None:
            raise ValidationError("--delta is required for a T sweep")
        grid = [int(round(v)) for v in grid]
        base = GameParams(max(grid[0], 1), a.delta, a.V)
    table = equilibria.sweep(base, a.param, grid, workers=a.workers)
    text = serialize.sweep_csv(table)
    if a.out:
        Path(a.out).write_text(text)
        return OK, serialize.dumps({"command": "sweep", "rows": len(table.rows), "out": a.out,
                                    "diagnostics": table.diagnostics})
    return OK, text


def cmd_exante_certify(a):
    rep = exante.certify_equivalence(_params(a), tol=a.tol)
    return (OK if rep.passed else NEGATIVE), serialize.dumps({"command": "exante-certify",
                                                             "report": rep})


def cmd_punctured(a):
    X = OfferSpace.load(a.offers)
    w = is_delta_punctured(X, a.delta)
    body = {"command": "punctured", "delta": a.delta, "size": len(X),
            "punctured": w is not None, "witness": w}
    return (OK if w is not None else NEGATIVE), serialize.dumps(body)


def cmd_construct_mpe(a):
    X = OfferSpace.load(a.offers)
    prof = construct_delay_mpe(X, a.delta)
    rep = general_ahpe_check(prof, X)
    body = {"command": "construct-mpe", "profile": prof, "check": rep,
            "structure": structural_diagnostics(prof)}
    return _maybe_write(a, prof, body)


def cmd_construct_patient(a):
    prof = construct_patient_delay(a.xl, a.xh)
    rep = general_ahpe_check(prof, OfferSpace.interval())
    body = {"command": "construct-patient", "profile": prof, "check": rep,
            "q": patient_delay_weight(prof)}
    return _maybe_write(a, prof, body)


def _maybe_write(a, prof, body):
    if getattr(a, "out", None):
        Path(a.out).write_text(serialize.dumps(prof))
        body["out"] = a.out
    return OK, serialize.dumps(body)


def _load_for_game(a):
    prof = serialize.load_profile(a.profile)
    if isinstance(prof, EquilibriumProfile):
        p = prof.params
        T = p.T if a.T is None else a.T
        delta = p.delta if a.delta is None else a.delta
        V = p.V if a.V is None else a.V
        params = GameParams(T, delta, V)
        if len(prof.sigma) != T:
            raise ValidationError("profile length does not match --T")
        prof = EquilibriumProfile(prof.kind, prof.sigma, prof.p_G, prof.alpha_G, prof.alpha_F,
                                  params)
    elif a.delta is not None:
        prof = GeneralProfile(prof.sigma1, prof.sigma2, prof.accept, prof.belief,
                              float(a.delta), prof.note)
    return prof


def cmd_verify(a):
    prof = _load_for_game(a)
    if isinstance(prof, EquilibriumProfile):
        rep = oracle.check_profile(prof, tol=a.tol * prof.params.V)
    else:
        X = OfferSpace.load(a.offers) if a.offers else OfferSpace.interval()
        rep = general_ahpe_check(prof, X, tol=a.tol)
    return (OK if rep.passed else NEGATIVE), serialize.dumps({"command": "verify", "report": rep})


def cmd_alt_proposer(a):
    profs = protocols.proposer_absent_equilibria(a.delta, a.V)
    return OK, serialize.dumps({"command": "alt proposer-absent", "delta": a.delta,
                                "delta_bar": protocols.delta_bar(), "equilibria": profs})


def cmd_alt_two(a):
    profs = protocols.two_absent_equilibria(a.delta, a.V)
    return OK, serialize.dumps({"command": "alt two-absent", "delta": a.delta,
                                "equilibria": profs})


def analytic_dates(prof):
    """Exact date distribution matching the labels used by simulate."""
    if isinstance(prof, GeneralProfile):
        agg = defaultdict(float)
        for k, v in outcome_distribution(prof).items():
            agg[k if k == "none" else k[0]] += v
        return {d: agg.get(d, 0.0) for d in (1, 2, "none")}
    return oracle.enumerate_outcomes(prof.sigma, prof.p_G, prof.params).date_distribution()


def cmd_simulate(a):
    prof = serialize.load_profile(a.profile)
    params = prof.params if isinstance(prof, EquilibriumProfile) else None
    cfg = montecarlo.SimConfig(a.runs, a.seed, params, a.workers)
    stats = montecarlo.simulate(prof, cfg)
    cmp_ = montecarlo.compare(stats, analytic_dates(prof))
    if a.csv:
        Path(a.csv).write_text(serialize.histogram_csv(stats))
    return OK, serialize.dumps({"command": "simulate", "stats": stats, "comparison": cmp_})


def cmd_sequential(a):
    params = _params(a)
    fair = equilibria.fair_profiles(params)
    if not fair:
        raise NoEquilibriumError(f"no fair equilibrium at delta={params.delta}")
    reps = [{"p_G": f.p_G, "report": oracle.sequential_certificate(f, params, a.n_max)}
            for f in fair]
    return OK, serialize.dumps(_with_params({"command": "sequential-certify", "fair": reps},
                                            params))


# ------------------------------------------------------------------ parser

def build_parser():
    p = _Parser(prog="absentminded", description="Bargaining with an absentminded respondent.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def game(sp, T_required=True, delta_required=True):
        sp.add_argument("--T", type=int, required=T_required)
        sp.add_argument("--delta", type=float, required=delta_required)
        sp.add_argument("--V", type=float, default=1.0)

    s = sub.add_parser("solve-baseline", help="enumerate equilibria")
    game(s)
    s.set_defaults(func=cmd_solve_baseline)

    s = sub.add_parser("threshold", help="smallest delta with a mixing equilibrium")
    s.add_argument("--T", type=int, required=True)
    s.set_defaults(func=cmd_threshold)

    s = sub.add_parser("delay-stats", help="trade-date distribution of the mixing equilibrium")
    game(s)
    s.set_defaults(func=cmd_delay_stats)

    s = sub.add_parser("sweep", help="mixing statistics along a parameter grid (CSV)")
    s.add_argument("--param", choices=("delta", "T"), required=True)
    s.add_argument("--from", dest="start", type=float, required=True)
    s.add_argument("--to", dest="stop", type=float, required=True)
    s.add_argument("--step", type=float, required=True)
    game(s, T_required=False, delta_required=False)
    s.add_argument("--workers", type=int, default=None)
    s.add_argument("--out", default=None)
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("exante-certify", help="planning optimality of the mixing acceptance")
    game(s)
    s.add_argument("--tol", type=float, default=1e-6)
    s.set_defaults(func=cmd_exante_certify)

    s = sub.add_parser("punctured", help="gap test on a finite offer set")
    s.add_argument("--offers", required=True)
    s.add_argument("--delta", type=float, required=True)
    s.set_defaults(func=cmd_punctured)

    s = sub.add_parser("construct-mpe", help="Markov delay equilibrium on a punctured set")
    s.add_argument("--offers", required=True)
    s.add_argument("--delta", type=float, required=True)
    s.add_argument("--out", default=None)
    s.set_defaults(func=cmd_construct_mpe)

    s = sub.add_parser("construct-patient", help="non-Markov delay equilibrium at delta = 1")
    s.add_argument("--xl", type=float, required=True)
    s.add_argument("--xh", type=float, required=True)
    s.add_argument("--out", default=None)
    s.set_defaults(func=cmd_construct_patient)

    s = sub.add_parser("verify", help="deviation check of a profile file")
    s.add_argument("--profile", required=True)
    s.add_argument("--T", type=int, default=None)
    s.add_argument("--delta", type=float, default=None)
    s.add_argument("--V", type=float, default=None)
    s.add_argument("--offers", default=None)
    s.add_argument("--tol", type=float, default=1e-9)
    s.set_defaults(func=cmd_verify)

    alt = sub.add_parser("alt", help="alternative protocols")
    altsub = alt.add_subparsers(dest="protocol", required=True, parser_class=_Parser)
    for name, fn in (("proposer-absent", cmd_alt_proposer), ("two-absent", cmd_alt_two)):
        s = altsub.add_parser(name)
        s.add_argument("--delta", type=float, required=True)
        s.add_argument("--V", type=float, default=1.0)
        s.set_defaults(func=fn)

    s = sub.add_parser("simulate", help="Monte Carlo play of a profile file")
    s.add_argument("--profile", required=True)
    s.add_argument("--runs", type=int, required=True)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--csv", default=None)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("sequential-certify", help="tremble limits for fair equilibria")
    game(s)
    s.add_argument("--n-max", type=float, default=1e6)
    s.set_defaults(func=cmd_sequential)
    return p


def run(argv=None):
    """Parse and dispatch; returns (exit code, stdout text, stderr text)."""
    try:
        args = build_parser().parse_args(argv)
        code, text = args.func(args)
        return code, text, ""
    except NoEquilibriumError as exc:
        return NEGATIVE, "", f"no result: {exc}\n"
    except (ValidationError, ValueError, OSError) as exc:
        return INVALID, "", f"error: {exc}\n"
    except AbsentmindedError as exc:
        return INVALID, "", f"error: {exc}\n"


def main(argv=None):
    code, out, err = run(argv)
    if out:
        sys.stdout.write(out)
    if err:
        sys.stderr.write(err.splitlines()[0] + "\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
