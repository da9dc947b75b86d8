import json
import subprocess
import sys

import pytest

from absentminded import cli, equilibria, exante, oracle, protocols, serialize
from absentminded.core import GameParams
from absentminded.equilibria import delay_stats, enumerate_equilibria, mixing_profile
from absentminded.errors import ValidationError
from absentminded.offers import (OfferSpace, construct_delay_mpe, construct_patient_delay,
                                 general_ahpe_check, is_delta_punctured, patient_delay_weight,
                                 structural_diagnostics)


def run(*argv):
    return cli.run([str(a) for a in argv])


def with_params(body, params):
    return {"params": {"T": params.T, "delta": params.delta, "V": params.V}, **body}


@pytest.fixture
def offers(tmp_path):
    path = tmp_path / "x.json"
    path.write_text(json.dumps([0.25, 0.5]))
    return path


def test_threshold_matches_module():
    code, out, err = run("threshold", "--T", 3)
    assert code == 0 and err == ""
    assert out == serialize.dumps({"command": "threshold", "T": 3,
                                   "threshold": equilibria.mixing_threshold(3)})
    assert json.loads(out)["schema_version"] == serialize.SCHEMA_VERSION


def test_solve_baseline_matches_module():
    params = GameParams(2, 0.9)
    code, out, _ = run("solve-baseline", "--T", 2, "--delta", 0.9)
    expect = [{"profile": p, "check": oracle.check_profile(p)} for p in enumerate_equilibria(params)]
    assert code == 0
    assert out == serialize.dumps(with_params({"command": "solve-baseline", "equilibria": expect},
                                              params))


def test_delay_stats_matches_module():
    params = GameParams(2, 0.9)
    prof = mixing_profile(params)
    code, out, _ = run("delay-stats", "--T", 2, "--delta", 0.9)
    body = {"command": "delay-stats", "sigma_T": prof.sigma[-1], "p_G": prof.p_G,
            "stats": delay_stats(prof.sigma[-1], prof.p_G, 2)}
    assert code == 0 and out == serialize.dumps(with_params(body, params))
    code, out, err = run("delay-stats", "--T", 2, "--delta", 0.4)
    assert code == 2 and out == "" and err.startswith("no result")


def test_sweep_csv(tmp_path):
    code, out, _ = run("sweep", "--param", "delta", "--from", 0.5, "--to", 1.0, "--step", 0.1,
                       "--T", 2)
    grid = [0.5, 0.6, 0.7, 0.8, 0.9, 1.0]
    expect = serialize.sweep_csv(equilibria.sweep(GameParams(2, 0.5), "delta", grid))
    assert code == 0 and out == expect
    assert out.splitlines()[0] == "param,sigma_T,pr_trade_1,pr_trade_2,pr_no_deal,e_date"
    code, out, _ = run("sweep", "--param", "T", "--from", 2, "--to", 4, "--step", 1,
                       "--delta", 0.99, "--out", tmp_path / "t.csv")
    assert code == 0
    rows = (tmp_path / "t.csv").read_text().splitlines()
    assert [r.split(",")[0] for r in rows[1:]] == ["2", "3", "4"]
    assert run("sweep", "--param", "delta", "--from", 0.5, "--to", 1, "--step", 0.1)[0] == 1


def test_exante_certify():
    code, out, _ = run("exante-certify", "--T", 2, "--delta", 0.9)
    rep = exante.certify_equivalence(GameParams(2, 0.9))
    assert code == 0
    assert out == serialize.dumps({"command": "exante-certify", "report": rep})
    assert run("exante-certify", "--T", 3, "--delta", 0.896)[0] == 2


def test_punctured_and_construct(offers, tmp_path):
    X = OfferSpace.load(offers)
    code, out, _ = run("punctured", "--offers", offers, "--delta", 0.6)
    assert code == 0
    assert out == serialize.dumps({"command": "punctured", "delta": 0.6, "size": 2,
                                   "punctured": True, "witness": is_delta_punctured(X, 0.6)})
    assert run("punctured", "--offers", offers, "--delta", 0.4)[0] == 2

    prof = construct_delay_mpe(X, 0.6)
    code, out, _ = run("construct-mpe", "--offers", offers, "--delta", 0.6)
    body = {"command": "construct-mpe", "profile": prof, "check": general_ahpe_check(prof, X),
            "structure": structural_diagnostics(prof)}
    assert code == 0 and out == serialize.dumps(body)

    saved = tmp_path / "mpe.json"
    assert run("construct-mpe", "--offers", offers, "--delta", 0.6, "--out", saved)[0] == 0
    assert serialize.load_profile(saved) == prof
    assert run("verify", "--profile", saved, "--offers", offers)[0] == 0
    # the same profile at a different delta is no longer an equilibrium
    assert run("verify", "--profile", saved, "--offers", offers, "--delta", 0.9)[0] == 2


def test_construct_patient(tmp_path):
    prof = construct_patient_delay(0.25, 0.5)
    code, out, _ = run("construct-patient", "--xl", 0.25, "--xh", 0.5)
    body = {"command": "construct-patient", "profile": prof,
            "check": general_ahpe_check(prof, OfferSpace.interval()),
            "q": patient_delay_weight(prof)}
    assert code == 0 and out == serialize.dumps(body)
    assert run("construct-patient", "--xl", 0, "--xh", 0.5)[0] == 2
    assert run("construct-patient", "--xl", 0.5, "--xh", 0.25)[0] == 1


def test_verify_baseline(tmp_path):
    prof = mixing_profile(GameParams(2, 0.9))
    path = tmp_path / "mix.json"
    path.write_text(serialize.dumps(prof))
    code, out, _ = run("verify", "--profile", path)
    assert code == 0
    assert out == serialize.dumps({"command": "verify", "report": oracle.check_profile(prof)})
    assert run("verify", "--profile", path, "--delta", 0.7)[0] == 2
    assert run("verify", "--profile", path, "--T", 3)[0] == 1


def test_alt_commands():
    code, out, _ = run("alt", "two-absent", "--delta", 0.75)
    assert code == 0
    assert out == serialize.dumps({"command": "alt two-absent", "delta": 0.75,
                                   "equilibria": protocols.two_absent_equilibria(0.75)})
    code, out, _ = run("alt", "proposer-absent", "--delta", 0.6)
    assert [e["kind"] for e in json.loads(out)["equilibria"]] == ["Greedy", "Fair", "Mixed"]


def test_simulate(tmp_path):
    path = tmp_path / "mix.json"
    path.write_text(serialize.dumps(mixing_profile(GameParams(2, 0.9))))
    csv_path = tmp_path / "h.csv"
    code, out, _ = run("simulate", "--profile", path, "--runs", 20000, "--seed", 5,
                       "--csv", csv_path)
    assert code == 0
    again = run("simulate", "--profile", path, "--runs", 20000, "--seed", 5, "--workers", 3)[1]
    assert out == again
    assert json.loads(out)["comparison"]["passed"]
    assert csv_path.read_text().splitlines()[0] == "date,count,frequency"


def test_sequential_certify():
    code, out, _ = run("sequential-certify", "--T", 2, "--delta", 0.9)
    reps = json.loads(out)["fair"]
    assert code == 0
    assert [r["report"]["certified"] for r in reps] == [True, False]
    assert run("sequential-certify", "--T", 2, "--delta", 0.4)[0] == 2


@pytest.mark.parametrize("argv", [
    ["threshold"],
    ["threshold", "--T", "x"],
    ["nope"],
    ["solve-baseline", "--T", "2", "--delta", "1.5"],
    ["verify", "--profile", "/nonexistent.json"],
    ["simulate", "--profile", "/nonexistent.json", "--runs", "10", "--seed", "1"],
])
def test_invalid_input_exit_one(argv):
    code, out, err = cli.run(argv)
    assert code == 1 and out == "" and err.startswith("error")


def test_malformed_profiles(tmp_path):
    bad = tmp_path / "bad.json"
    for text in ("[1, 2]", '{"game": "chess"}', '{"game": "baseline", "params": {}}',
                 '{"game": "general", "delta": 0.5}', "not json"):
        bad.write_text(text)
        assert run("verify", "--profile", bad)[0] == 1


def test_round_trip():
    for prof in enumerate_equilibria(GameParams(3, 0.95)):
        assert serialize.baseline_profile_from_dict(json.loads(serialize.dumps(prof))) == \
            prof.__class__(prof.kind, prof.sigma, prof.p_G, prof.alpha_G, prof.alpha_F,
                           prof.params)
    g = construct_patient_delay(0.25, 0.5)
    assert serialize.general_profile_from_dict(json.loads(serialize.dumps(g))) == g
    with pytest.raises(ValidationError):
        serialize.general_profile_from_dict({"sigma1": [[0.5, 1.0]]})


def test_console_script():
    out = subprocess.run([sys.executable, "-m", "absentminded.cli", "threshold", "--T", "2"],
                         capture_output=True, text=True)
    assert out.returncode == 0
    assert json.loads(out.stdout)["threshold"] == pytest.approx(0.5, abs=1e-6)
    bad = subprocess.run([sys.executable, "-m", "absentminded.cli", "threshold"],
                         capture_output=True, text=True)
    assert bad.returncode == 1 and len(bad.stderr.splitlines()) == 1
