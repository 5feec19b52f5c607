import json
import subprocess
import sys

import pytest

from equivhp import corpus
from equivhp.cli import EXIT_FAIL, EXIT_GUARD, EXIT_OK, EXIT_USAGE, main, render, run
from equivhp.galgebras import kg_algebra


@pytest.fixture
def files(tmp_path):
    def write(name, data):
        path = tmp_path / name
        path.write_text(data if isinstance(data, str) else json.dumps(data))
        return str(path)

    return write


def test_validate_pair2(files):
    path = files("pair2.json", corpus.GROUPOIDS["pair2"])
    code, report, _ = run(["validate", path])
    assert code == EXIT_OK
    assert report["files"][0]["message"] == "valid: 4 arrows, 1 orbit"


def test_validate_malformed_mul_names_arrows(files):
    raw = json.loads(json.dumps(corpus.GROUPOIDS["z2"]))
    raw["mul"] = [["g", "g", "g"]]
    code, report, _ = run(["validate", files("bad.json", raw)])
    assert code == EXIT_FAIL
    assert "g" in report["files"][0]["message"]


def test_validate_reports_json_position(files):
    code, report, _ = run(["validate", files("broken.json", '{"units": [\n  "e",\n')])
    assert code == EXIT_FAIL and "line" in report["files"][0]["message"]


def test_algebra_on_unknown_unit(files):
    alg = {"fibers": {"zz": ["1"]}, "rho": {}, "mul": {"zz": [[[1]]]}}
    code, report, _ = run(["validate", "--groupoid", "builtin:z2", files("alg.json", alg)])
    assert code == EXIT_FAIL and "unknown unit" in report["files"][0]["message"]
    code, _, _ = run(["hp", "--groupoid", "builtin:z2", "--source", files("alg2.json", alg)])
    assert code == EXIT_FAIL


def test_algebra_file_round_trip(files):
    G = corpus.groupoid("z2")
    path = files("kg.json", kg_algebra(G).to_json())
    code, report, _ = run(["validate", "--groupoid", "builtin:z2", path])
    assert code == EXIT_OK and report["files"][0]["message"] == "valid algebra: fiber dimensions [4]"
    code, report, _ = run(["check", "--suite", "paramixed", "--groupoid", "builtin:z2", "--algebra", path, "--max-degree", "6"])
    assert code == EXIT_OK and report["report"]["relations"]["Bb + bB = 1 - T"]


def test_groupoid_file_for_hp(files):
    code, report, _ = run(["hp", "--groupoid", files("pair2.json", corpus.GROUPOIDS["pair2"])])
    assert code == EXIT_OK
    assert (report["even"], report["odd"], report["reduction"]) == (1, 0, "quasifree")


def test_hp_z2z3():
    code, report, _ = run(["hp", "--groupoid", "builtin:z2z3"])
    assert code == EXIT_OK and report["even"] == 5


def test_hp_uncertified_requires_level():
    code, report, _ = run(["hp", "--groupoid", "builtin:z2", "--source", "dual"])
    assert code == EXIT_USAGE and "--level" in report["message"]
    code, report, _ = run(["hp", "--groupoid", "builtin:z2", "--source", "dual", "--level", "3"])
    assert code == EXIT_OK
    assert report["reduction"] == "level" and len(report["tower"]) == 3 and "stabilized" in report


def test_greenjulg_command():
    code, report, _ = run(["greenjulg", "--groupoid", "builtin:pair2"])
    assert code == EXIT_OK
    assert report["report"]["lhs"] == report["report"]["rhs"] == [1, 0]


@pytest.mark.parametrize("suite", ["comodule", "stability", "averaging"])
def test_check_suites(suite):
    code, report, _ = run(["check", "--suite", suite, "--groupoid", "builtin:z2"])
    assert code == EXIT_OK and report["passed"]


def test_guard_exit_code():
    code, report, _ = run(["check", "--suite", "stability", "--groupoid", "builtin:z2z3", "--algebra", "K_G", "--guard-dim", "100"])
    assert code == EXIT_GUARD and report["status"] == "guard_exceeded"


def test_usage_errors():
    assert run(["check", "--groupoid", "builtin:z2", "--max-degree", "2"])[0] == EXIT_USAGE
    assert run(["hp", "--groupoid", "builtin:z2", "--level", "0"])[0] == EXIT_USAGE
    with pytest.raises(SystemExit) as exc:
        run(["check"])
    assert exc.value.code == 2


def test_unknown_builtin():
    code, report, _ = run(["hp", "--groupoid", "builtin:nope"])
    assert code == EXIT_FAIL and "unknown builtin" in report["message"]


def test_text_format_is_flat_and_sorted():
    code, report, fmt = run(["hp", "--groupoid", "builtin:z2", "--format", "text"])
    lines = render(report, fmt).splitlines()
    assert lines == sorted(lines) and "even: 2" in lines


def test_config_file_sets_defaults(files, monkeypatch):
    monkeypatch.setenv("EQUIVHP_CONFIG", files("cfg.json", {"format": "text", "guard_dim": 100}))
    code, report, fmt = run(["check", "--suite", "stability", "--groupoid", "builtin:z2z3", "--algebra", "K_G"])
    assert fmt == "text" and code == EXIT_GUARD


def test_output_is_deterministic(capsys):
    argv = ["check", "--suite", "comodule", "--groupoid", "builtin:flip", "--seed", "4"]
    main(argv)
    first = capsys.readouterr().out
    main(argv)
    assert capsys.readouterr().out == first


def test_console_entry_point():
    out = subprocess.run([sys.executable, "-m", "equivhp.cli", "hp", "--groupoid", "builtin:pair2"], capture_output=True, text=True)
    assert out.returncode == 0 and json.loads(out.stdout)["even"] == 1
