import json
import subprocess
import sys

import pytest

from quantale_forge.cli import CORE, MUTATIONS, REPORT_DIR_VAR, construct, load, main, roundtrip


@pytest.fixture(scope="module")
def reports(tmp_path_factory):
    """Full core runs under two seeds, emitted as JSON."""
    d = tmp_path_factory.mktemp("reports")
    out = {}
    for seed in (0, 7):
        path = d / f"seed{seed}.json"
        code = main(["run", "--seed", str(seed), "--emit", str(path)])
        out[seed] = (code, json.loads(path.read_text(encoding="utf-8")))
    return out


def test_core_run_is_green(reports):
    code, rep = reports[0]
    assert code == 0 and rep["exit_code"] == 0
    assert rep["counts"]["fail"] == 0 and rep["counts"]["incident"] == 0
    assert rep["format"] == "qf-report 1"
    assert set(rep["inputs"]) == {CORE.name}


def test_seed_never_changes_report(reports):
    a, b = reports[0][1], reports[7][1]
    a.pop("timing"), b.pop("timing")
    assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)


def test_mutations_fail_with_witnesses(capsys):
    code = main(["run", "--suite", "quantale", "--mutations"])
    out = capsys.readouterr().out
    assert code == 1
    assert "FAIL" in out and "witness" in out and "INCIDENT" not in out
    assert "O_z2_badmul" in out


def test_unknown_suite_exits_3(capsys):
    assert main(["run", "--suite", "nope"]) == 3
    assert "unknown suite" in capsys.readouterr().err


def test_bad_flag_exits_3():
    with pytest.raises(SystemExit) as exc:
        main(["run", "--convention", "x"])
    assert exc.value.code == 3


def test_parse_error_exits_3(tmp_path, capsys):
    f = tmp_path / "bad.qf"
    f.write_text("qf-format 1\nspace a = nowhere\n", encoding="utf-8")
    assert main(["run", str(f)]) == 3
    assert "line 2" in capsys.readouterr().err


def test_only_filter(tmp_path):
    path = tmp_path / "r.json"
    assert main(["run", "--suite", "quantale", "--only", "O_z*", "--emit", str(path)]) == 0
    rep = json.loads(path.read_text(encoding="utf-8"))
    objs = {r["object"] for r in rep["checks"]}
    assert objs == {"O_z2", "O_z3", "O_z4"}


def test_report_dir(tmp_path, monkeypatch):
    monkeypatch.setenv(REPORT_DIR_VAR, str(tmp_path / "out"))
    assert main(["run", "--suite", "groupoid"]) == 0
    rep = json.loads((tmp_path / "out" / "report.json").read_text(encoding="utf-8"))
    assert rep["suites"] == ["groupoid"]
    assert (tmp_path / "out" / "summary.txt").read_text(encoding="utf-8").endswith("exit code 0\n")


def test_max_size_guard_skips(tmp_path):
    path = tmp_path / "r.json"
    assert main(["run", "--suite", "quantale", "--only", "O_pair3", "--max-size", "8", "--emit", str(path)]) == 0
    rep = json.loads(path.read_text(encoding="utf-8"))
    assert rep["counts"]["skipped"] >= 1


@pytest.mark.parametrize("what,args,check", [
    ("oquantale", ["pair2"], lambda o: o.n == 16),
    ("cover", ["ind_z2"], lambda o: o.Ghat.G1.n == 2 and o.Ghat.G1.is_discrete()),
    ("orbit", ["z2_swap"], lambda o: o.frame.n == 2),
    ("lift", ["ind_z2_regular", "germ_ind_z2"], lambda o: o.G.G1.n == 2),
    ("descend", ["ind_z2_regular_lift", "germ_ind_z2"], lambda o: o.G.G0.n == 1 and o.X.n == 2),
    ("tensor", ["pair2_G0", "G0_pair2"], lambda o: o.X.n == 4),
])
def test_construct(what, args, check):
    ws = load([CORE])
    e = construct(ws, what, args)
    assert e.name in ws and check(e.obj)
    _, ok = roundtrip(ws, e.name)
    assert ok


def test_construct_fresh_names():
    ws = load([CORE])
    a = construct(ws, "oquantale", ["z2"])
    assert a.name == "O_z2_2"
    b = construct(ws, "oquantale", ["z2"], name="mine")
    assert b.name == "mine"


def test_construct_cli_emits(tmp_path, capsys):
    path = tmp_path / "o.qf"
    assert main(["construct", "oquantale", "pair2", "--emit", str(path)]) == 0
    out = capsys.readouterr().out
    assert "16 elements" in out and "round trip: equal" in out
    ws = load([path])
    assert ws["O_pair2_2"].n == 16


def test_construct_bad_arity():
    assert main(["construct", "lift", "ind_z2_regular"]) == 3


def test_list(capsys):
    assert main(["list", str(CORE), str(MUTATIONS)]) == 0
    out = capsys.readouterr().out
    assert "quantale O_pair2: 16 elements" in out and "[mutation:" in out


def test_console_script():
    r = subprocess.run([sys.executable, "-m", "quantale_forge.cli", "run", "--suite", "nope"],
                       capture_output=True, text=True)
    assert r.returncode == 3
