import io
import json

import pytest

from gradedq import __version__
from gradedq.cli import main

XY = "manifold { base x; base y; gen xi : -1; } truncate { jet 3; filt 4; } Q { xi -> x*y; }\n"
UNIT = ("manifold { base x; gen eta : -1; gen theta : 1; } truncate { jet 2; filt 3; }\n"
        "Q { eta -> 1; x -> theta; }\n")


def run(tmp_path, text, *argv):
    f = tmp_path / "in.gq"
    f.write_text(text)
    out = io.StringIO()
    code = main([argv[0], "--in", str(f), *argv[1:]], out)
    return code, out.getvalue()


def records(text):
    return [json.loads(line) for line in text.splitlines() if line.strip()]


def test_vector_field_cohomology(tmp_path):
    code, out = run(tmp_path, XY, "kt-cohomology", "--vf", "--degree", "1")
    assert code == 0
    assert "H^1 = 1" in out and "d/dxi" in out


def test_trivialize_then_replay(tmp_path):
    code, out = run(tmp_path, UNIT, "trivialize", "--format", "structured")
    assert code == 0
    recs = records(out)
    for r in recs:
        assert r["version"] == 1 and r["command"] == "trivialize"
    result = next(r for r in recs if r["kind"] == "result")
    assert result["Q"] == {"eta": "1"}
    log = tmp_path / "log.jsonl"
    log.write_text(out)
    code, again = run(tmp_path, UNIT, "replay", "--log", str(log), "--format", "structured")
    assert code == 0
    assert records(again)[0]["Q"] == result["Q"]


def test_check_reports_witness(tmp_path):
    code, out = run(tmp_path, UNIT, "check")
    assert code == 0 and "verified" in out
    bad = ("manifold { base x; gen theta : 1; gen b : 2; } truncate { jet 2; filt 3; }\n"
           "Q { theta -> b; b -> x*b*theta; }\n")
    code, out = run(tmp_path, bad, "check", "--format", "structured")
    assert code == 1
    rec = records(out)[0]
    assert rec["status"] == "failed" and rec["witness"] == "theta"


def test_rationals_are_strings(tmp_path):
    text = "manifold { base x; gen xi : -1; } truncate { jet 2; filt 2; } Q { xi -> -3/7 + x; }\n"
    code, out = run(tmp_path, text, "curvature", "--format", "structured")
    assert code == 0
    rec = records(out)[0]
    assert rec["kind"] == "result"
    assert "-3/7" in rec["curvature"]["xi"]


def test_exit_codes(tmp_path):
    assert run(tmp_path, "manifold { base x; gen t; }", "check")[0] == 2
    assert run(tmp_path, XY, "kt-cohomology")[0] == 2
    assert run(tmp_path, XY, "kt-build")[0] == 2
    assert run(tmp_path, XY, "trivialize")[0] == 1
    out = io.StringIO()
    assert main(["check", "--in", str(tmp_path / "missing.gq")], out) == 2
    assert main(["nonsense"], out) == 2


def test_error_record(tmp_path):
    code, out = run(tmp_path, "manifold { base x;\n gen t; }", "check", "--format", "structured")
    assert code == 2
    rec = records(out)[0]
    assert rec["kind"] == "error" and rec["error"] == "ParseError" and "line 2" in rec["message"]


def test_version(capsys):
    with pytest.raises(SystemExit) as e:
        from gradedq.cli import build_parser
        build_parser().parse_args(["--version"])
    assert e.value.code == 0
    assert __version__ in capsys.readouterr().out
    assert main(["--version"]) == 0


def test_resolution_commands(tmp_path):
    text = "manifold { base x; base y; gen theta : 1; } truncate { jet 3; filt 3; } ideal { x*y }\n"
    code, out = run(tmp_path, text, "kt-verify")
    assert code == 0 and "verified" in out
    code, out = run(tmp_path, text, "linearize", "--format", "structured")
    assert code == 0
    code, out = run(tmp_path, text, "assemble", "--format", "structured")
    assert code == 0 and "theta" in dict(records(out)[0]["variables"])
    code, out = run(tmp_path, text + "Qplus { x -> x*theta; }\n", "perturb")
    assert code == 0 and "Q =" in out
