import json

import pytest

from pgeo.cli import main, parse_args, run, validate_report

CASES = [
    ("curvature", "ads", []),
    ("killing-check", "kaigorodov", []),
    ("killing-check", "inhomogeneous-geodesic", ["--vector", "d_v"]),
    ("limit", "inhomogeneous-geodesic", ["--omega-series"]),
    ("hereditary", "ads", []),
    ("check-algebra", "komrakov-1.1-2", []),
    ("geodesic-vector", "komrakov-1.1-2", []),
    ("geodesic-vector", "komrakov-5d", ["--vector", "u2 + (1/sqrt(2))*u3 + sqrt(3/2)*u5 + sqrt(2)*e1"]),
    ("search-geodesics", "komrakov-1.1-2", ["--null", "--starts", "50"]),
    ("structure", "komrakov-5d", []),
    ("scaling", "komrakov-5d", ["--vector", "u2 + (1/sqrt(2))*u3 + sqrt(3/2)*u5 + sqrt(2)*e1"]),
    ("coset-metric", "heisenberg", []),
    ("classify", "bo-smooth", []),
    ("classify", "u2mu-wave", []),
    ("classify", "heisenberg", []),
    ("transport", "u2mu-wave", []),
]


def run_json(capsys, argv):
    code = main([*argv, "--format", "json"])
    doc = json.loads(capsys.readouterr().out)
    validate_report(doc)
    assert doc["exit_code"] == code
    return code, doc


@pytest.mark.parametrize("command, model, flags", CASES)
def test_commands_produce_valid_reports(capsys, command, model, flags):
    code, doc = run_json(capsys, [command, model, *flags])
    assert code == 0, doc
    assert doc["status"] == "ok" and doc["command"] == command


@pytest.mark.parametrize("command, model, flags", CASES[:6])
def test_text_output(capsys, command, model, flags):
    assert main([command, model, *flags]) == 0
    out = capsys.readouterr().out
    assert out.startswith(f"{command} ")


def test_limit_output(capsys):
    code, doc = run_json(capsys, ["limit", "inhomogeneous-geodesic", "--omega-series"])
    assert doc["results"]["limit"] == "2*du*dv + sqrt(u)*(dx1^2 + dx2^2)"
    assert doc["results"]["agrees_with_limit"] == "true"
    assert doc["verdicts"]["omega limit agrees"] == "true"


def test_transport_example(capsys):
    code, doc = run_json(capsys, ["transport", "inhomogeneous-geodesic"])
    assert doc["results"]["source"]["verdict"] == "infeasible"
    assert doc["results"]["limit"]["verdict"] == "feasible"


def test_geodesic_vector_five_dimensional(capsys):
    code, doc = run_json(capsys, ["geodesic-vector", "komrakov-5d"])
    res = doc["results"]
    text = json.dumps(res)
    assert '"lambda": "0"' in text and '"null": "true"' in text and '"canonical": "false"' in text


def test_usage_error_exit_one(capsys):
    code, doc = run_json(capsys, ["killing-check", "heisenberg"])
    assert code == 1 and doc["error"]["type"] == "UsageError"


def test_model_file_error_has_position(capsys, tmp_path):
    p = tmp_path / "bad.model"
    p.write_text('[space]\nkind = "metric"\ncoordinates = ["u"]\n[metric]\nline_element = "du^^2"\n')
    code, doc = run_json(capsys, ["curvature", str(p)])
    assert code == 1
    assert doc["error"]["type"] == "ModelFileError" and doc["error"]["line"] == 5


def test_missing_file(capsys):
    code, doc = run_json(capsys, ["curvature", "no-such-model"])
    assert code == 1 and doc["status"] == "error"


def test_undecided_exit_two(capsys, tmp_path):
    p = tmp_path / "three.model"
    p.write_text('[space]\nkind = "metric"\ncoordinates = ["t", "x", "y"]\nsample = {t = 0, x = 1, y = 0}\n'
                 '[metric]\nline_element = "-dt^2 + x^2*dx^2 + exp(x)*dy^2"\n')
    code, doc = run_json(capsys, ["curvature", str(p)])
    assert code == 2 and doc["status"] == "undecided"
    assert "undecided" in doc["verdicts"].values()


def test_unknown_command_exits_one():
    with pytest.raises(SystemExit) as info:
        parse_args(["frobnicate", "ads"])
    assert info.value.code == 1


def test_run_never_raises():
    rep = run("curvature", "no-such-model")
    assert rep.exit_code == 1
    validate_report(rep.as_dict())
