import io
import json
import os
import subprocess
import sys
from importlib import resources

import jsonschema
import pytest

from coarsegroups.cli import EXIT_CAP, EXIT_CONFIG, EXIT_FAIL, EXIT_OK, ExperimentConfig, config_argv, main

CASES = {
    "ball": (["ball", "--group", "free(2)", "--radius", "2"], EXIT_OK),
    "growth": (["growth", "--group", "free(2)", "--kmax", "4"], EXIT_OK),
    "fit": (["fit", "--domain", "product(z, cyclic(3))", "--codomain", "z", "--map", "project", "--radius", "3", "--lambdas", "1,2"], EXIT_OK),
    "rough-check": (["rough-check", "--domain", "z", "--codomain", "z", "--map", "translate(4)", "--radius", "3"], EXIT_OK),
    "family-free": (["family-free", "--group", "free(2)", "--g", "a1", "--h", "b1", "--R", "3"], EXIT_OK),
    "family-z": (["family-z", "--g", "3", "--h", "5", "--R", "4"], EXIT_OK),
    "verify-property": (["verify-property", "--group", "z", "--g", "3", "--h", "5", "--R", "4"], EXIT_OK),
    "check-conditions": (["check-conditions", "--group", "product(free(2), z)", "--gens", "(a1,0);(b1,1);(a1b1,0)"], EXIT_OK),
    "isom-enum": (["isom-enum", "--group", "cyclic(4)"], EXIT_OK),
    "shared-isom": (["shared-isom", "--group", "cyclic(3)"], EXIT_OK),
    "refute": (["refute", "--group", "z", "--map", "power(2)", "--radius", "3"], EXIT_FAIL),
    "sign-homomorphy": (
        ["sign-homomorphy", "--domain", "semidirect(z, cyclic(4), action=inversion)", "--codomain", "z", "--map", "project", "--radius", "1"],
        EXIT_OK,
    ),
    "case-table": (["case-table"], EXIT_OK),
    "quotient": (["quotient", "--group", "product(z, cyclic(3))", "--gens", "(1,0)", "--subgroup", "(0,1);(0,2)", "--radius", "4"], EXIT_OK),
    "enlarge": (["enlarge", "--group", "product(z, cyclic(3))", "--gens", "(1,0);(1,1);(-1,2)", "--subgroup-gens", "(0,1)", "--radius", "4"], EXIT_OK),
    "hom-analysis": (["hom-analysis", "--domain", "product(z, cyclic(3))", "--codomain", "z", "--map", "project", "--radius", "3"], EXIT_OK),
}


def run(argv):
    buf = io.StringIO()
    code = main(list(argv), out=buf)
    return code, buf.getvalue()


def schema_for(command):
    text = resources.files("coarsegroups").joinpath("schemas", f"{command}.json").read_text(encoding="utf-8")
    return json.loads(text)


@pytest.mark.parametrize("command", sorted(CASES))
def test_output_matches_schema(command):
    argv, expected = CASES[command]
    code, text = run(argv)
    assert code == expected
    doc = json.loads(text)
    assert doc["command"] == command
    assert doc["status"] == {EXIT_OK: "pass", EXIT_FAIL: "fail"}[expected]
    jsonschema.validate(doc, schema_for(command))


@pytest.mark.parametrize("command", sorted(CASES))
def test_output_is_byte_identical(command):
    argv, _ = CASES[command]
    assert run(argv)[1] == run(argv)[1]


def test_every_command_has_a_schema():
    names = {p.name[:-5] for p in resources.files("coarsegroups").joinpath("schemas").iterdir() if p.name.endswith(".json")}
    assert names == set(CASES)


def test_schemas_are_valid_documents():
    for command in CASES:
        jsonschema.Draft202012Validator.check_schema(schema_for(command))


def test_rejected_output_fails_schema():
    _, text = run(CASES["growth"][0])
    doc = json.loads(text)
    doc["result"]["sizes"] = "many"
    with pytest.raises(jsonschema.ValidationError):
        jsonschema.validate(doc, schema_for("growth"))


def test_dot_and_csv_formats():
    code, dot = run(["ball", "--group", "cyclic(3)", "--radius", "1", "--format", "dot"])
    assert code == EXIT_OK
    assert dot.startswith("digraph cayley {\n") and dot.endswith("}\n")
    code, csv_text = run(["ball", "--group", "cyclic(3)", "--radius", "1", "--format", "csv"])
    assert csv_text == "element,distance\n0,0\n1,1\n2,1\n"
    assert run(["growth", "--group", "z", "--format", "csv"])[0] == EXIT_CONFIG


def test_exit_codes(capsys):
    assert run(["ball", "--group", "free(2)", "--radius", "9", "--cap", "100"])[0] == EXIT_CAP
    assert "cap of 100" in capsys.readouterr().err
    assert run(["ball", "--group", "nonsense(1)"])[0] == EXIT_CONFIG
    assert "error:" in capsys.readouterr().err
    assert run(["ball"])[0] == EXIT_CONFIG
    assert run(["no-such-command"])[0] == EXIT_CONFIG
    assert run([])[0] == EXIT_CONFIG
    assert run(["rough-check", "--domain", "free(2)", "--codomain", "free(2)", "--map", "inversion", "--radius", "3", "--eps", "1"])[0] == EXIT_FAIL


def test_missing_backward_is_config_error():
    code, _ = run(["fit", "--domain", "z", "--codomain", "z", "--map", "power(2)"])
    assert code == EXIT_CONFIG


def test_schreier_rough_check_cli():
    code, text = run(["rough-check", "--domain", "free(4)", "--codomain", "free(2)", "--map", "schreier", "--radius", "2", "--eps", "0"])
    assert code == EXIT_FAIL
    doc = json.loads(text)
    assert "witness" in doc["result"]


def test_config_round_trip(tmp_path):
    cfg = ExperimentConfig("growth", {"group": "free(2)", "kmax": 3})
    assert ExperimentConfig.from_json(cfg.to_json()) == cfg
    path = tmp_path / "exp.json"
    path.write_text(cfg.to_json(), encoding="utf-8")
    code, from_file = run(["--config", str(path)])
    assert code == EXIT_OK
    assert from_file == run(config_argv(cfg))[1]
    assert json.loads(from_file)["result"]["sizes"] == [1, 5, 17, 53]


def test_command_line_overrides_config(tmp_path):
    path = tmp_path / "exp.json"
    path.write_text(ExperimentConfig("growth", {"group": "free(2)", "kmax": 3}).to_json(), encoding="utf-8")
    code, text = run(["--config", str(path), "growth", "--kmax", "2"])
    assert code == EXIT_OK
    assert json.loads(text)["result"]["sizes"] == [1, 5, 17]
    assert run(["--config", str(path), "ball"])[0] == EXIT_CONFIG


def test_bad_config_files(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("[1, 2]", encoding="utf-8")
    assert run(["--config", str(bad)])[0] == EXIT_CONFIG
    assert run(["--config", str(tmp_path / "missing.json")])[0] == EXIT_CONFIG
    unknown = tmp_path / "unknown.json"
    unknown.write_text('{"command": "frobnicate"}', encoding="utf-8")
    assert run(["--config", str(unknown)])[0] == EXIT_CONFIG


def test_boolean_config_flags():
    cfg = ExperimentConfig("ball", {"group": "cyclic(3)", "directed": True, "gens": ["1"]})
    assert config_argv(cfg) == ["ball", "--group", "cyclic(3)", "--directed", "--gens", "1"]


def test_env_cap_applies_in_subprocess():
    env = dict(os.environ, COARSEGROUPS_CAP="50")
    proc = subprocess.run(
        [sys.executable, "-m", "coarsegroups.cli", "ball", "--group", "free(2)", "--radius", "5"],
        capture_output=True,
        text=True,
        env=env,
    )
    assert proc.returncode == EXIT_CAP
    assert proc.stdout == ""


def test_console_script_runs():
    proc = subprocess.run([sys.executable, "-m", "coarsegroups.cli", "case-table"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout == run(["case-table"])[1]
