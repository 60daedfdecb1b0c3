import json

import pytest

from app import main
from exports import RunReport, input_digest


def run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr()


def test_rho_prints_value_and_decomposition(capsys):
    code, out = run(capsys, 'rho', '4')
    assert code == 0
    assert "rho_4 = 11 = 2*3 + 1*5" in out.out
    assert out.out.strip().endswith("PASS")
    code, out = run(capsys, 'rho', '3')
    assert code == 0
    assert "rho_3 = 3 = 1*3" in out.out


def test_rho_below_three_is_a_usage_error(capsys):
    code, out = run(capsys, 'rho', '2')
    assert code == 2
    assert "d >= 3" in out.err


def test_unknown_command_is_a_usage_error(capsys):
    code, _ = run(capsys, 'frobnicate')
    assert code == 2


def test_construct_then_verify(tmp_path, capsys):
    path = tmp_path / "rel4.json"
    code, out = run(capsys, 'construct', '--d', '4', '--out', str(path))
    assert code == 0
    assert "Wrote 11 relations" in out.out
    document = json.loads(path.read_text())
    assert document["web"] == {"d": 4, "q": ["0", "1", "2", "3"]}
    assert len(document["relations"]) == 11

    code, out = run(capsys, 'verify', str(path))
    assert code == 0
    assert "rank 11" in out.out
    assert out.out.strip().endswith("PASS")


def test_construct_with_rational_q(tmp_path, capsys):
    path = tmp_path / "rel.json"
    assert run(capsys, 'construct', '--q', '1/2,-3,7/5,2', '--out', str(path))[0] == 0
    code, out = run(capsys, 'verify', str(path), '--json')
    assert code == 0
    report = json.loads(out.out)
    assert report["pass"] is True
    assert report["counts"]["rank"] == "11"
    assert report["input_digest"] == input_digest(json.loads(path.read_text()))


def test_construct_prints_document_without_out(capsys):
    code, out = run(capsys, 'construct', '--d', '3')
    assert code == 0
    document = json.loads(out.out)
    assert [rel["m"] for rel in document["relations"]] == [2, 2, 2]


def test_verify_detects_corrupted_relation(tmp_path, capsys):
    path = tmp_path / "rel3.json"
    run(capsys, 'construct', '--d', '3', '--out', str(path))
    document = json.loads(path.read_text())
    document["relations"][0]["components"][1].append({"exps": [0, 0, 1, 0], "coeff": "1"})
    path.write_text(json.dumps(document))
    code, out = run(capsys, 'verify', str(path))
    assert code == 1
    assert "failing relations: [0]" in out.out
    assert out.out.strip().endswith("FAIL")


def test_verify_missing_or_malformed_file(tmp_path, capsys):
    assert run(capsys, 'verify', str(tmp_path / "absent.json"))[0] == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(capsys, 'verify', str(bad))[0] == 2
    bad.write_text(json.dumps({"web": {"d": 3, "q": ["0", "1", "2"]}}))
    assert run(capsys, 'verify', str(bad))[0] == 2


def _corrupt(tmp_path, capsys, edit):
    path = tmp_path / "rel3.json"
    run(capsys, 'construct', '--d', '3', '--out', str(path))
    document = json.loads(path.read_text())
    edit(document)
    path.write_text(json.dumps(document))
    return path


@pytest.mark.parametrize("edit", [
    lambda doc: doc["relations"][0]["components"][0][0].update(exps=["a", 0, 0, 0]),
    lambda doc: doc["relations"][0]["components"][0][0].update(exps=[0, 0, 1.9, 0]),
    lambda doc: doc["relations"][0]["components"][0][0].update(exps=[0, -1, 0, 0]),
    lambda doc: doc["web"].update(d="three"),
    lambda doc: doc["web"].update(q="012"),
])
def test_verify_rejects_malformed_fields(tmp_path, capsys, edit):
    code, out = run(capsys, 'verify', str(_corrupt(tmp_path, capsys, edit)))
    assert code == 2
    assert out.err.startswith("error:")


def test_verify_rejects_non_utf8_file(tmp_path, capsys):
    path = tmp_path / "latin1.json"
    path.write_bytes(b'{"web": "\xff\xfe"}')
    code, out = run(capsys, 'verify', str(path))
    assert code == 2
    assert "UTF-8" in out.err


def test_duplicated_q_values_are_rejected(capsys):
    code, out = run(capsys, 'construct', '--q', '0,1,1')
    assert code == 2
    assert "repeated: 1" in out.err


def test_symbol_single_depth(capsys):
    code, out = run(capsys, 'symbol', '--d', '3', '--depth', '2', '--json')
    assert code == 0
    counts = json.loads(out.out)["counts"]
    assert (counts["vars"], counts["eqs"], counts["rank"]) == ("6", "4", "4")


def test_symbol_summary(capsys):
    code, out = run(capsys, 'symbol', '--d', '4')
    assert code == 0
    assert "sum vars - sum ranks = 11, rho_4 = 11" in out.out


def test_table(tmp_path, capsys):
    out_path = tmp_path / "table.json"
    code, out = run(capsys, 'table', '--d', '12', '--out', str(out_path))
    assert code == 0
    assert "rho_12 = 495" in out.out
    report = RunReport.from_json(json.loads(out_path.read_text()))
    assert report.passed
    assert report.counts["total_vars"] - report.counts["total_eqs"] == 495
    assert len(report.details["rows"]) == 21


def test_normal_form_command(capsys):
    code, out = run(capsys, 'normal-form', '--case', 'zero_disc', '--T', '1', '--samples', '20', '--json')
    assert code == 0
    report = json.loads(out.out)
    assert report["details"]["case"] == "zero_disc"
    assert report["details"]["max_residual"] < 1e-7
    assert report["checks"] == {"structure": True, "maximal_rank": True, "holonomy": True}


@pytest.mark.parametrize("case,param", [('zero_disc', 'T'), ('positive_disc', 'R'), ('negative_disc', 'T')])
def test_normal_form_command_passes_for_every_family(capsys, case, param):
    code, out = run(capsys, 'normal-form', '--case', case, f'--{param}', '1', '--json')
    report = json.loads(out.out)
    assert report["details"]["samples"] == 100
    assert report["checks"] == {"structure": True, "maximal_rank": True, "holonomy": True}
    assert code == 0


@pytest.mark.parametrize("argv", [
    ('normal-form', '--case', 'zero_disc', '--T', '1', '--samples', '0'),
    ('normal-form', '--case', 'zero_disc', '--T', '1', '--torsion-samples', '0'),
    ('normal-form', '--case', 'zero_disc', '--T', '1', '--step', '0'),
    ('normal-form', '--case', 'zero_disc', '--T', '1', '--step=-1e-3'),
    ('darboux', '--Dplus', '1', '--D', '2', '--samples', '0'),
])
def test_degenerate_numeric_options_are_usage_errors(capsys, argv):
    assert run(capsys, *argv)[0] == 2


def test_normal_form_bad_parameter(capsys):
    assert run(capsys, 'normal-form', '--case', 'positive_disc', '--R', '0')[0] == 2
    assert run(capsys, 'normal-form', '--case', 'elliptic', '--T', '1')[0] == 2


def test_darboux_command(capsys):
    code, out = run(capsys, 'darboux', '--Dplus', '1', '--D', '2', '--samples', '30')
    assert code == 0
    assert out.out.strip().endswith("PASS")
    assert run(capsys, 'darboux', '--Dplus', '1', '--D', '1')[0] == 2


def test_run_report_json_round_trip():
    report = RunReport(['rho', '5'], input_digest('rho 5'), {"decomposition": True}, {"rho": 26})
    again = RunReport.from_json(json.loads(json.dumps(report.to_json())))
    assert again == report
    assert report.to_json()["counts"] == {"rho": "26"}


@pytest.mark.parametrize("level", ["DEBUG", "info"])
def test_log_level_flag(capsys, level):
    assert run(capsys, '--log-level', level, 'rho', '5')[0] == 0
