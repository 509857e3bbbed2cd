import json

import pytest

from coarsesmith import scenarios as S
from coarsesmith.cli import main, text_report
from coarsesmith.limits import run_scenario
from coarsesmith.scenarios import ScenarioError, load_scenario

ROOT = __file__.rsplit("/tests/", 1)[0]


def run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr()


def test_list(capsys):
    code, out = run(capsys, "list")
    assert code == 0 and "euclidean_plane" in out.out and "goalposts" in out.out


def test_run_builtin_json(capsys):
    code, out = run(capsys, "run", "euclidean_line", "--window", "8")
    rep = json.loads(out.out)
    assert code == 0 and rep["sections"]["homology"]["table"] == {"1": 1}


def test_run_json_files(capsys):
    code, out = run(capsys, "run", f"{ROOT}/scenarios/grid_plane.json")
    assert code == 0 and json.loads(out.out)["sections"]["homology"]["table"] == {"2": 1}
    code, out = run(capsys, "run", f"{ROOT}/scenarios/square_swap.json", "--format", "text")
    assert code == 0 and "fixed set [0,1]: Stable" in out.out


def test_honest_negative_exit_code(capsys):
    code, _ = run(capsys, "run", "goalposts", "--window", "48")
    assert code == 3


def test_identity_failure_exit_code(tmp_path, capsys):
    doc = {"space": {"kind": "matrix", "dist": [["0", "1", "5"], ["1", "0", "1"], ["5", "1", "0"]]}}
    f = tmp_path / "bad.json"
    f.write_text(json.dumps(doc))
    code, out = run(capsys, "run", str(f))
    assert code == 2 and "metric" in json.loads(out.out)["identity_failures"]


def test_load_errors(tmp_path, capsys):
    f = tmp_path / "empty.json"
    f.write_text("{}")
    code, out = run(capsys, "run", str(f))
    assert code == 2 and "space.kind" in out.err
    with pytest.raises(SystemExit):
        main(["run", "no_such_scenario"])
    with pytest.raises(ScenarioError):
        load_scenario({"space": {"kind": "torus"}})


def test_loader_reads_group_and_scales():
    doc = json.load(open(f"{ROOT}/scenarios/square_swap.json"))
    sc = load_scenario(doc)
    assert sc.action.group.order == 2 and sc.ws.bounded and sc.p == 2 and sc.q == 3
    doc["scales"] = ["0", "2"]
    assert load_scenario(doc).scales == [0.0, 2.0]
    del doc["action"]["perms"]["s"]
    with pytest.raises(ScenarioError):
        load_scenario(doc)


def test_text_report_mentions_sections():
    txt = text_report(run_scenario(S.plane_reflection(8)))
    assert "HC(X) over F_3" in txt and "Euler" in txt and txt.endswith("exit 0")
