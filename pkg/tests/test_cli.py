import csv
import io
import json
from fractions import Fraction
from itertools import product

import pytest

from support import FIXTURES
from timarginal import cli
from timarginal.hierarchy import Hamiltonian
from timarginal.lattice import H, MarginalSpec, Pattern, V, rect

F = Fraction


def fixture(name):
    return str(FIXTURES / name)


def invoke(capsys, *argv):
    code = cli.run(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def invoke_json(capsys, *argv):
    code, out, _ = invoke(capsys, *argv)
    return code, json.loads(out)


def write_json(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


def test_marginal_check_negative(capsys):
    code, out = invoke_json(capsys, "marginal-check", fixture("nnn_antiparity.json"), "--verify")
    assert code == cli.EXIT_NEGATIVE
    assert out["verdict"] == "infeasible" and out["certificate"]["kind"] == "infeasible"
    code, out = invoke_json(capsys, "marginal-check", fixture("d3_six_thirds.json"), "--square")
    assert code == cli.EXIT_NEGATIVE and out["relaxation"] == "square"


def test_symmetrize_then_marginal_check(capsys, tmp_path):
    out_path = tmp_path / "spec.json"
    code, _, _ = invoke(capsys, "symmetrize", fixture("checkerboard.json"), "--regions", "h", "v",
                        "plus", "minus", "--verify", "-o", str(out_path))
    assert code == 0
    spec = MarginalSpec.from_json(json.loads(out_path.read_text()))
    assert len(spec.entries) == 4
    code, out = invoke_json(capsys, "marginal-check", str(out_path), "--level", "3", "--verify")
    assert code == 0 and out["verdict"] == "feasible"
    code, out = invoke_json(capsys, "exact", str(out_path), "--case", "d2-nnn", "--verify")
    assert code == 0 and out["verdict"] is True


def test_exact_negative_specs(capsys):
    code, out = invoke_json(capsys, "exact", fixture("nnn_antiparity.json"), "--case", "d2-nnn")
    assert code == 1 and out["verdict"] is False
    code, out = invoke_json(capsys, "exact", fixture("d3_six_thirds.json"), "--case", "d3-nn")
    assert code == 1 and out["verdict"] is False


def test_tiling_reduce_then_energy_and_exact(capsys, tmp_path):
    ham = tmp_path / "h.json"
    code, _, _ = invoke(capsys, "tiling-reduce", fixture("rule_no_tiling.json"), "--verify",
                        "-o", str(ham))
    assert code == 0
    assert Hamiltonian.from_json(json.loads(ham.read_text())).d == 2
    code, out = invoke_json(capsys, "energy", str(ham), "--level", "2", "--max-period", "2",
                            "--verify")
    assert code == 0
    assert (out["lower"], out["upper"], out["exact"]) == ("-3/2", "-3/2", True)
    code, out = invoke_json(capsys, "exact", str(ham), "--case", "d2-nn", "--verify")
    assert code == 0 and out["value"] == "-3/2"
    code, out = invoke_json(capsys, "tiling-reduce", fixture("rule_no_tiling.json"),
                            "--form", "maximize")
    code, out = invoke_json(capsys, "exact", write_json(tmp_path / "m.json", out), "--case", "d2-nn")
    assert out["value"] == "1"


def test_exact_reflection(capsys, tmp_path):
    # penalise vertical disagreement in both columns of a 2 x 2 block
    table = {c: (c[0] != c[2]) + (c[1] != c[3]) for c in product(range(2), repeat=4)}
    path = write_json(tmp_path / "r.json", Hamiltonian(2, [(rect(2, 2), table)]).to_json())
    code, out = invoke_json(capsys, "exact", path, "--case", "reflection", "--verify")
    assert code == 0 and out["value"] == "0"
    skew = {(0, 0, 0, 1): 1}
    bad = write_json(tmp_path / "bad.json", Hamiltonian(2, [(rect(2, 2), skew)]).to_json())
    code, _, err = invoke(capsys, "exact", bad, "--case", "reflection")
    assert code == cli.EXIT_INPUT and "reflection" in err


def test_vertices_library_case(capsys):
    code, out = invoke_json(capsys, "vertices", "--case", "d2-nnn", "--verify")
    assert code == 0
    assert out["num_vertices"] == 13 and out["num_classes"] == 6
    assert {c["label"]: c["size"] for c in out["classes"]} == {
        "C1": 2, "C2": 2, "C3": 1, "C4": 2, "C5": 4, "C6": 2}


def test_vertices_custom_regions(capsys):
    code, out = invoke_json(capsys, "vertices", "--d", "2", "--strip", "2", "1", "--regions", "h",
                            "--verify")
    assert code == 0 and out["num_vertices"] == 3  # two constants and the swap average
    assert all(c["label"].startswith("K") for c in out["classes"])


def test_tiling_check_and_search(capsys):
    rule = fixture("rule_checkerboard.json")
    code, out = invoke_json(capsys, "tiling-check", rule, fixture("checkerboard.json"), "--wrap",
                            "torus", "--verify")
    assert code == 0 and out == {"valid": True}
    code, out = invoke_json(capsys, "tiling-search", rule, "--verify")
    assert code == 0 and out["found"] and len(out["pattern"]["rows"]) == 2
    code, out = invoke_json(capsys, "tiling-search", fixture("rule_no_tiling.json"))
    assert code == 1 and out["found"] is False


def test_tiling_check_reports_violation(capsys, tmp_path):
    grid = write_json(tmp_path / "g.json", Pattern(2, ((0, 0),)).to_json())
    code, out = invoke_json(capsys, "tiling-check", fixture("rule_checkerboard.json"), grid)
    assert code == 1
    assert out["violation"] == {"direction": "h", "x": 0, "y": 0, "pair": [0, 0]}


def test_kari_gen(capsys, tmp_path):
    code, out, _ = invoke(capsys, "kari-gen", "--verify")
    assert code == 0 and out.strip() == "2947"
    path = tmp_path / "tiles.json"
    code, out, _ = invoke(capsys, "kari-gen", fixture("rotation_system.json"), "--labeled",
                          "-o", str(path))
    data = json.loads(path.read_text())
    assert out.strip() == "4102" and data["count"] == 4102 == len(data["tiles"])


def test_kari_curve(capsys):
    code, out, _ = invoke(capsys, "kari-curve", "--mu-samples", "3", "--rows", "50", "--cols", "21",
                          "--verify")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert [r["mu"] for r in rows] == ["1/5", "3/10", "2/5"]
    assert float(rows[0]["omega"]) == 0.0 and abs(float(rows[2]["eta"]) - 1 / 3) < 1e-9


def test_input_errors(capsys, tmp_path):
    assert invoke(capsys, "marginal-check", str(tmp_path / "missing.json"))[0] == cli.EXIT_INPUT
    junk = tmp_path / "junk.json"
    junk.write_text("{not json")
    assert invoke(capsys, "energy", str(junk))[0] == cli.EXIT_INPUT
    assert invoke(capsys, "energy", write_json(tmp_path / "e.json", {"d": 2}))[0] == cli.EXIT_INPUT
    assert invoke(capsys, "no-such-command")[0] == cli.EXIT_INPUT
    assert invoke(capsys, "vertices")[0] == cli.EXIT_INPUT
    assert invoke(capsys, "kari-curve", "--mu-samples", "1")[0] == cli.EXIT_INPUT
    assert invoke(capsys, "--help")[0] == cli.EXIT_OK


def test_budget_exit(capsys):
    code, _, err = invoke(capsys, "marginal-check", fixture("nnn_antiparity.json"), "--level", "12")
    assert code == cli.EXIT_BUDGET and err
    code, _, _ = invoke(capsys, "tiling-search", fixture("rule_no_tiling.json"), "--max-period", "6",
                        "--budget", "10")
    assert code == cli.EXIT_BUDGET


@pytest.mark.parametrize("argv", [
    ("vertices", "--case", "d2-nn"),
    ("marginal-check", "nnn_antiparity.json", "--square"),
    ("tiling-search", "rule_checkerboard.json"),
])
def test_output_is_byte_identical(capsys, argv):
    argv = [fixture(a) if a.endswith(".json") else a for a in argv]
    first = invoke(capsys, *argv)[1]
    second = invoke(capsys, *argv, "--seed", "5")[1]
    assert first == second


def test_module_entry_point():
    import subprocess
    import sys
    res = subprocess.run([sys.executable, "-m", "timarginal", "kari-gen"], capture_output=True,
                         text=True, check=False)
    assert res.returncode == 0 and res.stdout.strip() == "2947"


def test_energy_of_checkerboard_rule(capsys, tmp_path):
    Hm = Hamiltonian(2, [(H, {(0, 1): -1, (1, 0): -1}), (V, {(0, 1): -1, (1, 0): -1})])
    path = write_json(tmp_path / "af.json", Hm.to_json())
    code, out = invoke_json(capsys, "energy", path, "--verify")
    assert out["lower"] == out["upper"] == "-2"
    assert Pattern.from_json(out["witness"]).width == 2
    code, out = invoke_json(capsys, "exact", path, "--case", "d2-nnn")
    assert out["value"] == "-2" and F(out["value"]) == -2
