import json

import pytest

from bnblab.cli import main, parse_seeds, parse_shape


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_seed_and_shape_parsing():
    assert parse_seeds("1..4") == [1, 2, 3, 4]
    assert parse_seeds("1,4,9..11") == [1, 4, 9, 10, 11]
    assert parse_shape("20x50") == (20, 50)


def test_solve_cross_tight(capsys):
    code, out, _ = run(capsys, "solve", "--family", "cross", "--tight", "--rule", "fsb-product")
    assert code == 0 and out.splitlines()[0] == "infeasible, nodes=15"


def test_solve_qn(capsys):
    code, out, _ = run(capsys, "solve", "--family", "qn", "--n", "4", "--rule", "fsb-product")
    first = out.splitlines()[0]
    assert code == 0 and first.startswith("optimal, value=24, nodes=")
    assert int(first.rsplit("=", 1)[1]) <= 17


def test_generate_then_solve_file(tmp_path, capsys):
    path = tmp_path / "two.json"
    code, _, _ = run(capsys, "generate", "--family", "two-dim", "-o", str(path))
    assert code == 0 and path.exists()
    tree = tmp_path / "tree.json"
    code, out, _ = run(capsys, "solve", str(path), "--tree-json", str(tree), "--tree-dot", str(tmp_path / "t.dot"))
    assert code == 0 and out.startswith("optimal, value=6, nodes=3")
    assert len(json.loads(tree.read_text())) == 3


def test_separate_json(capsys):
    code, out, _ = run(capsys, "separate", "--family", "mkp", "--n", "12", "--m", "10", "--seed", "2", "--json")
    assert code == 0
    assert all(float(c["d_star"].split("/")[0]) > 0 for c in json.loads(out))


def test_experiment_writes_csv(tmp_path, capsys):
    out = tmp_path / "out.csv"
    code, text, _ = run(capsys, "experiment", "--mode", "all-cuts", "--mkp", "8x4", "--seeds", "1..3", "-o", str(out))
    lines = out.read_text().splitlines()
    assert code == 0 and lines[0].startswith("instance,seed,rule,mode")
    assert len(lines) == 4 and "records:" in text


def test_error_exits(tmp_path, capsys):
    code, out, _ = run(capsys, "solve", "--family", "qn", "--n", "6", "--tight", "--node-limit", "5")
    assert code == 3 and out.startswith("truncated")
    code, _, err = run(capsys, "solve", str(tmp_path / "missing.json"))
    assert code == 2 and "error" in err
    with pytest.raises(SystemExit) as exc:
        main(["solve"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit):
        main(["solve", "--rule", "nope", "--family", "qn"])
