import json

import pytest

from cstree import cli
from cstree.core import InvariantViolation

K3 = {"n": 3, "directed": False, "weights": [[0, 1, 10], [1, 0, 1], [10, 1, 0]], "terminals": [0, 1, 2],
      "root": None, "constraint": {"kind": "diameter", "value": 2}}


def write(tmp_path, obj, name="inst.json"):
    p = tmp_path / name
    p.write_text(obj if isinstance(obj, str) else json.dumps(obj, indent=1))
    return p


def run(capsys, *argv):
    code = cli.main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, [json.loads(line) for line in out.out.splitlines() if line.strip()], out.err


def untimed(records):
    return [{k: v for k, v in r.items() if not k.endswith("_s")} for r in records]


class TestParse:
    def test_well_formed(self, tmp_path):
        assert cli.parse_instance(write(tmp_path, K3)).n == 3

    def test_root_on_undirected(self, tmp_path):
        with pytest.raises(InvariantViolation):
            cli.parse_instance(write(tmp_path, {**K3, "root": 1}))

    def test_size_below_terminal_count(self, tmp_path):
        with pytest.raises(InvariantViolation):
            cli.parse_instance(write(tmp_path, {**K3, "constraint": {"kind": "size", "value": 2}}))

    def test_syntax_error_has_line(self, tmp_path):
        with pytest.raises(cli.ParseError) as err:
            cli.parse_instance(write(tmp_path, '{"n": 3,\n"directed": false,\n"weights": [[0,]]}'))
        assert err.value.line == 3

    def test_field_error_names_field_and_line(self, tmp_path):
        with pytest.raises(cli.ParseError) as err:
            cli.parse_instance(write(tmp_path, {**K3, "terminals": ["a"]}))
        assert err.value.field == "terminals" and err.value.line is not None

    def test_missing_field(self, tmp_path):
        obj = dict(K3)
        del obj["constraint"]
        with pytest.raises(cli.ParseError) as err:
            cli.parse_instance(write(tmp_path, obj))
        assert err.value.field == "constraint"


class TestGen:
    def test_deterministic(self, tmp_path, capsys):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        for p in (a, b):
            assert cli.main(["gen", "--seed", "5", "--n", "5", "--t", "2", "--directed", "--output", str(p)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_fully_absent_and_all_terminals(self, capsys):
        code, (inst,), _ = run(capsys, "gen", "--seed", 1, "--n", 4, "--t", 4, "--absent-prob", 1)
        assert code == 0
        assert all(inst["weights"][i][j] is None for i in range(4) for j in range(4) if i != j)
        assert inst["terminals"] == [0, 1, 2, 3]


class TestSolve:
    def test_dcst_ok(self, tmp_path, capsys):
        code, (rec,), _ = run(capsys, "solve", "dcst", write(tmp_path, K3))
        assert code == 0 and rec["outcome"]["status"] == "optimal" and rec["outcome"]["weight"] == 2
        assert rec["command"] == "solve dcst" and len(rec["digest"]) == 16

    def test_dcst_discrepancy_exits_3(self, tmp_path, capsys):
        code, (rec,), _ = run(capsys, "solve", "dcst", write(tmp_path, {**K3, "constraint": {"kind": "diameter", "value": 1}}))
        assert code == 3 and rec["outcome"]["status"] == "discrepancy"

    def test_fail_exits_2(self, tmp_path, capsys):
        holey = {**K3, "weights": [[0, None, None], [None, 0, 1], [None, 1, 0]]}
        code, (rec,), _ = run(capsys, "solve", "dcst", write(tmp_path, holey))
        assert code == 2 and rec["outcome"]["status"] == "fail"

    def test_wrong_problem_is_input_error(self, tmp_path, capsys):
        code, recs, err = run(capsys, "solve", "ddcst", write(tmp_path, K3))
        assert code == 4 and not recs and "directed" in err

    def test_oracles(self, tmp_path, capsys):
        size = {**K3, "terminals": [0, 2], "constraint": {"kind": "size", "value": 2}}
        code, (rec,), _ = run(capsys, "solve", "scst-oracle", write(tmp_path, size))
        assert code == 0 and rec["outcome"]["weight"] == 10
        deg = {**K3, "constraint": {"kind": "min_degree", "value": 3}}
        code, (rec,), _ = run(capsys, "solve", "mcst-oracle", write(tmp_path, deg))
        assert code == 2

    def test_missing_file(self, tmp_path, capsys):
        assert run(capsys, "solve", "dcst", tmp_path / "nope.json")[0] == 4


def test_reduce_writes_instance_and_metadata(tmp_path, capsys):
    out = tmp_path / "red.json"
    code, (rec,), _ = run(capsys, "reduce", "dcst-ddcst", write(tmp_path, K3), "--output", out)
    assert code == 0
    reduced = cli.parse_instance(out)
    assert reduced.root == 3 and reduced.directed
    assert json.loads((tmp_path / "red.meta.json").read_text()) == {"offset": 30, "new_root": 3}

    size = {**K3, "constraint": {"kind": "size", "value": 4}, "weights": [[0, 1, 2, 3], [1, 0, 1, 1], [2, 1, 0, 1], [3, 1, 1, 0]], "n": 4}
    code, _, _ = run(capsys, "reduce", "scst-mcst", write(tmp_path, size, "s.json"), "--output", tmp_path / "m.json")
    meta = json.loads((tmp_path / "m.meta.json").read_text())
    assert code == 0 and meta == {"eta_ids": list(range(4, 12)), "alpha": 1, "beta": 8}


def test_reduce_needs_relax_flag_for_missing_edges(tmp_path, capsys):
    holey = write(tmp_path, {**K3, "weights": [[0, None, 1], [None, 0, 1], [1, 1, 0]]})
    assert run(capsys, "reduce", "dcst-ddcst", holey)[0] == 4
    assert run(capsys, "reduce", "dcst-ddcst", holey, "--relax", "--output", tmp_path / "r.json")[0] == 0


def test_oracle_budget_from_environment(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv(cli.ENV_TREES, "1")
    code, (rec,), _ = run(capsys, "oracle", write(tmp_path, K3))
    assert code == 2 and rec["outcome"]["status"] == "budget_exceeded"
    code, (rec,), _ = run(capsys, "oracle", write(tmp_path, K3), "--budget-trees", "100")
    assert code == 0 and rec["outcome"]["weight"] == 2


def test_conformance_stream_is_reproducible(capsys):
    code, first, _ = run(capsys, "conformance", "--suite", "ddcst", "--seeds", 15, "--summary")
    assert code == 0 and len(first) == 16
    assert first[-1]["summary"] and first[-1]["verdicts"] == {"agree": 15}
    _, second, _ = run(capsys, "conformance", "--suite", "ddcst", "--seeds", 15, "--summary")
    assert untimed(first) == untimed(second)


def test_conformance_dcst_reports_fixture(capsys):
    code, recs, _ = run(capsys, "conformance", "--suite", "dcst", "--seeds", 3, "--summary")
    fixture = recs[0]
    assert fixture["case"] == "dcst/fixture/k3-d1"
    assert fixture["verdict"] == "disagree" and fixture["flagged"]
    assert fixture["witness"]["constraint"] == {"kind": "diameter", "value": 1}
    assert code == 3 and recs[-1]["silent_disagreements"] == 0


def test_bench_with_plot(tmp_path, capsys):
    png = tmp_path / "bench.png"
    code, recs, _ = run(capsys, "bench", "--n", 6, "--t-range", "1..3", "--repeats", 1, "--plot", png)
    assert code == 0 and [r["terminals"] for r in recs[:-1]] == [1, 2, 3]
    assert recs[-1]["fit"] and png.stat().st_size > 0


def test_bench_rejects_bad_range(capsys):
    with pytest.raises(SystemExit):
        cli.main(["bench", "--n", "6", "--t-range", "5..2"])


def test_euclid(tmp_path, capsys):
    pts = write(tmp_path, {"points": [[0, 0], [1, 0], [1, 1], [0, 1]]})
    svg = tmp_path / "tree.svg"
    code, (rec,), _ = run(capsys, "euclid", pts, "--svg", svg)
    assert code == 0 and rec["length"] == pytest.approx(1 + 3**0.5, abs=1e-9)
    assert len(rec["steiner_points"]) == 2 and rec["max_junction_error"] <= 1e-6
    assert svg.read_text().lstrip().startswith("<?xml")
    code, (rec,), _ = run(capsys, "euclid", pts, "--grid", 4)
    assert code == 0 and rec["method"] == "grid-4"
    assert run(capsys, "euclid", write(tmp_path, {"points": [[0]]}, "bad.json"))[0] == 4


def test_help_lists_every_subcommand(capsys):
    with pytest.raises(SystemExit):
        cli.main(["--help"])
    text = capsys.readouterr().out
    for name in ("solve", "reduce", "oracle", "conformance", "bench", "gen", "euclid"):
        assert name in text
