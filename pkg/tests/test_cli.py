"""Command line behaviors, exercised in-process through main()."""

import json

import pytest

import searchgame as sg
from searchgame.cli import main, parse_gen_spec


def run_cli(capsys, argv, stdin=None, monkeypatch=None):
    if stdin is not None:
        import io
        import sys

        monkeypatch.setattr(sys, "stdin", io.StringIO(stdin))
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestGen:
    def test_spec_colon_form(self):
        g = parse_gen_spec("line:3,2")
        assert g.n_edges == 5

    def test_spec_word_form(self):
        g = parse_gen_spec("parallel 2 2")
        assert g.n_edges == 4

    def test_unknown_family(self, capsys):
        code, _, err = run_cli(capsys, ["gen", "moebius:3"])
        assert code == 2
        assert "error" in err

    def test_gen_emits_parseable_instance(self, capsys):
        code, out, _ = run_cli(capsys, ["gen", "circle:4", "--p", "0.5"])
        assert code == 0
        g, probs = sg.load_instance(out)
        assert g.n_edges == 4
        assert all(p == 0.5 for p in probs.values())


class TestPipelineVerbs:
    def test_classify_round_trip(self, capsys, monkeypatch):
        for spec, expect in [
            ("line:2,1", "tree"),
            ("circle:5", "eulerian"),
            ("parallel:1,1,1", "other"),
            ("simple-binary-tree", "tree"),
            ("tree:(()(()()))", "tree"),
        ]:
            code, out, _ = run_cli(capsys, ["classify", "--gen", spec])
            assert code == 0
            assert out.split()[-1] == expect

    def test_value_from_stdin_pipe(self, capsys, monkeypatch):
        _, instance, _ = run_cli(capsys, ["gen", "line", "3", "2", "--p", "0.5"])
        code, out, _ = run_cli(
            capsys,
            ["value", "--tol", "1e-5", "--format", "json"],
            stdin=instance,
            monkeypatch=monkeypatch,
        )
        assert code == 0
        doc = json.loads(out)
        expect = sg.closed_form_value("line", {"lam1": 3, "lam2": 2}, 0.5).value
        assert abs(0.5 * (float(doc["lower"]) + float(doc["upper"])) - expect) < 1e-5

    def test_table_and_json_agree(self, capsys):
        code, table, _ = run_cli(capsys, ["bounds", "--gen", "circle:4", "--p", "0.5"])
        code2, js, _ = run_cli(
            capsys, ["bounds", "--gen", "circle:4", "--p", "0.5", "--format", "json"]
        )
        assert code == code2 == 0
        doc = json.loads(js)
        rows = dict(line.split(None, 1) for line in table.strip().splitlines())
        assert float(rows["stochastic-lower"]) == pytest.approx(
            float(doc["stochastic"]["lower"])
        )
        assert float(rows["stochastic-upper"]) == pytest.approx(
            float(doc["stochastic"]["upper"])
        )

    def test_evaluate_tree_full_activation(self, capsys):
        code, out, _ = run_cli(
            capsys,
            [
                "evaluate",
                "--gen",
                "tree:(()()())",
                "--p",
                "1",
                "--policy",
                "ucps",
                "--hider",
                "ebd",
                "--format",
                "json",
            ],
        )
        assert code == 0
        doc = json.loads(out)
        assert float(doc["payoff"]) == pytest.approx(3.0)

    def test_best_response(self, capsys):
        code, out, _ = run_cli(
            capsys,
            ["best-response", "--gen", "line:1,1", "--p", "1", "--format", "json"],
        )
        assert code == 0
        doc = json.loads(out)
        assert float(doc["value"]) == pytest.approx(2.0)

    def test_simulate_json_shape(self, capsys):
        code, out, _ = run_cli(
            capsys,
            [
                "simulate",
                "--gen",
                "circle:3",
                "--p",
                "0.6",
                "--policy",
                "ues",
                "--n",
                "500",
                "--seed",
                "4",
                "--format",
                "json",
            ],
        )
        assert code == 0
        doc = json.loads(out)
        assert set(doc) == {"mean", "se", "n", "seed", "censored"}
        assert doc["n"] == 500 and doc["censored"] == 0

    def test_analytic_verb(self, capsys):
        code, out, _ = run_cli(
            capsys,
            ["analytic", "--gen", "simple-binary-tree", "--p", "0.5", "--format", "json"],
        )
        assert code == 0
        doc = json.loads(out)
        assert float(doc["leaf_time"]) == pytest.approx(float(doc["closed_form"]))

    def test_ebd_verb(self, capsys):
        code, out, _ = run_cli(
            capsys, ["ebd", "--gen", "line:3,2", "--p", "0.7", "--format", "json"]
        )
        assert code == 0
        doc = json.loads(out)["ebd"]
        assert float(doc["L3"]) == pytest.approx(0.6)

    def test_analytic_quantity_selector(self, capsys):
        code, out, _ = run_cli(
            capsys,
            ["analytic", "--gen", "parallel:2,2", "--p", "0.5",
             "--quantity", "theta", "--format", "json"],
        )
        assert code == 0
        assert json.loads(out)["theta"] == pytest.approx(22.0 / 3.0)

    def test_analytic_lambda_needs_binary_tree(self, capsys):
        code, _, err = run_cli(
            capsys,
            ["analytic", "--gen", "tree:(()()())", "--p", "0.5",
             "--quantity", "lambda"],
        )
        assert code == 2 and "error" in err

    def test_evaluate_udfs_ebd_five_edge_tree(self, capsys):
        code, out, _ = run_cli(
            capsys,
            ["evaluate", "--gen", "tree:(()()()()())", "--p", "1",
             "--policy", "udfs", "--hider", "ebd", "--format", "json"],
        )
        assert code == 0
        assert json.loads(out)["payoff"] == pytest.approx(5.0)

    def test_infeasible_verb_graph_combo(self, capsys):
        # Lambda analytics require a binary tree
        code, _, err = run_cli(
            capsys, ["evaluate", "--gen", "circle:3", "--p", "0.5",
                     "--policy", "udfs", "--hider", "uniform"]
        )
        assert code == 2 and "error" in err

    def test_missing_instance(self, capsys, monkeypatch):
        code, _, err = run_cli(
            capsys, ["classify"], stdin="", monkeypatch=monkeypatch
        )
        assert code == 2 and "error" in err
