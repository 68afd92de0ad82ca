"""Tests for the command line surface."""

import json

import numpy as np
import pytest

from tailcausal.cli import build_parser, main
from tailcausal.io import parse_report

DIAMOND_DAG = "1 -> 2 1.0\n1 -> 3 1.0\n2 -> 4 1.0\n3 -> 4 1.0\n"


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    """A directory holding a diamond fixture and data simulated from it."""
    root = tmp_path_factory.mktemp("cli")
    dag = root / "diamond.dag"
    dag.write_text(DIAMOND_DAG)
    data = root / "sim.csv"
    rc = main(
        [
            "simulate",
            "--input", str(dag),
            "--model", "lscm",
            "--noise", "pareto",
            "--alpha", "2.5",
            "--n-rows", "30000",
            "--seed", "11",
            "--dump-csv", str(data),
            "--out", str(root / "sim.json"),
        ]
    )
    assert rc == 0
    return root


class TestParser:
    def test_method_is_required(self, capsys):
        with pytest.raises(SystemExit):
            build_parser().parse_args([])
        capsys.readouterr()

    def test_unknown_method_rejected(self, capsys):
        with pytest.raises(SystemExit):
            build_parser().parse_args(["granger"])
        capsys.readouterr()

    def test_version_flag(self, capsys):
        with pytest.raises(SystemExit) as exc:
            build_parser().parse_args(["--version"])
        assert exc.value.code == 0
        assert "tailcausal" in capsys.readouterr().out


class TestSimulate:
    def test_artifact_and_report(self, workdir):
        report = parse_report((workdir / "sim.json").read_text())
        assert report["config"]["method"] == "simulate"
        assert report["data"]["n"] == 30000
        assert report["data"]["names"] == ["X1", "X2", "X3", "X4"]
        header = (workdir / "sim.csv").read_text().splitlines()[0]
        assert header == "X1,X2,X3,X4"

    def test_deterministic_across_runs(self, workdir, tmp_path):
        args = [
            "simulate",
            "--input", str(workdir / "diamond.dag"),
            "--model", "rmlm",
            "--noise", "frechet",
            "--alpha", "2.0",
            "--n-rows", "500",
            "--seed", "3",
        ]
        for k in (1, 2):
            assert main([*args, "--dump-csv", str(tmp_path / f"d{k}.csv"),
                         "--out", str(tmp_path / f"r{k}.json")]) == 0
        assert (tmp_path / "d1.csv").read_bytes() == (tmp_path / "d2.csv").read_bytes()

    @pytest.mark.parametrize(
        "drop, fragment",
        [
            ("--model", "--model"),
            ("--alpha", "--alpha"),
            ("--dump-csv", "--dump-csv"),
            ("--seed", "--seed"),
        ],
    )
    def test_missing_requirements_fail_cleanly(self, workdir, tmp_path, capsys, drop, fragment):
        args = {
            "--model": "lscm",
            "--noise": "pareto",
            "--alpha": "2.5",
            "--n-rows": "50",
            "--seed": "1",
            "--dump-csv": str(tmp_path / "x.csv"),
        }
        del args[drop]
        argv = ["simulate", "--input", str(workdir / "diamond.dag")]
        for k, v in args.items():
            argv += [k, v]
        assert main(argv) == 1
        assert fragment in capsys.readouterr().err

    def test_unweighted_dag_rejected(self, tmp_path, capsys):
        dag = tmp_path / "u.dag"
        dag.write_text("1 -> 2\n")
        rc = main(
            [
                "simulate",
                "--input", str(dag),
                "--model", "lscm",
                "--noise", "pareto",
                "--alpha", "2.0",
                "--seed", "1",
                "--dump-csv", str(tmp_path / "u.csv"),
            ]
        )
        assert rc == 1
        assert "edge weights" in capsys.readouterr().err


class TestDiscoveryMethods:
    def test_ease_recovers_and_compares(self, workdir, tmp_path):
        out = tmp_path / "ease.json"
        dump = tmp_path / "reach.csv"
        rc = main(
            [
                "ease",
                "--input", str(workdir / "sim.csv"),
                "--truth", str(workdir / "diamond.dag"),
                "--out", str(out),
                "--dump-csv", str(dump),
            ]
        )
        assert rc == 0
        report = parse_report(out.read_text())
        assert report["comparison"]["distance"] == 0
        assert report["order"][0] == 1 and report["order"][-1] == 4
        assert report["reachability"]["names"] == ["X1", "X2", "X3", "X4"]
        assert report["scores"]["kind"] == "gamma"
        assert dump.read_text().splitlines()[0] == "X1,X2,X3,X4"

    def test_rmlm_on_max_linear_data(self, workdir, tmp_path):
        data = tmp_path / "m.csv"
        main(
            [
                "simulate",
                "--input", str(workdir / "diamond.dag"),
                "--model", "rmlm",
                "--noise", "frechet",
                "--alpha", "2.0",
                "--n-rows", "50000",
                "--seed", "12",
                "--dump-csv", str(data),
            ]
        )
        out = tmp_path / "rmlm.json"
        rc = main(
            [
                "rmlm",
                "--input", str(data),
                "--truth", str(workdir / "diamond.dag"),
                "--out", str(out),
            ]
        )
        assert rc == 0
        report = parse_report(out.read_text())
        assert report["comparison"]["distance"] == 0
        assert report["diagnostics"]["k_exceed"] == 500

    def test_tree_on_chain(self, tmp_path):
        dag = tmp_path / "chain.dag"
        dag.write_text("1 -> 2 1.0\n2 -> 3 1.0\n")
        data = tmp_path / "c.csv"
        main(
            [
                "simulate",
                "--input", str(dag),
                "--model", "rmlm",
                "--noise", "frechet",
                "--alpha", "2.0",
                "--n-rows", "20000",
                "--seed", "5",
                "--dump-csv", str(data),
            ]
        )
        out = tmp_path / "tree.json"
        rc = main(["tree", "--input", str(data), "--truth", str(dag), "--out", str(out)])
        assert rc == 0
        report = parse_report(out.read_text())
        assert report["comparison"]["distance"] == 0
        assert report["diagnostics"]["edges"] == [[1, 2], [2, 3]]

    def test_causev_pair_with_drop_columns(self, workdir, tmp_path):
        out = tmp_path / "causev.json"
        rc = main(
            [
                "causev",
                "--input", str(workdir / "sim.csv"),
                "--drop-column", "X3",
                "--drop-column", "X4",
                "--n-boot", "30",
                "--seed", "9",
                "--out", str(out),
            ]
        )
        assert rc == 0
        report = parse_report(out.read_text())
        cell = report["cells"]["X1->X2"]
        assert cell["decision"] == "x->y"
        assert report["config"]["drop_columns"] == ["X3", "X4"]
        assert report["reachability"]["entries"] == [[1, 1], [0, 1]]

    def test_stochastic_methods_demand_a_seed(self, workdir, capsys):
        rc = main(["causev", "--input", str(workdir / "sim.csv")])
        assert rc == 1
        assert "--seed is required" in capsys.readouterr().err


class TestFitGpd:
    def test_report_and_config_merge(self, workdir, tmp_path):
        cfg = tmp_path / "opt.cfg"
        cfg.write_text("threshold-q = 0.9\ndecluster_gap = 3\n")
        out = tmp_path / "gpd.json"
        rc = main(
            [
                "fit-gpd",
                "--input", str(workdir / "sim.csv"),
                "--config", str(cfg),
                "--out", str(out),
            ]
        )
        assert rc == 0
        report = parse_report(out.read_text())
        assert report["config"]["threshold_q"] == 0.9
        assert report["config"]["decluster_gap"] == 3
        fits = report["tail_fits"]
        assert set(fits) == {"X1", "X2", "X3", "X4"}
        assert all(0.0 < f["xi"] < 1.0 for f in fits.values())

    def test_flags_override_config(self, workdir, tmp_path, capsys):
        cfg = tmp_path / "opt.cfg"
        cfg.write_text("threshold-q = 0.9\n")
        rc = main(
            [
                "fit-gpd",
                "--input", str(workdir / "sim.csv"),
                "--config", str(cfg),
                "--threshold-q", "0.95",
            ]
        )
        assert rc == 0
        report = parse_report(capsys.readouterr().out)
        assert report["config"]["threshold_q"] == 0.95


@pytest.fixture(scope="module")
def treatment_csv(tmp_path_factory):
    rng = np.random.default_rng(7)
    n = 4000
    y = (1.0 - rng.random(n)) ** -0.5
    d = (rng.random(n) < 0.5).astype(int)
    x = rng.random(n)
    path = tmp_path_factory.mktemp("qte") / "t.csv"
    rows = ["y,d,x1"]
    rows += [f"{float(y[i])!r},{d[i]},{float(x[i])!r}" for i in range(n)]
    path.write_text("\n".join(rows) + "\n")
    return path


class TestQte:
    def test_end_to_end_estimate(self, treatment_csv, tmp_path):
        out = tmp_path / "qte.json"
        rc = main(
            [
                "qte",
                "--input", str(treatment_csv),
                "--basis-degree", "1",
                "--tau-n", "0.05",
                "--p-n", "0.01",
                "--n-boot", "40",
                "--seed", "3",
                "--out", str(out),
            ]
        )
        assert rc == 0
        report = parse_report(out.read_text())
        block = report["qte"]
        assert block["ci"][0] <= block["estimate"] <= block["ci"][1]
        assert report["meta"]["n"] == 4000
        assert block["boot_failures"] == 0

    def test_identical_runs_identical_bytes(self, treatment_csv, tmp_path):
        argv = [
            "qte",
            "--input", str(treatment_csv),
            "--basis-degree", "1",
            "--n-boot", "20",
            "--seed", "3",
        ]
        for k in (1, 2):
            assert main([*argv, "--out", str(tmp_path / f"q{k}.json")]) == 0
        assert (tmp_path / "q1.json").read_bytes() == (tmp_path / "q2.json").read_bytes()


class TestEvaluate:
    def test_est_equals_truth(self, workdir, tmp_path):
        out = tmp_path / "ev.json"
        rc = main(
            [
                "evaluate",
                "--input", str(workdir / "diamond.dag"),
                "--truth", str(workdir / "diamond.dag"),
                "--out", str(out),
            ]
        )
        assert rc == 0
        assert parse_report(out.read_text())["comparison"]["distance"] == 0

    def test_matrix_csv_against_dag(self, tmp_path):
        truth = tmp_path / "t.dag"
        truth.write_text("2 -> 1\n3 -> 1\n4 -> 3\n")
        est = tmp_path / "est.csv"
        est.write_text(
            "Paris,Meaux,Melun,Sens\n1,0,0,0\n1,1,0,0\n1,0,1,0\n1,0,0,1\n"
        )
        out = tmp_path / "ev.json"
        rc = main(["evaluate", "--input", str(est), "--truth", str(truth), "--out", str(out)])
        assert rc == 0
        report = parse_report(out.read_text())
        assert report["comparison"]["distance"] == 1
        assert report["comparison"]["mismatches"] == [[4, 3]]

    def test_truth_required(self, workdir, capsys):
        rc = main(["evaluate", "--input", str(workdir / "diamond.dag")])
        assert rc == 1
        assert "--truth" in capsys.readouterr().err

    def test_mismatched_names_rejected(self, tmp_path, capsys):
        a = tmp_path / "a.csv"
        a.write_text("u,v\n1,0\n0,1\n")
        b = tmp_path / "b.csv"
        b.write_text("p,q\n1,0\n0,1\n")
        rc = main(["evaluate", "--input", str(a), "--truth", str(b)])
        assert rc == 1
        assert "name different columns" in capsys.readouterr().err


class TestErrorSurface:
    def test_missing_input_file(self, capsys):
        rc = main(["ease", "--input", "/nonexistent/file.csv"])
        assert rc == 1
        assert "error" in capsys.readouterr().err

    def test_reports_go_to_stdout_without_out(self, workdir, capsys):
        rc = main(
            [
                "evaluate",
                "--input", str(workdir / "diamond.dag"),
                "--truth", str(workdir / "diamond.dag"),
            ]
        )
        assert rc == 0
        captured = capsys.readouterr()
        report = json.loads(captured.out)
        assert report["format"] == "tailcausal-report/1"

    def test_bad_config_value_surfaces(self, workdir, tmp_path, capsys):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("threshold_q = not-a-number\n")
        rc = main(["fit-gpd", "--input", str(workdir / "sim.csv"), "--config", str(cfg)])
        assert rc == 1
        assert "threshold_q" in capsys.readouterr().err