import csv
import json

import numpy as np
import pytest

from doco.cli import main
from doco.distributed import dist_full_alpha
from doco.harness import (
    DispatchConfig,
    ExperimentConfig,
    compare_dro_do,
    run_dispatch_demo,
    run_example3,
    run_single_learner,
)
from doco.online import run_ogd
from doco.problems import sample_regression_sequence


def tiny_config(tmp_path, **kw):
    base = dict(
        n_agents=5, dim=2, horizon=48, runs=2, seed=3, edge_prob=0.5,
        output_dir=str(tmp_path / "out"), plots=False,
    )
    base.update(kw)
    return ExperimentConfig.from_dict(base)


class TestConfig:
    def test_defaults_match_reference_setup(self):
        c = ExperimentConfig()
        assert (c.n_agents, c.dim) == (20, 2)
        assert (c.lower, c.upper) == (-0.5, 0.5)
        assert c.runs == 10
        assert c.set_radius == pytest.approx(0.5 * np.sqrt(2))

    @pytest.mark.parametrize("bad", [
        {"lower": 0.5, "upper": 0.5},
        {"lower": 1.0, "upper": -1.0},
        {"horizon": 0},
        {"runs": 0},
        {"edge_prob": 0.0},
        {"edge_prob": 1.5},
        {"feedback": "sideways"},
        {"constraint_mode": "sometimes"},
        {"n_agents": 0},
    ])
    def test_rejections(self, bad):
        with pytest.raises(ValueError):
            ExperimentConfig.from_dict(bad)

    def test_unknown_key_rejected(self):
        with pytest.raises(ValueError, match="unknown"):
            ExperimentConfig.from_dict({"horizons": 5})

    def test_json_roundtrip(self, tmp_path):
        path = tmp_path / "c.json"
        path.write_text(json.dumps({"horizon": 12, "runs": 1}))
        c = ExperimentConfig.from_json(path)
        assert c.horizon == 12 and c.runs == 1


class TestExample3:
    def test_artifacts_written(self, tmp_path):
        config = tiny_config(tmp_path, plots=True)
        art = run_example3(config)
        for name in ["run_00_trace.csv", "run_01_trace.csv", "metrics_avg.csv",
                     "graph.edges", "weights.csv", "metadata.json",
                     "example3_asr_acv.png"]:
            assert (art.output_dir / name).exists(), name
        assert art.data["asr"].shape == (48,)

    def test_averaging_is_pointwise_mean(self, tmp_path):
        art = run_example3(tiny_config(tmp_path, runs=3))
        stacked = np.stack(art.data["per_run_asr"])
        assert np.all(np.abs(stacked.mean(axis=0) - art.data["asr"]) <= 1e-12)
        stacked_acv = np.stack(art.data["per_run_acv"])
        assert np.all(np.abs(stacked_acv.mean(axis=0) - art.data["acv"]) <= 1e-12)

    def test_metadata_regenerates_runs(self, tmp_path):
        art1 = run_example3(tiny_config(tmp_path))
        saved = json.loads((art1.output_dir / "metadata.json").read_text())
        cfg = dict(saved["config"])
        cfg["output_dir"] = str(tmp_path / "out2")
        art2 = run_example3(ExperimentConfig.from_dict(cfg))
        for name in ["run_00_trace.csv", "run_01_trace.csv", "metrics_avg.csv"]:
            assert (art1.output_dir / name).read_bytes() == \
                (art2.output_dir / name).read_bytes()

    def test_graph_fixed_across_runs_by_default(self, tmp_path):
        art = run_example3(tiny_config(tmp_path))
        assert art.metadata["config"]["resample_graph"] is False

    def test_independent_horizon_mode(self, tmp_path):
        config = tiny_config(tmp_path, independent_horizons=[16, 48])
        art = run_example3(config)
        indep = art.metadata["independent_horizons"]
        assert set(indep) == {"16", "48"}
        assert indep["48"]["asr"] == pytest.approx(art.data["asr"][-1])

    def test_single_agent_matches_ogd_pipeline(self, tmp_path):
        config = tiny_config(tmp_path, n_agents=1, runs=1, horizon=64,
                             constraint_mode="project", edge_prob=1.0)
        art = run_example3(config)
        losses = sample_regression_sequence(1, 2, 64, seed=[3, 13, 0])
        per_round = [losses.loss(0, t) for t in range(64)]
        traj = run_ogd(per_round, 64, config.cset, mode="full",
                       schedule=dist_full_alpha(config.cset),
                       seed=(3, 17, 0))
        with open(art.output_dir / "run_00_trace.csv", newline="") as fh:
            rows = list(csv.DictReader(fh))
        got = np.array([[float(r["x_1"]), float(r["x_2"])] for r in rows])
        assert np.array_equal(got, traj.points)


class TestCompare:
    def test_artifacts_and_reduced_fluctuation(self, tmp_path):
        config = tiny_config(tmp_path, horizon=300, runs=2)
        art = compare_dro_do(config)
        for name in ["comparison.csv", "stationarity.csv", "metadata.json"]:
            assert (art.output_dir / name).exists()
        std = art.data["trailing_std"]
        assert std["agent1"] < std["offline"]
        assert std["agent2"] < std["offline"]

    def test_stationarity_csv_schema(self, tmp_path):
        art = compare_dro_do(tiny_config(tmp_path, horizon=120, runs=1))
        lines = (art.output_dir / "stationarity.csv").read_text().splitlines()
        assert lines[0] == "series_name,coord,std"
        names = {line.split(",")[0] for line in lines[1:]}
        assert names == {"offline", "agent1", "agent2"}


class TestDispatchDemo:
    def test_named_cases(self, tmp_path):
        cases = [
            (dict(quad=[1.0, 1.0], demand=10.0), [5.0, 5.0]),
            (dict(quad=[1.0, 3.0], demand=4.0), [3.0, 1.0]),
            (dict(quad=[1.0, 1.0], demand=10.0, x_max=[4.0, 1e9]), [4.0, 6.0]),
        ]
        for kw, expected in cases:
            config = DispatchConfig(output_dir=str(tmp_path / "d"), plots=False, **kw)
            art = run_dispatch_demo(config)
            assert np.allclose(art.data["allocations"], expected, atol=1e-4)
            assert art.data["gap"] < 1e-4

    def test_artifacts(self, tmp_path):
        config = DispatchConfig(output_dir=str(tmp_path / "d2"), plots=True)
        art = run_dispatch_demo(config)
        for name in ["allocations.csv", "residuals.csv", "metadata.json",
                     "dispatch.png"]:
            assert (art.output_dir / name).exists()
        assert art.metadata["converged"]

    def test_infeasible_demand_raises(self, tmp_path):
        config = DispatchConfig(quad=[1.0], demand=5.0, x_max=[1.0],
                                output_dir=str(tmp_path / "d3"), plots=False)
        with pytest.raises(ValueError, match="demand"):
            run_dispatch_demo(config)


class TestSingleLearner:
    def test_artifacts(self, tmp_path):
        config = tiny_config(tmp_path, horizon=64, runs=2)
        art = run_single_learner(config)
        for name in ["trace.csv", "metrics_avg.csv", "metadata.json"]:
            assert (art.output_dir / name).exists()
        assert art.data["avg_regret"].shape == (64,)

    def test_bandit_mode(self, tmp_path):
        config = tiny_config(tmp_path, horizon=64, runs=1, feedback="bandit")
        art = run_single_learner(config)
        traj = art.data["trajectory"]
        assert np.all(np.abs(traj.points) <= 0.5 + 1e-12)


class TestCli:
    def run_cli(self, *args):
        return main(list(args))

    def test_example3_exit_zero(self, tmp_path, capsys):
        rc = self.run_cli("example3", "--horizon", "32", "--runs", "1",
                          "--n-agents", "4", "--edge-prob", "0.6",
                          "--seed", "5", "--output-dir", str(tmp_path / "a"),
                          "--no-plots")
        assert rc == 0
        assert "final ASR" in capsys.readouterr().out

    def test_compare_exit_zero(self, tmp_path):
        rc = self.run_cli("compare", "--horizon", "80", "--runs", "1",
                          "--n-agents", "4", "--edge-prob", "0.6",
                          "--output-dir", str(tmp_path / "b"), "--no-plots")
        assert rc == 0

    def test_dispatch_exit_zero(self, tmp_path, capsys):
        rc = self.run_cli("dispatch", "--demand", "4.0",
                          "--output-dir", str(tmp_path / "c"), "--no-plots")
        assert rc == 0
        assert "price oracle" in capsys.readouterr().out

    def test_ogd_exit_zero(self, tmp_path):
        rc = self.run_cli("ogd", "--horizon", "32", "--runs", "1",
                          "--output-dir", str(tmp_path / "d"), "--no-plots")
        assert rc == 0

    def test_bad_config_exit_nonzero(self, tmp_path, capsys):
        rc = self.run_cli("example3", "--horizon", "0",
                          "--output-dir", str(tmp_path / "e"))
        assert rc == 1
        assert "error:" in capsys.readouterr().err

    def test_config_file_with_flag_override(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({
            "horizon": 16, "runs": 1, "n_agents": 3, "edge_prob": 0.9,
            "plots": False, "output_dir": str(tmp_path / "f"),
        }))
        rc = self.run_cli("example3", "--config", str(cfg),
                          "--horizon", "24")
        assert rc == 0
        meta = json.loads((tmp_path / "f" / "metadata.json").read_text())
        assert meta["config"]["horizon"] == 24  # flag wins
        assert meta["config"]["n_agents"] == 3  # file value kept
