import csv
import json

import pytest

from mmlab.cli import main
from mmlab.config import RunConfig, load_config, parse_config
from mmlab.errors import ConfigError


class TestConfig:
    def test_defaults(self):
        cfg = parse_config("")
        assert cfg.params.s0 == 100.0 and cfg.params.A == 137.45 and cfg.params.dt == 0.005
        assert (cfg.grid.n_a, cfg.grid.d_a) == (21, 0.2)
        assert (cfg.train.alpha, cfg.train.gamma) == (0.6, 1.0)

    def test_parse(self):
        cfg = parse_config(
            """
            # coarse clock
            dt = 0.05
            n_a = 11   # fewer actions
            algorithm = tabular
            episodes = 7
            epsilon_decay_episodes = none
            fill_model = poisson
            """
        )
        assert cfg.params.dt == 0.05 and cfg.params.n_steps == 20
        assert cfg.grid.n_a == 11 and cfg.train.algorithm == "tabular" and cfg.train.episodes == 7
        assert cfg.train.epsilon_decay_episodes is None
        assert cfg.params.fill_model == "poisson"

    @pytest.mark.parametrize(
        "text",
        ["bogus = 1", "dt = fast", "dt 0.05", "dt = 0.05\ndt = 0.01", "n_a = 20", "episodes = 1.5", "dt = 0.3"],
    )
    def test_rejected(self, text):
        with pytest.raises(ConfigError):
            parse_config(text)

    def test_roundtrip(self):
        cfg = parse_config("kappa = 0.25\nmaster_seed = 9\nd_a = 0.1")
        assert parse_config(cfg.to_text()) == cfg

    def test_overrides(self):
        cfg = RunConfig().with_overrides(episodes=5, algorithm=None)
        assert cfg.train.episodes == 5 and cfg.train.algorithm == "deep"
        with pytest.raises(ConfigError):
            RunConfig().with_overrides(nope=1)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="missing.cfg"):
            load_config(tmp_path / "missing.cfg")


class TestCli:
    def test_eval_optimal(self, capsys):
        assert main(["eval", "--policy", "optimal", "--episodes", "20", "--seed", "7"]) == 0
        out = capsys.readouterr().out.splitlines()
        assert out[0].split()[:3] == ["policy", "mean", "wealth"]
        assert out[1].startswith("optimal")

    def test_eval_json_report(self, tmp_path):
        report = tmp_path / "r.json"
        assert main(["eval", "--policy", "symmetric", "--episodes", "5", "--format", "json", "--report", str(report)]) == 0
        assert json.loads(report.read_text())[0]["policy"] == "symmetric"

    def test_gradcheck(self, capsys):
        assert main(["gradcheck", "--pairs", "3"]) == 0
        assert "max relative error" in capsys.readouterr().out

    def test_gradcheck_can_fail(self, capsys):
        assert main(["gradcheck", "--pairs", "2", "--h", "1.0"]) == 2

    def test_missing_config(self, capsys, tmp_path):
        path = tmp_path / "nope.cfg"
        assert main(["eval", "--config", str(path), "--policy", "optimal"]) == 1
        assert str(path) in capsys.readouterr().err

    def test_unknown_flag(self, capsys):
        assert main(["eval", "--policy", "optimal", "--bogus"]) == 1
        assert "usage" in capsys.readouterr().err

    def test_unknown_config_key(self, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("volatility = 2\n")
        assert main(["eval", "--config", str(cfg), "--policy", "optimal"]) == 1
        assert "volatility" in capsys.readouterr().err

    def test_train_eval_compare_roundtrip(self, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("T = 0.1\n")
        table, net = tmp_path / "tql.bin", tmp_path / "dqn.bin"
        trace = tmp_path / "trace.csv"
        assert main(["train", "--config", str(cfg), "--algo", "tabular", "--episodes", "20", "--out", str(table), "--trace", str(trace)]) == 0
        assert main(["train", "--config", str(cfg), "--algo", "deep", "--episodes", "5", "--out", str(net)]) == 0
        assert len(list(csv.reader(open(trace)))) == 21
        report = tmp_path / "cmp.csv"
        argv = ["compare", "--config", str(cfg), "--policies", "optimal", "symmetric", str(table), str(net),
                "--episodes", "10", "--format", "csv", "--report", str(report)]
        assert main(argv) == 0
        rows = list(csv.DictReader(open(report)))
        assert [r["policy"] for r in rows] == ["optimal", "symmetric", "tql", "dqn"]
        first = report.read_text()
        assert main(argv) == 0
        assert report.read_text() == first

    def test_numeric_divergence_exit_code(self, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("T = 0.1\nlr = 50\n")
        code = main(["train", "--config", str(cfg), "--algo", "deep", "--episodes", "50", "--out", str(tmp_path / "n.bin")])
        assert code == 2
        assert "episode" in capsys.readouterr().err

    def test_export_plot(self, tmp_path):
        out = tmp_path / "hist.csv"
        assert main(["export-plot", "--policy", "optimal", "--metric", "reward", "--bins", "8", "--episodes", "30", "--out", str(out)]) == 0
        rows = list(csv.reader(open(out)))
        assert rows[0] == ["bin_left", "bin_right", "count"]
        assert len(rows) == 9 and sum(int(r[2]) for r in rows[1:]) == 30

    def test_show_config(self, capsys):
        assert main(["show-config"]) == 0
        assert parse_config(capsys.readouterr().out) == RunConfig()
