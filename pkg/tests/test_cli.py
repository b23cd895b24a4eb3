from allocgen.cli import main


class TestRun:
    def test_small_pool(self, scenario_dir, tmp_path, capsys):
        code = main(["run", str(scenario_dir / "small_pool.yaml"), "--out", str(tmp_path)])
        assert code == 0
        assert (tmp_path / "allocations.csv").exists()
        assert (tmp_path / "report.txt").exists()
        out = capsys.readouterr().out
        assert "full_allocation_max_rel_dev_on_valid" in out

    def test_kmax_override(self, scenario_dir, tmp_path):
        code = main(
            ["run", str(scenario_dir / "bernoulli_pool.yaml"), "--out", str(tmp_path), "--kmax", "100"]
        )
        assert code == 0
        rows = [
            r
            for r in (tmp_path / "allocations.csv").read_text().splitlines()
            if r and not r.startswith("#") and not r.startswith("k,")
        ]
        assert len(rows) == 128

    def test_missing_file_is_config_error(self, tmp_path, capsys):
        code = main(["run", str(tmp_path / "nope.yaml"), "--out", str(tmp_path)])
        assert code == 2

    def test_bad_scenario_exit_code(self, tmp_path, capsys):
        bad = tmp_path / "bad.yaml"
        bad.write_text("kmax: 16\nmodel: {dependence: independent, risks: []}\n")
        code = main(["run", str(bad), "--out", str(tmp_path)])
        assert code == 2
        assert "config error" in capsys.readouterr().err


class TestReproduce:
    def test_bernoulli_pool_case_passes(self, capsys):
        code = main(["reproduce", "bernoulli_pool"])
        out = capsys.readouterr().out
        assert code == 0, out
        assert "result: PASS" in out

    def test_gamma_mixture_case_passes(self, capsys):
        code = main(["reproduce", "gamma_mixture"])
        out = capsys.readouterr().out
        assert code == 0, out

    def test_unknown_case_rejected_by_parser(self, capsys):
        import pytest

        with pytest.raises(SystemExit):
            main(["reproduce", "unknown_case"])


class TestOracleCommand:
    def test_bernoulli_scenario_agrees(self, scenario_dir, capsys):
        code = main(["oracle", str(scenario_dir / "bernoulli_pool.yaml")])
        out = capsys.readouterr().out
        assert code == 0, out
        assert "PASS" in out

    def test_frailty_scenario_agrees(self, scenario_dir, capsys):
        code = main(["oracle", str(scenario_dir / "frailty.yaml")])
        assert code == 0

    def test_gamma_scenario_has_no_enumeration(self, scenario_dir, capsys):
        code = main(["oracle", str(scenario_dir / "gamma_mixture.yaml")])
        assert code == 3
        assert "numerical failure" in capsys.readouterr().err
