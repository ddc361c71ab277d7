"""Tests for the check-lr subcommand."""

import json

import pytest

from fedsaddle.main import main

FSGDA_K1 = ["check-lr", "--which", "fsgda", "--K", "1", "--Lf", "1", "--mu", "1"]
FSGDA_K1 += ["--eta-xl", "1e-3", "--eta-yl", "1e-3", "--eta-xg", "1", "--eta-yg", "1"]


class TestCheckLrCommand:
    """Tests for the check-lr subcommand."""

    @pytest.mark.integration
    def test_single_local_step(self, tmp_path, capsys):
        """Test K=1 FSGDA prints every inequality with zero drift."""
        assert main(FSGDA_K1 + ["--output-dir", str(tmp_path)]) == 0
        out = capsys.readouterr().out.splitlines()

        drift = next(line for line in out if line.startswith("local_drift"))
        assert drift.split()[1] == "0.0"
        assert drift.split()[-1] == "yes"
        assert any(line.startswith("primal_descent") for line in out)
        assert any(line.startswith("dual_ascent") for line in out)
        assert out[-1] == f"report: {tmp_path / 'constraints_fsgda.json'}"

        report = json.loads((tmp_path / "constraints_fsgda.json").read_text())
        assert report["inequalities"][0]["lhs"] == 0.0
        assert report["best_effort"] is False

    @pytest.mark.integration
    def test_custom_output_name(self, tmp_path):
        """Test --output names the JSON file."""
        assert main(FSGDA_K1 + ["--output", "mine.json", "--output-dir", str(tmp_path)]) == 0
        assert (tmp_path / "mine.json").exists()

    @pytest.mark.integration
    def test_lipschitz_required(self, tmp_path, capsys):
        """Test --Lf or --estimate must be given."""
        code = main(["check-lr", "--which", "sagda_ii", "--output-dir", str(tmp_path)])
        assert code == 1
        assert "--Lf is required" in capsys.readouterr().err

    @pytest.mark.integration
    def test_estimated_constants(self, tmp_path, capsys):
        """Test --estimate builds the problem and labels the report."""
        argv = ["check-lr", "--which", "sagda_ii", "--estimate", "--budget", "4"]
        argv += ["--M", "2", "--m", "2", "--d", "3", "--output-dir", str(tmp_path)]
        assert main(argv) == 0
        assert "(best-effort constants)" in capsys.readouterr().out
        report = json.loads((tmp_path / "constraints_sagda_ii.json").read_text())
        assert report["best_effort"] is True
        assert report["lipschitz"] > 0.0

    def test_baseline_rejected(self):
        """Test algorithms without conditions are a usage error."""
        with pytest.raises(SystemExit) as exc_info:
            main(["check-lr", "--which", "parallel_sgda", "--Lf", "1"])
        assert exc_info.value.code == 2

    @pytest.mark.integration
    def test_option_one_participation(self, tmp_path):
        """Test Option I sees M and m from the flags."""
        argv = ["check-lr", "--which", "sagda_i", "--Lf", "1", "--M", "8", "--m", "2", "--K", "2"]
        assert main(argv + ["--output-dir", str(tmp_path)]) == 0
        report = json.loads((tmp_path / "constraints_sagda_i.json").read_text())
        # a2 = (2 + 0.1) / 2 + 1 + 16 - 4
        assert report["a_constants"]["a2"] == pytest.approx(14.05)
