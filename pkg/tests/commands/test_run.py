"""Tests for the run subcommand."""

import csv

import pytest

from fedsaddle.commands.run import default_run_name
from fedsaddle.main import main
from fedsaddle.models import ExperimentConfig


def _data_rows(path):
    lines = [line for line in path.read_text().splitlines() if not line.startswith("#")]
    return list(csv.DictReader(lines))


def _echo(path):
    return dict(
        line[2:].split("=", 1) for line in path.read_text().splitlines() if line.startswith("# ")
    )


class TestRunCommand:
    """Tests for the run subcommand."""

    def test_default_name(self):
        """Test the file stem encodes the cell."""
        config = ExperimentConfig(T=1, M=8, m=4, K=3, seed=2)
        assert default_run_name(config) == "synthetic_pl_sagda_ii_M8_m4_K3_seed2"

    @pytest.mark.integration
    def test_one_row_per_round(self, tmp_path, capsys):
        """Test a 200-round run writes 200 rows plus a summary."""
        argv = ["run", "--problem", "synthetic_pl", "--algo", "sagda_ii", "--M", "16", "--m", "16"]
        argv += ["--K", "5", "--T", "200", "--seed", "7", "--output-dir", str(tmp_path)]
        assert main(argv) == 0

        stem = "synthetic_pl_sagda_ii_M16_m16_K5_seed7"
        rows = _data_rows(tmp_path / f"{stem}.csv")
        assert len(rows) == 200
        assert rows[-1]["round"] == "199"
        assert (tmp_path / f"{stem}_summary.txt").read_text().splitlines()[-1].startswith("wall_seconds: ")

        out = capsys.readouterr().out
        assert f"csv: {tmp_path / stem}.csv" in out
        assert "final grad_norm_phi_sq: " in out

    @pytest.mark.integration
    def test_config_file_merged(self, tmp_path):
        """Test config-file values are echoed and flags override them."""
        config_path = tmp_path / "exp.env"
        config_path.write_text("T=3\nM=2\nm=2\nd=2\nK=4\neta-xl=0.02\n")
        argv = ["run", "--config", str(config_path), "--K", "1", "--name", "merged"]
        assert main(argv + ["--output-dir", str(tmp_path)]) == 0

        echo = _echo(tmp_path / "merged.csv")
        assert (echo["K"], echo["T"], echo["eta_xl"]) == ("1", "3", "0.02")
        assert len(_data_rows(tmp_path / "merged.csv")) == 3

    @pytest.mark.integration
    def test_zero_rounds(self, tmp_path):
        """Test T=0 writes a header-only CSV."""
        assert main(["run", "--T", "0", "--M", "2", "--m", "2", "--d", "2", "--name", "empty", "--output-dir", str(tmp_path)]) == 0
        assert _data_rows(tmp_path / "empty.csv") == []

    @pytest.mark.integration
    def test_default_output_dir(self, mock_settings):
        """Test output goes to the configured directory without --output-dir."""
        assert main(["run", "--T", "2", "--M", "2", "--m", "2", "--d", "2", "--name", "r"]) == 0
        assert (mock_settings.output_dir / "r.csv").exists()

    @pytest.mark.integration
    def test_missing_config_file(self, tmp_path, capsys):
        """Test an absent config file exits 1."""
        assert main(["run", "--config", str(tmp_path / "nope.env"), "--output-dir", str(tmp_path)]) == 1
        assert "config file not found" in capsys.readouterr().err

    @pytest.mark.integration
    def test_dataset_problem(self, tmp_path, libsvm_file):
        """Test a LIBSVM-backed run."""
        argv = ["run", "--problem", "logreg_robust", "--data", str(libsvm_file), "--algo", "fsgda"]
        argv += ["--M", "2", "--m", "2", "--K", "2", "--T", "3", "--name", "lr", "--output-dir", str(tmp_path)]
        assert main(argv) == 0
        echo = _echo(tmp_path / "lr.csv")
        assert echo["n"] == "4"
        assert len(_data_rows(tmp_path / "lr.csv")) == 3
