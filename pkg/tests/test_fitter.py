import io
import json

import pandas as pd
import pytest

from command import BaseCommandTest


class TestFitCommand(BaseCommandTest):
    """
    Groups all unit tests for the FitCommand class.
    """

    @pytest.fixture
    def _command(self, _cli):
        from cherryyield.fitter import FitCommand
        return FitCommand(_cli)

    @pytest.fixture
    def _noiseless_csv(self):
        from cherryyield.ingest import emit_csv
        from cherryyield.simulation import SimulationParams, simulate_season

        return emit_csv(simulate_season(SimulationParams(seed=5, count_scale=1000)))

    @pytest.fixture
    def _noisy_csv(self):
        from cherryyield.ingest import emit_csv
        from cherryyield.simulation import SimulationParams, simulate_season

        return emit_csv(simulate_season(SimulationParams(seed=5, noise_sd=4.0)))

    def test_noiseless_season_fits_exactly(self, _command, _context, _write, _noiseless_csv):
        _context.args.input = _write("ledger.csv", _noiseless_csv)
        _context.args.target = "totalCrops"
        _context.args.format = "csv"

        _command._execute_command(_context)
        rows = pd.read_csv(io.StringIO(_context.output.getvalue()), dtype=str, keep_default_na=False).to_dict("records")

        assert len(rows) == 7
        assert {row["R2"] for row in rows} == {"1.000000"}
        assert {row["n"] for row in rows} == {"18"}
        assert rows[0]["Date"] == "2023-03-02"

    def test_output_file(self, _command, _context, _write, _noisy_csv, tmp_path, save_file_mock):
        _context.args.input = _write("ledger.csv", _noisy_csv)
        _context.args.target = "totalCrops"
        _context.args.format = "csv"
        _context.args.output = str(tmp_path / "out" / "calibration.csv")

        _command._execute_command(_context)

        save_file_mock.assert_called_once()
        assert (tmp_path / "out" / "calibration.csv").read_text(encoding="utf-8").startswith("Date,Object")
        assert _context.output.getvalue() == ""

    def test_json_includes_recommendations(self, _command, _context, _write, _noisy_csv):
        _context.args.input = _write("ledger.csv", _noisy_csv)
        _context.args.target = "goodCrops"
        _context.args.format = "json"

        _command._execute_command(_context)
        payload = json.loads(_context.output.getvalue())

        assert payload["target"] == "goodCrops"
        assert payload["harvest_date"] == "2023-07-14"
        assert len(payload["entries"]) == 7
        assert set(payload["recommendations"]) == {"early", "after_fruit_drop"}
        assert payload["recommendations"]["after_fruit_drop"]["stage"] == "2023-06-06"

    def test_text_report(self, _command, _context, _write, _noisy_csv):
        _context.args.input = _write("ledger.csv", _noisy_csv)
        _context.args.target = "totalCrops"
        _context.args.format = "text"

        _command._execute_command(_context)
        report = _context.output.getvalue()

        assert report.startswith("Calibration of totalCrops for season 2023")
        assert "Ranked forecasting timepoints:" in report
        assert "After fruit drop: Jun-6 (BBCH 75)" in report

    def test_single_branch_has_no_fittable_stages(self, _command, _args, _write, branch_csv, capsys):
        _args.input = _write("ledger.csv", branch_csv)
        _args.target = "totalCrops"

        assert _command.execute(_args) == 1
        assert "no fittable stages" in capsys.readouterr().err

    def test_no_harvest_records(self, _command, _args, _write, branch_csv, capsys):
        _args.input = _write("ledger.csv", "\n".join(branch_csv.splitlines()[:8]) + "\n")
        _args.target = "totalCrops"

        assert _command.execute(_args) == 1
        assert "no target data" in capsys.readouterr().err
