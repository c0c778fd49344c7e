import pandas as pd
import pytest
from openpyxl import load_workbook

from app.services.excel.generator import generate_metrics_workbook
from app.services.flow.metrics import metrics
from app.services.solvers.heuristic import HeuristicConfig, solve_heuristic


@pytest.mark.unit
class TestMetricsWorkbook:
    def test_sheets_and_summary(self, fig1, tmp_path):
        result = solve_heuristic(fig1, HeuristicConfig(prefill=False, warm_start=False))
        path = generate_metrics_workbook(result.report, result.trace, str(tmp_path / "fig1.xlsx"))

        workbook = load_workbook(path)
        assert workbook.sheetnames == ["Synthèse", "Chemins", "Trace"]
        summary = workbook["Synthèse"]
        assert summary["A1"].value == "Indicateur"
        assert summary["B5"].value == "21/2"
        assert summary["A2"].font.bold
        assert workbook["Trace"].max_row == len(result.trace) + 1

    def test_without_trace(self, fig1, tmp_path):
        report = metrics(fig1, solve_heuristic(fig1).flow)
        path = generate_metrics_workbook(report, None, str(tmp_path / "empty.xlsx"))
        trace = load_workbook(path)["Trace"]
        assert trace.max_row == 1
        assert trace["A1"].value == "iter"

    def test_total_volume_is_rational(self, fig1, tmp_path):
        report = metrics(fig1, solve_heuristic(fig1).flow)
        path = generate_metrics_workbook(report, None, str(tmp_path / "volume.xlsx"))
        assert load_workbook(path)["Synthèse"]["B6"].value == "2"

    def test_writer_closed_on_error(self, fig1, tmp_path, mocker):
        close = mocker.spy(pd.ExcelWriter, "close")
        mocker.patch("app.services.excel.generator.metrics_frame", side_effect=RuntimeError("colonnes"))
        report = metrics(fig1, solve_heuristic(fig1).flow)
        with pytest.raises(RuntimeError):
            generate_metrics_workbook(report, None, str(tmp_path / "broken.xlsx"))
        assert close.call_count == 1
