import pytest
from openpyxl import load_workbook

from core.exceptions import ExcelExportError
from core.excel_exporter import ExcelExportConfig, ExcelExporter
from core.goodness_of_fit import goodness_of_fit
from core.models import AnalysisConfig
from core.report_builder import absorption_section, build_document, gof_section, summary_section


@pytest.fixture
def document(theta_hat, var_theta, nafld_dataset):
    return build_document(
        "report-all",
        summary=summary_section(theta_hat, var_theta, AnalysisConfig()),
        absorption=absorption_section(theta_hat),
        gof=gof_section(goodness_of_fit(theta_hat, nafld_dataset)),
    )


def test_one_sheet_per_section(tmp_path, document):
    path = tmp_path / "reports" / "report.xlsx"
    ExcelExporter().export_report(document, path)
    wb = load_workbook(path)
    assert wb.sheetnames == ["Сводка", "summary", "absorption", "gof"]
    summary = wb["Сводка"]
    assert summary["A1"].value == "Отчёт: report-all"
    assert summary["A4"].value == "command"
    assert summary["B4"].value == "report-all"


def test_section_values_are_written(tmp_path, document):
    path = tmp_path / "report.xlsx"
    ExcelExporter().export_report(document, path)
    ws = load_workbook(path)["gof"]
    rows = {row[0]: row[1:] for row in ws.iter_rows(values_only=True) if row and row[0]}
    assert rows["pooled_df"][0] == 27
    assert rows["pooled_chi_sq"][0] == pytest.approx(119.1166, abs=5e-3)
    assert rows["reject_null"][0] is True
    # matrices are written under their label, one row per matrix row
    absorption = [row for row in load_workbook(path)["absorption"].iter_rows(values_only=True)]
    labels = [row[0] for row in absorption]
    start = labels.index("etau")
    assert absorption[start + 1][1] == pytest.approx(4.9142, abs=1e-4)


def test_long_section_names_are_truncated(tmp_path):
    path = tmp_path / "report.xlsx"
    exporter = ExcelExporter(ExcelExportConfig(sheet_name_max_length=5))
    exporter.export_report({"command": "x", "absorption": {"flags": []}}, path)
    assert load_workbook(path).sheetnames == ["Сводка", "absor"]


def test_unwritable_target(tmp_path, document):
    blocker = tmp_path / "file"
    blocker.write_text("", encoding="utf-8")
    with pytest.raises(ExcelExportError):
        ExcelExporter().export_report(document, blocker / "report.xlsx")
