"""Модуль для экспорта документа отчёта в Excel."""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Optional

from openpyxl.styles import Alignment, Font
from openpyxl.workbook import Workbook
from openpyxl.worksheet.worksheet import Worksheet

from .exceptions import ExcelExportError

logger = logging.getLogger(__name__)


@dataclass
class ExcelExportConfig:
    """Конфигурация для экспортера Excel."""
    header_font: Font = Font(bold=True)
    center_alignment: Alignment = Alignment(horizontal='center')
    sheet_name_max_length: int = 31


def _is_matrix(value: Any) -> bool:
    return isinstance(value, list) and bool(value) and all(isinstance(row, list) for row in value)


class ExcelExporter:
    """Управляет экспортом документа отчёта в формат Excel."""

    def __init__(self, config: Optional[ExcelExportConfig] = None):
        """Инициализация с конфигурацией"""
        self.config = config or ExcelExportConfig()

    def export_report(self, document: Dict[str, Any], file_path: Path) -> None:
        """Экспортирует документ в файл Excel: лист на каждый раздел верхнего уровня.

        Args:
            document: Документ отчёта
            file_path: Путь для сохранения файла Excel

        Raises:
            ExcelExportError: Если экспорт завершится неудачей
        """
        try:
            wb = Workbook()
            wb.remove(wb.active)

            self._create_summary_sheet(wb, document)
            for name, section in document.items():
                if isinstance(section, dict):
                    self._create_section_sheet(wb, name, section)

            file_path = Path(file_path)
            file_path.parent.mkdir(parents=True, exist_ok=True)
            wb.save(file_path)
            logger.info("Отчёт экспортирован в %s", file_path)
        except Exception as e:
            logger.error("Ошибка экспорта: %s", str(e), exc_info=True)
            raise ExcelExportError(f"Экспорт не выполнен: {str(e)}") from e

    def _style_header(self, ws: Worksheet) -> None:
        for cell in ws[ws.max_row]:
            cell.font = self.config.header_font
            cell.alignment = self.config.center_alignment

    def _create_summary_sheet(self, wb: Workbook, document: Dict[str, Any]) -> None:
        """Создание листа со сводкой"""
        ws = wb.create_sheet(title="Сводка")
        ws.append([f"Отчёт: {document.get('command', '')}"])
        ws.append([])
        ws.append(["Раздел", "Значение"])
        self._style_header(ws)
        for name, section in document.items():
            if not isinstance(section, (dict, list)):
                ws.append([name, section])
            elif isinstance(section, dict):
                ws.append([name, f"лист '{self._sheet_name(name)}'"])

    def _sheet_name(self, name: str) -> str:
        return name[:self.config.sheet_name_max_length]

    def _create_section_sheet(self, wb: Workbook, name: str, section: Dict[str, Any]) -> None:
        """Создание листа для раздела отчёта"""
        ws = wb.create_sheet(title=self._sheet_name(name))
        ws.append([name])
        self._style_header(ws)
        self._write_mapping(ws, section, prefix="")

    def _write_mapping(self, ws: Worksheet, mapping: Dict[str, Any], prefix: str) -> None:
        for key, value in mapping.items():
            label = f"{prefix}{key}"
            if isinstance(value, dict):
                self._write_mapping(ws, value, prefix=f"{label} / ")
            elif _is_matrix(value):
                ws.append([])
                ws.append([label])
                self._style_header(ws)
                for row in value:
                    ws.append(["", *row])
            elif isinstance(value, list) and any(isinstance(item, dict) for item in value):
                for index, item in enumerate(value):
                    self._write_mapping(ws, item, prefix=f"{label}[{index}] / ")
            elif isinstance(value, list):
                ws.append([label, *value])
            else:
                ws.append([label, value])
