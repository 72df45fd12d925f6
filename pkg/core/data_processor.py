"""Модуль для чтения и записи входных данных: таблиц переходов, записей наблюдений и модели."""

import csv
import io
import json
import logging
import re
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from .cohort_simulator import Record, panelize_records
from .exceptions import DataParsingError, InvalidParameterError, MarkovModelError
from .models import RATE_NAMES, STATE_COUNT, PanelDataset, RateVector, TransitionCountTable


logger = logging.getLogger(__name__)

HEADER_PATTERN = re.compile(r"^delta_t\s*=\s*(\S+)$")
RECORDS_HEADER = ("subject", "time", "state")


class DataProcessor:
    """Преобразует файлы с данными в структуры модели и обратно"""

    @staticmethod
    def _strip(line: str) -> str:
        return line.split("#", 1)[0].strip()

    @staticmethod
    def _read_text(path: Path) -> str:
        try:
            return Path(path).read_text(encoding="utf-8")
        except OSError as e:
            logger.error("Не удалось прочитать %s: %s", path, str(e), exc_info=True)
            raise DataParsingError(f"Не удалось прочитать {path}: {str(e)}") from e

    @staticmethod
    def _write_text(path: Path, text: str) -> None:
        try:
            path = Path(path)
            path.parent.mkdir(parents=True, exist_ok=True)
            with path.open("w", encoding="utf-8", newline="") as f:
                f.write(text)
        except OSError as e:
            logger.error("Не удалось записать %s: %s", path, str(e), exc_info=True)
            raise DataParsingError(f"Не удалось записать {path}: {str(e)}") from e

    @classmethod
    def parse_count_tables(cls, text: str) -> PanelDataset:
        """Разбирает блоки "delta_t=<k>" с четырьмя строками по четыре целых числа.

        Raises:
            DataParsingError: Если формат нарушен; сообщение содержит номер строки
        """
        lines = [(n, cls._strip(raw)) for n, raw in enumerate(text.splitlines(), start=1)]
        lines = [(n, line) for n, line in lines if line]
        if not lines:
            raise DataParsingError("Во входных данных нет таблиц переходов")

        tables = []
        pos = 0
        while pos < len(lines):
            number, header = lines[pos]
            match = HEADER_PATTERN.match(header)
            if not match:
                raise DataParsingError(f"Строка {number}: ожидался заголовок 'delta_t=<k>', получено {header!r}")
            try:
                delta_t = int(match.group(1))
            except ValueError as e:
                raise DataParsingError(
                    f"Строка {number}: delta_t должно быть целым числом, получено {match.group(1)!r}"
                ) from e

            rows = lines[pos + 1:pos + 1 + STATE_COUNT]
            if len(rows) < STATE_COUNT:
                raise DataParsingError(f"Строка {number}: в таблице delta_t={delta_t} должно быть {STATE_COUNT} строк")
            counts = []
            for row_number, row in rows:
                cells = [c.strip() for c in row.split(",")]
                if len(cells) != STATE_COUNT:
                    raise DataParsingError(
                        f"Строка {row_number}: ожидалось {STATE_COUNT} чисел через запятую, получено {len(cells)}"
                    )
                try:
                    counts.append([int(c) for c in cells])
                except ValueError as e:
                    raise DataParsingError(f"Строка {row_number}: частоты должны быть целыми числами: {row!r}") from e

            try:
                tables.append(TransitionCountTable(delta_t, np.array(counts)))
            except MarkovModelError as e:
                raise DataParsingError(f"Строка {number}: {str(e)}") from e
            pos += 1 + STATE_COUNT

        try:
            return PanelDataset(tuple(tables))
        except MarkovModelError as e:
            raise DataParsingError(str(e)) from e

    @staticmethod
    def format_count_tables(dataset: PanelDataset) -> str:
        blocks = []
        for table in dataset.tables:
            rows = [",".join(str(int(c)) for c in row) for row in table.counts]
            blocks.append("\n".join([f"delta_t={table.delta_t}", *rows]))
        return "\n\n".join(blocks) + "\n"

    @classmethod
    def parse_records(cls, text: str) -> List[Record]:
        """Разбирает CSV с заголовком subject,time,state.

        Raises:
            DataParsingError: Если заголовок или значения некорректны
        """
        body = "\n".join(cls._strip(line) for line in text.splitlines())
        reader = csv.reader(io.StringIO(body))
        records: List[Record] = []
        header_seen = False
        for number, row in enumerate(reader, start=1):
            if not row or not any(c.strip() for c in row):
                continue
            row = [c.strip() for c in row]
            if not header_seen:
                if tuple(row) != RECORDS_HEADER:
                    raise DataParsingError(f"Строка {number}: ожидался заголовок 'subject,time,state'")
                header_seen = True
                continue
            if len(row) != 3:
                raise DataParsingError(f"Строка {number}: ожидалось 3 поля, получено {len(row)}")
            try:
                state = int(row[2])
                records.append((row[0], float(row[1]), state))
            except ValueError as e:
                raise DataParsingError(f"Строка {number}: недопустимое время или состояние: {row!r}") from e
            if not 1 <= state <= STATE_COUNT:
                raise DataParsingError(f"Строка {number}: состояние должно лежать в 1..{STATE_COUNT}, получено {state}")
        if not records:
            raise DataParsingError("Во входных данных нет записей наблюдений")
        return records

    @staticmethod
    def format_records(records: List[Record]) -> str:
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(RECORDS_HEADER)
        for subject, time, state in records:
            writer.writerow([subject, repr(float(time)), int(state)])
        return out.getvalue()

    @staticmethod
    def is_records(text: str) -> bool:
        for line in text.splitlines():
            line = DataProcessor._strip(line)
            if line:
                return line.replace(" ", "").startswith("subject,")
        return False

    @classmethod
    def read_dataset(cls, path: Path) -> PanelDataset:
        """Читает таблицы переходов или записи наблюдений (формат определяется по заголовку).

        Raises:
            DataParsingError: Если файл не читается или формат нарушен
        """
        text = cls._read_text(path)
        if cls.is_records(text):
            records = cls.parse_records(text)
            try:
                dataset = panelize_records(records)
            except MarkovModelError as e:
                raise DataParsingError(f"{path}: {str(e)}") from e
        else:
            dataset = cls.parse_count_tables(text)
        logger.info("Прочитано %d таблиц (%d переходов) из %s", len(dataset.tables), dataset.total_transitions, path)
        return dataset

    @classmethod
    def write_count_tables(cls, dataset: PanelDataset, path: Path) -> None:
        cls._write_text(path, cls.format_count_tables(dataset))

    @classmethod
    def write_records(cls, records: List[Record], path: Path) -> None:
        cls._write_text(path, cls.format_records(records))

    @staticmethod
    def model_to_dict(theta: RateVector, var_theta: Optional[np.ndarray] = None) -> Dict[str, Any]:
        data: Dict[str, Any] = {"theta": theta.as_dict()}
        if var_theta is not None:
            data["var_theta"] = np.asarray(var_theta, dtype=float).tolist()
        return data

    @staticmethod
    def model_from_dict(data: Dict[str, Any]) -> Tuple[RateVector, Optional[np.ndarray]]:
        """θ и var(θ) из словаря; принимает и отчёт estimate (раздел "model").

        Raises:
            DataParsingError: Если θ отсутствует или имеет неверный вид
        """
        if not isinstance(data, dict):
            raise DataParsingError("Файл модели должен содержать JSON-объект")
        data = data.get("model", data)
        raw_theta = data.get("theta")
        try:
            if isinstance(raw_theta, dict):
                theta = RateVector.from_array([raw_theta[name] for name in RATE_NAMES])
            elif isinstance(raw_theta, list):
                theta = RateVector.from_array(raw_theta)
            else:
                raise DataParsingError("В файле модели нет ключа 'theta'")
            var_theta = data.get("var_theta")
            if var_theta is not None:
                var_theta = np.array(var_theta, dtype=float)
                if var_theta.shape != (len(RATE_NAMES), len(RATE_NAMES)):
                    raise DataParsingError(f"var_theta должна иметь размер 5x5, получено {var_theta.shape}")
        except (KeyError, TypeError, ValueError, InvalidParameterError) as e:
            raise DataParsingError(f"Недопустимая модель: {str(e)}") from e
        return theta, var_theta

    @classmethod
    def read_model(cls, path: Path) -> Tuple[RateVector, Optional[np.ndarray]]:
        text = cls._read_text(path)
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            logger.error("Некорректный JSON в %s", path, exc_info=True)
            raise DataParsingError(f"{path}: некорректный JSON: {str(e)}") from e
        return cls.model_from_dict(data)

    @classmethod
    def write_model(cls, theta: RateVector, var_theta: Optional[np.ndarray], path: Path) -> None:
        cls._write_text(path, json.dumps(cls.model_to_dict(theta, var_theta), indent=2, sort_keys=True) + "\n")
