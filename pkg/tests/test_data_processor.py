import json

import numpy as np
import pytest
from numpy.testing import assert_allclose

from core.data_processor import DataProcessor
from core.exceptions import DataParsingError
from core.models import RateVector

from .conftest import NAFLD_COUNTS, PUBLISHED_THETA


def test_read_nafld_tables(tables_path):
    dataset = DataProcessor.read_dataset(tables_path)
    assert dataset.delta_ts == [1, 2, 3]
    assert dataset.total_transitions == 1000
    for dt, counts in NAFLD_COUNTS.items():
        assert np.array_equal(dataset.table(dt).counts, counts)


def test_tables_survive_formatting(nafld_dataset):
    text = DataProcessor.format_count_tables(nafld_dataset)
    parsed = DataProcessor.parse_count_tables(text)
    assert parsed.delta_ts == nafld_dataset.delta_ts
    for a, b in zip(parsed.tables, nafld_dataset.tables):
        assert np.array_equal(a.counts, b.counts)


def test_tables_order_by_gap():
    text = "delta_t=2\n1,1,0,0\n1,1,0,0\n0,0,0,0\n0,0,0,0\ndelta_t=1\n2,0,0,0\n0,2,0,0\n0,0,0,0\n0,0,0,0\n"
    assert DataProcessor.parse_count_tables(text).delta_ts == [1, 2]


@pytest.mark.parametrize("text, fragment", [
    ("", "нет таблиц переходов"),
    ("# only a comment\n", "нет таблиц переходов"),
    ("dt=1\n1,1,1,1\n", "Строка 1"),
    ("delta_t=x\n1,1,1,1\n1,1,1,1\n0,0,0,0\n0,0,0,0\n", "целым числом"),
    ("delta_t=1\n1,1,1,1\n1,1,1,1\n0,0,0,0\n", "должно быть 4 строк"),
    ("delta_t=1\n1,1,1\n1,1,1,1\n0,0,0,0\n0,0,0,0\n", "Строка 2"),
    ("delta_t=1\n1,1,1,1\n1,a,1,1\n0,0,0,0\n0,0,0,0\n", "Строка 3"),
    ("delta_t=1\n1,1,1,1\n1,1,1,1\n0,0,1,0\n0,0,0,0\n", "поглощающего"),
    ("delta_t=1\n1,-1,1,1\n1,1,1,1\n0,0,0,0\n0,0,0,0\n", "неотрицательные"),
    ("delta_t=0\n1,1,1,1\n1,1,1,1\n0,0,0,0\n0,0,0,0\n", "delta_t"),
    ("delta_t=1\n1,1,1,1\n1,1,1,1\n0,0,0,0\n0,0,0,0\n"
     "delta_t=1\n1,1,1,1\n1,1,1,1\n0,0,0,0\n0,0,0,0\n", "Повторяющиеся"),
])
def test_malformed_tables(text, fragment):
    with pytest.raises(DataParsingError, match=fragment):
        DataProcessor.parse_count_tables(text)


def test_missing_file_is_parse_error(tmp_path):
    with pytest.raises(DataParsingError):
        DataProcessor.read_dataset(tmp_path / "absent.txt")


def test_records_are_panelized(tmp_path):
    path = tmp_path / "records.csv"
    path.write_text(
        "subject,time,state\n"
        "a,0,1\na,1,1\na,2,2\na,4,3\na,5,3\n"
        "b,0,2\nb,1,1\n",
        encoding="utf-8",
    )
    dataset = DataProcessor.read_dataset(path)
    assert dataset.delta_ts == [1, 2]
    assert dataset.table(1).count(1, 1) == 1
    assert dataset.table(1).count(1, 2) == 1
    assert dataset.table(1).count(2, 1) == 1
    assert dataset.table(2).count(2, 3) == 1
    assert dataset.total_transitions == 4


@pytest.mark.parametrize("text, fragment", [
    ("id,time,state\n1,0,1\n", "заголовок"),
    ("subject,time,state\n1,0\n", "3 поля"),
    ("subject,time,state\n1,zero,1\n", "недопустимое"),
    ("subject,time,state\n1,0,7\n", "1..4"),
    ("subject,time,state\n", "нет записей наблюдений"),
])
def test_malformed_records(text, fragment):
    with pytest.raises(DataParsingError, match=fragment):
        DataProcessor.parse_records(text)


def test_fractional_record_gap_is_parse_error(tmp_path):
    path = tmp_path / "records.csv"
    path.write_text("subject,time,state\n1,0,1\n1,0.5,2\n", encoding="utf-8")
    with pytest.raises(DataParsingError, match="целому числу лет"):
        DataProcessor.read_dataset(path)


def test_records_round_trip(tmp_path):
    records = [(0, 0.0, 1), (0, 1.0, 2), (1, 0.0, 2), (1, 2.0, 4)]
    path = tmp_path / "out" / "records.csv"
    DataProcessor.write_records(records, path)
    parsed = DataProcessor.parse_records(path.read_text(encoding="utf-8"))
    assert [(int(s), t, x) for s, t, x in parsed] == records
    assert DataProcessor.is_records(path.read_text(encoding="utf-8"))


def test_read_model(model_path):
    theta, var_theta = DataProcessor.read_model(model_path)
    assert_allclose(theta.as_array(), PUBLISHED_THETA)
    assert var_theta.shape == (5, 5)
    assert var_theta[0, 1] == -0.04645


def test_model_accepts_list_and_report_wrapper():
    theta, var_theta = DataProcessor.model_from_dict({"model": {"theta": list(PUBLISHED_THETA)}})
    assert theta == RateVector(*PUBLISHED_THETA)
    assert var_theta is None


def test_model_round_trip(tmp_path, theta_hat, var_theta):
    path = tmp_path / "model.json"
    DataProcessor.write_model(theta_hat, var_theta, path)
    assert json.loads(path.read_text(encoding="utf-8"))["theta"]["mu21"] == 0.02805
    theta, restored = DataProcessor.read_model(path)
    assert theta == theta_hat
    assert_allclose(restored, var_theta)


@pytest.mark.parametrize("content", [
    "not json",
    "[1, 2, 3]",
    '{"var_theta": []}',
    '{"theta": {"lambda12": 0.1}}',
    '{"theta": [0.1, 0.2]}',
    '{"theta": [0.1, 0.2, 0.3, 0.4, 0.5], "var_theta": [[1.0]]}',
])
def test_invalid_model_files(tmp_path, content):
    path = tmp_path / "model.json"
    path.write_text(content, encoding="utf-8")
    with pytest.raises(DataParsingError):
        DataProcessor.read_model(path)
