"""Критерий χ² согласия подобранной модели с таблицами переходов."""

import logging
from typing import Dict, Iterable, Tuple

import numpy as np
from scipy.stats import chi2

from .chain_model import transition_matrix
from .exceptions import IllDefinedCellError, InvalidParameterError
from .models import (
    OBSERVABLE_CELLS, STATE_COUNT, GofIntervalResult, GofReport, PanelDataset, RateVector, TransitionCountTable,
)


logger = logging.getLogger(__name__)

EXPECTED_FLOOR = 1e-12
DF_PER_INTERVAL = (STATE_COUNT - 1) * (STATE_COUNT - 1)
DF_NOTE = (
    "Degrees of freedom follow the (4-1)(4-1) = 9 per interval convention; "
    "only 8 cells per interval are informative and 5 intensities are estimated, "
    "so a conventional accounting would give fewer degrees of freedom."
)
INTERPRETATION = (
    "the null hypothesis is rejected while the alternative hypothesis is accepted "
    "and the model fits the data"
)


def expected_table(theta: RateVector, table: TransitionCountTable) -> np.ndarray:
    """E_ij = n_i+·P_ij(Δt) для строк 1, 2; строки 3, 4 нулевые."""
    p = transition_matrix(theta, table.delta_t).p
    expected = np.zeros((STATE_COUNT, STATE_COUNT))
    expected[:2] = table.row_totals[:, None] * p[:2]
    return expected


def chi_square_interval(observed: TransitionCountTable, expected: np.ndarray) -> Tuple[float, int]:
    """Σ (O_ij − E_ij)²/E_ij по восьми наблюдаемым клеткам, df = 9.

    Клетки с E_ij < 1e-12 и O_ij = 0 пропускаются.

    Raises:
        IllDefinedCellError: Если E_ij = 0 при ненулевом O_ij
    """
    expected = np.asarray(expected, dtype=float)
    chi_sq = 0.0
    for i, j in OBSERVABLE_CELLS:
        o = observed.count(i, j)
        e = expected[i - 1, j - 1]
        if e < EXPECTED_FLOOR:
            if o == 0:
                continue
            logger.error("Клетка (%d, %d) Δt=%d: ожидание 0 при наблюдении %d", i, j, observed.delta_t, o)
            raise IllDefinedCellError(
                f"Клетка ({i}, {j}) таблицы delta_t={observed.delta_t}: ожидаемая частота равна нулю, наблюдений {o}"
            )
        chi_sq += (o - e) ** 2 / e
    return chi_sq, DF_PER_INTERVAL


def chi_square_critical_value(significance: float, df: int) -> float:
    """Квантиль χ²_df уровня 1 − significance."""
    if not 0 < significance < 1:
        raise InvalidParameterError(f"Уровень значимости должен лежать в (0, 1), получено {significance}")
    return float(chi2.ppf(1.0 - significance, df))


def pooled_chi_square(
        parts: Iterable[Tuple[float, int]], significance: float = 0.05
) -> Tuple[float, int, bool]:
    """Сумма статистик по интервалам, суммарные df и решение об отклонении H0."""
    parts = list(parts)
    if not parts:
        raise InvalidParameterError("Для суммарной статистики нужен хотя бы один интервал")
    chi_sq = float(sum(stat for stat, _ in parts))
    df = int(sum(d for _, d in parts))
    return chi_sq, df, chi_sq > chi_square_critical_value(significance, df)


def goodness_of_fit(theta: RateVector, dataset: PanelDataset, significance: float = 0.05) -> GofReport:
    """Полная процедура: P(Δt), ожидаемые таблицы, χ² по интервалам и суммарный."""
    per_interval: Dict[int, GofIntervalResult] = {}
    for table in dataset.tables:
        expected = expected_table(theta, table)
        stat, df = chi_square_interval(table, expected)
        per_interval[table.delta_t] = GofIntervalResult(
            delta_t=table.delta_t,
            transition_matrix=transition_matrix(theta, table.delta_t).p,
            expected_table=expected,
            chi_sq=stat,
            df=df,
            p_value=float(chi2.sf(stat, df)),
        )
        logger.info("Δt=%d: χ² = %.4f", table.delta_t, stat)

    pooled, pooled_df, reject = pooled_chi_square(
        ((r.chi_sq, r.df) for r in per_interval.values()), significance
    )
    return GofReport(
        per_interval=per_interval,
        pooled_chi_sq=pooled,
        pooled_df=pooled_df,
        critical_value=chi_square_critical_value(significance, pooled_df),
        reject_null=reject,
        significance=significance,
        p_value=float(chi2.sf(pooled, pooled_df)),
        df_note=DF_NOTE,
        interpretation=INTERPRETATION,
    )
