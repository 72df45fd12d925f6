"""Оценка интенсивностей по панельным таблицам переходов.

Квазиньютоновская схема на масштабированном векторе вклада: θ₁ = θ₀ + M(θ₀)⁺S(θ₀),
где S собирается из производных корней характеристического уравнения, а M есть
внешнее произведение S с множителем Σ n_i+²/n_ij. Оценки по интервалам Δt
объединяются с весами, пропорциональными числу переходов в таблице.
"""

import logging
import math
from typing import Dict, List, Optional, Tuple

import numpy as np

from .chain_model import characteristic_roots, discriminant
from .exceptions import EstimationFailureError, EstimationInputError, NonConvergenceError, ZeroCellError
from .models import (
    OBSERVABLE_CELLS, RATE_NAMES, AnalysisConfig, EstimationResult, HessianApprox, IntervalEstimate,
    PanelDataset, RateVector, ScoreVector, TransitionCountTable,
)
from .panel_likelihood import crude_rates, estimate_interval_likelihood, inverse_information, panel_log_likelihood


logger = logging.getLogger(__name__)

O_BLOCK = 3
PINV_RCOND = 1e-10


def observed_proportions(table: TransitionCountTable) -> RateVector:
    """Доли (n12/n1+, n14/n1+, n21/n2+, n23/n2+, n24/n2+) без деления на Δt.

    Raises:
        EstimationInputError: Если n1+ или n2+ равна нулю
    """
    n1, n2 = (int(n) for n in table.row_totals)
    if n1 == 0 or n2 == 0:
        logger.error("Нулевая сумма строки в таблице Δt=%d: n1+=%d, n2+=%d", table.delta_t, n1, n2)
        raise EstimationInputError(
            f"Нулевая сумма строки в таблице delta_t={table.delta_t} (n1+={n1}, n2+={n2})"
        )
    return RateVector(
        table.count(1, 2) / n1,
        table.count(1, 4) / n1,
        table.count(2, 1) / n2,
        table.count(2, 3) / n2,
        table.count(2, 4) / n2,
    )


def initial_rates(table: TransitionCountTable) -> RateVector:
    """Начальное приближение θ₀ = n_ij/n_i+ по годовой таблице.

    Raises:
        EstimationInputError: Если таблица не для Δt = 1 или сумма строки равна нулю
    """
    if table.delta_t != 1:
        raise EstimationInputError(
            f"Для начального приближения нужна таблица delta_t=1, получена delta_t={table.delta_t}"
        )
    return observed_proportions(table)


def _signed_sums(theta: RateVector) -> np.ndarray:
    l12, l14, m21, l23, l24 = theta.as_array()
    s4 = l23 + m21 + l24 - l12 - l14
    return np.array([
        l12 + l14 + m21 - l23 - l24,
        l12 + l14 - m21 - l23 - l24,
        m21 + l12 + l23 + l24 - l14,
        s4,
        s4,
    ])


def root_derivatives(theta: RateVector) -> Tuple[np.ndarray, np.ndarray]:
    """Производные корней ∂w1/∂θ_h и ∂w2/∂θ_h.

    Raises:
        ModelDegeneracyError: Если корни кратные
    """
    characteristic_roots(theta)
    half_ratio = 0.5 * _signed_sums(theta) / math.sqrt(discriminant(theta))
    return -0.5 - half_ratio, -0.5 + half_ratio


def score_components(theta: RateVector, delta_t: float) -> ScoreVector:
    """Немасштабированный вклад v_h = t·e^{w1 t}·∂w1/∂θ_h + t·e^{w2 t}·∂w2/∂θ_h при t = Δt."""
    w1, w2 = characteristic_roots(theta)
    d1, d2 = root_derivatives(theta)
    t = float(delta_t)
    v = t * math.exp(w1 * t) * d1 + t * math.exp(w2 * t) * d2
    return ScoreVector(v, scaled=False)


def scaled_score(theta: RateVector, table: TransitionCountTable) -> ScoreVector:
    """S(θ) = (4n1+ + 4n2+)·v для таблицы."""
    n1, n2 = table.row_totals
    factor = 4.0 * n1 + 4.0 * n2
    if factor == 0:
        return ScoreVector(np.zeros(len(RATE_NAMES)), scaled=True)
    return ScoreVector(factor * score_components(theta, table.delta_t).v, scaled=True)


def hessian_approx(score: ScoreVector, table: TransitionCountTable, correction: float = 0.5) -> HessianApprox:
    """M(θ) = Σ n_i+²/n_ij · S·Sᵀ по восьми наблюдаемым клеткам.

    Нулевые клетки заменяются на correction; при correction = 0 это ошибка.

    Raises:
        ZeroCellError: Если клетка нулевая, а поправка отключена
    """
    n_plus = table.row_totals
    scale_factor = 0.0
    corrected = []
    for i, j in OBSERVABLE_CELLS:
        n_ij = float(table.count(i, j))
        if n_ij == 0:
            if correction <= 0:
                logger.error("Нулевая клетка (%d, %d) в таблице Δt=%d", i, j, table.delta_t)
                raise ZeroCellError(
                    f"Клетка ({i}, {j}) таблицы delta_t={table.delta_t} равна нулю", (i, j)
                )
            corrected.append((i, j))
            n_ij = correction
        scale_factor += float(n_plus[i - 1]) ** 2 / n_ij
    if corrected:
        logger.warning("Δt=%d: к нулевым клеткам %s добавлено %s", table.delta_t, corrected, correction)
    m = scale_factor * np.outer(score.v, score.v)
    return HessianApprox(m, scale_factor, tuple(corrected))


def block_pseudoinverse(m: HessianApprox) -> np.ndarray:
    """[[O⁺, 0], [0, 0]] для верхнего левого блока 3x3.

    Сингулярные числа O ниже 1e-10·σ_max считаются нулевыми.

    Raises:
        EstimationFailureError: Если блок O нулевой или содержит нечисловые значения
    """
    o = np.asarray(m.m[:O_BLOCK, :O_BLOCK])
    if not np.all(np.isfinite(o)) or not np.any(o):
        raise EstimationFailureError("Блок O матрицы Гессе нулевой или содержит нечисловые значения")
    try:
        o_inv = np.linalg.pinv(o, rcond=PINV_RCOND, hermitian=True)
    except np.linalg.LinAlgError as e:
        logger.error("Не удалось обратить блок O", exc_info=True)
        raise EstimationFailureError(f"Не удалось обратить блок O матрицы Гессе: {e}") from e
    result = np.zeros((len(RATE_NAMES), len(RATE_NAMES)))
    result[:O_BLOCK, :O_BLOCK] = (o_inv + o_inv.T) / 2.0
    return result


def _step_settled(delta_norm: float, previous_norm: float, tol: float) -> bool:
    return abs(delta_norm - previous_norm) < tol and delta_norm < math.sqrt(tol)


def estimate_interval(
        table: TransitionCountTable,
        theta0: RateVector,
        tol: float = 1e-6,
        max_iter: int = 50,
        correction: float = 0.5,
        trace: Optional[List[dict]] = None,
) -> Tuple[RateVector, int, float]:
    """Итерации θ ← θ + M(θ)⁺S(θ) для одной таблицы.

    Отрицательные компоненты обнуляются с предупреждением. Остановка, когда
    ‖Δθ‖∞ < tol, либо со второй итерации, когда шаг перестал меняться:
    |‖Δθ_k‖∞ − ‖Δθ_{k−1}‖∞| < tol при ‖Δθ_k‖∞ < √tol. Шаг M⁺S через блок ранга один
    не убывает к нулю, а выходит на постоянный уровень порядка 1/(c·‖S‖).

    Returns:
        Оценка, число итераций и норма последнего шага

    Raises:
        NonConvergenceError: Если за max_iter итераций шаг не стал меньше tol и не стабилизировался
    """
    trace = trace if trace is not None else []
    theta = theta0
    delta_norm = math.inf
    previous_norm = math.inf

    for iteration in range(1, max_iter + 1):
        score = scaled_score(theta, table)
        m_inv = block_pseudoinverse(hessian_approx(score, table, correction))
        current = theta.as_array()
        proposal = current + m_inv @ score.v

        clamped = [h + 1 for h in range(len(proposal)) if proposal[h] < 0]
        if clamped:
            logger.warning("Δt=%d, итерация %d: отрицательные компоненты %s обнулены",
                           table.delta_t, iteration, clamped)
        updated = RateVector.from_array(np.maximum(proposal, 0.0))
        delta_norm = float(np.max(np.abs(updated.as_array() - current)))
        trace.append({
            "iteration": iteration,
            "theta": updated.as_dict(),
            "delta_norm": delta_norm,
            "clamped": clamped,
        })
        theta = updated
        if delta_norm < tol:
            return theta, iteration, delta_norm
        if _step_settled(delta_norm, previous_norm, tol):
            logger.info("Δt=%d: шаг %.3e перестал меняться на итерации %d", table.delta_t, delta_norm, iteration)
            return theta, iteration, delta_norm
        previous_norm = delta_norm

    logger.error("Итерации не сошлись для Δt=%d: норма шага %s", table.delta_t, delta_norm)
    raise NonConvergenceError(
        f"Оценка для delta_t={table.delta_t} не сошлась за {max_iter} итераций "
        f"(последний шаг {delta_norm:.3e})",
        trace,
    )


def transition_weights(dataset: PanelDataset) -> Dict[int, float]:
    """Доля переходов каждой таблицы в общем числе переходов.

    Raises:
        EstimationInputError: Если в наборе нет ни одного перехода
    """
    grand_total = dataset.total_transitions
    if not dataset.tables or grand_total == 0:
        raise EstimationInputError("В наборе данных нет ни одного перехода")
    return {tbl.delta_t: tbl.total / grand_total for tbl in dataset.tables}


def pool_estimates(per_interval: Dict[int, RateVector], dataset: PanelDataset) -> RateVector:
    """θ̂ = Σ w(Δt)·θ̂(Δt)."""
    weights = transition_weights(dataset)
    pooled = sum(weights[dt] * per_interval[dt].as_array() for dt in dataset.delta_ts)
    return RateVector.from_array(np.maximum(pooled, 0.0))


def pooled_covariance(per_interval_inverses: Dict[int, np.ndarray], dataset: PanelDataset) -> np.ndarray:
    """var(θ) = Σ w(Δt)·M(θ̂, Δt)⁺."""
    weights = transition_weights(dataset)
    covariance = np.zeros((len(RATE_NAMES), len(RATE_NAMES)))
    for dt in dataset.delta_ts:
        covariance += weights[dt] * np.asarray(per_interval_inverses[dt])
    return (covariance + covariance.T) / 2.0


def _fit_scaled_score(table: TransitionCountTable, config: AnalysisConfig) -> IntervalEstimate:
    theta0 = initial_rates(table) if table.delta_t == 1 else observed_proportions(table)
    trace: List[dict] = []
    theta, iterations, delta_norm = estimate_interval(
        table, theta0, config.tolerance, config.max_iter, config.zero_cell_correction, trace
    )
    hessian = hessian_approx(scaled_score(theta, table), table, config.zero_cell_correction)
    return IntervalEstimate(
        delta_t=table.delta_t,
        theta=theta,
        iterations=iterations,
        delta_norm=delta_norm,
        inverse_hessian=block_pseudoinverse(hessian),
        log_likelihood=panel_log_likelihood(theta, table),
        corrected_cells=hessian.corrected_cells,
        trace=tuple(trace),
    )


def _fit_likelihood(table: TransitionCountTable, config: AnalysisConfig) -> IntervalEstimate:
    trace: List[dict] = []
    theta, iterations, delta_norm = estimate_interval_likelihood(
        table, crude_rates(table), config.tolerance, config.max_iter, trace
    )
    return IntervalEstimate(
        delta_t=table.delta_t,
        theta=theta,
        iterations=iterations,
        delta_norm=delta_norm,
        inverse_hessian=inverse_information(theta, table),
        log_likelihood=panel_log_likelihood(theta, table),
        trace=tuple(trace),
    )


def fit_panel(dataset: PanelDataset, config: Optional[AnalysisConfig] = None) -> EstimationResult:
    """Оценивает θ по каждой таблице и объединяет результаты.

    Args:
        dataset: Таблицы переходов
        config: Настройки анализа (допуск, число итераций, метод оценки)

    Returns:
        Оценки по интервалам, объединённая оценка и её ковариация

    Raises:
        EstimationInputError: Пустой набор или нет таблицы Δt = 1 для масштабированного вклада
        NonConvergenceError: Итерации не сошлись
    """
    config = config or AnalysisConfig()
    if not dataset.tables:
        raise EstimationInputError("В наборе данных нет таблиц переходов")
    if config.estimator == "scaled_score" and 1 not in dataset.delta_ts:
        raise EstimationInputError("Для начального приближения нужна таблица delta_t=1")

    fit = _fit_likelihood if config.estimator == "likelihood" else _fit_scaled_score
    per_interval = {}
    for table in dataset.tables:
        estimate = fit(table, config)
        logger.info("Δt=%d: %d итераций, норма шага %.3e", table.delta_t, estimate.iterations, estimate.delta_norm)
        per_interval[table.delta_t] = estimate

    return EstimationResult(
        per_interval=per_interval,
        pooled_theta=pool_estimates({dt: est.theta for dt, est in per_interval.items()}, dataset),
        pooled_covariance=pooled_covariance(
            {dt: est.inverse_hessian for dt, est in per_interval.items()}, dataset
        ),
        weights=transition_weights(dataset),
        estimator=config.estimator,
    )
