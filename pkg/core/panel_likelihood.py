"""Полное правдоподобие панельных данных и его максимизация методом скоринга Фишера."""

import logging
import math
from typing import List, Optional, Tuple

import numpy as np
from scipy.linalg import expm_frechet

from .chain_model import build_generator, transition_matrix
from .exceptions import EstimationInputError, NonConvergenceError
from .models import RATE_NAMES, STATE_COUNT, RateVector, TransitionCountTable


logger = logging.getLogger(__name__)

RATE_FLOOR = 1e-10
MIN_PROBABILITY = 1e-300
MAX_HALVINGS = 30


def _generator_derivatives() -> np.ndarray:
    """∂Q/∂θ_h для пяти интенсивностей."""
    cells = (
        ((0, 1), 0),  # λ12
        ((0, 3), 0),  # λ14
        ((1, 0), 1),  # μ21
        ((1, 2), 1),  # λ23
        ((1, 3), 1),  # λ24
    )
    derivatives = np.zeros((len(RATE_NAMES), STATE_COUNT, STATE_COUNT))
    for h, ((i, j), row) in enumerate(cells):
        derivatives[h, i, j] = 1.0
        derivatives[h, row, row] = -1.0
    derivatives.setflags(write=False)
    return derivatives


GENERATOR_DERIVATIVES = _generator_derivatives()


def crude_rates(table: TransitionCountTable) -> RateVector:
    """Грубые годовые интенсивности n_ij / (n_i+ · Δt).

    Raises:
        EstimationInputError: Если одна из сумм по строкам равна нулю
    """
    n1, n2 = table.row_totals
    if n1 == 0 or n2 == 0:
        raise EstimationInputError(f"Нулевая сумма строки в таблице delta_t={table.delta_t}")
    c = table.counts
    dt = table.delta_t
    return RateVector(
        c[0, 1] / (n1 * dt), c[0, 3] / (n1 * dt),
        c[1, 0] / (n2 * dt), c[1, 2] / (n2 * dt), c[1, 3] / (n2 * dt),
    )


def panel_log_likelihood(theta: RateVector, table: TransitionCountTable) -> float:
    """log L(θ) = Σ n_ij log P_ij(Δt) по наблюдаемым клеткам."""
    p = transition_matrix(theta, table.delta_t).p
    counts = table.counts
    total = 0.0
    for i in range(2):
        for j in range(STATE_COUNT):
            if counts[i, j] == 0:
                continue
            if p[i, j] <= MIN_PROBABILITY:
                return -math.inf
            total += counts[i, j] * math.log(p[i, j])
    return total


def transition_derivatives(theta: RateVector, t: float) -> Tuple[np.ndarray, np.ndarray]:
    """P(t) и производные ∂P(t)/∂θ_h через производную Фреше экспоненты."""
    qt = build_generator(theta).q * t
    derivatives = np.empty((len(RATE_NAMES), STATE_COUNT, STATE_COUNT))
    p = None
    for h, direction in enumerate(GENERATOR_DERIVATIVES):
        p, derivatives[h] = expm_frechet(qt, direction * t)
    return p, derivatives


def score_and_information(theta: RateVector, table: TransitionCountTable) -> Tuple[np.ndarray, np.ndarray]:
    """Вектор вклада S(θ) и ожидаемая информация I(θ) для одной таблицы."""
    p, dp = transition_derivatives(theta, table.delta_t)
    counts = table.counts
    n_plus = table.row_totals
    score = np.zeros(len(RATE_NAMES))
    information = np.zeros((len(RATE_NAMES), len(RATE_NAMES)))
    for i in range(2):
        for j in range(STATE_COUNT):
            if p[i, j] <= MIN_PROBABILITY:
                continue
            grad = dp[:, i, j]
            score += counts[i, j] * grad / p[i, j]
            information += n_plus[i] * np.outer(grad, grad) / p[i, j]
    return score, information


def inverse_information(theta: RateVector, table: TransitionCountTable) -> np.ndarray:
    """Асимптотическая ковариация I(θ)⁻¹ (псевдообратная при вырожденности)."""
    _, information = score_and_information(theta, table)
    try:
        inverse = np.linalg.inv(information)
    except np.linalg.LinAlgError:
        logger.warning("Информационная матрица вырождена для Δt=%d, используется псевдообратная", table.delta_t)
        inverse = np.linalg.pinv(information, hermitian=True)
    return (inverse + inverse.T) / 2.0


def estimate_interval_likelihood(
        table: TransitionCountTable,
        theta0: RateVector,
        tol: float = 1e-6,
        max_iter: int = 50,
        trace: Optional[List[dict]] = None,
) -> Tuple[RateVector, int, float]:
    """Оценка максимального правдоподобия скорингом Фишера θ ← θ + I(θ)⁻¹S(θ).

    Шаг делится пополам, пока правдоподобие убывает; компоненты не опускаются
    ниже RATE_FLOOR.

    Returns:
        Оценка, число итераций и норма последнего шага

    Raises:
        NonConvergenceError: Если за max_iter итераций шаг не стал меньше tol
    """
    trace = trace if trace is not None else []
    theta = theta0.clamped(RATE_FLOOR)
    log_lik = panel_log_likelihood(theta, table)
    delta_norm = math.inf

    for iteration in range(1, max_iter + 1):
        score, information = score_and_information(theta, table)
        try:
            step = np.linalg.solve(information, score)
        except np.linalg.LinAlgError:
            step = np.linalg.pinv(information, hermitian=True) @ score

        current = theta.as_array()
        for _ in range(MAX_HALVINGS):
            proposal = current + step
            clamped = [h + 1 for h in range(len(proposal)) if proposal[h] < RATE_FLOOR]
            candidate = RateVector.from_array(np.maximum(proposal, RATE_FLOOR))
            candidate_lik = panel_log_likelihood(candidate, table)
            if candidate_lik >= log_lik - 1e-10:
                break
            step = step / 2.0

        if clamped:
            logger.warning("Δt=%d, итерация %d: компоненты %s ограничены снизу", table.delta_t, iteration, clamped)
        delta_norm = float(np.max(np.abs(candidate.as_array() - current)))
        trace.append({
            "iteration": iteration,
            "theta": candidate.as_dict(),
            "delta_norm": delta_norm,
            "log_likelihood": candidate_lik,
            "clamped": clamped,
        })
        theta, log_lik = candidate, candidate_lik
        if delta_norm < tol:
            return theta, iteration, delta_norm

    logger.error("Скоринг не сошёлся для Δt=%d: норма шага %s", table.delta_t, delta_norm)
    raise NonConvergenceError(
        f"Метод скоринга для delta_t={table.delta_t} не сошёлся за {max_iter} итераций "
        f"(последний шаг {delta_norm:.3e})",
        trace,
    )
