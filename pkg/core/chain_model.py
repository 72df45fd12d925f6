"""Модель цепи Маркова с двумя переходными и двумя поглощающими состояниями.

Генератор Q, решение прямых уравнений Колмогорова в замкнутой форме и
независимый расчёт экспоненты матрицы рядом Тейлора.
"""

import logging
import math

import numpy as np

from .exceptions import InternalConsistencyError, InvalidParameterError, ModelDegeneracyError
from .models import STATE_COUNT, ClosedFormCoefficients, GeneratorMatrix, RateVector, TransitionMatrix


logger = logging.getLogger(__name__)

DEGENERACY_TOLERANCE = 1e-12
PROBABILITY_TOLERANCE = 1e-9
SERIES_ORDER = 18
SERIES_NORM_BOUND = 0.5


def _check_rates(theta: RateVector) -> None:
    negatives = theta.negative_components()
    if negatives:
        index = negatives[0]
        logger.error("Отрицательная интенсивность θ%d = %s", index, theta.as_array()[index - 1])
        raise InvalidParameterError(
            f"Интенсивность θ{index} должна быть >= 0, получено {theta.as_array()[index - 1]}"
        )


def _check_time(t: float) -> None:
    if t < 0:
        raise InvalidParameterError(f"Время должно быть >= 0, получено {t}")


def build_generator(theta: RateVector) -> GeneratorMatrix:
    """Строит матрицу интенсивностей Q.

    Args:
        theta: Интенсивности (λ12, λ14, μ21, λ23, λ24)

    Returns:
        Матрица 4x4 с нулевыми строками поглощающих состояний

    Raises:
        InvalidParameterError: Если хотя бы одна интенсивность отрицательна
    """
    _check_rates(theta)
    q = np.zeros((STATE_COUNT, STATE_COUNT))
    q[0] = [-theta.gamma1, theta.lambda12, 0.0, theta.lambda14]
    q[1] = [theta.mu21, -theta.gamma2, theta.lambda23, theta.lambda24]
    return GeneratorMatrix(q)


def transient_determinant(theta: RateVector) -> float:
    """det(B) = γ1·γ2 − μ21·λ12 для блока переходных состояний."""
    return theta.gamma1 * theta.gamma2 - theta.mu21 * theta.lambda12


def discriminant(theta: RateVector) -> float:
    """D = (γ1 + γ2)² − 4γ1γ2 + 4λ12μ21."""
    # (γ1 + γ2)² − 4γ1γ2 written as (γ1 − γ2)² to avoid cancellation
    return (theta.gamma1 - theta.gamma2) ** 2 + 4.0 * theta.lambda12 * theta.mu21


def characteristic_roots(theta: RateVector) -> tuple:
    """Корни w1 < w2 характеристического уравнения блока переходных состояний.

    Raises:
        ModelDegeneracyError: Если дискриминант не превышает допуск (кратный корень)
    """
    g1, g2 = theta.gamma1, theta.gamma2
    disc = discriminant(theta)
    if disc <= DEGENERACY_TOLERANCE:
        logger.debug("Кратный корень: дискриминант %s", disc)
        raise ModelDegeneracyError(
            f"Кратный корень характеристического уравнения (дискриминант {disc:.3e}), используйте экспоненту через ряд"
        )
    w1 = (-(g1 + g2) - math.sqrt(disc)) / 2.0
    # product of the roots is det(B)
    w2 = transient_determinant(theta) / w1
    return w1, w2


def closed_form_coefficients(theta: RateVector) -> ClosedFormCoefficients:
    """Вычисляет коэффициенты A1–A15 и G1–G4 решения в замкнутой форме.

    Raises:
        ModelDegeneracyError: Если μ21 = 0, корни кратные или один из корней равен нулю
    """
    _check_rates(theta)
    if theta.mu21 == 0:
        raise ModelDegeneracyError("Замкнутая форма делит на mu21 = 0, используйте экспоненту через ряд")
    w1, w2 = characteristic_roots(theta)
    if abs(w1) <= DEGENERACY_TOLERANCE or abs(w2) <= DEGENERACY_TOLERANCE:
        raise ModelDegeneracyError(
            f"Нулевой корень характеристического уравнения ({w1}, {w2}), используйте экспоненту через ряд"
        )

    g1 = theta.gamma1
    l14, m21, l23, l24 = theta.lambda14, theta.mu21, theta.lambda23, theta.lambda24

    a1 = (w2 + g1) / (w2 - w1)
    a2 = (w1 + g1) / (w1 - w2)
    a3 = a1 * (w1 + g1) / m21
    a4 = a2 * (w2 + g1) / m21
    a5 = l23 * a3 / w1
    a6 = l23 * a4 / w2
    gc1 = l14 * a1 + l24 * a3
    gc2 = l14 * a2 + l24 * a4
    a7 = gc1 / w1
    a8 = gc2 / w2
    a9 = m21 / (w1 - w2)
    a10 = (w1 + g1) / (w1 - w2)
    a11 = (w2 + g1) / (w2 - w1)
    a12 = l23 * a10 / w1
    a13 = l23 * a11 / w2
    gc3 = l14 * a9 + l24 * a10
    gc4 = l24 * a11 - l14 * a9
    a14 = gc3 / w1
    a15 = gc4 / w2

    return ClosedFormCoefficients(
        w1=w1, w2=w2,
        a1=a1, a2=a2, a3=a3, a4=a4, a5=a5, a6=a6, a7=a7, a8=a8,
        a9=a9, a10=a10, a11=a11, a12=a12, a13=a13, a14=a14, a15=a15,
        g1=gc1, g2=gc2, g3=gc3, g4=gc4,
    )


def _finalize_probabilities(p: np.ndarray) -> np.ndarray:
    """Обрезает шум округления и нормирует строки.

    Raises:
        InternalConsistencyError: Если элемент выходит за [0, 1] больше чем на допуск
    """
    if p.min() < -PROBABILITY_TOLERANCE or p.max() > 1.0 + PROBABILITY_TOLERANCE:
        logger.error("Вероятности вне [0, 1]: min=%s max=%s", p.min(), p.max())
        raise InternalConsistencyError(
            f"Вероятности перехода вне [0, 1]: min {p.min():.3e}, max {p.max():.3e}"
        )
    p = np.clip(p, 0.0, 1.0)
    return p / p.sum(axis=1, keepdims=True)


def transition_matrix_closed_form(theta: RateVector, t: float) -> TransitionMatrix:
    """Матрица переходных вероятностей P(t) по формулам в замкнутой форме.

    Args:
        theta: Интенсивности
        t: Время в годах

    Returns:
        Стохастическая по строкам матрица P(t)

    Raises:
        InvalidParameterError: Если t < 0
        ModelDegeneracyError: Если коэффициенты не определены
    """
    _check_time(t)
    c = closed_form_coefficients(theta)
    e1, e2 = math.exp(c.w1 * t), math.exp(c.w2 * t)
    m1, m2 = math.expm1(c.w1 * t), math.expm1(c.w2 * t)

    p = np.zeros((STATE_COUNT, STATE_COUNT))
    p[0, 0] = c.a1 * e1 + c.a2 * e2
    p[0, 1] = c.a3 * e1 + c.a4 * e2
    p[0, 2] = c.a5 * m1 + c.a6 * m2
    p[0, 3] = c.a7 * m1 + c.a8 * m2
    p[1, 0] = c.a9 * (e1 - e2)
    p[1, 1] = c.a10 * e1 + c.a11 * e2
    p[1, 2] = c.a12 * m1 + c.a13 * m2
    p[1, 3] = c.a14 * m1 + c.a15 * m2
    p[2, 2] = 1.0
    p[3, 3] = 1.0
    return TransitionMatrix(_finalize_probabilities(p), t)


def matrix_exponential_series(q: GeneratorMatrix, t: float) -> TransitionMatrix:
    """Экспонента exp(Qt) масштабированием и возведением в квадрат ряда Тейлора.

    Ряд обрывается на члене 18-го порядка после масштабирования ‖Qt/2^s‖₁ ≤ 0.5.
    """
    _check_time(t)
    a = np.asarray(q.q, dtype=float) * t
    norm = np.linalg.norm(a, 1)
    squarings = 0 if norm <= SERIES_NORM_BOUND else int(math.ceil(math.log2(norm / SERIES_NORM_BOUND)))
    a = a / 2.0 ** squarings

    result = np.eye(STATE_COUNT)
    term = np.eye(STATE_COUNT)
    for k in range(1, SERIES_ORDER + 1):
        term = term @ a / k
        result = result + term
    for _ in range(squarings):
        result = result @ result
    return TransitionMatrix(_finalize_probabilities(result), t)


def transition_matrix(theta: RateVector, t: float) -> TransitionMatrix:
    """P(t) в замкнутой форме, а для вырожденных θ через ряд."""
    try:
        return transition_matrix_closed_form(theta, t)
    except ModelDegeneracyError as e:
        logger.debug("Замкнутая форма неприменима (%s), используется ряд", str(e))
        return matrix_exponential_series(build_generator(theta), t)
