"""Сводные характеристики подобранной модели.

Средние времена пребывания и их дисперсии дельта-методом, распределение по
состояниям в момент t, ожидаемые численности когорты, предельное
распределение и его асимптотическая ковариация через псевдообратную Q′.
"""

import logging
from typing import Optional, Sequence, Tuple

import numpy as np

from .absorption import z_matrix
from .chain_model import (
    DEGENERACY_TOLERANCE, build_generator, closed_form_coefficients,
    transient_determinant, transition_matrix,
)
from .exceptions import InfiniteSojournError, InternalConsistencyError, ModelDegeneracyError
from .models import (
    RATE_NAMES, CohortVector, LimitingDistributionResult, OccupancyVector, RateVector,
    SojournSummary,
)


logger = logging.getLogger(__name__)

LIMIT_TOLERANCE = 1e-8
PINV_RCOND = 1e-10


def sojourn_means(theta: RateVector) -> Tuple[float, float]:
    """s1 = 1/γ1, s2 = 1/γ2 в годах.

    Raises:
        InfiniteSojournError: Если γ1 или γ2 равна нулю
    """
    for state, gamma in ((1, theta.gamma1), (2, theta.gamma2)):
        if gamma <= 0:
            logger.error("Нулевая интенсивность выхода из состояния %d", state)
            raise InfiniteSojournError(
                f"Состояние {state} имеет нулевую интенсивность выхода, время пребывания бесконечно"
            )
    return 1.0 / theta.gamma1, 1.0 / theta.gamma2


def _sojourn_gradients(strict: bool) -> Tuple[np.ndarray, np.ndarray]:
    if strict:
        return np.array([-1.0, -1.0, 0.0, 0.0, 0.0]), np.array([0.0, 0.0, -1.0, -1.0, -1.0])
    d = -np.ones(len(RATE_NAMES))
    return d, d


def sojourn_variances(theta: RateVector, var_theta: np.ndarray, strict: bool = False) -> Tuple[float, float]:
    """var(s_i) = γ_i⁻⁴·dᵀ·var(θ)·d.

    По умолчанию d = (−1, …, −1) для обоих состояний; при strict=True
    в градиенте остаются только интенсивности, входящие в q_ii.
    """
    sojourn_means(theta)
    var_theta = np.asarray(var_theta, dtype=float)
    d1, d2 = _sojourn_gradients(strict)
    var_s1 = theta.gamma1 ** -4 * float(d1 @ var_theta @ d1)
    var_s2 = theta.gamma2 ** -4 * float(d2 @ var_theta @ d2)
    return var_s1, var_s2


def sojourn_summary(theta: RateVector, var_theta: np.ndarray, strict: bool = False) -> SojournSummary:
    s1, s2 = sojourn_means(theta)
    var_s1, var_s2 = sojourn_variances(theta, var_theta, strict)
    return SojournSummary(s1=s1, s2=s2, var_s1=var_s1, var_s2=var_s2)


def occupancy_at(pi0: OccupancyVector, theta: RateVector, t: float) -> OccupancyVector:
    """π(t) = π(0)·P(t)."""
    pi = pi0.pi @ transition_matrix(theta, t).p
    return OccupancyVector(pi / pi.sum(), t)


def expected_counts(u0: CohortVector, theta: RateVector, t: float) -> CohortVector:
    """u(t) = u(0)·P(t); общая численность сохраняется."""
    return CohortVector(np.maximum(u0.u @ transition_matrix(theta, t).p, 0.0), t)


def _absorption_limits(theta: RateVector) -> np.ndarray:
    """Пределы P_ij(t) при t → ∞ для i = 1, 2 и j = 3, 4."""
    try:
        c = closed_form_coefficients(theta)
        return np.array([
            [-c.a5 - c.a6, -c.a7 - c.a8],
            [-c.a12 - c.a13, -c.a14 - c.a15],
        ])
    except ModelDegeneracyError as e:
        logger.debug("Предел по замкнутой форме недоступен (%s), используется −Z", str(e))
        return -z_matrix(theta)


def limiting_distribution(pi0: OccupancyVector, theta: RateVector) -> np.ndarray:
    """Предельное распределение (0, 0, π3, 1 − π3).

    Raises:
        ModelDegeneracyError: Если блок переходных состояний вырожден
        InternalConsistencyError: Если π4 не совпадает с независимым расчётом
    """
    b_det = transient_determinant(theta)
    if b_det <= DEGENERACY_TOLERANCE:
        raise ModelDegeneracyError(
            f"Блок переходных состояний вырожден (det {b_det:.3e}), предельное распределение не определено"
        )
    limits = _absorption_limits(theta)
    p01, p02, p03, p04 = pi0.pi
    pi3 = p01 * limits[0, 0] + p02 * limits[1, 0] + p03
    pi4 = 1.0 - pi3
    cross_check = p01 * limits[0, 1] + p02 * limits[1, 1] + p04
    if abs(cross_check - pi4) > LIMIT_TOLERANCE:
        raise InternalConsistencyError(
            f"Предельная вероятность состояния 4 не совпадает: {pi4:.12f} vs {cross_check:.12f}"
        )
    return np.array([0.0, 0.0, pi3, pi4])


def svd_pseudoinverse(m: np.ndarray) -> np.ndarray:
    """Псевдообратная Мура–Пенроуза через сингулярное разложение.

    Сингулярные числа ниже 1e-10·σ_max считаются нулевыми.
    """
    return np.linalg.pinv(np.asarray(m, dtype=float), rcond=PINV_RCOND)


def limiting_covariance(
        cvec: Sequence[float], theta: RateVector, var_theta: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    """Ковариация предельного распределения A(θ)·var(θ)·A(θ)ᵀ.

    C(θ) = cvec ⊗ (1, 1, 1, 1, 1), A(θ) = −[Q′]⁺·C(θ).

    Returns:
        Ковариационная матрица 4x4 и матрица чувствительности A(θ) 4x5
    """
    c = np.outer(np.asarray(cvec, dtype=float), np.ones(len(RATE_NAMES)))
    q_prime = build_generator(theta).q.T
    sensitivity = -svd_pseudoinverse(q_prime) @ c
    covariance = sensitivity @ np.asarray(var_theta, dtype=float) @ sensitivity.T
    return (covariance + covariance.T) / 2.0, sensitivity


def limiting_distribution_result(
        pi0: OccupancyVector,
        theta: RateVector,
        var_theta: np.ndarray,
        cvec: Optional[Sequence[float]] = None,
) -> LimitingDistributionResult:
    """Предельное распределение с ковариацией; без cvec используется само распределение."""
    pi_inf = limiting_distribution(pi0, theta)
    cvec = pi_inf if cvec is None else np.asarray(cvec, dtype=float)
    covariance, sensitivity = limiting_covariance(cvec, theta, var_theta)
    return LimitingDistributionResult(pi_inf=pi_inf, covariance=covariance, sensitivity=sensitivity, cvec=cvec)


def years_months(years: float) -> Tuple[int, int]:
    """Переводит дробные годы в (годы, месяцы), месяцы = round(12·дробная часть)."""
    whole = int(years)
    months = int(round(12 * (years - whole)))
    if months == 12:
        whole, months = whole + 1, 0
    return whole, months