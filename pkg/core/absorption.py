"""Поглощение: блочное разбиение генератора, матрица Z и ожидаемые времена поглощения."""

import logging
from typing import Tuple

import numpy as np

from .chain_model import DEGENERACY_TOLERANCE, build_generator, transient_determinant
from .exceptions import ModelDegeneracyError
from .models import AbsorptionSummary, RateVector


logger = logging.getLogger(__name__)


def partition_generator(theta: RateVector) -> Tuple[np.ndarray, np.ndarray]:
    """Блоки B (переходные → переходные) и A (переходные → поглощающие)."""
    q = build_generator(theta).q
    return q[:2, :2].copy(), q[:2, 2:].copy()


def _inverse_b(theta: RateVector) -> np.ndarray:
    det = transient_determinant(theta)
    if abs(det) <= DEGENERACY_TOLERANCE:
        logger.error("Блок B вырожден: det(B) = %s", det)
        raise ModelDegeneracyError(f"Блок B вырожден (det {det:.3e})")
    b, _ = partition_generator(theta)
    try:
        return np.linalg.inv(b)
    except np.linalg.LinAlgError as e:
        raise ModelDegeneracyError(f"Блок B вырожден: {e}") from e


def z_matrix(theta: RateVector) -> np.ndarray:
    """Z = B⁻¹A; строки суммируются в −1, а −Z содержит вероятности поглощения.

    Raises:
        ModelDegeneracyError: Если B вырожден
    """
    _, a_block = partition_generator(theta)
    return _inverse_b(theta) @ a_block


def expected_absorption_times(theta: RateVector) -> np.ndarray:
    """E(τ) = B⁻¹Z. Строки: начальные состояния 1, 2; столбцы: поглощающие 3, 4."""
    b_inv = _inverse_b(theta)
    _, a_block = partition_generator(theta)
    return b_inv @ (b_inv @ a_block)


def closed_form_etau(theta: RateVector) -> np.ndarray:
    """Четыре явные формулы для E(τ13), E(τ14), E(τ23), E(τ24).

    Raises:
        ModelDegeneracyError: Если det(B) = 0 или γ1 = 0
    """
    g1, g2 = theta.gamma1, theta.gamma2
    det = transient_determinant(theta)
    if abs(det) <= DEGENERACY_TOLERANCE or g1 <= DEGENERACY_TOLERANCE:
        raise ModelDegeneracyError(
            f"Для замкнутой формы времён поглощения нужны det(B) > 0 и gamma1 > 0 (det {det:.3e})"
        )
    l12, l14, m21, l23, l24 = theta.as_array()
    det2 = det * det
    return np.array([
        [
            l12 * l23 * (g1 + g2) / det2,
            (l14 * (g2 * g2 + l12 * m21) + l12 * l24 * (g1 + g2)) / det2,
        ],
        [
            l23 * (g1 * g1 + l12 * m21) / det2,
            (l24 * (g1 * g1 + l12 * m21) + l14 * m21 * (g1 + g2)) / det2,
        ],
    ])


def absorption_summary(theta: RateVector) -> AbsorptionSummary:
    """Полная сводка по поглощению с перекрёстной проверкой явных формул."""
    b, a_block = partition_generator(theta)
    b_inv = _inverse_b(theta)
    z = b_inv @ a_block
    etau = b_inv @ z
    try:
        mismatch = float(np.max(np.abs(etau - closed_form_etau(theta))))
        if mismatch > 1e-8 * max(1.0, float(np.max(np.abs(etau)))):
            logger.warning("Расхождение матричного и явного расчёта E(τ): %s", mismatch)
    except ModelDegeneracyError as e:
        logger.debug("Явные формулы E(τ) неприменимы: %s", str(e))
    return AbsorptionSummary(b=b, a_block=a_block, z=z, etau=etau, b_inverse=b_inv)
