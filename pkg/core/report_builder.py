"""Сборка иерархических документов отчёта из результатов расчётов.

Документ представляет собой словарь из стандартных типов Python, пригодный для JSON,
текстового вывода и экспорта в Excel.
"""

import logging
from typing import Any, Dict, List, Optional

import numpy as np

from .absorption import absorption_summary
from .chain_model import build_generator, characteristic_roots, transition_matrix
from .exceptions import ModelDegeneracyError
from .models import (
    RATE_NAMES, AnalysisConfig, CohortVector, EstimationResult, GofReport, OccupancyVector, PanelDataset,
    RateVector,
)
from .summary_statistics import (
    expected_counts, limiting_distribution_result, occupancy_at, sojourn_means, sojourn_variances,
    svd_pseudoinverse, years_months,
)


logger = logging.getLogger(__name__)


def _matrix(values) -> List[List[float]]:
    return np.asarray(values, dtype=float).tolist()


def _vector(values) -> List[float]:
    return [float(v) for v in values]


def model_section(theta: RateVector, var_theta: Optional[np.ndarray]) -> Dict[str, Any]:
    return {
        "theta": theta.as_dict(),
        "var_theta": None if var_theta is None else _matrix(var_theta),
    }


def estimation_section(result: EstimationResult) -> Dict[str, Any]:
    """θ̂ по интервалам, объединённая оценка, Q и var(θ)."""
    per_interval = {}
    for dt, est in result.per_interval.items():
        per_interval[str(dt)] = {
            "theta": est.theta.as_dict(),
            "iterations": est.iterations,
            "delta_norm": est.delta_norm,
            "log_likelihood": est.log_likelihood,
            "corrected_cells": [list(cell) for cell in est.corrected_cells],
            "inverse_hessian": _matrix(est.inverse_hessian),
            "transition_matrix": _matrix(transition_matrix(est.theta, dt).p),
        }
    theta = result.pooled_theta
    section = {
        "estimator": result.estimator,
        "per_interval": per_interval,
        "weights": {str(dt): w for dt, w in result.weights.items()},
        "pooled_theta": theta.as_dict(),
        "generator": _matrix(build_generator(theta).q),
        "var_theta": _matrix(result.pooled_covariance),
        "model": model_section(theta, result.pooled_covariance),
    }
    try:
        section["characteristic_roots"] = _vector(characteristic_roots(theta))
    except ModelDegeneracyError:
        section["characteristic_roots"] = None
    return section


def _sojourn(theta: RateVector, var_theta: Optional[np.ndarray], strict: bool) -> Dict[str, Any]:
    s1, s2 = sojourn_means(theta)
    section: Dict[str, Any] = {
        "s1": s1,
        "s2": s2,
        "s1_years_months": list(years_months(s1)),
        "s2_years_months": list(years_months(s2)),
        "var_s1": None,
        "var_s2": None,
    }
    if var_theta is not None:
        section["var_s1"], section["var_s2"] = sojourn_variances(theta, var_theta)
        if strict:
            strict_s1, strict_s2 = sojourn_variances(theta, var_theta, strict=True)
            section["strict_var_s1"], section["strict_var_s2"] = strict_s1, strict_s2
    return section


def summary_section(theta: RateVector, var_theta: Optional[np.ndarray], config: AnalysisConfig) -> Dict[str, Any]:
    """Времена пребывания, π(t) и u(t) на горизонтах, предельное распределение."""
    pi0 = OccupancyVector(np.array(config.pi0, dtype=float))
    u0 = CohortVector(np.array(config.u0, dtype=float))
    horizons = []
    for t in config.horizons:
        horizons.append({
            "t": float(t),
            "occupancy": _vector(occupancy_at(pi0, theta, t).pi),
            "expected_counts": _vector(expected_counts(u0, theta, t).u),
        })

    cov_input = var_theta if var_theta is not None else np.zeros((len(RATE_NAMES), len(RATE_NAMES)))
    limit = limiting_distribution_result(pi0, theta, cov_input, config.cvec)
    limiting = {
        "pi": _vector(limit.pi_inf),
        "cvec": _vector(limit.cvec),
        "pseudoinverse_q_transposed": _matrix(svd_pseudoinverse(build_generator(theta).q.T)),
        "sensitivity": _matrix(limit.sensitivity),
        "covariance": None if var_theta is None else _matrix(limit.covariance),
    }
    return {
        "model": model_section(theta, var_theta),
        "sojourn": _sojourn(theta, var_theta, config.strict_gradient),
        "pi0": _vector(pi0.pi),
        "u0": _vector(u0.u),
        "horizons": horizons,
        "limiting": limiting,
    }


def absorption_section(theta: RateVector) -> Dict[str, Any]:
    """B, A, Z, −Z, B⁻¹ и E(τ); недостижимые поглощающие состояния отмечаются."""
    summary = absorption_summary(theta)
    flags = []
    probabilities = summary.absorption_probabilities
    for k, state in enumerate((3, 4)):
        if np.all(probabilities[:, k] == 0):
            flags.append(f"state {state} is unreachable: its E(tau) column is 0")
    return {
        "b": _matrix(summary.b),
        "a_block": _matrix(summary.a_block),
        "b_inverse": _matrix(summary.b_inverse),
        "z": _matrix(summary.z),
        "absorption_probabilities": _matrix(probabilities),
        "etau": _matrix(summary.etau),
        "flags": flags,
    }


def gof_section(report: GofReport) -> Dict[str, Any]:
    return {
        "per_interval": {
            str(dt): {
                "transition_matrix": _matrix(r.transition_matrix),
                "expected_table": _matrix(r.expected_table),
                "chi_sq": r.chi_sq,
                "df": r.df,
                "p_value": r.p_value,
            }
            for dt, r in report.per_interval.items()
        },
        "pooled_chi_sq": report.pooled_chi_sq,
        "pooled_df": report.pooled_df,
        "critical_value": report.critical_value,
        "significance": report.significance,
        "reject_null": report.reject_null,
        "p_value": report.p_value,
        "df_note": report.df_note,
        "interpretation_quote": report.interpretation,
    }


def dataset_section(dataset: PanelDataset) -> Dict[str, Any]:
    return {
        "tables": {str(tbl.delta_t): tbl.counts.tolist() for tbl in dataset.tables},
        "total_transitions": dataset.total_transitions,
        "mass_fractions": {
            str(tbl.delta_t): (tbl.total / dataset.total_transitions if dataset.total_transitions else 0.0)
            for tbl in dataset.tables
        },
    }


def build_document(command: str, **sections: Any) -> Dict[str, Any]:
    """Документ верхнего уровня: имя команды и разделы."""
    return {"command": command, **sections}
