from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .exceptions import ConfigError, EstimationInputError, InvalidParameterError


STATE_COUNT = 4
ABSORBING_STATES = (3, 4)
RATE_NAMES = ("lambda12", "lambda14", "mu21", "lambda23", "lambda24")
# Cells (1-based) that carry information in a count table.
OBSERVABLE_CELLS = (
    (1, 1), (1, 2), (1, 3), (1, 4),
    (2, 1), (2, 2), (2, 3), (2, 4),
)
ESTIMATORS = ("scaled_score", "likelihood")


def frozen_array(values, shape: Optional[Tuple[int, ...]] = None, dtype=float) -> np.ndarray:
    """Copies values into a read-only array, optionally checking the shape."""
    arr = np.array(values, dtype=dtype)
    if shape is not None and arr.shape != shape:
        raise InvalidParameterError(f"Ожидалась размерность {shape}, получена {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class RateVector:
    """The five free transition intensities, per year."""
    lambda12: float
    lambda14: float
    mu21: float
    lambda23: float
    lambda24: float

    @property
    def gamma1(self) -> float:
        """Total exit rate from state 1."""
        return self.lambda12 + self.lambda14

    @property
    def gamma2(self) -> float:
        """Total exit rate from state 2."""
        return self.mu21 + self.lambda23 + self.lambda24

    def as_array(self) -> np.ndarray:
        return np.array([self.lambda12, self.lambda14, self.mu21, self.lambda23, self.lambda24])

    @classmethod
    def from_array(cls, values: Sequence[float]) -> "RateVector":
        values = [float(v) for v in values]
        if len(values) != len(RATE_NAMES):
            raise InvalidParameterError(
                f"Вектор интенсивностей должен содержать {len(RATE_NAMES)} компонент, получено {len(values)}"
            )
        if not all(np.isfinite(values)):
            raise InvalidParameterError(f"Вектор интенсивностей содержит нечисловые компоненты: {values}")
        return cls(*values)

    def negative_components(self) -> List[int]:
        """1-based indices of negative components."""
        return [i + 1 for i, v in enumerate(self.as_array()) if v < 0]

    def clamped(self, floor: float = 0.0) -> "RateVector":
        return RateVector.from_array(np.maximum(self.as_array(), floor))

    def as_dict(self) -> Dict[str, float]:
        return dict(zip(RATE_NAMES, self.as_array().tolist()))


@dataclass(frozen=True)
class GeneratorMatrix:
    """Transition intensity matrix Q, per year."""
    q: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "q", frozen_array(self.q, (STATE_COUNT, STATE_COUNT)))


@dataclass(frozen=True)
class ClosedFormCoefficients:
    """Roots and coefficients of the closed-form transition probabilities."""
    w1: float
    w2: float
    a1: float
    a2: float
    a3: float
    a4: float
    a5: float
    a6: float
    a7: float
    a8: float
    a9: float
    a10: float
    a11: float
    a12: float
    a13: float
    a14: float
    a15: float
    g1: float
    g2: float
    g3: float
    g4: float


@dataclass(frozen=True)
class TransitionMatrix:
    """Row-stochastic matrix P(t)."""
    p: np.ndarray
    t: float

    def __post_init__(self):
        object.__setattr__(self, "p", frozen_array(self.p, (STATE_COUNT, STATE_COUNT)))


@dataclass(frozen=True)
class TransitionCountTable:
    """Observed transition counts n_ij for one interval length."""
    delta_t: int
    counts: np.ndarray

    def __post_init__(self):
        if int(self.delta_t) != self.delta_t or self.delta_t < 1:
            raise EstimationInputError(f"delta_t должно быть целым числом лет >= 1, получено {self.delta_t}")
        object.__setattr__(self, "delta_t", int(self.delta_t))
        counts = np.asarray(self.counts)
        if counts.shape != (STATE_COUNT, STATE_COUNT):
            raise EstimationInputError(
                f"Таблица переходов delta_t={self.delta_t} должна иметь размер 4x4, получено {counts.shape}"
            )
        if np.any(counts < 0) or np.any(counts != np.round(counts)):
            raise EstimationInputError(
                f"Таблица переходов delta_t={self.delta_t} должна содержать неотрицательные целые числа"
            )
        if np.any(counts[2:] != 0):
            raise EstimationInputError(
                f"Таблица переходов delta_t={self.delta_t} содержит переходы из поглощающего состояния"
            )
        object.__setattr__(self, "counts", frozen_array(counts, dtype=np.int64))

    @property
    def row_totals(self) -> np.ndarray:
        """n_1+ and n_2+."""
        return self.counts[:2].sum(axis=1)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def count(self, i: int, j: int) -> int:
        """Count for the 1-based cell (i, j)."""
        return int(self.counts[i - 1, j - 1])

    def __add__(self, other: "TransitionCountTable") -> "TransitionCountTable":
        if other.delta_t != self.delta_t:
            raise EstimationInputError("Складывать можно только таблицы с одинаковым delta_t")
        return TransitionCountTable(self.delta_t, self.counts + other.counts)


@dataclass(frozen=True)
class PanelDataset:
    """Count tables, one per distinct interval length, ordered by delta_t."""
    tables: Tuple[TransitionCountTable, ...]

    def __post_init__(self):
        tables = tuple(sorted(self.tables, key=lambda tbl: tbl.delta_t))
        delta_ts = [tbl.delta_t for tbl in tables]
        if len(set(delta_ts)) != len(delta_ts):
            raise EstimationInputError(f"Повторяющиеся значения delta_t в наборе данных: {delta_ts}")
        object.__setattr__(self, "tables", tables)

    @property
    def delta_ts(self) -> List[int]:
        return [tbl.delta_t for tbl in self.tables]

    @property
    def total_transitions(self) -> int:
        return sum(tbl.total for tbl in self.tables)

    def table(self, delta_t: int) -> TransitionCountTable:
        for tbl in self.tables:
            if tbl.delta_t == delta_t:
                return tbl
        raise EstimationInputError(f"Нет таблицы переходов для delta_t={delta_t}")

    def merged(self, other: "PanelDataset") -> "PanelDataset":
        """Adds the tables of two datasets cell by cell."""
        by_dt = {tbl.delta_t: tbl for tbl in self.tables}
        for tbl in other.tables:
            by_dt[tbl.delta_t] = by_dt[tbl.delta_t] + tbl if tbl.delta_t in by_dt else tbl
        return PanelDataset(tuple(by_dt.values()))


@dataclass(frozen=True)
class ScoreVector:
    """Score components ordered as (lambda12, lambda14, mu21, lambda23, lambda24)."""
    v: np.ndarray
    scaled: bool = False

    def __post_init__(self):
        object.__setattr__(self, "v", frozen_array(self.v, (len(RATE_NAMES),)))


@dataclass(frozen=True)
class HessianApprox:
    """Scaled outer-product Hessian approximation M(theta)."""
    m: np.ndarray
    scale_factor: float
    corrected_cells: Tuple[Tuple[int, int], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "m", frozen_array(self.m, (len(RATE_NAMES), len(RATE_NAMES))))


@dataclass(frozen=True)
class IntervalEstimate:
    """Estimate for a single count table."""
    delta_t: int
    theta: RateVector
    iterations: int
    delta_norm: float
    inverse_hessian: np.ndarray
    log_likelihood: float
    corrected_cells: Tuple[Tuple[int, int], ...] = ()
    trace: Tuple[dict, ...] = ()

    def __post_init__(self):
        object.__setattr__(
            self, "inverse_hessian", frozen_array(self.inverse_hessian, (len(RATE_NAMES), len(RATE_NAMES)))
        )


@dataclass(frozen=True)
class EstimationResult:
    """Per-interval and pooled estimates with the pooled covariance."""
    per_interval: Dict[int, IntervalEstimate]
    pooled_theta: RateVector
    pooled_covariance: np.ndarray
    weights: Dict[int, float]
    estimator: str = "scaled_score"

    def __post_init__(self):
        object.__setattr__(
            self, "pooled_covariance",
            frozen_array(self.pooled_covariance, (len(RATE_NAMES), len(RATE_NAMES)))
        )


@dataclass(frozen=True)
class SojournSummary:
    """Mean sojourn times (years) and their variances (years^2)."""
    s1: float
    s2: float
    var_s1: float
    var_s2: float


@dataclass(frozen=True)
class OccupancyVector:
    """State probability distribution pi(t)."""
    pi: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        pi = frozen_array(self.pi, (STATE_COUNT,))
        if np.any(pi < -1e-12) or abs(pi.sum() - 1.0) > 1e-8:
            raise InvalidParameterError(
                f"Распределение по состояниям должно быть неотрицательным с суммой 1, получено {pi.tolist()}"
            )
        object.__setattr__(self, "pi", pi)


@dataclass(frozen=True)
class CohortVector:
    """Expected patient counts per state."""
    u: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        u = frozen_array(self.u, (STATE_COUNT,))
        if np.any(u < 0):
            raise InvalidParameterError(f"Численности когорты должны быть неотрицательными, получено {u.tolist()}")
        object.__setattr__(self, "u", u)

    @property
    def total(self) -> float:
        return float(self.u.sum())


@dataclass(frozen=True)
class LimitingDistributionResult:
    """Limiting distribution with its delta-method covariance."""
    pi_inf: np.ndarray
    covariance: np.ndarray
    sensitivity: np.ndarray
    cvec: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "pi_inf", frozen_array(self.pi_inf, (STATE_COUNT,)))
        object.__setattr__(self, "covariance", frozen_array(self.covariance, (STATE_COUNT, STATE_COUNT)))
        object.__setattr__(self, "sensitivity", frozen_array(self.sensitivity, (STATE_COUNT, len(RATE_NAMES))))
        object.__setattr__(self, "cvec", frozen_array(self.cvec, (STATE_COUNT,)))


@dataclass(frozen=True)
class AbsorptionSummary:
    """Block partition of Q and expected absorption times.

    etau rows are start states 1, 2; columns are absorbing states 3, 4.
    """
    b: np.ndarray
    a_block: np.ndarray
    z: np.ndarray
    etau: np.ndarray
    b_inverse: np.ndarray

    def __post_init__(self):
        for name in ("b", "a_block", "z", "etau", "b_inverse"):
            object.__setattr__(self, name, frozen_array(getattr(self, name), (2, 2)))

    @property
    def absorption_probabilities(self) -> np.ndarray:
        return -self.z


@dataclass(frozen=True)
class GofIntervalResult:
    """Chi-square contribution of one interval."""
    delta_t: int
    transition_matrix: np.ndarray
    expected_table: np.ndarray
    chi_sq: float
    df: int
    p_value: float


@dataclass(frozen=True)
class GofReport:
    """Pooled chi-square goodness of fit."""
    per_interval: Dict[int, GofIntervalResult]
    pooled_chi_sq: float
    pooled_df: int
    critical_value: float
    reject_null: bool
    significance: float
    p_value: float
    df_note: str
    interpretation: str


@dataclass(frozen=True)
class Trajectory:
    """Exact sample path: (time, state) pairs starting at time 0."""
    jumps: Tuple[Tuple[float, int], ...]
    horizon: float
    stream_id: int = 0

    def state_at(self, t: float) -> int:
        state = self.jumps[0][1]
        for time, next_state in self.jumps:
            if time > t:
                break
            state = next_state
        return state


@dataclass(frozen=True)
class ObservationSchedule:
    """Visit times in years, strictly increasing and starting at 0."""
    times: Tuple[float, ...]

    def __post_init__(self):
        times = tuple(float(t) for t in self.times)
        if not times or times[0] != 0.0:
            raise InvalidParameterError("График визитов должен начинаться в момент 0")
        if any(b <= a for a, b in zip(times, times[1:])):
            raise InvalidParameterError(f"Моменты визитов должны строго возрастать: {times}")
        object.__setattr__(self, "times", times)


@dataclass
class SimulationConfig:
    """Settings for synthetic panel generation."""
    subjects: int = 310
    visits: int = 8
    skip_probability: float = 0.0
    start_distribution: Tuple[float, ...] = (1.0, 0.0, 0.0, 0.0)
    seed: int = 0


@dataclass
class AnalysisConfig:
    """Settings shared by all analysis commands."""
    tolerance: float = 1e-6
    max_iter: int = 50
    significance: float = 0.05
    pi0: Tuple[float, ...] = (1.0, 0.0, 0.0, 0.0)
    u0: Tuple[float, ...] = (1000.0, 0.0, 0.0, 0.0)
    horizons: Tuple[float, ...] = (1.0, 20.0, 60.0)
    strict_gradient: bool = False
    cvec: Optional[Tuple[float, ...]] = None
    estimator: str = "scaled_score"
    zero_cell_correction: float = 0.5
    simulation: SimulationConfig = field(default_factory=SimulationConfig)

    def validate(self) -> None:
        """Checks value ranges.

        Raises:
            ConfigError: If any setting is out of range
        """
        if not self.tolerance > 0:
            raise ConfigError(f"tolerance должно быть > 0, получено {self.tolerance}")
        if self.max_iter < 1:
            raise ConfigError(f"max_iter должно быть >= 1, получено {self.max_iter}")
        if not 0 < self.significance < 1:
            raise ConfigError(f"significance должно лежать в (0, 1), получено {self.significance}")
        _check_distribution("pi0", self.pi0)
        if len(self.u0) != STATE_COUNT or any(u < 0 for u in self.u0):
            raise ConfigError(f"u0 должно содержать 4 неотрицательных числа, получено {self.u0}")
        if any(h < 0 for h in self.horizons):
            raise ConfigError(f"horizons должны быть >= 0, получено {self.horizons}")
        if self.cvec is not None and len(self.cvec) != STATE_COUNT:
            raise ConfigError(f"cvec должно содержать 4 элемента, получено {self.cvec}")
        if self.estimator not in ESTIMATORS:
            raise ConfigError(f"estimator должно быть одним из {ESTIMATORS}, получено {self.estimator!r}")
        if self.zero_cell_correction < 0:
            raise ConfigError(f"zero_cell_correction должно быть >= 0, получено {self.zero_cell_correction}")
        sim = self.simulation
        if sim.subjects < 1 or sim.visits < 1:
            raise ConfigError("Для моделирования нужны subjects >= 1 и visits >= 1")
        if not 0 <= sim.skip_probability < 1:
            raise ConfigError(f"skip_probability должно лежать в [0, 1), получено {sim.skip_probability}")
        _check_distribution("start_distribution", sim.start_distribution)


def _check_distribution(name: str, values: Sequence[float]) -> None:
    if len(values) != STATE_COUNT or any(v < 0 for v in values) or abs(sum(values) - 1.0) > 1e-9:
        raise ConfigError(f"{name} должно содержать 4 неотрицательных числа с суммой 1, получено {tuple(values)}")
