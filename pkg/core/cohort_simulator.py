"""Точное моделирование траекторий цепи и построение панельных таблиц.

Каждый субъект получает собственный поток Philox, выведенный из (seed, номер
субъекта), поэтому результат не зависит от порядка обработки.
"""

import logging
from collections import defaultdict
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .chain_model import build_generator
from .exceptions import InvalidParameterError
from .models import (
    ABSORBING_STATES, STATE_COUNT, ObservationSchedule, PanelDataset, RateVector, SimulationConfig,
    TransitionCountTable, Trajectory,
)


logger = logging.getLogger(__name__)

PATH_CHANNEL = 0
MISSING_CHANNEL = 1
GAP_TOLERANCE = 1e-9

Record = Tuple[int, float, int]


def subject_stream(seed: int, index: int, channel: int = PATH_CHANNEL) -> np.random.Generator:
    """Независимый поток случайных чисел для субъекта index."""
    sequence = np.random.SeedSequence(seed, spawn_key=(channel, index))
    return np.random.Generator(np.random.Philox(sequence))


def _check_state(state: int) -> None:
    if not 1 <= state <= STATE_COUNT:
        raise InvalidParameterError(f"Состояние должно лежать в 1..{STATE_COUNT}, получено {state}")


def _gillespie(q: np.ndarray, start_state: int, horizon: float, rng: np.random.Generator) -> List[Tuple[float, int]]:
    jumps = [(0.0, start_state)]
    t, state = 0.0, start_state
    while True:
        rate = -q[state - 1, state - 1]
        if rate <= 0:
            break
        t += rng.exponential(1.0 / rate)
        if t >= horizon:
            break
        weights = np.clip(q[state - 1], 0.0, None)
        weights[state - 1] = 0.0
        state = int(rng.choice(STATE_COUNT, p=weights / weights.sum())) + 1
        jumps.append((t, state))
    return jumps


def sample_path(theta: RateVector, start_state: int, horizon: float, seed: int, stream_id: int = 0) -> Trajectory:
    """Траектория до поглощения или горизонта.

    Время пребывания ~ Exp(−q_ii), следующее состояние выбирается с
    вероятностями q_ij/(−q_ii).
    """
    _check_state(start_state)
    if horizon <= 0:
        raise InvalidParameterError(f"Горизонт должен быть > 0, получено {horizon}")
    q = build_generator(theta).q
    jumps = _gillespie(q, start_state, horizon, subject_stream(seed, stream_id))
    return Trajectory(tuple(jumps), horizon, stream_id)


def simulate_cohort(theta: RateVector, config: SimulationConfig, horizon: Optional[float] = None) -> List[Trajectory]:
    """Траектории для config.subjects субъектов; начальное состояние из start_distribution."""
    horizon = float(config.visits) if horizon is None else horizon
    if horizon <= 0:
        raise InvalidParameterError(f"Горизонт должен быть > 0, получено {horizon}")
    q = build_generator(theta).q
    start = np.asarray(config.start_distribution, dtype=float)
    trajectories = []
    for index in range(config.subjects):
        rng = subject_stream(config.seed, index)
        start_state = int(rng.choice(STATE_COUNT, p=start / start.sum())) + 1
        trajectories.append(Trajectory(tuple(_gillespie(q, start_state, horizon, rng)), horizon, index))
    logger.info("Смоделировано %d траекторий до горизонта %s", len(trajectories), horizon)
    return trajectories


def observation_records(
        trajectories: Sequence[Trajectory],
        schedule: Union[ObservationSchedule, Sequence[ObservationSchedule]],
) -> List[Record]:
    """Наблюдаемые состояния (subject, time, state) в моменты визитов."""
    schedules = [schedule] * len(trajectories) if isinstance(schedule, ObservationSchedule) else list(schedule)
    if len(schedules) != len(trajectories):
        raise InvalidParameterError(
            f"Получено {len(schedules)} графиков визитов для {len(trajectories)} траекторий"
        )
    records = []
    for subject, (path, visits) in enumerate(zip(trajectories, schedules)):
        if visits.times[-1] > path.horizon + GAP_TOLERANCE:
            raise InvalidParameterError(
                f"Визит в момент {visits.times[-1]} лежит за горизонтом {path.horizon} субъекта {subject}"
            )
        records.extend((subject, t, path.state_at(t)) for t in visits.times)
    return records


def _whole_gap(start: float, end: float, subject) -> int:
    gap = end - start
    rounded = int(round(gap))
    if rounded < 1 or abs(gap - rounded) > GAP_TOLERANCE:
        raise InvalidParameterError(
            f"Субъект {subject}: интервал {gap} между визитами {start} и {end} не равен целому числу лет"
        )
    return rounded


def panelize_records(records: Iterable[Record]) -> PanelDataset:
    """Подсчитывает пары последовательных наблюдений по длинам интервалов.

    Пары, начинающиеся в поглощающем состоянии, отбрасываются.
    """
    by_subject: Dict[object, List[Tuple[float, int]]] = defaultdict(list)
    for subject, time, state in records:
        _check_state(int(state))
        by_subject[subject].append((float(time), int(state)))

    counts: Dict[int, np.ndarray] = {}
    for subject, visits in by_subject.items():
        visits.sort()
        for (t0, s0), (t1, s1) in zip(visits, visits[1:]):
            if s0 in ABSORBING_STATES:
                continue
            dt = _whole_gap(t0, t1, subject)
            counts.setdefault(dt, np.zeros((STATE_COUNT, STATE_COUNT), dtype=np.int64))[s0 - 1, s1 - 1] += 1
    return PanelDataset(tuple(TransitionCountTable(dt, c) for dt, c in counts.items()))


def panelize(
        trajectories: Sequence[Trajectory],
        schedule: Union[ObservationSchedule, Sequence[ObservationSchedule]],
) -> PanelDataset:
    """Таблицы n_ij по интервалам Δt между последовательными визитами."""
    return panelize_records(observation_records(trajectories, schedule))


def irregular_schedule(base: Sequence[float], missing_pattern: Sequence[Iterable[int]]) -> List[ObservationSchedule]:
    """Индивидуальные графики: base без пропущенных визитов (индексы в base).

    Raises:
        InvalidParameterError: Если пропуск затрагивает исходный визит с индексом 0
    """
    base = tuple(float(t) for t in base)
    schedules = []
    for subject, skipped in enumerate(missing_pattern):
        skipped = set(skipped)
        if 0 in skipped:
            raise InvalidParameterError(f"Субъект {subject}: исходный визит нельзя пропустить")
        schedules.append(ObservationSchedule(tuple(t for k, t in enumerate(base) if k not in skipped)))
    return schedules


def random_missing_pattern(subjects: int, visits: int, skip_probability: float, seed: int) -> List[FrozenSet[int]]:
    """Каждый визит 1..visits пропускается независимо с вероятностью skip_probability."""
    if not 0 <= skip_probability < 1:
        raise InvalidParameterError(f"Вероятность пропуска должна лежать в [0, 1), получено {skip_probability}")
    pattern = []
    for index in range(subjects):
        rng = subject_stream(seed, index, MISSING_CHANNEL)
        skipped = np.flatnonzero(rng.random(visits) < skip_probability) + 1
        pattern.append(frozenset(int(k) for k in skipped))
    return pattern


def simulate_panel(theta: RateVector, config: SimulationConfig) -> Tuple[PanelDataset, List[Record]]:
    """Когорта с ежегодными визитами 0..visits и случайными пропусками.

    Returns:
        Таблицы переходов и наблюдаемые записи (subject, time, state)
    """
    base = tuple(float(k) for k in range(config.visits + 1))
    pattern = random_missing_pattern(config.subjects, config.visits, config.skip_probability, config.seed)
    schedules = irregular_schedule(base, pattern)
    trajectories = simulate_cohort(theta, config, horizon=base[-1])
    records = observation_records(trajectories, schedules)
    return panelize_records(records), records
