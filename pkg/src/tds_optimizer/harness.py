"""
Экспериментальный стенд

Повторные прогоны с фиксированными зернами, сводная статистика по
финальным стоимостям и средние кривые сходимости.
"""

import asyncio
import dataclasses
import hashlib
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Sequence, TYPE_CHECKING

import numpy as np
from tqdm.asyncio import tqdm

from .engine import EngineConfig, GeneticAlgorithm, RunTrace, SearchBounds
from .model import TimeDelayProblem
from .socio import (
    CasteAlgorithm,
    CasteConfig,
    SeparatedCasteAlgorithm,
    SeparatedConfig,
    TopsisAlgorithm,
    TopsisConfig,
)

if TYPE_CHECKING:
    from .checkpoint_manager import CheckpointManager

logger = logging.getLogger(__name__)

DEFAULT_GRID_STRIDE = 100


class Algorithm(str, Enum):
    """Ключ выбора алгоритма; порядок совпадает с порядком сравнения"""
    GENETIC = "genetic"
    CASTE = "caste"
    SEPARATED = "separated"
    TOPSIS = "topsis"


@dataclass(frozen=True)
class ExperimentConfig:
    """Конфигурация серии прогонов одного алгоритма"""
    algorithm: Algorithm = Algorithm.GENETIC
    engine: EngineConfig = field(default_factory=EngineConfig)
    problem: TimeDelayProblem = field(default_factory=TimeDelayProblem.default)
    caste: CasteConfig = field(default_factory=CasteConfig)
    separated: SeparatedConfig = field(default_factory=SeparatedConfig)
    topsis: TopsisConfig = field(default_factory=TopsisConfig)
    repetitions: int = 10
    base_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "algorithm", Algorithm(self.algorithm))
        if self.repetitions < 1:
            raise ValueError("repetitions должен быть не меньше 1")
        if self.base_seed < 0:
            raise ValueError("base_seed должен быть неотрицательным")

    @property
    def seeds(self) -> List[int]:
        return [self.base_seed + index for index in range(self.repetitions)]

    def engine_for(self, seed: int) -> EngineConfig:
        return dataclasses.replace(self.engine, rng_seed=seed)

    def with_algorithm(self, algorithm: Algorithm) -> "ExperimentConfig":
        return dataclasses.replace(self, algorithm=Algorithm(algorithm))

    def fingerprint(self) -> str:
        """Хэш всего, что влияет на результат одного прогона (кроме зерна)"""
        payload = dataclasses.asdict(dataclasses.replace(self, repetitions=1, base_seed=0))
        payload["engine"]["rng_seed"] = 0
        text = json.dumps(payload, sort_keys=True, default=str)
        return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


@dataclass(frozen=True)
class StatsSummary:
    """Строка сводной таблицы: среднее, минимум и стандартное отклонение"""
    algorithm: str
    average: float
    minimum: float
    std: float


@dataclass(frozen=True)
class ConvergenceCurve:
    """Среднее по повторам лучшее значение на сетке вычислений"""
    evaluations: List[int]
    mean_best: List[float]


@dataclass
class ExperimentResult:
    """Все, что стенд знает об одном алгоритме после серии прогонов"""
    algorithm: str
    traces: List[RunTrace]
    summary: StatsSummary
    curve: ConvergenceCurve

    @property
    def best_trace(self) -> RunTrace:
        return min(self.traces, key=lambda trace: trace.final_cost)


def run_algorithm(config: ExperimentConfig, seed: int) -> RunTrace:
    """Один прогон выбранного алгоритма с заданным зерном"""
    problem = config.problem
    engine = config.engine_for(seed)
    bounds = SearchBounds.from_gene_bounds(problem.bounds)

    if config.algorithm == Algorithm.CASTE:
        algorithm = CasteAlgorithm(problem, engine, bounds, config.caste)
    elif config.algorithm == Algorithm.SEPARATED:
        algorithm = SeparatedCasteAlgorithm(problem, engine, bounds, config.separated)
    elif config.algorithm == Algorithm.TOPSIS:
        algorithm = TopsisAlgorithm(problem, engine, bounds, config.topsis)
    else:
        algorithm = GeneticAlgorithm(problem, engine, bounds)

    return algorithm.run()


async def run_experiment(
    config: ExperimentConfig,
    jobs: int = 1,
    checkpoints: Optional["CheckpointManager"] = None,
    progress: bool = False,
) -> List[RunTrace]:
    """
    Выполнить repetitions независимых прогонов

    Args:
        config: Конфигурация эксперимента
        jobs: Максимум одновременных прогонов (1 - в текущем процессе)
        checkpoints: Хранилище завершенных прогонов для возобновления
        progress: Показывать прогресс-бар

    Returns:
        Трассы в порядке зерен
    """
    if jobs < 1:
        raise ValueError("jobs должен быть не меньше 1")

    fingerprint = config.fingerprint()
    traces: dict = {}
    pending: List[int] = []
    for seed in config.seeds:
        stored = checkpoints.load_trace(config.algorithm.value, seed, fingerprint) if checkpoints else None
        if stored is not None:
            traces[seed] = stored
        else:
            pending.append(seed)

    if traces:
        logger.info("%s: загружено %d прогонов из чекпоинтов", config.algorithm.value, len(traces))

    pbar = tqdm(
        total=len(config.seeds),
        initial=len(traces),
        desc=f"Прогоны {config.algorithm.value}",
        unit="прогон",
        dynamic_ncols=True,
        disable=not progress,
    )

    def finished(seed: int, trace: RunTrace):
        traces[seed] = trace
        if checkpoints is not None:
            checkpoints.save_trace(trace, fingerprint)
        pbar.update(1)

    try:
        if jobs == 1 or len(pending) <= 1:
            for seed in pending:
                finished(seed, run_algorithm(config, seed))
        else:
            loop = asyncio.get_running_loop()
            with ProcessPoolExecutor(max_workers=min(jobs, len(pending))) as pool:

                async def run_one(seed: int):
                    trace = await loop.run_in_executor(pool, run_algorithm, config, seed)
                    finished(seed, trace)

                await asyncio.gather(*(run_one(seed) for seed in pending))
    finally:
        pbar.close()

    return [traces[seed] for seed in config.seeds]


def summarize(traces: Sequence[RunTrace], algorithm: Optional[str] = None) -> StatsSummary:
    """Статистика финальных стоимостей; std - по генеральной совокупности (деление на n)"""
    if not traces:
        raise ValueError("Нет трасс для сводки")
    finals = np.array([trace.final_cost for trace in traces])
    return StatsSummary(
        algorithm=algorithm or traces[0].algorithm,
        average=float(np.mean(finals)),
        minimum=float(np.min(finals)),
        std=float(np.std(finals)),
    )


def convergence_curve(traces: Sequence[RunTrace], grid_stride: int = DEFAULT_GRID_STRIDE) -> ConvergenceCurve:
    """Лучшее-на-данный-момент каждые grid_stride вычислений, усредненное по трассам"""
    if not traces:
        raise ValueError("Нет трасс для кривой сходимости")
    if grid_stride < 1:
        raise ValueError("grid_stride должен быть не меньше 1")

    budgets = {trace.evaluations_used for trace in traces}
    if len(budgets) != 1:
        raise ValueError("Трассы должны иметь одинаковый бюджет вычислений")
    budget = budgets.pop()

    grid = list(range(grid_stride, budget + 1, grid_stride))
    if not grid or grid[-1] != budget:
        grid.append(budget)

    series = np.array([trace.best_so_far() for trace in traces])
    indices = np.array(grid) - 1
    means = series[:, indices].mean(axis=0)
    return ConvergenceCurve(evaluations=grid, mean_best=[float(v) for v in means])


def build_result(
    traces: Sequence[RunTrace],
    algorithm: str,
    grid_stride: int = DEFAULT_GRID_STRIDE,
) -> ExperimentResult:
    return ExperimentResult(
        algorithm=algorithm,
        traces=list(traces),
        summary=summarize(traces, algorithm),
        curve=convergence_curve(traces, grid_stride),
    )


async def run_comparison(
    config: ExperimentConfig,
    algorithms: Sequence[Algorithm] = tuple(Algorithm),
    jobs: int = 1,
    checkpoints: Optional["CheckpointManager"] = None,
    progress: bool = False,
    grid_stride: int = DEFAULT_GRID_STRIDE,
) -> List[ExperimentResult]:
    """Все алгоритмы на одних и тех же зернах"""
    results = []
    for algorithm in algorithms:
        experiment = config.with_algorithm(algorithm)
        traces = await run_experiment(experiment, jobs=jobs, checkpoints=checkpoints, progress=progress)
        results.append(build_result(traces, experiment.algorithm.value, grid_stride))
    return results
