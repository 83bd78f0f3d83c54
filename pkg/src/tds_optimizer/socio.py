"""
Социально-когнитивные варианты генетического алгоритма

Перекрывающиеся касты, разделенные касты с оператором обучения и
гравитационная мутация в духе TOPSIS. Каждый вариант переопределяет
точки расширения GeneticAlgorithm.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from functools import partial
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .engine import (
    EngineConfig,
    EngineError,
    GeneticAlgorithm,
    Individual,
    Objective,
    RunTrace,
    SearchBounds,
    binary_tournament,
    replace,
)

logger = logging.getLogger(__name__)

# Сдвиг в весах 1/(cost + ε), чтобы нулевая стоимость не давала деления на ноль
FITNESS_WEIGHT_EPS = 1e-300


class AssignmentMode(str, Enum):
    """Способ распределения особей по кастам"""
    RANDOM = "random"
    ELITIST = "elitist"


class WeightingVariant(str, Enum):
    """Способ усреднения точек притяжения и отталкивания"""
    UNIFORM = "uniform"
    FITNESS_PROPORTIONAL = "fitness_proportional"
    LINEAR_RANK = "linear_rank"
    EXPONENTIAL_RANK = "exponential_rank"


def _check_probability(name: str, value: float, errors: List[str]):
    if not 0.0 <= value <= 1.0:
        errors.append(f"{name} должен лежать в [0, 1]")


@dataclass(frozen=True)
class CasteConfig:
    number_of_castes: int = 3
    chance_for_non_caste_parents: float = 0.05
    assignment_mode: AssignmentMode = AssignmentMode.RANDOM

    def __post_init__(self):
        object.__setattr__(self, "assignment_mode", AssignmentMode(self.assignment_mode))
        errors = []
        if self.number_of_castes < 1:
            errors.append("number_of_castes должен быть не меньше 1")
        _check_probability("chance_for_non_caste_parents", self.chance_for_non_caste_parents, errors)
        if errors:
            raise EngineError("; ".join(errors))


@dataclass(frozen=True)
class SeparatedConfig:
    number_of_castes: int = 5
    assign_castes_interval: int = 3000
    learn_from_better_caste_probability: float = 0.1
    learn_from_variable: float = 0.1

    def __post_init__(self):
        errors = []
        if self.number_of_castes < 1:
            errors.append("number_of_castes должен быть не меньше 1")
        if self.assign_castes_interval < 1:
            errors.append("assign_castes_interval должен быть не меньше 1")
        _check_probability("learn_from_better_caste_probability", self.learn_from_better_caste_probability, errors)
        _check_probability("learn_from_variable", self.learn_from_variable, errors)
        if errors:
            raise EngineError("; ".join(errors))


@dataclass(frozen=True)
class TopsisConfig:
    p: float = 0.1
    t_best: float = 0.1
    t_worst: float = 0.0
    best_individuals_count: int = 10
    worst_individuals_count: int = 10
    weighting_variant: WeightingVariant = WeightingVariant.UNIFORM

    def __post_init__(self):
        object.__setattr__(self, "weighting_variant", WeightingVariant(self.weighting_variant))
        errors = []
        for name in ("p", "t_best", "t_worst"):
            _check_probability(name, getattr(self, name), errors)
        for name in ("best_individuals_count", "worst_individuals_count"):
            if getattr(self, name) < 1:
                errors.append(f"{name} должен быть не меньше 1")
        if errors:
            raise EngineError("; ".join(errors))


# Касты

def caste_quotas(count: int, number_of_castes: int) -> List[int]:
    """
    Число потомков на касту

    Args:
        count: Сколько потомков нужно за поколение
        number_of_castes: Число каст

    Returns:
        Квоты по кастам; остаток от деления достается касте 1
    """
    quotas = [count // number_of_castes] * number_of_castes
    quotas[0] += count % number_of_castes
    return quotas


def caste_sizes(size: int, number_of_castes: int) -> List[int]:
    """
    Размеры каст: отличаются не больше чем на 1, остаток у первых каст

    Args:
        size: Размер популяции
        number_of_castes: Число каст

    Returns:
        Список размеров, например [34, 33, 33] для 100 особей и 3 каст
    """
    base, extra = divmod(size, number_of_castes)
    return [base + 1 if index < extra else base for index in range(number_of_castes)]


def caste_members(population: Sequence[Individual], caste: int) -> List[Individual]:
    """Особи касты caste в порядке популяции"""
    return [individual for individual in population if individual.caste == caste]


def assign_castes(
    population: List[Individual],
    mode: AssignmentMode,
    number_of_castes: int,
    rng: Optional[np.random.Generator] = None,
) -> List[Individual]:
    """
    Распределить особей по кастам почти равного размера

    Если размер популяции не делится на число каст, первые касты получают
    на одну особь больше.

    Args:
        population: Популяция (метки каст проставляются на месте)
        mode: random - случайное разбиение, elitist - блоки по возрастанию стоимости
        number_of_castes: Число каст, от 1 до размера популяции
        rng: Генератор, нужен только для случайного разбиения

    Returns:
        Та же популяция с проставленными кастами
    """
    size = len(population)
    if not 1 <= number_of_castes <= size:
        raise EngineError(f"Число каст {number_of_castes} должно лежать в [1, {size}]")

    if number_of_castes == 1:
        for individual in population:
            individual.caste = 1
        return population

    mode = AssignmentMode(mode)
    if mode == AssignmentMode.ELITIST:
        if any(not individual.evaluated for individual in population):
            raise EngineError("Элитарное распределение требует оцененных особей")
        order = sorted(range(size), key=lambda index: population[index].fitness)
    else:
        if rng is None:
            raise EngineError("Случайное распределение требует генератор")
        order = [int(index) for index in rng.permutation(size)]

    labels = np.repeat(np.arange(1, number_of_castes + 1), caste_sizes(size, number_of_castes))
    for position, index in enumerate(order):
        population[index].caste = int(labels[position])
    return population


def reassign_caste_order(population: List[Individual], number_of_castes: int) -> List[Individual]:
    """
    Переупорядочить касты по стоимости: лучшие блоки в высшие касты

    Args:
        population: Оцененная популяция
        number_of_castes: Число каст

    Returns:
        Та же популяция, каста 1 у лучших особей
    """
    return assign_castes(population, AssignmentMode.ELITIST, number_of_castes)


def select_parents_cross_caste(
    population: Sequence[Individual],
    caste: int,
    chance: float,
    rng: np.random.Generator,
) -> Tuple[Individual, Individual]:
    """
    Пара родителей для касты

    Первый родитель - турнир внутри касты. Второй - тоже внутри касты, но с
    вероятностью chance турнир проходит среди остальных каст. Если других
    каст нет, жребий не бросается.
    """
    members = caste_members(population, caste)
    if not members:
        raise EngineError(f"Каста {caste} пуста")

    first = binary_tournament(members, rng)
    others = [individual for individual in population if individual.caste != caste]
    pool = members
    if others and chance > 0.0 and rng.random() < chance:
        pool = others
    second = binary_tournament(pool, rng)
    return first, second


def child_caste(parent1_caste: int, parent2_caste: int, rng: np.random.Generator) -> int:
    """
    Каста потомка

    Args:
        parent1_caste: Каста первого родителя
        parent2_caste: Каста второго родителя
        rng: Генератор; не используется, если касты родителей совпадают

    Returns:
        Общая каста родителей или каста одного из них с вероятностью 1/2
    """
    if parent1_caste == parent2_caste:
        return parent1_caste
    return parent1_caste if rng.random() < 0.5 else parent2_caste


class CasteAlgorithm(GeneticAlgorithm):
    """Перекрывающиеся касты: размножение в основном внутри касты, замена общая"""

    name = "caste"

    def __init__(self, objective: Objective, config: EngineConfig, bounds: SearchBounds, caste_config: CasteConfig):
        super().__init__(objective, config, bounds)
        if caste_config.number_of_castes > config.population_size:
            raise EngineError("number_of_castes не может превышать population_size")
        if config.offspring_size < caste_config.number_of_castes:
            raise EngineError("offspring_size должен быть не меньше number_of_castes")
        self.caste_config = caste_config

    def on_initialized(self):
        assign_castes(self.population, self.caste_config.assignment_mode, self.caste_config.number_of_castes, self.rng)

    def _inherit(self, parent1: Individual, parent2: Individual) -> int:
        return child_caste(parent1.caste, parent2.caste, self.rng)

    def make_offspring(self, count: int) -> List[Individual]:
        castes = self.caste_config.number_of_castes
        quotas = caste_quotas(count, castes)

        # После общей замены каста может опустеть: ее квота уходит лучшей непустой касте
        present = {individual.caste for individual in self.population}
        first_present = min(present)
        for index in range(castes):
            if index + 1 not in present and quotas[index]:
                quotas[first_present - 1] += quotas[index]
                quotas[index] = 0

        offspring: List[Individual] = []
        for index, quota in enumerate(quotas):
            if not quota:
                continue
            select = partial(
                select_parents_cross_caste,
                self.population, index + 1, self.caste_config.chance_for_non_caste_parents, self.rng,
            )
            offspring.extend(self.breed(quota, select, self._inherit))
        return offspring


def learning_operator(
    individual: Individual,
    population: Sequence[Individual],
    config: SeparatedConfig,
    rng: np.random.Generator,
) -> Individual:
    """
    Обучение у особи из более высокой касты

    С вероятностью learn_from_better_caste_probability выбирается учитель:
    равновероятно одна из строго более высоких каст, затем равновероятно
    особь в ней. Каждый ген копируется с вероятностью learn_from_variable.
    Особи высшей касты не меняются.
    """
    caste = individual.caste
    if caste is None or caste <= 1 or config.learn_from_better_caste_probability <= 0.0:
        return individual
    if rng.random() >= config.learn_from_better_caste_probability:
        return individual

    higher = sorted({other.caste for other in population if other.caste is not None and other.caste < caste})
    if not higher:
        return individual

    chosen = higher[int(rng.integers(len(higher)))]
    members = caste_members(population, chosen)
    mentor = members[int(rng.integers(len(members)))]

    copy_mask = rng.random(len(individual.genes)) < config.learn_from_variable
    if copy_mask.any():
        individual.set_genes(np.where(copy_mask, mentor.genes, individual.genes))
    return individual


class SeparatedCasteAlgorithm(GeneticAlgorithm):
    """Разделенные касты: независимая эволюция, обучение и периодическая переоценка порядка каст"""

    name = "separated"

    def __init__(self, objective: Objective, config: EngineConfig, bounds: SearchBounds, separated_config: SeparatedConfig):
        super().__init__(objective, config, bounds)
        castes = separated_config.number_of_castes
        if config.population_size // castes < 2:
            raise EngineError("В каждой касте должно быть не меньше 2 особей")
        if config.offspring_size < castes:
            raise EngineError("offspring_size должен быть не меньше number_of_castes")
        self.separated_config = separated_config
        self.caste_sizes = caste_sizes(config.population_size, castes)
        self.next_reassignment = separated_config.assign_castes_interval

    def on_initialized(self):
        assign_castes(self.population, AssignmentMode.ELITIST, self.separated_config.number_of_castes)
        self.next_reassignment = self.separated_config.assign_castes_interval

    def make_offspring(self, count: int) -> List[Individual]:
        offspring: List[Individual] = []
        quotas = caste_quotas(count, self.separated_config.number_of_castes)
        for index, quota in enumerate(quotas):
            if not quota:
                continue
            caste = index + 1
            members = caste_members(self.population, caste)
            offspring.extend(self.breed(
                quota,
                partial(self.tournament_pair, members),
                lambda parent1, parent2, caste=caste: caste,
            ))
        return offspring

    def post_variation(self, offspring: List[Individual]):
        for child in offspring:
            learning_operator(child, self.population, self.separated_config, self.rng)
        super().post_variation(offspring)

    def replace_population(self, offspring: List[Individual]) -> List[Individual]:
        survivors: List[Individual] = []
        for caste in range(1, self.separated_config.number_of_castes + 1):
            survivors.extend(replace(
                caste_members(self.population, caste),
                caste_members(offspring, caste),
                self.caste_sizes[caste - 1],
            ))
        return survivors

    def post_replacement(self):
        interval = self.separated_config.assign_castes_interval
        if self.evaluator.used >= self.next_reassignment:
            reassign_caste_order(self.population, self.separated_config.number_of_castes)
            while self.next_reassignment <= self.evaluator.used:
                self.next_reassignment += interval
            logger.debug("Порядок каст обновлен на %d вычислениях", self.evaluator.used)
        super().post_replacement()


# Гравитационная мутация

def _ranking_weights(costs: np.ndarray, variant: WeightingVariant, attract: bool) -> np.ndarray:
    """Веса для особей, упорядоченных от ранга 1 (самая значимая) до ранга count"""
    count = len(costs)
    ranks = np.arange(1, count + 1, dtype=float)
    variant = WeightingVariant(variant)

    if variant == WeightingVariant.UNIFORM:
        return np.ones(count)
    if variant == WeightingVariant.LINEAR_RANK:
        return count - ranks + 1.0
    if variant == WeightingVariant.EXPONENTIAL_RANK:
        return 2.0 ** -ranks

    weights = 1.0 / (costs + FITNESS_WEIGHT_EPS) if attract else costs.astype(float)
    if not np.all(np.isfinite(weights)) or weights.sum() <= 0.0:
        return np.ones(count)
    return weights


def attraction_point(population: Sequence[Individual], count: int, variant: WeightingVariant) -> np.ndarray:
    """
    Точка притяжения: взвешенное среднее генотипов count лучших особей

    Args:
        population: Оцененная популяция
        count: Сколько лучших особей участвует
        variant: Схема весов

    Returns:
        Вектор генов той же длины, что и у особей
    """
    ranked = sorted(population, key=lambda individual: individual.fitness)[:count]
    return _weighted_point(ranked, variant, attract=True)


def repulsion_point(population: Sequence[Individual], count: int, variant: WeightingVariant) -> np.ndarray:
    """
    Точка отталкивания: взвешенное среднее генотипов count худших особей

    Args:
        population: Оцененная популяция
        count: Сколько худших особей участвует (ранг 1 - худшая)
        variant: Схема весов

    Returns:
        Вектор генов той же длины, что и у особей
    """
    ranked = sorted(population, key=lambda individual: individual.fitness)[-count:][::-1]
    return _weighted_point(ranked, variant, attract=False)


def _weighted_point(ranked: List[Individual], variant: WeightingVariant, attract: bool) -> np.ndarray:
    if not ranked:
        raise EngineError("Нет особей для вычисления точки")
    if any(not individual.evaluated for individual in ranked):
        raise EngineError("Точка притяжения требует оцененных особей")
    genes = np.array([individual.genes for individual in ranked])
    costs = np.array([individual.fitness for individual in ranked])
    weights = _ranking_weights(costs, variant, attract)
    return np.average(genes, axis=0, weights=weights)


def topsis_mutation(
    individual: Individual,
    attract: np.ndarray,
    repulse: np.ndarray,
    config: TopsisConfig,
    bounds: Optional[SearchBounds] = None,
) -> Individual:
    """
    Притяжение к лучшим и отталкивание от худших

    x' = x + t_best(attract - x) - t_worst(repulse - x); при t_best = 1
    особь переносится ровно в точку притяжения.
    """
    x = individual.genes
    genes = (1.0 - config.t_best) * x + config.t_best * attract - config.t_worst * (repulse - x)
    if bounds is not None:
        genes = bounds.clip(genes)
    return Individual(genes=genes, caste=individual.caste)


class TopsisAlgorithm(GeneticAlgorithm):
    """Базовый цикл плюс гравитационная мутация выжившей популяции"""

    name = "topsis"

    def __init__(self, objective: Objective, config: EngineConfig, bounds: SearchBounds, topsis_config: TopsisConfig):
        super().__init__(objective, config, bounds)
        for name in ("best_individuals_count", "worst_individuals_count"):
            if getattr(topsis_config, name) > config.population_size:
                raise EngineError(f"{name} не может превышать population_size")
        self.topsis_config = topsis_config

    def post_replacement(self):
        config = self.topsis_config
        if config.p > 0.0:
            attract = attraction_point(self.population, config.best_individuals_count, config.weighting_variant)
            repulse = repulsion_point(self.population, config.worst_individuals_count, config.weighting_variant)
            selected = [index for index in range(len(self.population)) if self.rng.random() < config.p]

            # Переоценки расходуют бюджет; лишние отобранные особи пропускаются
            for index in selected[:self.evaluator.remaining]:
                mutated = topsis_mutation(self.population[index], attract, repulse, config, self.bounds)
                self.evaluator.evaluate(mutated)
                self.population[index] = mutated
        super().post_replacement()


def caste_run(
    objective: Objective,
    engine_config: EngineConfig,
    caste_config: CasteConfig,
    bounds: SearchBounds,
) -> RunTrace:
    """Один прогон кастового ГА"""
    return CasteAlgorithm(objective, engine_config, bounds, caste_config).run()


def separated_run(
    objective: Objective,
    engine_config: EngineConfig,
    separated_config: SeparatedConfig,
    bounds: SearchBounds,
) -> RunTrace:
    """Один прогон раздельного кастового ГА"""
    return SeparatedCasteAlgorithm(objective, engine_config, bounds, separated_config).run()


def topsis_run(
    objective: Objective,
    engine_config: EngineConfig,
    topsis_config: TopsisConfig,
    bounds: SearchBounds,
) -> RunTrace:
    """
    Один прогон ГА с TOPSIS-мутацией

    Args:
        objective: Целевая функция
        engine_config: Параметры базового ГА
        topsis_config: Параметры мутации
        bounds: Границы генов; мутировавшие гены обрезаются по ним

    Returns:
        Трасса прогона
    """
    return TopsisAlgorithm(objective, engine_config, bounds, topsis_config).run()
