"""
Классический генетический алгоритм с вещественным кодированием

Бинарный турнир, SBX-кроссовер, полиномиальная мутация и элитарная
замена (μ+λ). Класс GeneticAlgorithm содержит точки расширения, которые
переопределяют социально-когнитивные варианты.
"""

import logging
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .model import GeneBounds

logger = logging.getLogger(__name__)

# Минимальная разница генов родителей, при которой SBX что-то меняет
SBX_EPS = 1.0e-14

Objective = Callable[[np.ndarray], float]


class EngineError(ValueError):
    """Некорректная конфигурация или состояние эволюционного алгоритма"""


@dataclass(frozen=True)
class SearchBounds:
    """Границы генов в виде массивов numpy"""
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.asarray(self.lower, dtype=float)
        upper = np.asarray(self.upper, dtype=float)
        if lower.shape != upper.shape or lower.ndim != 1:
            raise EngineError("Нижние и верхние границы должны быть векторами одной длины")
        if np.any(lower > upper):
            raise EngineError("Нижняя граница гена превышает верхнюю")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @classmethod
    def from_gene_bounds(cls, bounds: GeneBounds) -> "SearchBounds":
        return cls(np.array(bounds.lower), np.array(bounds.upper))

    @classmethod
    def uniform(cls, low: float, high: float, size: int) -> "SearchBounds":
        return cls(np.full(size, float(low)), np.full(size, float(high)))

    @property
    def size(self) -> int:
        return len(self.lower)

    def clip(self, genes: np.ndarray) -> np.ndarray:
        return np.clip(genes, self.lower, self.upper)

    def contains(self, genes: np.ndarray) -> bool:
        return bool(np.all(genes >= self.lower) and np.all(genes <= self.upper))


@dataclass
class Individual:
    """Особь: гены, кэшированная стоимость и необязательная каста"""
    genes: np.ndarray
    fitness: Optional[float] = None
    caste: Optional[int] = None

    def set_genes(self, genes: np.ndarray):
        """Заменить гены; кэшированная стоимость сбрасывается"""
        self.genes = np.asarray(genes, dtype=float)
        self.fitness = None

    @property
    def evaluated(self) -> bool:
        return self.fitness is not None

    def copy(self) -> "Individual":
        return Individual(genes=self.genes.copy(), fitness=self.fitness, caste=self.caste)


@dataclass(frozen=True)
class EngineConfig:
    """Параметры генетического алгоритма"""
    population_size: int = 100
    offspring_size: int = 20
    crossover_probability: float = 0.9
    crossover_distribution_index: float = 20.0
    mutation_probability: float = 1.0 / 8.0
    mutation_distribution_index: float = 20.0
    evaluation_budget: int = 15000
    rng_seed: int = 0

    def __post_init__(self):
        errors = []
        if self.population_size < 2:
            errors.append("population_size должен быть не меньше 2")
        if self.offspring_size < 2 or self.offspring_size % 2:
            errors.append("offspring_size должен быть четным и не меньше 2")
        for name in ("crossover_probability", "mutation_probability"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                errors.append(f"{name} должен лежать в [0, 1]")
        for name in ("crossover_distribution_index", "mutation_distribution_index"):
            if getattr(self, name) < 0:
                errors.append(f"{name} должен быть неотрицательным")
        if self.evaluation_budget < self.population_size:
            errors.append("evaluation_budget должен быть не меньше population_size")
        if self.rng_seed < 0:
            errors.append("rng_seed должен быть неотрицательным")
        if errors:
            raise EngineError("; ".join(errors))


@dataclass
class RunTrace:
    """История прогона: лучшее значение после каждого вычисления"""
    best_history: List[Tuple[int, float]]
    best_individual: Individual
    evaluations_used: int
    seed: int
    algorithm: str = "genetic"

    @property
    def final_cost(self) -> float:
        return self.best_history[-1][1]

    def best_so_far(self) -> np.ndarray:
        return np.array([value for _, value in self.best_history])

    def same_as(self, other: "RunTrace") -> bool:
        """Побитовое совпадение истории и лучшей особи"""
        return (
            self.best_history == other.best_history
            and self.evaluations_used == other.evaluations_used
            and np.array_equal(self.best_individual.genes, other.best_individual.genes)
            and self.best_individual.fitness == other.best_individual.fitness
        )


class BudgetedEvaluator:
    """Счетчик вычислений целевой функции с учетом бюджета и лучшего решения"""

    def __init__(self, objective: Objective, budget: int):
        self.objective = objective
        self.budget = budget
        self.used = 0
        self.best: Optional[Individual] = None
        self.best_history: List[Tuple[int, float]] = []

    @property
    def remaining(self) -> int:
        return self.budget - self.used

    def evaluate(self, individual: Individual) -> float:
        if self.used >= self.budget:
            raise EngineError("Бюджет вычислений исчерпан")

        value = float(self.objective(individual.genes))
        individual.fitness = value
        self.used += 1

        if self.best is None or value < self.best.fitness:
            self.best = individual.copy()
        self.best_history.append((self.used, self.best.fitness))
        return value

    def evaluate_all(self, individuals: Sequence[Individual]):
        for individual in individuals:
            self.evaluate(individual)

    def trace(self, seed: int, algorithm: str) -> RunTrace:
        return RunTrace(
            best_history=list(self.best_history),
            best_individual=self.best.copy(),
            evaluations_used=self.used,
            seed=seed,
            algorithm=algorithm,
        )


def init_population(
    config: EngineConfig,
    bounds: SearchBounds,
    rng: np.random.Generator,
    evaluate: Optional[Callable[[Individual], float]] = None,
) -> List[Individual]:
    """
    Случайная начальная популяция

    Args:
        config: Параметры алгоритма
        bounds: Границы генов
        rng: Генератор случайных чисел прогона
        evaluate: Функция оценки особи (например, BudgetedEvaluator.evaluate)

    Returns:
        Список из population_size особей
    """
    if not isinstance(bounds, SearchBounds):
        raise EngineError("Ожидались границы SearchBounds")

    genes = rng.uniform(bounds.lower, bounds.upper, size=(config.population_size, bounds.size))
    # uniform на [c, c] может вернуть не ровно c
    genes = bounds.clip(genes)
    population = [Individual(genes=row.copy()) for row in genes]

    if evaluate is not None:
        for individual in population:
            evaluate(individual)
    return population


def binary_tournament(population: Sequence[Individual], rng: np.random.Generator) -> Individual:
    """
    Бинарный турнир

    Args:
        population: Оцененные особи
        rng: Генератор

    Returns:
        Лучшая из двух разных случайно выбранных особей; при равной
        стоимости побеждает первая. Единственная особь возвращается без
        розыгрыша.
    """
    if not population:
        raise EngineError("Турнир на пустой популяции")
    if any(not individual.evaluated for individual in population):
        raise EngineError("В турнире участвует неоцененная особь")
    if len(population) == 1:
        return population[0]

    first = int(rng.integers(len(population)))
    second = int(rng.integers(len(population) - 1))
    if second >= first:
        second += 1
    a, b = population[first], population[second]
    return a if a.fitness <= b.fitness else b


def sbx_crossover(
    parent1: np.ndarray,
    parent2: np.ndarray,
    bounds: SearchBounds,
    probability: float,
    eta: float,
    rng: np.random.Generator,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Имитация двоичного кроссовера (SBX) с учетом границ

    С вероятностью probability скрещивается вся пара; каждая пара генов
    рекомбинирует с вероятностью 0.5. Иначе возвращаются копии родителей.
    """
    x1 = np.asarray(parent1, dtype=float)
    x2 = np.asarray(parent2, dtype=float)
    if x1.shape != x2.shape or x1.shape != bounds.lower.shape:
        raise EngineError("Родители и границы должны иметь одинаковую длину")

    child1, child2 = x1.copy(), x2.copy()
    if rng.random() >= probability:
        return child1, child2

    size = len(x1)
    active = rng.random(size) < 0.5
    u = rng.random(size)
    swap = rng.random(size) < 0.5
    active &= np.abs(x1 - x2) > SBX_EPS
    if not active.any():
        return child1, child2

    y1 = np.minimum(x1, x2)[active]
    y2 = np.maximum(x1, x2)[active]
    low = bounds.lower[active]
    high = bounds.upper[active]
    r = u[active]
    spread = y2 - y1
    exponent = 1.0 / (eta + 1.0)

    def spread_factor(beta: np.ndarray) -> np.ndarray:
        alpha = 2.0 - beta ** -(eta + 1.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(
                r <= 1.0 / alpha,
                (r * alpha) ** exponent,
                (1.0 / (2.0 - r * alpha)) ** exponent,
            )

    lower_child = 0.5 * ((y1 + y2) - spread_factor(1.0 + 2.0 * (y1 - low) / spread) * spread)
    upper_child = 0.5 * ((y1 + y2) + spread_factor(1.0 + 2.0 * (high - y2) / spread) * spread)
    lower_child = np.clip(lower_child, low, high)
    upper_child = np.clip(upper_child, low, high)

    swapped = swap[active]
    child1[active] = np.where(swapped, upper_child, lower_child)
    child2[active] = np.where(swapped, lower_child, upper_child)
    return child1, child2


def polynomial_mutation(
    genes: np.ndarray,
    bounds: SearchBounds,
    probability: float,
    eta: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """Полиномиальная мутация: каждый ген возмущается независимо с вероятностью probability"""
    y = np.asarray(genes, dtype=float).copy()
    size = len(y)
    mutate = rng.random(size) < probability
    rnd = rng.random(size)
    if not mutate.any():
        return y

    span = bounds.upper - bounds.lower
    fixed = span == 0.0
    safe_span = np.where(fixed, 1.0, span)
    delta1 = (y - bounds.lower) / safe_span
    delta2 = (bounds.upper - y) / safe_span
    power = eta + 1.0

    lower_branch = rnd <= 0.5
    xy = np.where(lower_branch, 1.0 - delta1, 1.0 - delta2)
    xy = np.clip(xy, 0.0, 1.0)
    value = np.where(
        lower_branch,
        2.0 * rnd + (1.0 - 2.0 * rnd) * xy ** power,
        2.0 * (1.0 - rnd) + 2.0 * (rnd - 0.5) * xy ** power,
    )
    deltaq = np.where(lower_branch, value ** (1.0 / power) - 1.0, 1.0 - value ** (1.0 / power))
    mutated = bounds.clip(y + deltaq * span)
    mutated = np.where(fixed, bounds.lower, mutated)

    return np.where(mutate, mutated, y)


def replace(population: Sequence[Individual], offspring: Sequence[Individual], size: Optional[int] = None) -> List[Individual]:
    """
    Элитарная замена (μ+λ)

    Args:
        population: Текущая популяция
        offspring: Оцененные потомки
        size: Размер новой популяции, по умолчанию размер текущей

    Returns:
        Лучшие size особей объединения; при равной стоимости порядок
        объединения сохраняется
    """
    merged = list(population) + list(offspring)
    if any(not individual.evaluated for individual in merged):
        raise EngineError("Замена требует оцененных особей")
    size = len(population) if size is None else size
    return sorted(merged, key=lambda individual: individual.fitness)[:size]


@dataclass
class EngineHooks:
    """Внешние обработчики для расширения цикла без наследования"""
    pre_variation: Optional[Callable[["GeneticAlgorithm"], None]] = None
    post_variation: Optional[Callable[["GeneticAlgorithm", List[Individual]], None]] = None
    post_replacement: Optional[Callable[["GeneticAlgorithm"], None]] = None


ParentSelector = Callable[[], Tuple[Individual, Individual]]


class GeneticAlgorithm:
    """Поколенческий генетический алгоритм с точками расширения"""

    name = "genetic"

    def __init__(
        self,
        objective: Objective,
        config: EngineConfig,
        bounds: SearchBounds,
        hooks: Optional[EngineHooks] = None,
    ):
        self.objective = objective
        self.config = config
        self.bounds = bounds
        self.hooks = hooks or EngineHooks()
        self.rng = np.random.default_rng(config.rng_seed)
        self.evaluator: Optional[BudgetedEvaluator] = None
        self.population: List[Individual] = []

    def run(self) -> RunTrace:
        """
        Главный цикл: отбор, кроссовер, мутация, оценка, замена

        Последнее поколение усекается так, чтобы не превысить бюджет.
        Случайные числа расходуются в порядке отбор -> кроссовер -> мутация -> обработчики.
        """
        config = self.config
        self.rng = np.random.default_rng(config.rng_seed)
        self.evaluator = BudgetedEvaluator(self.objective, config.evaluation_budget)
        self.population = init_population(config, self.bounds, self.rng, self.evaluator.evaluate)
        self.on_initialized()

        generations = 0
        while self.evaluator.remaining > 0:
            count = min(config.offspring_size, self.evaluator.remaining)
            self.pre_variation()
            offspring = self.make_offspring(count)
            self.post_variation(offspring)
            self.evaluator.evaluate_all(offspring)
            self.population = self.replace_population(offspring)
            self.post_replacement()
            generations += 1

        logger.debug(
            "%s seed=%d: %d поколений, лучшая стоимость %.6g",
            self.name, config.rng_seed, generations, self.evaluator.best.fitness,
        )
        return self.evaluator.trace(config.rng_seed, self.name)

    def breed(
        self,
        count: int,
        select_parents: ParentSelector,
        inherit_caste: Optional[Callable[[Individual, Individual], Optional[int]]] = None,
    ) -> List[Individual]:
        """Произвести count потомков парами; у последней пары может остаться один потомок"""
        config = self.config
        children: List[Individual] = []
        while len(children) < count:
            parent1, parent2 = select_parents()
            genes1, genes2 = sbx_crossover(
                parent1.genes, parent2.genes, self.bounds,
                config.crossover_probability, config.crossover_distribution_index, self.rng,
            )
            for genes in (genes1, genes2):
                if len(children) == count:
                    break
                child = Individual(genes=polynomial_mutation(
                    genes, self.bounds,
                    config.mutation_probability, config.mutation_distribution_index, self.rng,
                ))
                if inherit_caste is not None:
                    child.caste = inherit_caste(parent1, parent2)
                children.append(child)
        return children

    def tournament_pair(self, pool: Sequence[Individual]) -> Tuple[Individual, Individual]:
        return binary_tournament(pool, self.rng), binary_tournament(pool, self.rng)

    # Точки расширения

    def on_initialized(self):
        pass

    def pre_variation(self):
        if self.hooks.pre_variation:
            self.hooks.pre_variation(self)

    def make_offspring(self, count: int) -> List[Individual]:
        population = self.population
        return self.breed(count, lambda: self.tournament_pair(population))

    def post_variation(self, offspring: List[Individual]):
        if self.hooks.post_variation:
            self.hooks.post_variation(self, offspring)

    def replace_population(self, offspring: List[Individual]) -> List[Individual]:
        return replace(self.population, offspring, self.config.population_size)

    def post_replacement(self):
        if self.hooks.post_replacement:
            self.hooks.post_replacement(self)


def run(
    objective: Objective,
    config: EngineConfig,
    bounds: SearchBounds,
    hooks: Optional[EngineHooks] = None,
) -> RunTrace:
    """Один прогон базового генетического алгоритма"""
    return GeneticAlgorithm(objective, config, bounds, hooks).run()
