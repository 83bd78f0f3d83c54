import unittest

import numpy as np

from tds_optimizer.engine import (
    BudgetedEvaluator,
    EngineConfig,
    EngineError,
    EngineHooks,
    GeneticAlgorithm,
    Individual,
    SearchBounds,
    binary_tournament,
    init_population,
    polynomial_mutation,
    replace,
    run,
    sbx_crossover,
)


def sphere(genes: np.ndarray) -> float:
    return float(np.sum(genes ** 2))


class CountingObjective:
    """Целевая функция, которая запоминает все вычисленные генотипы."""

    def __init__(self, bounds: SearchBounds):
        self.bounds = bounds
        self.calls = 0
        self.out_of_bounds = 0

    def __call__(self, genes: np.ndarray) -> float:
        self.calls += 1
        if not self.bounds.contains(genes):
            self.out_of_bounds += 1
        return sphere(genes)


def evaluated(costs, size: int = 2):
    return [Individual(genes=np.full(size, float(c)), fitness=float(c)) for c in costs]


class TestInitialization(unittest.TestCase):

    def test_degenerate_interval(self):
        bounds = SearchBounds.uniform(0.3, 0.3, 4)
        population = init_population(EngineConfig(), bounds, np.random.default_rng(1))
        self.assertEqual(len(population), 100)
        for individual in population:
            self.assertTrue(np.all(individual.genes == 0.3))
            self.assertFalse(individual.evaluated)

    def test_deterministic(self):
        bounds = SearchBounds.uniform(-1, 1, 8)
        first = init_population(EngineConfig(), bounds, np.random.default_rng(5))
        second = init_population(EngineConfig(), bounds, np.random.default_rng(5))
        for a, b in zip(first, second):
            self.assertTrue(np.array_equal(a.genes, b.genes))

    def test_uniform_mean(self):
        config = EngineConfig(population_size=10_000, evaluation_budget=10_000)
        population = init_population(config, SearchBounds.uniform(0, 1, 1), np.random.default_rng(2))
        mean = np.mean([individual.genes[0] for individual in population])
        self.assertAlmostEqual(mean, 0.5, delta=0.02)

    def test_invalid_bounds(self):
        with self.assertRaises(EngineError):
            SearchBounds(np.array([1.0]), np.array([0.0]))


class TestSelection(unittest.TestCase):

    def test_single_member(self):
        population = evaluated([4.0])
        self.assertIs(binary_tournament(population, np.random.default_rng(0)), population[0])

    def test_two_members(self):
        rng = np.random.default_rng(0)
        population = evaluated([2.0, 1.0])
        for _ in range(100):
            self.assertEqual(binary_tournament(population, rng).fitness, 1.0)

    def test_worst_never_wins(self):
        rng = np.random.default_rng(0)
        population = evaluated([1.0, 2.0, 3.0])
        winners = [binary_tournament(population, rng).fitness for _ in range(10_000)]
        self.assertNotIn(3.0, winners)

    def test_unevaluated_member(self):
        population = evaluated([1.0]) + [Individual(genes=np.zeros(2))]
        with self.assertRaises(EngineError):
            binary_tournament(population, np.random.default_rng(0))


class TestVariation(unittest.TestCase):

    def setUp(self):
        self.bounds = SearchBounds.uniform(0.0, 1.0, 1)

    def test_sbx_identical_parents(self):
        rng = np.random.default_rng(3)
        parent = np.array([0.4])
        for _ in range(100):
            c1, c2 = sbx_crossover(parent, parent, self.bounds, 1.0, 20.0, rng)
            self.assertTrue(np.array_equal(c1, parent))
            self.assertTrue(np.array_equal(c2, parent))

    def test_sbx_disabled(self):
        rng = np.random.default_rng(3)
        c1, c2 = sbx_crossover(np.array([0.0]), np.array([1.0]), self.bounds, 0.0, 20.0, rng)
        self.assertEqual(c1[0], 0.0)
        self.assertEqual(c2[0], 1.0)

    def test_sbx_symmetry(self):
        rng = np.random.default_rng(4)
        children = []
        for _ in range(10_000):
            c1, c2 = sbx_crossover(np.array([0.0]), np.array([1.0]), self.bounds, 1.0, 20.0, rng)
            self.assertAlmostEqual(c1[0] + c2[0], 1.0, places=12)
            self.assertTrue(self.bounds.contains(c1) and self.bounds.contains(c2))
            children.extend([c1[0], c2[0]])
        self.assertAlmostEqual(np.mean(children), 0.5, delta=0.02)

    def test_sbx_length_mismatch(self):
        with self.assertRaises(EngineError):
            sbx_crossover(np.zeros(2), np.zeros(3), self.bounds, 1.0, 20.0, np.random.default_rng(0))

    def test_mutation_disabled(self):
        rng = np.random.default_rng(5)
        genes = np.array([0.25, 0.75])
        bounds = SearchBounds.uniform(0.0, 1.0, 2)
        self.assertTrue(np.array_equal(polynomial_mutation(genes, bounds, 0.0, 20.0, rng), genes))

    def test_mutation_at_lower_bound(self):
        rng = np.random.default_rng(6)
        for _ in range(10_000):
            mutated = polynomial_mutation(np.array([0.0]), self.bounds, 1.0, 20.0, rng)
            self.assertGreaterEqual(mutated[0], 0.0)

    def test_mutation_midpoint_mean(self):
        rng = np.random.default_rng(7)
        values = [polynomial_mutation(np.array([0.5]), self.bounds, 1.0, 20.0, rng)[0] for _ in range(100_000)]
        self.assertAlmostEqual(np.mean(values), 0.5, delta=0.005)


class TestReplacement(unittest.TestCase):

    def test_worse_offspring(self):
        population = evaluated([1.0, 2.0, 3.0])
        survivors = replace(population, evaluated([5.0, 6.0]))
        self.assertEqual([s.fitness for s in survivors], [1.0, 2.0, 3.0])

    def test_better_offspring_replaces_worst(self):
        population = evaluated([1.0, 2.0, 3.0])
        survivors = replace(population, evaluated([0.5]))
        self.assertEqual([s.fitness for s in survivors], [0.5, 1.0, 2.0])

    def test_matches_sort_oracle(self):
        rng = np.random.default_rng(8)
        for _ in range(50):
            population = evaluated(rng.integers(0, 10, size=10))
            offspring = evaluated(rng.integers(0, 10, size=4))
            merged = population + offspring
            oracle = [merged[i] for i in sorted(range(len(merged)), key=lambda i: (merged[i].fitness, i))][:10]
            survivors = replace(population, offspring)
            self.assertEqual([id(s) for s in survivors], [id(s) for s in oracle])


class TestRun(unittest.TestCase):

    def setUp(self):
        self.bounds = SearchBounds.uniform(-1.0, 1.0, 8)

    def test_budget_equals_population(self):
        config = EngineConfig(evaluation_budget=100, rng_seed=3)
        trace = run(sphere, config, self.bounds)
        self.assertEqual(trace.evaluations_used, 100)
        self.assertEqual(len(trace.best_history), 100)

        population = init_population(config, self.bounds, np.random.default_rng(3))
        best = min(sphere(individual.genes) for individual in population)
        self.assertEqual(trace.final_cost, best)

    def test_deterministic(self):
        config = EngineConfig(evaluation_budget=2000, rng_seed=9)
        self.assertTrue(run(sphere, config, self.bounds).same_as(run(sphere, config, self.bounds)))

    def test_budget_exactness_and_bounds(self):
        objective = CountingObjective(self.bounds)
        trace = run(objective, EngineConfig(evaluation_budget=1010, rng_seed=1), self.bounds)
        self.assertEqual(objective.calls, 1010)
        self.assertEqual(trace.evaluations_used, 1010)
        self.assertEqual(objective.out_of_bounds, 0)

    def test_best_so_far_nonincreasing(self):
        trace = run(sphere, EngineConfig(evaluation_budget=3000, rng_seed=2), self.bounds)
        history = trace.best_so_far()
        self.assertTrue(np.all(np.diff(history) <= 0.0))
        self.assertEqual([index for index, _ in trace.best_history], list(range(1, 3001)))

    def test_sphere_converges(self):
        trace = run(sphere, EngineConfig(rng_seed=0), self.bounds)
        self.assertEqual(trace.evaluations_used, 15000)
        self.assertLess(trace.final_cost, 1e-3)

    def test_hooks_are_called(self):
        calls = {"pre": 0, "post": 0, "replacement": 0}

        def pre(algorithm):
            calls["pre"] += 1

        def post(algorithm, offspring):
            self.assertEqual(len(offspring), 20)
            calls["post"] += 1

        def after(algorithm):
            calls["replacement"] += 1

        hooks = EngineHooks(pre_variation=pre, post_variation=post, post_replacement=after)
        GeneticAlgorithm(sphere, EngineConfig(evaluation_budget=300), self.bounds, hooks).run()
        self.assertEqual(calls, {"pre": 10, "post": 10, "replacement": 10})

    def test_evaluator_budget(self):
        evaluator = BudgetedEvaluator(sphere, 1)
        evaluator.evaluate(Individual(genes=np.zeros(2)))
        self.assertEqual(evaluator.remaining, 0)
        with self.assertRaises(EngineError):
            evaluator.evaluate(Individual(genes=np.zeros(2)))

    def test_invalid_config(self):
        with self.assertRaises(EngineError):
            EngineConfig(evaluation_budget=50)
        with self.assertRaises(EngineError):
            EngineConfig(offspring_size=3)
        with self.assertRaises(EngineError):
            EngineConfig(mutation_probability=1.5)


if __name__ == "__main__":
    unittest.main()
