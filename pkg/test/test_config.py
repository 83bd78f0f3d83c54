import tempfile
import unittest
from pathlib import Path

from tds_optimizer.config import DEFAULTS, KNOWN_KEYS, Config, ConfigError
from tds_optimizer.harness import Algorithm
from tds_optimizer.model import DEFAULT_EPS, GeneBounds


class TestConfig(unittest.TestCase):
    """Разбор файла конфигурации и приоритет источников."""

    def setUp(self):
        self.tmpdir = tempfile.TemporaryDirectory()
        self.root = Path(self.tmpdir.name)

    def tearDown(self):
        self.tmpdir.cleanup()

    def write(self, text: str) -> Path:
        path = self.root / "experiment.env"
        path.write_text(text, encoding="utf-8")
        return path

    def test_defaults(self):
        config = Config()
        self.assertEqual(config.algorithm, "genetic")
        self.assertEqual(config.repetitions, 10)
        self.assertEqual(config.population_size, 100)
        self.assertEqual(config.offspring_size, 20)
        self.assertEqual(config.evaluation_budget, 15000)
        self.assertEqual(config.static_gain, 0.0322)
        self.assertEqual(config.bounds, GeneBounds.default(DEFAULT_EPS).as_mapping())
        self.assertEqual(config.validate(), [])

    def test_every_default_key_is_known(self):
        self.assertEqual(len(KNOWN_KEYS), sum(len(section) for section in DEFAULTS.values()))
        self.assertIn("TOPSIS_P", KNOWN_KEYS)
        self.assertIn("BOUNDS_THETA", KNOWN_KEYS)

    def test_unknown_key_is_named(self):
        path = self.write("REPETITIONS=3\nENGINE_POPULATON_SIZE=50\n")
        with self.assertRaises(ConfigError) as ctx:
            Config(path)
        self.assertIn("ENGINE_POPULATON_SIZE", str(ctx.exception))

    def test_missing_file(self):
        with self.assertRaises(ConfigError):
            Config(self.root / "absent.env")

    def test_malformed_number(self):
        path = self.write("REPETITIONS=ten\n")
        with self.assertRaises(ConfigError) as ctx:
            Config(path)
        self.assertIn("REPETITIONS", str(ctx.exception))

    def test_bad_choice(self):
        with self.assertRaises(ConfigError):
            Config(overrides={"ALGORITHM": "annealing"})

    def test_precedence(self):
        path = self.write("BASE_SEED=7\nREPETITIONS=4\n")
        config = Config(path, {"BASE_SEED": 11})
        self.assertEqual(config.base_seed, 11)
        self.assertEqual(config.repetitions, 4)
        self.assertEqual(config.jobs, 1)

    def test_bounds_override(self):
        config = Config(overrides={"BOUNDS_TAU": "0.5,2.5"})
        self.assertEqual(config.bounds["tau"], (0.5, 2.5))
        self.assertEqual(config.problem().bounds.as_mapping()["tau"], (0.5, 2.5))

    def test_malformed_bounds(self):
        with self.assertRaises(ConfigError):
            Config(overrides={"BOUNDS_TAU": "0.5"})

    def test_resolved_text_round_trip(self):
        path = self.write("MODEL_EPS=1e-7\nTOPSIS_P=0.1\nENGINE_EVALUATION_BUDGET=3000\n")
        config = Config(path)
        echo = self.write(config.to_env_text())
        again = Config(echo)
        self.assertEqual(again.resolved_values(), config.resolved_values())
        self.assertEqual(again.eps, 1e-7)
        self.assertEqual(again.topsis_p, 0.1)
        self.assertEqual(again.evaluation_budget, 3000)

    def test_write_resolved(self):
        path = Config().write_resolved(self.root / "out")
        self.assertEqual(path.name, "resolved_config.env")
        text = path.read_text(encoding="utf-8")
        self.assertIn("# [engine]", text)
        self.assertIn("ENGINE_POPULATION_SIZE=100", text)

    def test_validation_errors(self):
        config = Config(overrides={"REPETITIONS": 0, "JOBS": 0, "PLOT_OMEGA_MIN": 0.5, "PLOT_OMEGA_MAX": 0.1})
        errors = config.validate()
        self.assertTrue(any("REPETITIONS" in e for e in errors))
        self.assertTrue(any("JOBS" in e for e in errors))
        self.assertTrue(any("PLOT_OMEGA_MIN" in e for e in errors))

    def test_builder_errors_collected(self):
        config = Config(overrides={"ENGINE_EVALUATION_BUDGET": 50})
        self.assertNotEqual(config.validate(), [])

    def test_experiment_config(self):
        config = Config(overrides={"ALGORITHM": "topsis", "BASE_SEED": 3, "REPETITIONS": 2})
        experiment = config.experiment_config()
        self.assertEqual(experiment.algorithm, Algorithm.TOPSIS)
        self.assertEqual(experiment.seeds, [3, 4])
        self.assertEqual(config.experiment_config("caste").algorithm, Algorithm.CASTE)

    def test_static_gain_reaches_problem(self):
        config = Config(overrides={"MODEL_STATIC_GAIN": 0.05})
        self.assertEqual(config.problem().static_gain, 0.05)


if __name__ == "__main__":
    unittest.main()
