import dataclasses
import logging
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Tuple, Union

from dotenv import dotenv_values

from .engine import EngineConfig
from .harness import DEFAULT_GRID_STRIDE, Algorithm, ExperimentConfig
from .model import (
    DEFAULT_EPS,
    DEFAULT_PENALTY_BASE,
    DEFAULT_PENALTY_WEIGHT,
    DEFAULT_STATIC_GAIN,
    GENE_NAMES,
    GeneBounds,
    TimeDelayProblem,
    default_dataset,
    load_dataset,
)
from .socio import AssignmentMode, CasteConfig, SeparatedConfig, TopsisConfig, WeightingVariant

logger = logging.getLogger(__name__)


class ConfigError(ValueError):
    """Неизвестный ключ или значение, которое не удалось разобрать"""


_ENGINE = EngineConfig()
_CASTE = CasteConfig()
_SEPARATED = SeparatedConfig()
_TOPSIS = TopsisConfig()

# Значения по умолчанию по секциям; None у границ означает "из GeneBounds.default(MODEL_EPS)"
DEFAULTS: Dict[str, Dict[str, object]] = {
    "experiment": {
        "ALGORITHM": Algorithm.GENETIC.value,
        "REPETITIONS": 10,
        "BASE_SEED": 0,
        "JOBS": 1,
        "OUTPUT_DIR": "results",
        "DATASET_PATH": "",
        "CONVERGENCE_GRID_STRIDE": DEFAULT_GRID_STRIDE,
    },
    "engine": {
        "ENGINE_POPULATION_SIZE": _ENGINE.population_size,
        "ENGINE_OFFSPRING_SIZE": _ENGINE.offspring_size,
        "ENGINE_CROSSOVER_PROBABILITY": _ENGINE.crossover_probability,
        "ENGINE_CROSSOVER_DISTRIBUTION_INDEX": _ENGINE.crossover_distribution_index,
        "ENGINE_MUTATION_PROBABILITY": _ENGINE.mutation_probability,
        "ENGINE_MUTATION_DISTRIBUTION_INDEX": _ENGINE.mutation_distribution_index,
        "ENGINE_EVALUATION_BUDGET": _ENGINE.evaluation_budget,
    },
    "model": {
        "MODEL_STATIC_GAIN": DEFAULT_STATIC_GAIN,
        "MODEL_EPS": DEFAULT_EPS,
        "MODEL_PENALTY_BASE": DEFAULT_PENALTY_BASE,
        "MODEL_PENALTY_WEIGHT": DEFAULT_PENALTY_WEIGHT,
    },
    "bounds": {f"BOUNDS_{name.upper()}": None for name in GENE_NAMES},
    "caste": {
        "CASTE_NUMBER_OF_CASTES": _CASTE.number_of_castes,
        "CASTE_CHANCE_FOR_NON_CASTE_PARENTS": _CASTE.chance_for_non_caste_parents,
        "CASTE_ASSIGNMENT_MODE": _CASTE.assignment_mode.value,
    },
    "separated": {
        "SEPARATED_NUMBER_OF_CASTES": _SEPARATED.number_of_castes,
        "SEPARATED_ASSIGN_CASTES_INTERVAL": _SEPARATED.assign_castes_interval,
        "SEPARATED_LEARN_FROM_BETTER_CASTE_PROBABILITY": _SEPARATED.learn_from_better_caste_probability,
        "SEPARATED_LEARN_FROM_VARIABLE": _SEPARATED.learn_from_variable,
    },
    "topsis": {
        "TOPSIS_P": _TOPSIS.p,
        "TOPSIS_T_BEST": _TOPSIS.t_best,
        "TOPSIS_T_WORST": _TOPSIS.t_worst,
        "TOPSIS_BEST_INDIVIDUALS_COUNT": _TOPSIS.best_individuals_count,
        "TOPSIS_WORST_INDIVIDUALS_COUNT": _TOPSIS.worst_individuals_count,
        "TOPSIS_WEIGHTING_VARIANT": _TOPSIS.weighting_variant.value,
    },
    "plot": {
        "PLOT_OMEGA_MIN": 1e-4,
        "PLOT_OMEGA_MAX": 1e-1,
        "PLOT_POINTS": 500,
    },
}

KNOWN_KEYS = frozenset(key for section in DEFAULTS.values() for key in section)


class Config:
    """
    Конфигурация эксперимента

    Приоритет: флаг командной строки > файл конфигурации > значение по умолчанию.
    Файл - плоский KEY=VALUE в синтаксисе dotenv, секции задаются префиксами ключей.
    """

    def __init__(self, config_file: Optional[Union[str, Path]] = None, overrides: Optional[Mapping[str, object]] = None):
        self.config_file = Path(config_file) if config_file else None
        self._raw: Dict[str, str] = {}

        if self.config_file is not None:
            if not self.config_file.is_file():
                raise ConfigError(f"Файл конфигурации {self.config_file} не найден")
            for key, value in dotenv_values(self.config_file).items():
                if value is None:
                    raise ConfigError(f"Ключ {key} в {self.config_file} задан без значения")
                self._raw[key] = value

        for key, value in (overrides or {}).items():
            if value is not None:
                self._raw[key] = str(value)

        unknown = sorted(set(self._raw) - KNOWN_KEYS)
        if unknown:
            raise ConfigError(f"Неизвестный ключ конфигурации: {', '.join(unknown)}")

        # Эксперимент
        self.algorithm: str = self._get_choice("ALGORITHM", [a.value for a in Algorithm])
        self.repetitions: int = self._get_int("REPETITIONS")
        self.base_seed: int = self._get_int("BASE_SEED")
        self.jobs: int = self._get_int("JOBS")
        self.output_dir: str = self._get_str("OUTPUT_DIR")
        self.dataset_path: str = self._get_str("DATASET_PATH")
        self.grid_stride: int = self._get_int("CONVERGENCE_GRID_STRIDE")

        # Движок
        self.population_size: int = self._get_int("ENGINE_POPULATION_SIZE")
        self.offspring_size: int = self._get_int("ENGINE_OFFSPRING_SIZE")
        self.crossover_probability: float = self._get_float("ENGINE_CROSSOVER_PROBABILITY")
        self.crossover_distribution_index: float = self._get_float("ENGINE_CROSSOVER_DISTRIBUTION_INDEX")
        self.mutation_probability: float = self._get_float("ENGINE_MUTATION_PROBABILITY")
        self.mutation_distribution_index: float = self._get_float("ENGINE_MUTATION_DISTRIBUTION_INDEX")
        self.evaluation_budget: int = self._get_int("ENGINE_EVALUATION_BUDGET")

        # Модель
        self.static_gain: float = self._get_float("MODEL_STATIC_GAIN")
        self.eps: float = self._get_float("MODEL_EPS")
        self.penalty_base: float = self._get_float("MODEL_PENALTY_BASE")
        self.penalty_weight: float = self._get_float("MODEL_PENALTY_WEIGHT")

        default_box = GeneBounds.default(self.eps).as_mapping()
        self.bounds: Dict[str, Tuple[float, float]] = {
            name: self._get_bounds(f"BOUNDS_{name.upper()}", default_box[name]) for name in GENE_NAMES
        }

        # Касты
        self.number_of_castes: int = self._get_int("CASTE_NUMBER_OF_CASTES")
        self.chance_for_non_caste_parents: float = self._get_float("CASTE_CHANCE_FOR_NON_CASTE_PARENTS")
        self.assignment_mode: str = self._get_choice("CASTE_ASSIGNMENT_MODE", [m.value for m in AssignmentMode])

        self.separated_number_of_castes: int = self._get_int("SEPARATED_NUMBER_OF_CASTES")
        self.assign_castes_interval: int = self._get_int("SEPARATED_ASSIGN_CASTES_INTERVAL")
        self.learn_from_better_caste_probability: float = self._get_float("SEPARATED_LEARN_FROM_BETTER_CASTE_PROBABILITY")
        self.learn_from_variable: float = self._get_float("SEPARATED_LEARN_FROM_VARIABLE")

        # TOPSIS
        self.topsis_p: float = self._get_float("TOPSIS_P")
        self.topsis_t_best: float = self._get_float("TOPSIS_T_BEST")
        self.topsis_t_worst: float = self._get_float("TOPSIS_T_WORST")
        self.best_individuals_count: int = self._get_int("TOPSIS_BEST_INDIVIDUALS_COUNT")
        self.worst_individuals_count: int = self._get_int("TOPSIS_WORST_INDIVIDUALS_COUNT")
        self.weighting_variant: str = self._get_choice("TOPSIS_WEIGHTING_VARIANT", [w.value for w in WeightingVariant])

        # Сетка графиков
        self.omega_min: float = self._get_float("PLOT_OMEGA_MIN")
        self.omega_max: float = self._get_float("PLOT_OMEGA_MAX")
        self.plot_points: int = self._get_int("PLOT_POINTS")

    @staticmethod
    def _default(key: str) -> object:
        for section in DEFAULTS.values():
            if key in section:
                return section[key]
        raise ConfigError(f"Неизвестный ключ конфигурации: {key}")

    def _get_str(self, key: str) -> str:
        """Получить строковое значение"""
        value = self._raw.get(key)
        if value is None:
            return str(self._default(key))
        return value.strip()

    def _get_int(self, key: str) -> int:
        """Получить целочисленное значение"""
        value = self._raw.get(key)
        if value is None:
            return int(self._default(key))
        try:
            return int(value.strip())
        except ValueError:
            raise ConfigError(f"Ключ {key} должен быть целым числом, получено {value!r}")

    def _get_float(self, key: str) -> float:
        """Получить значение типа float"""
        value = self._raw.get(key)
        if value is None:
            return float(self._default(key))
        try:
            return float(value.strip())
        except ValueError:
            raise ConfigError(f"Ключ {key} должен быть числом, получено {value!r}")

    def _get_choice(self, key: str, choices: List[str]) -> str:
        value = self._get_str(key).lower()
        if value not in choices:
            raise ConfigError(f"Ключ {key} должен быть одним из {', '.join(choices)}, получено {value!r}")
        return value

    def _get_bounds(self, key: str, default: Tuple[float, float]) -> Tuple[float, float]:
        """Получить границы гена в формате low,high"""
        value = self._raw.get(key)
        if value is None:
            return float(default[0]), float(default[1])
        parts = value.split(",")
        try:
            if len(parts) != 2:
                raise ValueError
            return float(parts[0]), float(parts[1])
        except ValueError:
            raise ConfigError(f"Ключ {key} должен иметь вид low,high, получено {value!r}")

    def engine_config(self, seed: Optional[int] = None) -> EngineConfig:
        return EngineConfig(
            population_size=self.population_size,
            offspring_size=self.offspring_size,
            crossover_probability=self.crossover_probability,
            crossover_distribution_index=self.crossover_distribution_index,
            mutation_probability=self.mutation_probability,
            mutation_distribution_index=self.mutation_distribution_index,
            evaluation_budget=self.evaluation_budget,
            rng_seed=self.base_seed if seed is None else seed,
        )

    def caste_config(self) -> CasteConfig:
        return CasteConfig(
            number_of_castes=self.number_of_castes,
            chance_for_non_caste_parents=self.chance_for_non_caste_parents,
            assignment_mode=AssignmentMode(self.assignment_mode),
        )

    def separated_config(self) -> SeparatedConfig:
        return SeparatedConfig(
            number_of_castes=self.separated_number_of_castes,
            assign_castes_interval=self.assign_castes_interval,
            learn_from_better_caste_probability=self.learn_from_better_caste_probability,
            learn_from_variable=self.learn_from_variable,
        )

    def topsis_config(self) -> TopsisConfig:
        return TopsisConfig(
            p=self.topsis_p,
            t_best=self.topsis_t_best,
            t_worst=self.topsis_t_worst,
            best_individuals_count=self.best_individuals_count,
            worst_individuals_count=self.worst_individuals_count,
            weighting_variant=WeightingVariant(self.weighting_variant),
        )

    def problem(self) -> TimeDelayProblem:
        """Целевая функция: набор данных (встроенный или из DATASET_PATH), границы и штраф"""
        if self.dataset_path:
            dataset = load_dataset(self.dataset_path, static_gain=self.static_gain)
        else:
            dataset = dataclasses.replace(default_dataset(), static_gain=self.static_gain)
        return TimeDelayProblem(
            dataset=dataset,
            bounds=GeneBounds.from_mapping(self.bounds),
            eps=self.eps,
            penalty_base=self.penalty_base,
            penalty_weight=self.penalty_weight,
        )

    def experiment_config(self, algorithm: Optional[Union[str, Algorithm]] = None) -> ExperimentConfig:
        return ExperimentConfig(
            algorithm=Algorithm(algorithm or self.algorithm),
            engine=self.engine_config(),
            problem=self.problem(),
            caste=self.caste_config(),
            separated=self.separated_config(),
            topsis=self.topsis_config(),
            repetitions=self.repetitions,
            base_seed=self.base_seed,
        )

    def validate(self) -> List[str]:
        """Проверить корректность конфигурации; пустой список - все в порядке"""
        errors = []

        if self.repetitions < 1:
            errors.append("REPETITIONS должен быть не меньше 1")
        if self.base_seed < 0:
            errors.append("BASE_SEED должен быть неотрицательным")
        if self.jobs < 1:
            errors.append("JOBS должен быть не меньше 1")
        if self.grid_stride < 1:
            errors.append("CONVERGENCE_GRID_STRIDE должен быть не меньше 1")
        if not self.output_dir:
            errors.append("OUTPUT_DIR не может быть пустым")
        if self.dataset_path and not Path(self.dataset_path).is_file():
            errors.append(f"DATASET_PATH: файл {self.dataset_path} не найден")

        if self.static_gain == 0:
            errors.append("MODEL_STATIC_GAIN не может быть нулем")
        if self.eps <= 0:
            errors.append("MODEL_EPS должен быть положительным")
        if self.penalty_base < 0 or self.penalty_weight < 0:
            errors.append("MODEL_PENALTY_BASE и MODEL_PENALTY_WEIGHT должны быть неотрицательными")
        for name, (low, high) in self.bounds.items():
            if not low <= high:
                errors.append(f"BOUNDS_{name.upper()}: нижняя граница больше верхней")

        if not 0 < self.omega_min < self.omega_max:
            errors.append("PLOT_OMEGA_MIN и PLOT_OMEGA_MAX должны удовлетворять 0 < min < max")
        if self.plot_points < 2:
            errors.append("PLOT_POINTS должен быть не меньше 2")

        for builder in (self.engine_config, self.caste_config, self.separated_config, self.topsis_config):
            try:
                builder()
            except ValueError as e:
                errors.extend(str(e).split("; "))

        return errors

    def resolved_values(self) -> Dict[str, Dict[str, str]]:
        """Итоговые значения всех ключей по секциям в текстовом виде"""
        values = {
            "experiment": {
                "ALGORITHM": self.algorithm,
                "REPETITIONS": self.repetitions,
                "BASE_SEED": self.base_seed,
                "JOBS": self.jobs,
                "OUTPUT_DIR": self.output_dir,
                "DATASET_PATH": self.dataset_path,
                "CONVERGENCE_GRID_STRIDE": self.grid_stride,
            },
            "engine": {
                "ENGINE_POPULATION_SIZE": self.population_size,
                "ENGINE_OFFSPRING_SIZE": self.offspring_size,
                "ENGINE_CROSSOVER_PROBABILITY": self.crossover_probability,
                "ENGINE_CROSSOVER_DISTRIBUTION_INDEX": self.crossover_distribution_index,
                "ENGINE_MUTATION_PROBABILITY": self.mutation_probability,
                "ENGINE_MUTATION_DISTRIBUTION_INDEX": self.mutation_distribution_index,
                "ENGINE_EVALUATION_BUDGET": self.evaluation_budget,
            },
            "model": {
                "MODEL_STATIC_GAIN": self.static_gain,
                "MODEL_EPS": self.eps,
                "MODEL_PENALTY_BASE": self.penalty_base,
                "MODEL_PENALTY_WEIGHT": self.penalty_weight,
            },
            "bounds": {
                f"BOUNDS_{name.upper()}": f"{low!r},{high!r}" for name, (low, high) in self.bounds.items()
            },
            "caste": {
                "CASTE_NUMBER_OF_CASTES": self.number_of_castes,
                "CASTE_CHANCE_FOR_NON_CASTE_PARENTS": self.chance_for_non_caste_parents,
                "CASTE_ASSIGNMENT_MODE": self.assignment_mode,
            },
            "separated": {
                "SEPARATED_NUMBER_OF_CASTES": self.separated_number_of_castes,
                "SEPARATED_ASSIGN_CASTES_INTERVAL": self.assign_castes_interval,
                "SEPARATED_LEARN_FROM_BETTER_CASTE_PROBABILITY": self.learn_from_better_caste_probability,
                "SEPARATED_LEARN_FROM_VARIABLE": self.learn_from_variable,
            },
            "topsis": {
                "TOPSIS_P": self.topsis_p,
                "TOPSIS_T_BEST": self.topsis_t_best,
                "TOPSIS_T_WORST": self.topsis_t_worst,
                "TOPSIS_BEST_INDIVIDUALS_COUNT": self.best_individuals_count,
                "TOPSIS_WORST_INDIVIDUALS_COUNT": self.worst_individuals_count,
                "TOPSIS_WEIGHTING_VARIANT": self.weighting_variant,
            },
            "plot": {
                "PLOT_OMEGA_MIN": self.omega_min,
                "PLOT_OMEGA_MAX": self.omega_max,
                "PLOT_POINTS": self.plot_points,
            },
        }
        # repr у float точно восстанавливается при повторном чтении
        return {
            section: {key: repr(value) if isinstance(value, float) else str(value) for key, value in items.items()}
            for section, items in values.items()
        }

    def to_env_text(self) -> str:
        """Итоговая конфигурация в формате файла конфигурации"""
        lines = []
        for section, items in self.resolved_values().items():
            lines.append(f"# [{section}]")
            lines.extend(f"{key}={value}" for key, value in items.items())
            lines.append("")
        return "\n".join(lines)

    def write_resolved(self, directory: Union[str, Path]) -> Path:
        """Сохранить итоговую конфигурацию в resolved_config.env"""
        path = Path(directory) / "resolved_config.env"
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_env_text(), encoding="utf-8")
        logger.debug("Итоговая конфигурация сохранена в %s", path)
        return path

    def print_config(self):
        """Вывести текущую конфигурацию"""
        print("\n=== Текущая конфигурация ===")
        print(f"Config file: {self.config_file or '-'}")
        print(f"Algorithm: {self.algorithm}")
        print(f"Repetitions: {self.repetitions} (seeds {self.base_seed}..{self.base_seed + self.repetitions - 1})")
        print(f"Jobs: {self.jobs}")
        print(f"Population / Offspring: {self.population_size} / {self.offspring_size}")
        print(f"Evaluation Budget: {self.evaluation_budget}")
        print(f"Static Gain: {self.static_gain}")
        print(f"Dataset: {self.dataset_path or 'встроенный'}")
        print(f"Output Dir: {self.output_dir}")
        print("=" * 30 + "\n")
