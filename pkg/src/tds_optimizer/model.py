"""
Модель системы с запаздыванием

Комплексная передаточная функция, связь через статический коэффициент,
система ограничений, функция стоимости по методу наименьших квадратов
и данные для графиков Боде/Найквиста.
"""

import logging
import math
from dataclasses import dataclass, fields, astuple
from enum import Enum
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)

# Минимальный модуль знаменателя, ниже которого считаем, что попали в полюс
DENOMINATOR_TOLERANCE = 1e-300

DEFAULT_STATIC_GAIN = 0.0322
DEFAULT_EPS = 1e-9
DEFAULT_PENALTY_BASE = 1e6
DEFAULT_PENALTY_WEIGHT = 1.0

DATASET_COLUMNS = ["omega", "re", "im"]
BODE_COLUMNS = ["omega", "mag_db", "phase_deg"]
NYQUIST_COLUMNS = ["re", "im"]

# Порядок свободных генов: b0_tau выводится из статического коэффициента
GENE_NAMES = ("b0", "tau0", "tau", "a2", "a1", "a0", "a0_theta", "theta")


class DegenerateDenominatorError(ValueError):
    """Знаменатель обратился в ноль (полюс или нулевой статический знаменатель)"""


class DatasetError(ValueError):
    """Некорректные данные наблюдений"""


@dataclass(frozen=True)
class ModelParameters:
    """Вектор из 9 параметров модели. Допустимость здесь не проверяется."""
    b0: float
    b0_tau: float
    tau0: float
    tau: float
    a2: float
    a1: float
    a0: float
    a0_theta: float
    theta: float

    def __post_init__(self):
        for item in fields(self):
            value = getattr(self, item.name)
            if not math.isfinite(value):
                raise ValueError(f"Параметр {item.name} должен быть конечным числом, получено {value}")

    @classmethod
    def field_names(cls) -> Tuple[str, ...]:
        return tuple(item.name for item in fields(cls))

    def as_dict(self) -> dict:
        return dict(zip(self.field_names(), astuple(self)))


@dataclass(frozen=True)
class FrequencySample:
    """Одна точка частотной характеристики: omega, A_i, B_i"""
    omega: float
    re_value: float
    im_value: float

    def __post_init__(self):
        if not self.omega > 0:
            raise DatasetError(f"Частота должна быть положительной, получено {self.omega}")


@dataclass(frozen=True)
class ObservationDataset:
    """Измеренная частотная характеристика и известный статический коэффициент"""
    samples: Tuple[FrequencySample, ...]
    static_gain: float = DEFAULT_STATIC_GAIN

    def __post_init__(self):
        object.__setattr__(self, "samples", tuple(self.samples))
        if not self.samples:
            raise DatasetError("Набор данных пуст")
        omegas = [s.omega for s in self.samples]
        if any(b <= a for a, b in zip(omegas, omegas[1:])):
            raise DatasetError("Частоты должны строго возрастать")

    @property
    def omegas(self) -> np.ndarray:
        return np.array([s.omega for s in self.samples])

    @property
    def values(self) -> np.ndarray:
        """Измеренные значения A_i + jB_i"""
        return np.array([complex(s.re_value, s.im_value) for s in self.samples])

    def __len__(self) -> int:
        return len(self.samples)


class ConstraintGroup(Enum):
    """Группы ограничений устойчивости, реализуемости и минимальной фазы"""
    DELAYS_POSITIVE = "delays_positive"
    COEFFICIENTS_POSITIVE = "coefficients_positive"
    A2A1_OVER_A0 = "a2a1_over_a0"
    A2A1_OVER_A0_SUM = "a2a1_over_a0_sum"
    DELAYED_RATIO = "delayed_ratio"
    NUMERATOR_DOMINANCE = "numerator_dominance"
    NONZERO = "nonzero"


@dataclass(frozen=True)
class FeasibilityReport:
    """Результат проверки ограничений: величина нарушения по каждой группе"""
    violations: Tuple[Tuple[ConstraintGroup, float], ...]

    @property
    def feasible(self) -> bool:
        return all(value == 0.0 for _, value in self.violations)

    @property
    def total_violation(self) -> float:
        return float(sum(value for _, value in self.violations))

    def violation(self, group: ConstraintGroup) -> float:
        return dict(self.violations)[group]


# Таблица наблюдений (omega, A, B)
OBSERVATIONS = (
    (0.0002, 0.03238, -0.00284),
    (0.0003, 0.03213, -0.00424),
    (0.0005, 0.03137, -0.00694),
    (0.0008, 0.02962, -0.01063),
    (0.001, 0.02813, -0.01278),
    (0.0012, 0.02645, -0.01465),
    (0.0015, 0.02371, -0.01692),
    (0.0018, 0.02087, -0.01857),
    (0.002, 0.01899, -0.01936),
    (0.003, 0.01063, -0.02054),
    (0.005, 0.00057, -0.01713),
    (0.008, -0.00540, -0.01110),
    (0.01, -0.00704, -0.00795),
    (0.011, -0.00757, -0.00658),
    (0.012, -0.00795, -0.00531),
    (0.014, -0.00843, -0.00296),
    (0.016, -0.00860, -0.00074),
    (0.018, -0.00846, 0.00147),
    (0.02, -0.00795, 0.00377),
    (0.025, -0.00346, 0.00982),
)


def default_dataset() -> ObservationDataset:
    """Встроенный набор наблюдений с k = 0.0322"""
    return ObservationDataset(
        samples=tuple(FrequencySample(*row) for row in OBSERVATIONS),
        static_gain=DEFAULT_STATIC_GAIN,
    )


def load_dataset(path: Union[str, Path], static_gain: float = DEFAULT_STATIC_GAIN) -> ObservationDataset:
    """
    Загрузить набор наблюдений из CSV

    Args:
        path: Путь к файлу с заголовком omega,re,im
        static_gain: Известный статический коэффициент k

    Returns:
        Набор наблюдений
    """
    try:
        frame = pd.read_csv(path, float_precision="round_trip")
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise DatasetError(f"Не удалось прочитать набор данных {path}: {e}")

    if list(frame.columns) != DATASET_COLUMNS:
        raise DatasetError(f"Ожидался заголовок {','.join(DATASET_COLUMNS)} в {path}")

    try:
        samples = tuple(
            FrequencySample(float(row.omega), float(row.re), float(row.im))
            for row in frame.itertuples(index=False)
        )
    except (TypeError, ValueError) as e:
        raise DatasetError(f"Некорректная строка в {path}: {e}")

    dataset = ObservationDataset(samples=samples, static_gain=static_gain)
    logger.debug("Загружено %d точек из %s", len(dataset), path)
    return dataset


def write_dataset(dataset: ObservationDataset, path: Union[str, Path]) -> Path:
    """Сохранить набор наблюдений в CSV"""
    frame = pd.DataFrame(
        [(s.omega, s.re_value, s.im_value) for s in dataset.samples],
        columns=DATASET_COLUMNS,
    )
    frame.to_csv(path, index=False)
    return Path(path)


def read_parameters(path: Union[str, Path]) -> ModelParameters:
    """Прочитать 9 параметров модели из CSV вида name,value"""
    try:
        frame = pd.read_csv(path, float_precision="round_trip")
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise ValueError(f"Не удалось прочитать параметры {path}: {e}")

    if list(frame.columns) != ["name", "value"]:
        raise ValueError(f"Ожидался заголовок name,value в {path}")

    values = {}
    for row in frame.itertuples(index=False):
        name = str(row.name).strip()
        if name not in ModelParameters.field_names():
            raise ValueError(f"Неизвестный параметр {name} в {path}")
        values[name] = float(row.value)

    missing = [name for name in ModelParameters.field_names() if name not in values]
    if missing:
        raise ValueError(f"Не хватает параметров {', '.join(missing)} в {path}")

    return ModelParameters(**values)


def write_parameters(p: ModelParameters, path: Union[str, Path]) -> Path:
    """Сохранить параметры модели в CSV вида name,value"""
    frame = pd.DataFrame(list(p.as_dict().items()), columns=["name", "value"])
    frame.to_csv(path, index=False)
    return Path(path)


def complete_parameters(genes: Sequence[float], k: float) -> ModelParameters:
    """Восстановить b0_tau из статического коэффициента: b0_tau = k(a0 + a0_theta) - b0"""
    b0, tau0, tau, a2, a1, a0, a0_theta, theta = (float(g) for g in genes)
    return ModelParameters(
        b0=b0,
        b0_tau=k * (a0 + a0_theta) - b0,
        tau0=tau0,
        tau=tau,
        a2=a2,
        a1=a1,
        a0=a0,
        a0_theta=a0_theta,
        theta=theta,
    )


def static_gain(p: ModelParameters) -> float:
    denominator = p.a0 + p.a0_theta
    if abs(denominator) < DENOMINATOR_TOLERANCE:
        raise DegenerateDenominatorError("a0 + a0_theta равно нулю, статический коэффициент не определён")
    return (p.b0 + p.b0_tau) / denominator


def frequency_response(p: ModelParameters, omegas: Union[Sequence[float], np.ndarray]) -> np.ndarray:
    """
    Значения G(jω) для массива частот

    Args:
        p: Параметры модели
        omegas: Частоты (рад/с), допускается 0 и отрицательные

    Returns:
        Комплексный массив той же длины
    """
    s = 1j * np.asarray(omegas, dtype=float)
    numerator = p.b0 + p.b0_tau * np.exp(-p.tau0 * s)
    denominator = s ** 3 + p.a2 * s ** 2 + p.a1 * s + p.a0 + p.a0_theta * np.exp(-p.theta * s)

    if np.any(np.abs(denominator) < DENOMINATOR_TOLERANCE):
        raise DegenerateDenominatorError("Знаменатель передаточной функции равен нулю на сетке частот")

    return numerator / denominator * np.exp(-p.tau * s)


def transfer_value(p: ModelParameters, omega: float) -> complex:
    return complex(frequency_response(p, [omega])[0])


def cost(p: ModelParameters, data: ObservationDataset) -> float:
    """Сумма квадратов отклонений действительной и мнимой частей"""
    residual = frequency_response(p, data.omegas) - data.values
    return float(np.sum(residual.real ** 2 + residual.imag ** 2))


def min_denominator_magnitude(a2: float, a1: float, a0: float) -> float:
    """
    Инфимум sqrt((a0 - a2ω²)² + ω²(a1 - ω²)²) по ω ≥ 0

    После подстановки x = ω² получаем кубический многочлен
    f(x) = x³ + (a2² - 2a1)x² + (a1² - 2a0a2)x + a0², минимум ищем среди
    x = 0 и положительных корней f'(x).
    """
    b = a2 * a2 - 2.0 * a1
    c = a1 * a1 - 2.0 * a0 * a2

    def f(x: float) -> float:
        return ((x + b) * x + c) * x + a0 * a0

    candidates = [0.0]
    discriminant = 4.0 * b * b - 12.0 * c
    if discriminant >= 0.0:
        root = math.sqrt(discriminant)
        candidates.extend(x for x in ((-2.0 * b + root) / 6.0, (-2.0 * b - root) / 6.0) if x > 0.0)

    return math.sqrt(max(min(f(x) for x in candidates), 0.0))


def _shortfall(value: float, eps: float) -> float:
    """На сколько нарушено value ≥ eps"""
    return max(0.0, eps - value)


def feasibility(p: ModelParameters, eps: float = DEFAULT_EPS) -> FeasibilityReport:
    """
    Проверить все ограничения модели

    Строгие неравенства x > 0 заменяются на x ≥ eps, условия x ≠ 0 на |x| ≥ eps.

    Args:
        p: Параметры модели
        eps: Допуск строгих неравенств

    Returns:
        Отчет с величиной нарушения по каждой группе
    """
    if not eps > 0:
        raise ValueError("eps должен быть положительным")

    a0_sum = p.a0 + p.a0_theta
    ratio_bound = (1.0 - eps) * min_denominator_magnitude(p.a2, p.a1, p.a0)

    violations = (
        (ConstraintGroup.DELAYS_POSITIVE,
         _shortfall(p.tau0, eps) + _shortfall(p.tau, eps) + _shortfall(p.theta, eps)),
        (ConstraintGroup.COEFFICIENTS_POSITIVE,
         _shortfall(p.a2, eps) + _shortfall(p.a1, eps) + _shortfall(a0_sum, eps)),
        (ConstraintGroup.A2A1_OVER_A0, _shortfall(p.a2 * p.a1 - p.a0, eps)),
        (ConstraintGroup.A2A1_OVER_A0_SUM, _shortfall(p.a2 * p.a1 - a0_sum, eps)),
        (ConstraintGroup.DELAYED_RATIO, max(0.0, abs(p.a0_theta) - ratio_bound)),
        (ConstraintGroup.NUMERATOR_DOMINANCE, _shortfall(abs(p.b0) - abs(p.b0_tau), eps)),
        (ConstraintGroup.NONZERO,
         _shortfall(abs(p.a0), eps) + _shortfall(abs(p.a0_theta), eps) + _shortfall(abs(p.b0_tau), eps)),
    )
    return FeasibilityReport(violations=violations)


def penalized_cost(
    p: ModelParameters,
    data: ObservationDataset,
    penalty_base: float = DEFAULT_PENALTY_BASE,
    penalty_weight: float = DEFAULT_PENALTY_WEIGHT,
    eps: float = DEFAULT_EPS,
) -> float:
    """Стоимость для допустимых точек, иначе статический штраф без вычисления модели"""
    report = feasibility(p, eps)
    if report.feasible:
        return cost(p, data)
    return penalty_base + penalty_weight * report.total_violation


def _unwrapped_phase_deg(values: np.ndarray) -> np.ndarray:
    return np.rad2deg(np.unwrap(np.angle(values)))


def _bode_from_values(omegas: np.ndarray, values: np.ndarray) -> List[Tuple[float, float, float]]:
    magnitude = np.abs(values)
    if np.any(magnitude == 0.0):
        raise DegenerateDenominatorError("Нулевой модуль G(jω): амплитуда в дБ не определена")
    magnitude_db = 20.0 * np.log10(magnitude)
    phase_deg = _unwrapped_phase_deg(values)
    return [(float(w), float(m), float(ph)) for w, m, ph in zip(omegas, magnitude_db, phase_deg)]


def bode_points(p: ModelParameters, omegas: Sequence[float]) -> List[Tuple[float, float, float]]:
    """
    Амплитуда (дБ) и развернутая фаза (градусы) на строго возрастающей сетке

    Развертка фазы привязана к первой точке сетки: ее фаза берется в
    главном диапазоне (-180, 180], дальше накапливаются скачки на 2π.
    Поэтому одна и та же частота на сетках с разным началом может
    получить фазы, отличающиеся на кратное 360.

    Args:
        p: Параметры модели
        omegas: Строго возрастающие частоты, рад/с

    Returns:
        Список (omega, mag_db, phase_deg)
    """
    grid = np.asarray(omegas, dtype=float)
    if np.any(np.diff(grid) <= 0):
        raise ValueError("Сетка частот должна строго возрастать")
    return _bode_from_values(grid, frequency_response(p, grid))


def nyquist_points(p: ModelParameters, omegas: Sequence[float]) -> List[Tuple[float, float]]:
    values = frequency_response(p, omegas)
    return [(float(v.real), float(v.imag)) for v in values]


def dataset_bode_points(data: ObservationDataset) -> List[Tuple[float, float, float]]:
    """Опорные точки Боде для измеренных данных"""
    return _bode_from_values(data.omegas, data.values)


def dataset_nyquist_points(data: ObservationDataset) -> List[Tuple[float, float]]:
    return [(s.re_value, s.im_value) for s in data.samples]


def plot_grid(omega_min: float = 1e-4, omega_max: float = 1e-1, points: int = 500) -> np.ndarray:
    """Логарифмическая сетка частот для графиков"""
    if not 0 < omega_min < omega_max:
        raise ValueError("Требуется 0 < omega_min < omega_max")
    if points < 2:
        raise ValueError("Сетка должна содержать хотя бы 2 точки")
    return np.logspace(math.log10(omega_min), math.log10(omega_max), points)


@dataclass(frozen=True)
class GeneBounds:
    """Границы поиска для 8 свободных генов"""
    lower: Tuple[float, ...]
    upper: Tuple[float, ...]

    def __post_init__(self):
        if len(self.lower) != len(GENE_NAMES) or len(self.upper) != len(GENE_NAMES):
            raise ValueError(f"Ожидалось {len(GENE_NAMES)} границ")
        for name, low, high in zip(GENE_NAMES, self.lower, self.upper):
            if not low <= high:
                raise ValueError(f"Некорректные границы гена {name}: [{low}, {high}]")

    @classmethod
    def default(cls, eps: float = DEFAULT_EPS) -> "GeneBounds":
        box = {
            "b0": (-1.0, 1.0),
            "tau0": (eps, 1000.0),
            "tau": (eps, 1000.0),
            "a2": (eps, 100.0),
            "a1": (eps, 100.0),
            "a0": (-1.0, 1.0),
            "a0_theta": (-1.0, 1.0),
            "theta": (eps, 1000.0),
        }
        return cls.from_mapping(box)

    @classmethod
    def from_mapping(cls, box: dict) -> "GeneBounds":
        return cls(
            lower=tuple(float(box[name][0]) for name in GENE_NAMES),
            upper=tuple(float(box[name][1]) for name in GENE_NAMES),
        )

    def as_mapping(self) -> dict:
        return {name: (low, high) for name, low, high in zip(GENE_NAMES, self.lower, self.upper)}


@dataclass(frozen=True)
class TimeDelayProblem:
    """Целевая функция идентификации: 8 генов -> штрафованная стоимость"""
    dataset: ObservationDataset
    bounds: GeneBounds
    eps: float = DEFAULT_EPS
    penalty_base: float = DEFAULT_PENALTY_BASE
    penalty_weight: float = DEFAULT_PENALTY_WEIGHT

    @classmethod
    def default(cls) -> "TimeDelayProblem":
        return cls(dataset=default_dataset(), bounds=GeneBounds.default())

    @property
    def static_gain(self) -> float:
        return self.dataset.static_gain

    def parameters(self, genes: Iterable[float]) -> ModelParameters:
        return complete_parameters(list(genes), self.static_gain)

    def __call__(self, genes: np.ndarray) -> float:
        return penalized_cost(
            self.parameters(genes),
            self.dataset,
            penalty_base=self.penalty_base,
            penalty_weight=self.penalty_weight,
            eps=self.eps,
        )
