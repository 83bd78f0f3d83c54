import argparse
import asyncio
import logging
import sys
from pathlib import Path
from typing import List, Optional, Sequence

from tabulate import tabulate

from .checkpoint_manager import CheckpointManager
from .config import Config, ConfigError
from .engine import EngineError
from .exporter import ExportError, ResultsExporter
from .harness import Algorithm, ExperimentResult, build_result, run_comparison, run_experiment
from .model import (
    DatasetError,
    DegenerateDenominatorError,
    cost,
    feasibility,
    plot_grid,
    read_parameters,
    static_gain,
)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2

# Флаг командной строки -> ключ конфигурации
FLAG_KEYS = {
    "out": "OUTPUT_DIR",
    "seed": "BASE_SEED",
    "repetitions": "REPETITIONS",
    "budget": "ENGINE_EVALUATION_BUDGET",
    "jobs": "JOBS",
    "algorithm": "ALGORITHM",
    "omega_min": "PLOT_OMEGA_MIN",
    "omega_max": "PLOT_OMEGA_MAX",
    "points": "PLOT_POINTS",
}


class OptimizerApp:
    """Основное приложение: подкоманды run, compare, check, plot-data"""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.config: Optional[Config] = None
        self.exporter: Optional[ResultsExporter] = None
        self.checkpoint_manager: Optional[CheckpointManager] = None

    def initialize(self) -> bool:
        """Разобрать конфигурацию и подготовить компоненты"""
        overrides = {
            key: getattr(self.args, flag)
            for flag, key in FLAG_KEYS.items()
            if getattr(self.args, flag, None) is not None
        }
        self.config = Config(self.args.config, overrides)

        errors = self.config.validate()
        if errors:
            print("Ошибка в конфигурации:")
            for error in errors:
                print(f"  - {error}")
            return False

        if self.args.verbose:
            self.config.print_config()

        self.exporter = ResultsExporter(self.config.output_dir)
        if getattr(self.args, "resume", False):
            self.checkpoint_manager = CheckpointManager(Path(self.config.output_dir) / "checkpoints")
        return True

    @property
    def progress(self) -> bool:
        return not self.args.quiet

    def _grid(self):
        return plot_grid(self.config.omega_min, self.config.omega_max, self.config.plot_points)

    def _print_summary(self, results: Sequence[ExperimentResult]):
        rows = [
            [r.summary.algorithm, f"{r.summary.average:.6e}", f"{r.summary.minimum:.6e}", f"{r.summary.std:.6e}"]
            for r in results
        ]
        print(tabulate(rows, headers=["Алгоритм", "Среднее", "Минимум", "Std"], tablefmt="grid"))

    def _finish(self, results: List[ExperimentResult]) -> int:
        problem = self.config.problem()
        files = self.exporter.export_results(results, problem, self._grid())
        self.config.write_resolved(self.config.output_dir)

        print(f"\nРезультаты после {self.config.evaluation_budget} вычислений:")
        self._print_summary(results)
        if self.exporter.skipped:
            print("\n" + "="*60)
            print("Кривые Боде и Найквиста не построены:")
            for entry in self.exporter.skipped:
                print(f"  {entry}")
        print(f"\nФайлы сохранены в {self.config.output_dir} ({len(files)} шт.)")
        return EXIT_OK

    async def cmd_run(self) -> int:
        """Серия прогонов одного алгоритма"""
        experiment = self.config.experiment_config()
        traces = await run_experiment(
            experiment,
            jobs=self.config.jobs,
            checkpoints=self.checkpoint_manager,
            progress=self.progress,
        )
        result = build_result(traces, experiment.algorithm.value, self.config.grid_stride)
        return self._finish([result])

    async def cmd_compare(self) -> int:
        """Все четыре алгоритма на одних зернах"""
        results = await run_comparison(
            self.config.experiment_config(),
            algorithms=tuple(Algorithm),
            jobs=self.config.jobs,
            checkpoints=self.checkpoint_manager,
            progress=self.progress,
            grid_stride=self.config.grid_stride,
        )
        return self._finish(results)

    async def cmd_check(self) -> int:
        """Проверка ограничений для файла параметров; 0 только для допустимой модели"""
        params = read_parameters(self.args.parameters)
        problem = self.config.problem()
        report = feasibility(params, self.config.eps)

        rows = [
            [group.value, "OK" if value == 0.0 else "НАРУШЕНО", f"{value:.3e}"]
            for group, value in report.violations
        ]
        print(tabulate(rows, headers=["Ограничение", "Статус", "Нарушение"], tablefmt="grid"))
        try:
            print(f"Статический коэффициент: {static_gain(params):.6g}")
        except DegenerateDenominatorError as e:
            print(f"Статический коэффициент не определен: {e}")
        try:
            print(f"Стоимость на наборе данных: {cost(params, problem.dataset):.6e}")
        except DegenerateDenominatorError as e:
            print(f"Стоимость на наборе данных не определена: {e}")

        if report.feasible:
            print("Модель допустима")
            return EXIT_OK
        print(f"Модель недопустима, суммарное нарушение {report.total_violation:.3e}")
        return EXIT_VALIDATION

    async def cmd_plotdata(self) -> int:
        """Данные Боде и Найквиста для модели и измерений"""
        params = read_parameters(self.args.parameters)
        problem = self.config.problem()

        files = self.exporter.export_model_curves(params, self._grid())
        files.update(self.exporter.export_dataset_reference(problem.dataset))
        self.config.write_resolved(self.config.output_dir)

        for name, path in files.items():
            print(f"  {name}: {path}")
        return EXIT_OK

    async def run(self) -> int:
        """Запуск выбранной подкоманды с отображением ошибок в коды выхода"""
        commands = {
            "run": self.cmd_run,
            "compare": self.cmd_compare,
            "check": self.cmd_check,
            "plot-data": self.cmd_plotdata,
        }
        try:
            if not self.initialize():
                return EXIT_VALIDATION
            return await commands[self.args.command]()
        except DegenerateDenominatorError as e:
            print(f"Ошибка вычисления модели: {e}")
            return EXIT_RUNTIME
        except (ConfigError, DatasetError, EngineError) as e:
            print(f"Ошибка в конфигурации: {e}")
            return EXIT_VALIDATION
        except ValueError as e:
            print(f"Ошибка в исходных данных: {e}")
            return EXIT_VALIDATION
        except (ExportError, OSError) as e:
            print(f"Ошибка записи: {e}")
            return EXIT_RUNTIME
        except KeyboardInterrupt:
            print("\nПрерывание работы...")
            return EXIT_RUNTIME
        except Exception as e:
            print(f"\nОшибка: {e}")
            return EXIT_RUNTIME


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="Файл конфигурации KEY=VALUE")
    common.add_argument("--out", help="Каталог результатов")
    common.add_argument("--seed", type=int, help="Базовое зерно (прогон i использует seed + i)")
    common.add_argument("--repetitions", type=int, help="Число повторов")
    common.add_argument("--budget", type=int, help="Бюджет вычислений целевой функции")
    common.add_argument("--jobs", type=int, help="Максимум одновременных прогонов")
    common.add_argument("--algorithm", choices=[a.value for a in Algorithm], help="Алгоритм для run")
    common.add_argument("--resume", action="store_true", help="Продолжить по чекпоинтам в каталоге результатов")
    common.add_argument("-v", "--verbose", action="store_true", help="Подробный вывод")
    common.add_argument("-q", "--quiet", action="store_true", help="Без прогресс-бара")

    parser = argparse.ArgumentParser(
        prog="tds-optimizer",
        description="Идентификация модели с запаздываниями генетическими алгоритмами",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    subparsers.add_parser("run", parents=[common], help="Серия прогонов одного алгоритма")
    subparsers.add_parser("compare", parents=[common], help="Сравнение всех алгоритмов")

    check = subparsers.add_parser("check", parents=[common], help="Проверить ограничения для параметров")
    check.add_argument("parameters", help="CSV name,value с 9 параметрами модели")

    plot = subparsers.add_parser("plot-data", parents=[common], help="Данные Боде и Найквиста")
    plot.add_argument("parameters", help="CSV name,value с 9 параметрами модели")
    plot.add_argument("--omega-min", type=float, help="Нижняя частота сетки")
    plot.add_argument("--omega-max", type=float, help="Верхняя частота сетки")
    plot.add_argument("--points", type=int, help="Число точек сетки")

    return parser


def setup_logging(verbose: bool):
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


async def async_main(argv: Optional[Sequence[str]] = None) -> int:
    """Главная функция"""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_VALIDATION

    setup_logging(args.verbose)
    app = OptimizerApp(args)
    return await app.run()


def main(argv: Optional[Sequence[str]] = None) -> int:
    return asyncio.run(async_main(argv))


if __name__ == "__main__":
    sys.exit(main())
