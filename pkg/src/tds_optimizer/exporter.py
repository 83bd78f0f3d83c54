import logging
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from .harness import ExperimentResult, StatsSummary
from .model import (
    BODE_COLUMNS,
    NYQUIST_COLUMNS,
    DegenerateDenominatorError,
    ModelParameters,
    ObservationDataset,
    TimeDelayProblem,
    bode_points,
    dataset_bode_points,
    dataset_nyquist_points,
    nyquist_points,
    plot_grid,
)

logger = logging.getLogger(__name__)

SUMMARY_COLUMNS = ["algorithm", "average", "minimum", "std"]
FINALS_COLUMNS = ["algorithm", "seed", "final_cost"]
CONVERGENCE_COLUMNS = ["evaluation", "mean_best"]


class ExportError(RuntimeError):
    """Ошибка записи результатов; сообщение содержит путь"""


class ResultsExporter:
    """Запись результатов экспериментов в CSV и XLSX"""

    def __init__(self, output_dir: Union[str, Path] = "results"):
        self.output_dir = Path(output_dir)
        self.skipped: List[str] = []

    def _prepare(self):
        try:
            self.output_dir.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise ExportError(f"Не удалось создать каталог {self.output_dir}: {e}")

    def _write_frame(self, frame: pd.DataFrame, filename: str) -> Path:
        filepath = self.output_dir / filename
        try:
            frame.to_csv(filepath, index=False)
        except OSError as e:
            raise ExportError(f"Не удалось записать {filepath}: {e}")
        logger.debug("Записан %s (%d строк)", filepath, len(frame))
        return filepath

    def export_results(
        self,
        results: Sequence[ExperimentResult],
        problem: TimeDelayProblem,
        omegas: Optional[np.ndarray] = None,
        workbook: bool = True,
    ) -> Dict[str, Path]:
        """
        Экспортировать все результаты сравнения

        Алгоритмы, для лучших особей которых кривые Боде и Найквиста не
        построены, перечисляются в self.skipped.

        Args:
            results: Результаты по алгоритмам (в порядке строк сводной таблицы)
            problem: Задача, по которой восстанавливаются параметры лучших особей
            omegas: Сетка частот для графиков
            workbook: Записать также results.xlsx

        Returns:
            Словарь с путями к созданным файлам
        """
        if not results or any(not result.traces for result in results):
            raise ExportError(f"Нечего экспортировать в {self.output_dir}: нет трасс")

        self.skipped = []
        self._prepare()
        grid = plot_grid() if omegas is None else np.asarray(omegas, dtype=float)
        files: Dict[str, Path] = {
            'summary': self.export_summary([result.summary for result in results]),
            'finals': self.export_finals(results),
        }

        for result in results:
            name = result.algorithm
            files[f'convergence_{name}'] = self.export_convergence(result)

            best = problem.parameters(result.best_trace.best_individual.genes)
            files[f'best_parameters_{name}'] = self.export_parameters(best, f"best_parameters_{name}.csv")
            try:
                files.update(self.export_model_curves(best, grid, suffix=name))
            except DegenerateDenominatorError as e:
                logger.warning("Кривые для %s не построены: %s", name, e)
                self.skipped.append(f"{name}: {e}")

        files.update(self.export_dataset_reference(problem.dataset))

        if workbook:
            files['workbook'] = self.export_workbook(results)

        logger.info("Экспортировано %d файлов в %s", len(files), self.output_dir)
        return files

    def export_summary(self, summaries: Sequence[StatsSummary]) -> Path:
        """
        Сводная таблица summary.csv

        Args:
            summaries: Статистика по алгоритмам в порядке строк

        Returns:
            Путь к файлу
        """
        frame = pd.DataFrame(
            [(s.algorithm, s.average, s.minimum, s.std) for s in summaries],
            columns=SUMMARY_COLUMNS,
        )
        return self._write_frame(frame, "summary.csv")

    def export_finals(self, results: Sequence[ExperimentResult]) -> Path:
        """
        Итоговые стоимости всех прогонов в finals.csv

        Args:
            results: Результаты по алгоритмам

        Returns:
            Путь к файлу (строка на прогон: algorithm, seed, final_cost)
        """
        rows = [
            (result.algorithm, trace.seed, trace.final_cost)
            for result in results
            for trace in result.traces
        ]
        return self._write_frame(pd.DataFrame(rows, columns=FINALS_COLUMNS), "finals.csv")

    def export_convergence(self, result: ExperimentResult) -> Path:
        """Средняя кривая сходимости алгоритма в convergence_<algorithm>.csv"""
        frame = pd.DataFrame(
            {"evaluation": result.curve.evaluations, "mean_best": result.curve.mean_best},
            columns=CONVERGENCE_COLUMNS,
        )
        return self._write_frame(frame, f"convergence_{result.algorithm}.csv")

    def export_parameters(self, params: ModelParameters, filename: str) -> Path:
        self._prepare()
        frame = pd.DataFrame(list(params.as_dict().items()), columns=["name", "value"])
        return self._write_frame(frame, filename)

    def export_model_curves(self, params: ModelParameters, omegas: np.ndarray, suffix: str = "") -> Dict[str, Path]:
        """Файлы Боде и Найквиста для модели"""
        self._prepare()
        tail = f"_{suffix}" if suffix else ""
        bode = pd.DataFrame(bode_points(params, omegas), columns=BODE_COLUMNS)
        nyquist = pd.DataFrame(nyquist_points(params, omegas), columns=NYQUIST_COLUMNS)
        return {
            f'bode{tail}': self._write_frame(bode, f"bode{tail}.csv"),
            f'nyquist{tail}': self._write_frame(nyquist, f"nyquist{tail}.csv"),
        }

    def export_dataset_reference(self, dataset: ObservationDataset) -> Dict[str, Path]:
        """Опорные кривые по измеренным данным"""
        self._prepare()
        bode = pd.DataFrame(dataset_bode_points(dataset), columns=BODE_COLUMNS)
        nyquist = pd.DataFrame(dataset_nyquist_points(dataset), columns=NYQUIST_COLUMNS)
        return {
            'dataset_bode': self._write_frame(bode, "dataset_bode.csv"),
            'dataset_nyquist': self._write_frame(nyquist, "dataset_nyquist.csv"),
        }

    def export_workbook(self, results: Sequence[ExperimentResult]) -> Path:
        """Все таблицы в одном Excel файле"""
        filepath = self.output_dir / "results.xlsx"

        summary_df = pd.DataFrame(
            [(r.summary.algorithm, r.summary.average, r.summary.minimum, r.summary.std) for r in results],
            columns=SUMMARY_COLUMNS,
        )
        finals_df = pd.DataFrame(
            [(r.algorithm, t.seed, t.final_cost) for r in results for t in r.traces],
            columns=FINALS_COLUMNS,
        )
        convergence_df = pd.DataFrame({"evaluation": results[0].curve.evaluations})
        for result in results:
            if len(result.curve.mean_best) == len(convergence_df):
                convergence_df[result.algorithm] = result.curve.mean_best

        try:
            with pd.ExcelWriter(filepath, engine='openpyxl') as writer:
                summary_df.to_excel(writer, sheet_name='summary', index=False)
                finals_df.to_excel(writer, sheet_name='finals', index=False)
                convergence_df.to_excel(writer, sheet_name='convergence', index=False)
        except OSError as e:
            raise ExportError(f"Не удалось записать {filepath}: {e}")

        return filepath


def export_results(
    results: Sequence[ExperimentResult],
    directory: Union[str, Path],
    problem: TimeDelayProblem,
    omegas: Optional[np.ndarray] = None,
) -> Dict[str, Path]:
    return ResultsExporter(directory).export_results(results, problem, omegas)


def read_summary(path: Union[str, Path]) -> List[StatsSummary]:
    """Прочитать summary.csv обратно в StatsSummary"""
    frame = pd.read_csv(path, float_precision="round_trip")
    if list(frame.columns) != SUMMARY_COLUMNS:
        raise ValueError(f"Ожидался заголовок {','.join(SUMMARY_COLUMNS)} в {path}")
    return [
        StatsSummary(
            algorithm=str(row.algorithm),
            average=float(row.average),
            minimum=float(row.minimum),
            std=float(row.std),
        )
        for row in frame.itertuples(index=False)
    ]
