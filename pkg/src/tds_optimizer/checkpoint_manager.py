import json
import logging
from dataclasses import dataclass, asdict
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from .engine import Individual, RunTrace

logger = logging.getLogger(__name__)


@dataclass
class Checkpoint:
    """Завершенный прогон, сохраненный для возобновления серии"""
    algorithm: str
    seed: int
    fingerprint: str
    evaluations_used: int
    best_history: List[Tuple[int, float]]
    best_genes: List[float]
    best_fitness: float
    best_caste: Optional[int] = None
    timestamp: str = None
    metadata: Dict[str, Any] = None

    def __post_init__(self):
        if self.timestamp is None:
            self.timestamp = datetime.now().isoformat()
        if self.metadata is None:
            self.metadata = {}

    @classmethod
    def from_trace(cls, trace: RunTrace, fingerprint: str) -> "Checkpoint":
        best = trace.best_individual
        return cls(
            algorithm=trace.algorithm,
            seed=trace.seed,
            fingerprint=fingerprint,
            evaluations_used=trace.evaluations_used,
            best_history=[(int(index), float(value)) for index, value in trace.best_history],
            best_genes=[float(gene) for gene in best.genes],
            best_fitness=float(best.fitness),
            best_caste=best.caste,
        )

    def to_trace(self) -> RunTrace:
        return RunTrace(
            best_history=[(int(index), float(value)) for index, value in self.best_history],
            best_individual=Individual(
                genes=np.array(self.best_genes, dtype=float),
                fitness=self.best_fitness,
                caste=self.best_caste,
            ),
            evaluations_used=self.evaluations_used,
            seed=self.seed,
            algorithm=self.algorithm,
        )


class CheckpointManager:
    """Менеджер для сохранения и загрузки завершенных прогонов"""

    def __init__(self, checkpoints_dir: str = "checkpoints"):
        self.checkpoints_dir = Path(checkpoints_dir)
        self.checkpoints_dir.mkdir(parents=True, exist_ok=True)

    def _path(self, algorithm: str, seed: int) -> Path:
        return self.checkpoints_dir / f"{algorithm}_{seed}.json"

    def save_trace(self, trace: RunTrace, fingerprint: str) -> str:
        """
        Сохранить прогон

        Args:
            trace: Трасса завершенного прогона
            fingerprint: Отпечаток конфигурации эксперимента

        Returns:
            Путь к файлу чекпоинта
        """
        checkpoint = Checkpoint.from_trace(trace, fingerprint)
        filepath = self._path(checkpoint.algorithm, checkpoint.seed)

        with open(filepath, 'w', encoding='utf-8') as f:
            json.dump(asdict(checkpoint), f, ensure_ascii=False)

        logger.debug("Сохранен чекпоинт %s", filepath)
        return str(filepath)

    def load_trace(self, algorithm: str, seed: int, fingerprint: str) -> Optional[RunTrace]:
        """
        Загрузить прогон, если он сохранен для той же конфигурации

        Returns:
            Трасса или None (нет файла, файл поврежден, другая конфигурация)
        """
        checkpoint = self._load(self._path(algorithm, seed))
        if checkpoint is None:
            return None
        if checkpoint.fingerprint != fingerprint:
            logger.info("Чекпоинт %s_%d относится к другой конфигурации, прогон будет повторен", algorithm, seed)
            return None
        return checkpoint.to_trace()

    def _load(self, filepath: Path) -> Optional[Checkpoint]:
        if not filepath.exists():
            return None
        try:
            with open(filepath, 'r', encoding='utf-8') as f:
                data = json.load(f)
            return Checkpoint(**data)
        except (OSError, ValueError, TypeError) as e:
            logger.warning("Ошибка загрузки чекпоинта %s: %s", filepath, e)
            return None

    def load_all_checkpoints(self, algorithm: Optional[str] = None) -> List[Checkpoint]:
        """Все чекпоинты, опционально только для одного алгоритма, по возрастанию зерна"""
        checkpoints = []
        pattern = f"{algorithm}_*.json" if algorithm else "*.json"
        for file_path in self.checkpoints_dir.glob(pattern):
            checkpoint = self._load(file_path)
            if checkpoint is not None:
                checkpoints.append(checkpoint)
        return sorted(checkpoints, key=lambda x: (x.algorithm, x.seed))

    def list_checkpoints(self) -> Dict[str, List[Checkpoint]]:
        """Чекпоинты, сгруппированные по алгоритму"""
        grouped: Dict[str, List[Checkpoint]] = {}
        for checkpoint in self.load_all_checkpoints():
            grouped.setdefault(checkpoint.algorithm, []).append(checkpoint)
        return grouped

    def clear(self, algorithm: Optional[str] = None) -> int:
        """Удалить чекпоинты; возвращает число удаленных файлов"""
        pattern = f"{algorithm}_*.json" if algorithm else "*.json"
        removed = 0
        for file_path in self.checkpoints_dir.glob(pattern):
            file_path.unlink()
            removed += 1
        return removed
