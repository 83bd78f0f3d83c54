"""
Time-Delay System Caste Optimizer

Идентификация передаточной функции с тремя запаздываниями по измеренной
частотной характеристике: генетический алгоритм и его социально-когнитивные
варианты (касты, разделенные касты, TOPSIS-мутация).
"""

__version__ = "0.1.0"
__author__ = "TDS Optimizer Team"

from .model import (
    ModelParameters,
    ObservationDataset,
    FeasibilityReport,
    ConstraintGroup,
    GeneBounds,
    TimeDelayProblem,
    complete_parameters,
    transfer_value,
    cost,
    feasibility,
    penalized_cost,
    bode_points,
    nyquist_points,
)
from .engine import EngineConfig, GeneticAlgorithm, Individual, RunTrace, SearchBounds
from .socio import CasteAlgorithm, SeparatedCasteAlgorithm, TopsisAlgorithm
from .harness import Algorithm, ExperimentConfig, run_experiment, summarize, convergence_curve
from .exporter import ResultsExporter, export_results, read_summary
from .checkpoint_manager import CheckpointManager, Checkpoint
from .config import Config
from .main import OptimizerApp

__all__ = [
    "ModelParameters",
    "ObservationDataset",
    "FeasibilityReport",
    "ConstraintGroup",
    "GeneBounds",
    "TimeDelayProblem",
    "complete_parameters",
    "transfer_value",
    "cost",
    "feasibility",
    "penalized_cost",
    "bode_points",
    "nyquist_points",
    "EngineConfig",
    "GeneticAlgorithm",
    "Individual",
    "RunTrace",
    "SearchBounds",
    "CasteAlgorithm",
    "SeparatedCasteAlgorithm",
    "TopsisAlgorithm",
    "Algorithm",
    "ExperimentConfig",
    "run_experiment",
    "summarize",
    "convergence_curve",
    "ResultsExporter",
    "export_results",
    "read_summary",
    "CheckpointManager",
    "Checkpoint",
    "Config",
    "OptimizerApp",
]
