"""
Data models for the scatternet toolkit.
"""
from .geometry import ContrastMap, Grid, MeasurementSetup
from .fields import FieldSet, Operators, SolverSettings
from .inversion import InversionConfig, InversionTrace, IterationRecord
from .network import (
    CascadeModel, CascadeModule, ConvLayer, EpochRecord, ModuleSpec, TrainConfig, TrainingHistory
)
from .dataset import DatasetHeader, Sample, ScatteringDataset
from .report import Histogram, QualityReport
from .run_config import RunConfig

__all__ = [
    # Geometry
    "Grid",
    "MeasurementSetup",
    "ContrastMap",

    # Forward model
    "SolverSettings",
    "Operators",
    "FieldSet",

    # Classical inversion
    "InversionConfig",
    "IterationRecord",
    "InversionTrace",

    # Network
    "ModuleSpec",
    "ConvLayer",
    "CascadeModule",
    "CascadeModel",
    "TrainConfig",
    "EpochRecord",
    "TrainingHistory",

    # Data
    "DatasetHeader",
    "Sample",
    "ScatteringDataset",
    "Histogram",
    "QualityReport",
    "RunConfig",
]
