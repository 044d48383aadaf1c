"""Models package"""
from .Schemas import (
    Regime, ModelParams, DriftConstants,
    StepKind, Side, PeelEvent,
    ExploreMode, HullTrace,
    PercOutcome, PercFrontier, SurvivalEstimate, ThresholdEstimate,
    InterfaceDensity, PercolationComparison,
    BoundaryMode, WalkRecord,
    FitMethod, FitResult, ExperimentConfig
)

__all__ = [
    'Regime', 'ModelParams', 'DriftConstants',
    'StepKind', 'Side', 'PeelEvent',
    'ExploreMode', 'HullTrace',
    'PercOutcome', 'PercFrontier', 'SurvivalEstimate', 'ThresholdEstimate',
    'InterfaceDensity', 'PercolationComparison',
    'BoundaryMode', 'WalkRecord',
    'FitMethod', 'FitResult', 'ExperimentConfig'
]
