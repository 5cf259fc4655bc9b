"""Influence, rescaled-influence and Newton-step estimates of leave-T-out effects
for L2-regularized logistic and least-squares models."""

__version__ = "0.1.0"

from .dataset import Dataset, DatasetError, SyntheticSpec, load, save, synthesize
from .glm import FittedModel, ModelSpec, SolverError, fit
from .attribution import (Attributions, AttributionVector, DegenerateLeverageError, RemovalPrediction,
                          aggregate, attribute_all, influence, leverage, newton_step, rescaled_influence)
from .metrics import EvaluationFn
from .oracle import RetrainCache, retrain_without
from .selection import RemovalSet

__all__ = [
    "Dataset", "DatasetError", "SyntheticSpec", "load", "save", "synthesize",
    "FittedModel", "ModelSpec", "SolverError", "fit",
    "Attributions", "AttributionVector", "DegenerateLeverageError", "RemovalPrediction",
    "aggregate", "attribute_all", "influence", "leverage", "newton_step", "rescaled_influence",
    "EvaluationFn", "RetrainCache", "retrain_without", "RemovalSet",
]
