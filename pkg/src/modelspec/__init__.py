"""
Scenario definitions: expression language, dual-number differentiation and
sampled metric models.
"""

from src.modelspec.model import (
    BlendedModel,
    FieldSamples,
    MetricModel,
    SampledModel,
    periodicity_defect,
    sample_model,
    space_grid,
)
from src.modelspec.parser import evaluate, parse_expr, to_source

__all__ = [
    'BlendedModel',
    'FieldSamples',
    'MetricModel',
    'SampledModel',
    'evaluate',
    'parse_expr',
    'periodicity_defect',
    'sample_model',
    'space_grid',
    'to_source',
]
