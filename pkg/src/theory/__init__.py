from .theorem_check import (
    BoundReport, SmoothSeriesSpec, TrialResult, Violation, multiscale_mixing_reference,
    pooled_levels, theorem1_bound_check, theorem1_matrix, theorem1_predictor,
)

__all__ = [
    'BoundReport', 'SmoothSeriesSpec', 'TrialResult', 'Violation', 'multiscale_mixing_reference',
    'pooled_levels', 'theorem1_bound_check', 'theorem1_matrix', 'theorem1_predictor',
]
