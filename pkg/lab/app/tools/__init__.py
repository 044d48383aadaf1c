"""Tools package - exact formulas and statistical fitters"""
from .analytic_tools import (
    phi,
    model_params,
    step_prob,
    partition_Z,
    free_moments,
    stable_normalizers,
    analytic_drifts,
    submap_probability,
    levy_density
)
from .fit_tools import fit_tail, slope_fit, tail_ratio

__all__ = [
    'phi',
    'model_params',
    'step_prob',
    'partition_Z',
    'free_moments',
    'stable_normalizers',
    'analytic_drifts',
    'submap_probability',
    'levy_density',
    'fit_tail',
    'slope_fit',
    'tail_ratio'
]
