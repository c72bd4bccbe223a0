"""Numerical toolkit for gas giant metrics g = x^-alpha (dx^2 + h) on a boundary collar."""

from .errors import (AlphaMismatchError, ConfigError, ConvergenceError, FitError, FlowError,
                     GasGiantError, MetricError, NonUniqueError, NotPositiveDefiniteError)
from .fitting import LogLogFit, fit_loglog, richardson
from .metric import GasGiantMetric, ClassicalMetric, load_metric, metric_from_dict
from .flow import connect_boundary_points, integrate_to_boundary, scattering_relation
from .jacobi import conjugate_point_scan, simplicity_certificate
from .fields import field_from_dict, load_field
from .xray import discrete_injectivity_probe, transport_residual, xray_transform
from .pestov import pestov_terms
from .spectral import eigen_table, indicial_data, truncation_rate_fit

__version__ = "0.1.0"
