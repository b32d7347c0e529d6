"""Training a single network layer as a variational inequality."""

from .activations import Activation, activate, check_firm_nonexpansive, parse_activation
from .constraints import ConstraintSet, parse_constraint, project
from .linops import (BiasAugmented, DenseOperator, FeatureConv2d, KernelConv2d, LinearOperator,
                     NormEstimate, ShapeError, conv2d, operator_norm_sq)
from .problem import (Sample, VIProblem, build_problem, interpolation_gap, max_step_size,
                      natural_residual, residual_map, step_from_fraction, training_error,
                      training_errors)

__version__ = "0.1.0"
