"""Generalized forward-backward splitting with a penalty term."""

from .errors import (DivergenceError, EstimationError, FormatError, GfbpError,
                     ParameterError, ShapeError, UnsupportedInstanceError)
from .operators import CocoerciveOp, ResolventOp
from .schedules import StepSchedule, make_default, validate
from .solver import GfbpProblem, RunReport, StoppingRule, ergodic_average, gfbp_step, run

__version__ = "0.1.0"
