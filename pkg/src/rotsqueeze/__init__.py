"""Discrepancy sums of irrational rotations and continued fractions that squeeze their growth."""

__version__ = "0.1.0"

from .cf import (
    AlphaBracket,
    Convergent,
    DigitSequence,
    bracket,
    convergents,
    extend,
    nested_value,
    parse_digits,
)
from .errors import *  # noqa: F401,F403
from .expr import ScheduleExpr, SequenceExpr, eval_log, parse, pretty, validate_family_order
from .orbit import (
    Classification,
    DiscrepancySeries,
    OrbitConfig,
    classify_point,
    discrepancy_series,
    verify_all_x_band,
    verify_qindex_identity,
)
from .squeeze import (
    ConstructionState,
    SqueezeSpec,
    StageCertificate,
    build_alpha,
    build_alpha_fast,
    build_alpha_slow,
    choose_next_pair,
    robustness_window,
)
