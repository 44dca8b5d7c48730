"""Head reduction, linear substitution, and the cost of unfolding sharing."""

import sys

# builders and unfoldings recurse along term depth
if sys.getrecursionlimit() < 20000:
    sys.setrecursionlimit(20000)

from .measure import TraceStats, head_measure, hh_head, trace_stats
from .reduction import (
    HEAD,
    LINEAR_HEAD,
    LSUB,
    SUBSTITUTION,
    Policy,
    ReductionStep,
    RuleLabel,
    StepLimitExceeded,
    Trace,
    linear_unfold,
    normalize,
    simulate_head,
    unfold,
)
from .syntax import ParseError, parse, show
from .terms import Abs, App, Name, Step, Sub, Term, Var, alpha_eq, gen_family
from .unfoldcheck import fill_matrix, preprocess, unfold_eq

__all__ = [
    "Abs", "App", "HEAD", "LINEAR_HEAD", "LSUB", "Name", "ParseError", "Policy",
    "ReductionStep", "RuleLabel", "SUBSTITUTION", "Step", "StepLimitExceeded", "Sub",
    "Term", "Trace", "TraceStats", "Var", "alpha_eq", "fill_matrix", "gen_family",
    "head_measure", "hh_head", "linear_unfold", "normalize", "parse", "preprocess",
    "show", "simulate_head", "trace_stats", "unfold", "unfold_eq",
]
