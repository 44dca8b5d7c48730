"""Hereditary head occurrences, the head measure, and trace statistics."""

from dataclasses import asdict, dataclass
from typing import List, Optional, Tuple

from .reduction import LINEAR_HEAD, ReductionError, RuleLabel, Trace
from .terms import Abs, App, Name, Term, Var


class NotShallow(ValueError):
    pass


def _spine_nodes(t: Term) -> Tuple[List[Term], Var]:
    nodes = []
    while not isinstance(t, Var):
        nodes.append(t)
        t = t.fun if isinstance(t, App) else t.body
    return nodes, t


def hh_head(t: Term) -> Optional[Name]:
    """The free variable that ``t`` hereditarily has in head position, if any.

    Walk the head spine to the head variable. If a substitution on the
    spine binds it, the chain continues in that substitution's argument
    (whose scope is the part of the spine above the substitution). A
    variable bound by an abstraction ends the chain with no result.
    """
    scope: List[Term] = []
    node = t
    for _ in range(t.size + 1):
        nodes, v = _spine_nodes(node)
        scope = scope + nodes
        for i in range(len(scope) - 1, -1, -1):
            b = scope[i]
            if not isinstance(b, App) and b.binder == v.name:
                if isinstance(b, Abs):
                    return None
                node = b.arg
                scope = scope[:i]
                break
        else:
            return v.name
    raise AssertionError("hereditary head chain did not terminate")


def is_hh_occurrence(t: Term, x: Name) -> bool:
    """Whether ``t`` is HH[x] for a hereditary head context HH not capturing ``x``."""
    return hh_head(t) == x


def head_measure(t: Term) -> int:
    if not t.shallow:
        raise NotShallow("the head measure is defined on shallow terms only")
    n = 0
    # only the spine matters: applications and abstractions take the measure
    # of their head part, substitutions of their body
    while not isinstance(t, Var):
        if isinstance(t, App):
            t = t.fun
        elif isinstance(t, Abs):
            t = t.body
        else:
            if hh_head(t.body) == t.binder:
                n += 1
            t = t.body
    return n


@dataclass(frozen=True)
class TraceStats:
    total: int
    mult: int
    expo: int
    phases: int
    quadratic_ok: bool

    def to_json(self) -> dict:
        return asdict(self)


_MULT = (RuleLabel.HeadDB, RuleLabel.DB)
_EXPO = (RuleLabel.HeadLS, RuleLabel.LS)


def stats_from_rules(rules, strict: bool = True) -> TraceStats:
    mult = expo = phases = 0
    in_phase = False
    for r in rules:
        if strict and r not in LINEAR_HEAD:
            raise ReductionError(f"rule {r} is not a linear head rule")
        if r in _MULT:
            mult += 1
            if not in_phase:
                phases += 1
            in_phase = True
        elif r in _EXPO:
            expo += 1
            in_phase = False
        else:
            # garbage collection is not a linear head step and is not counted
            in_phase = False
    total = mult + expo
    return TraceStats(total, mult, expo, phases, total <= mult * mult + mult)


def trace_stats(trace: Trace, strict: bool = True) -> TraceStats:
    """Counts of a linear head trace; ``strict=False`` tolerates other rules."""
    return stats_from_rules(trace.rules(), strict)
