"""Symbolic identification of interventional queries on an ADMG.

`identify_effect` compiles P(y | do(x)) into a closed-form estimand over the
observational distribution, or returns the hedge witnessing non-identifiability.
`identify_conditional_effect` handles P(y | do(x), z) by first shifting the
maximal rule-2 subset of z into the intervention set and then taking a quotient.

Every recursion level enters exactly one of seven steps; the trace of entered
steps doubles as the reference the sampling-network compiler must mirror.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

from .estimands import (
    OBSERVATIONAL,
    CondTerm,
    DistRef,
    Estimand,
    Nested,
    Product,
    Quotient,
    SumOver,
    free_variables,
    product_of,
    sum_over,
)
from .graphs import Admg, GraphError


@dataclass(frozen=True)
class Hedge:
    """Witness of non-identifiability: the failing graph's variables and the
    offending single c-component inside them."""

    f: frozenset[str]
    f_prime: frozenset[str]

    def __post_init__(self):
        if not self.f_prime <= self.f:
            raise ValueError("hedge witness must satisfy f_prime <= f")


class NotIdentifiable(Exception):
    def __init__(self, hedge: Hedge):
        super().__init__(f"query is not identifiable; hedge witness {sorted(hedge.f)} / {sorted(hedge.f_prime)}")
        self.hedge = hedge


@dataclass(frozen=True)
class TraceEntry:
    step: str  # "S1" .. "S7"
    y: frozenset[str]
    x: frozenset[str]
    depth: int

    def describe(self) -> str:
        return f"{self.step} y={{{','.join(sorted(self.y))}}} x={{{','.join(sorted(self.x))}}}"


TERMINAL_STEPS = {"S1", "S5", "S6"}


@dataclass
class IdResult:
    estimand: Estimand | None
    hedge: Hedge | None
    trace: list[TraceEntry] = field(default_factory=list)

    @property
    def identifiable(self) -> bool:
        return self.hedge is None


def identify_effect(y: Iterable[str], x: Iterable[str], g: Admg) -> IdResult:
    """Identify P(y | do(x)) in g. Returns the estimand or the hedge, plus the trace."""
    y, x = _check_query(y, x, g)
    trace: list[TraceEntry] = []
    root_order = g.topological_order()
    try:
        e = _identify(y, x, OBSERVATIONAL, g, root_order, trace, 0)
    except NotIdentifiable as fail:
        return IdResult(None, fail.hedge, trace)
    return IdResult(_close_over_free(e, y | x, g), None, trace)


def identify_conditional_effect(
    y: Iterable[str], x: Iterable[str], z: Iterable[str], g: Admg
) -> IdResult:
    """Identify P(y | do(x), z) in g as a quotient of unconditional estimands."""
    y, x = _check_query(y, x, g)
    z = frozenset(z)
    for n in z:
        g.variable(n)
    if z & (y | x):
        raise GraphError("conditioning set overlaps the query sets")
    x, z = maximal_rule2_shift(y, x, z, g)
    trace: list[TraceEntry] = []
    root_order = g.topological_order()
    try:
        e = _identify(y | z, x, OBSERVATIONAL, g, root_order, trace, 0)
    except NotIdentifiable as fail:
        return IdResult(None, fail.hedge, trace)
    e = _close_over_free(e, y | z | x, g)
    return IdResult(Quotient(e, SumOver(tuple(g.sorted_names(y)), e)), None, trace)


def maximal_rule2_shift(
    y: frozenset[str], x: frozenset[str], z: frozenset[str], g: Admg
) -> tuple[frozenset[str], frozenset[str]]:
    """Move every z-variable that passes the do-calculus rule-2 test into x.

    One variable moves per pass, in declaration order; the fixed point is the
    unique maximal shift, so iteration order only affects reproducibility.
    """
    moved = True
    while moved:
        moved = False
        for alpha in g.sorted_names(z):
            mutilated = g.remove_incoming(x).remove_outgoing([alpha])
            if mutilated.d_separated(y, [alpha], x | (z - {alpha})):
                x = x | {alpha}
                z = z - {alpha}
                moved = True
                break
    return x, z


# -- the recursion ---------------------------------------------------------------


def _check_query(y: Iterable[str], x: Iterable[str], g: Admg) -> tuple[frozenset[str], frozenset[str]]:
    y, x = frozenset(y), frozenset(x)
    for n in y | x:
        g.variable(n)
    if not y:
        raise GraphError("query target set is empty")
    if y & x:
        raise GraphError("target and intervention sets overlap")
    return y, x


def _identify(
    y: frozenset[str],
    x: frozenset[str],
    ref: DistRef,
    g: Admg,
    root_order: list[str],
    trace: list[TraceEntry],
    depth: int,
) -> Estimand:
    v = set(g.names)
    enter = lambda step: trace.append(TraceEntry(step, y, x, depth))

    # step 1: nothing left to intervene on
    if not x:
        enter("S1")
        return CondTerm(tuple(g.sorted_names(y)), (), ref)

    # step 2: restrict to ancestors of y
    ancestors = g.ancestors(y)
    if v - ancestors:
        enter("S2")
        return _identify(y, x & ancestors, ref, g.induced_subgraph(ancestors), root_order, trace, depth + 1)

    # step 3: absorb variables made irrelevant by the intervention
    w = (v - x) - g.remove_incoming(x).ancestors(y)
    if w:
        enter("S3")
        return _identify(y, x | w, ref, g, root_order, trace, depth + 1)

    components = g.induced_subgraph(v - x).c_components()

    # step 4: factorize over the c-components of g minus x
    if len(components) > 1:
        enter("S4")
        factors = [
            _identify(frozenset(s), frozenset(v - set(s)), ref, g, root_order, trace, depth + 1)
            for s in components
        ]
        return sum_over(g.sorted_names(v - y - x), product_of(factors))

    (s,) = components
    s_set = frozenset(s)
    graph_components = g.c_components()

    # step 5: the whole graph is one c-component; the query hedges
    if len(graph_components) == 1:
        enter("S5")
        raise NotIdentifiable(Hedge(frozenset(v), s_set))

    # step 6: s is itself a c-component; interventions reduce to conditioning
    order = [n for n in root_order if n in v]
    if any(set(c) == s_set for c in graph_components):
        enter("S6")
        factors = [
            CondTerm((vi,), tuple(order[: order.index(vi)]), ref) for vi in order if vi in s_set
        ]
        return sum_over(g.sorted_names(s_set - y), product_of(factors))

    # step 7: s sits strictly inside a larger c-component s'
    s_prime = next(set(c) for c in graph_components if s_set < set(c))
    enter("S7")
    factors = [
        CondTerm((vi,), tuple(order[: order.index(vi)]), ref) for vi in order if vi in s_prime
    ]
    nested = Nested(product_of(factors), tuple(n for n in order if n in s_prime))
    return _identify(y, x & s_prime, nested, g.induced_subgraph(s_prime), root_order, trace, depth + 1)


def _close_over_free(e: Estimand, query_vars: frozenset[str], g: Admg) -> Estimand:
    """Average out free variables beyond the query's own, weighting by their
    observational joint. The recursion leaves such variables behind when an
    absorbed intervention survives into a conditioning context; the estimand's
    value is constant in them, so this only normalizes the expression's arity."""
    extra = free_variables(e) - query_vars
    if not extra:
        return e
    extra_sorted = tuple(g.sorted_names(extra))
    return SumOver(extra_sorted, Product((CondTerm(extra_sorted, (), OBSERVATIONAL), e)))
