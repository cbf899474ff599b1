"""Symbolic estimands over observational conditionals, and their exact evaluation.

An estimand is a finite expression tree of sums, products, quotients and
conditional terms. Each conditional term is taken relative to a distribution
reference: either the observational joint, or a nested estimand describing the
partially-intervened distribution produced midway through identification.
Evaluation is exact summation over discrete states, done with dense numpy
arrays aligned on the observational table's variable axes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Union

import numpy as np

from .graphs import Variable


class EvaluationError(ValueError):
    """Estimand references variables the table lacks, or hits a zero denominator."""


# -- distribution tables -------------------------------------------------------


@dataclass(frozen=True)
class DistTable:
    """Dense table over discrete variables, axis i indexed by variables[i]'s states."""

    variables: tuple[Variable, ...]
    probs: np.ndarray

    def __post_init__(self):
        expected = tuple(v.cardinality for v in self.variables)
        if self.probs.shape != expected:
            raise ValueError(f"shape {self.probs.shape} != cardinalities {expected}")
        if np.any(self.probs < 0):
            raise ValueError("negative probability entry")

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.variables)

    def total(self) -> float:
        return float(self.probs.sum())

    def marginal(self, names: Iterable[str]) -> DistTable:
        keep = set(names)
        missing = keep - set(self.names)
        if missing:
            raise EvaluationError(f"unknown variables {sorted(missing)}")
        axes = tuple(i for i, v in enumerate(self.variables) if v.name not in keep)
        variables = tuple(v for v in self.variables if v.name in keep)
        return DistTable(variables, self.probs.sum(axis=axes))

    def fix(self, assignment: dict[str, int]) -> DistTable:
        """Slice out the given values, returning a table over the remaining variables."""
        idx = []
        variables = []
        for v in self.variables:
            if v.name in assignment:
                idx.append(assignment[v.name])
            else:
                idx.append(slice(None))
                variables.append(v)
        return DistTable(tuple(variables), self.probs[tuple(idx)])


# -- expression tree -----------------------------------------------------------


class _Obs:
    """Sentinel reference to the observational joint distribution."""

    def __repr__(self):
        return "P"


OBSERVATIONAL = _Obs()


@dataclass(frozen=True)
class Nested:
    """A partially-intervened distribution over `over`, given by an estimand.

    `expr` is a product of conditional terms whose targets enumerate `over`;
    any other variables it mentions are free parameters of the distribution.
    """

    expr: "Estimand"
    over: tuple[str, ...]


DistRef = Union[_Obs, Nested]


@dataclass(frozen=True)
class CondTerm:
    targets: tuple[str, ...]
    context: tuple[str, ...]
    ref: DistRef = OBSERVATIONAL


@dataclass(frozen=True)
class Product:
    factors: tuple["Estimand", ...]


@dataclass(frozen=True)
class SumOver:
    over: tuple[str, ...]
    term: "Estimand"


@dataclass(frozen=True)
class Quotient:
    numerator: "Estimand"
    denominator: "Estimand"


Estimand = Union[CondTerm, Product, SumOver, Quotient]


def product_of(factors: Iterable[Estimand]) -> Estimand:
    factors = tuple(factors)
    if len(factors) == 1:
        return factors[0]
    return Product(factors)


def sum_over(over: Iterable[str], term: Estimand) -> Estimand:
    over = tuple(over)
    if not over:
        return term
    return SumOver(over, term)


def free_variables(e: Estimand) -> set[str]:
    if isinstance(e, CondTerm):
        out = set(e.targets) | set(e.context)
        if isinstance(e.ref, Nested):
            out |= free_variables(e.ref.expr) - set(e.ref.over)
        return out
    if isinstance(e, Product):
        return set().union(*(free_variables(f) for f in e.factors)) if e.factors else set()
    if isinstance(e, SumOver):
        return free_variables(e.term) - set(e.over)
    if isinstance(e, Quotient):
        return free_variables(e.numerator) | free_variables(e.denominator)
    raise TypeError(f"not an estimand node: {e!r}")


# -- pretty printer ------------------------------------------------------------


def format_estimand(e: Estimand) -> str:
    """Render in the conventional sum/product notation, e.g.
    ``Σ_{s} P(s|x) · Σ_{x'} P(x') P(r|x',s)``. Deterministic, used in golden tests."""
    return _render(e, {})


def _sym(name: str, rename: dict[str, str]) -> str:
    return rename.get(name, name.lower())


def _fresh_primes(names: Iterable[str], rename: dict[str, str]) -> dict[str, str]:
    taken = set(rename.values())
    out = dict(rename)
    for n in names:
        candidate = n.lower() + "'"
        while candidate in taken:
            candidate += "'"
        out[n] = candidate
        taken.add(candidate)
    return out


def _render(e: Estimand, rename: dict[str, str]) -> str:
    if isinstance(e, CondTerm):
        if isinstance(e.ref, Nested):
            return _render_nested_term(e, rename)
        t = ",".join(_sym(v, rename) for v in e.targets)
        if e.context:
            return f"P({t}|{','.join(_sym(v, rename) for v in e.context)})"
        return f"P({t})"
    if isinstance(e, Product):
        parts = [_render(f, rename) for f in e.factors]
        out = parts[0]
        for part in parts[1:]:
            out += (" · " if part.startswith(("Σ", "[")) else " ") + part
        return out
    if isinstance(e, SumOver):
        names = ",".join(_sym(v, rename) for v in e.over)
        return f"Σ_{{{names}}} {_render(e.term, rename)}"
    if isinstance(e, Quotient):
        return f"[{_render(e.numerator, rename)}] / [{_render(e.denominator, rename)}]"
    raise TypeError(f"not an estimand node: {e!r}")


def _render_nested_term(e: CondTerm, rename: dict[str, str]) -> str:
    ref = e.ref
    assert isinstance(ref, Nested)
    shown = set(e.targets) | set(e.context)
    bound_num = [v for v in ref.over if v not in shown]
    num_rename = _fresh_primes(bound_num, rename)
    num = _render(ref.expr, num_rename)
    if bound_num:
        num = f"Σ_{{{','.join(num_rename[v] for v in bound_num)}}} {num}"
    if not e.context:
        return num
    bound_den = [v for v in ref.over if v not in set(e.context)]
    den_rename = _fresh_primes(bound_den, rename)
    den = _render(ref.expr, den_rename)
    if bound_den:
        den = f"Σ_{{{','.join(den_rename[v] for v in bound_den)}}} {den}"
    return f"[{num}] / [{den}]"


# -- exact evaluation ----------------------------------------------------------


def evaluate_estimand(e: Estimand, obs: DistTable) -> DistTable:
    """Evaluate by exact summation against an observational joint table.

    The result is indexed by the estimand's free variables in the table's
    variable order. For an identification output this means query targets and
    intervention values; each intervention slice sums to one.
    """
    ev = _Evaluator(obs)
    array = ev.eval(e)
    free = free_variables(e)
    for i, v in enumerate(obs.variables):
        if v.name not in free and array.shape[i] != 1:
            raise AssertionError(f"bound variable {v.name} leaked into the result")
    variables = tuple(v for v in obs.variables if v.name in free)
    return DistTable(variables, array.reshape(tuple(v.cardinality for v in variables)))


class _Evaluator:
    """Evaluates nodes into arrays broadcast over the full observational axes."""

    def __init__(self, obs: DistTable):
        self.obs = obs
        self.axis = {v.name: i for i, v in enumerate(obs.variables)}
        self.rank = len(obs.variables)

    def eval(self, e: Estimand) -> np.ndarray:
        if isinstance(e, CondTerm):
            return self._cond_term(e)
        if isinstance(e, Product):
            out = np.ones((1,) * self.rank)
            for f in e.factors:
                out = out * self.eval(f)
            return out
        if isinstance(e, SumOver):
            return self._sum_out(self.eval(e.term), e.over)
        if isinstance(e, Quotient):
            num = self.eval(e.numerator)
            den = self.eval(e.denominator)
            self._check_positive(den)
            return num / den
        raise TypeError(f"not an estimand node: {e!r}")

    def _axes(self, names: Iterable[str]) -> tuple[int, ...]:
        axes = []
        for n in names:
            if n not in self.axis:
                raise EvaluationError(f"variable {n!r} not covered by the table")
            axes.append(self.axis[n])
        return tuple(axes)

    def _sum_out(self, array: np.ndarray, names: Iterable[str]) -> np.ndarray:
        # an axis the term is constant over still contributes its cardinality
        scale = 1
        axes = []
        for n in names:
            ax = self._axes([n])[0]
            if array.shape[ax] == 1:
                scale *= self.obs.variables[ax].cardinality
            else:
                axes.append(ax)
        out = array.sum(axis=tuple(axes), keepdims=True) if axes else array
        return out * scale if scale != 1 else out

    def _cond_term(self, e: CondTerm) -> np.ndarray:
        if isinstance(e.ref, Nested):
            joint = self.eval(e.ref.expr)
            scope = set(e.ref.over)
        else:
            shape = [1] * self.rank
            for i, v in enumerate(self.obs.variables):
                shape[self.axis[v.name]] = v.cardinality
            joint = self.obs.probs.reshape(shape)
            scope = set(self.obs.names)
        missing = (set(e.targets) | set(e.context)) - scope
        if missing:
            raise EvaluationError(f"term references {sorted(missing)} outside its distribution")
        num = self._sum_out(joint, scope - set(e.targets) - set(e.context))
        den = self._sum_out(joint, scope - set(e.context))
        self._check_positive(den)
        return num / den

    @staticmethod
    def _check_positive(den: np.ndarray):
        if np.any(den <= 0):
            raise EvaluationError("zero denominator: table is not strictly positive")
