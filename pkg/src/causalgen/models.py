"""Discrete datasets and the conditional-sampler abstraction.

A conditional model maps a full context assignment to a distribution over one
target variable; it is the single plug-in seam between the network compiler and
whatever actually produces samples. The discrete implementations here are
Laplace-smoothed conditional probability tables fitted from data, exact
conditionals extracted from a known joint, and context-free uniform samplers.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .estimands import DistTable
from .graphs import Variable


class DataError(ValueError):
    """Malformed dataset or model input."""


# -- datasets -----------------------------------------------------------------


@dataclass(frozen=True)
class Dataset:
    """Tabular discrete samples; `intervened` marks columns whose values were
    forced by an intervention rather than observed."""

    variables: tuple[Variable, ...]
    rows: np.ndarray
    intervened: frozenset[str] = frozenset()

    def __post_init__(self):
        if self.rows.ndim != 2 or self.rows.shape[1] != len(self.variables):
            raise DataError(f"rows shape {self.rows.shape} does not match {len(self.variables)} variables")
        for i, v in enumerate(self.variables):
            col = self.rows[:, i]
            if len(col) and (col.min() < 0 or col.max() >= v.cardinality):
                raise DataError(f"column {v.name} has values outside [0, {v.cardinality})")
        unknown = self.intervened - {v.name for v in self.variables}
        if unknown:
            raise DataError(f"intervened columns {sorted(unknown)} are not dataset variables")

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.variables)

    @property
    def n(self) -> int:
        return self.rows.shape[0]

    def variable(self, name: str) -> Variable:
        for v in self.variables:
            if v.name == name:
                return v
        raise DataError(f"unknown variable {name!r}")

    def column(self, name: str) -> np.ndarray:
        return self.rows[:, self.names.index(name)]

    def restrict(self, keep: Iterable[str]) -> Dataset:
        keep = set(keep)
        unknown = keep - set(self.names)
        if unknown:
            raise DataError(f"unknown variables {sorted(unknown)}")
        idx = [i for i, v in enumerate(self.variables) if v.name in keep]
        return Dataset(
            tuple(self.variables[i] for i in idx),
            self.rows[:, idx],
            self.intervened & keep,
        )


def write_dataset_csv(d: Dataset, path: str | Path, sidecar: str | Path | None = None):
    path = Path(path)
    with path.open("w", newline="") as fh:
        fh.write(",".join(d.names) + "\n")
        np.savetxt(fh, d.rows, fmt="%d", delimiter=",")
    if sidecar is not None:
        meta = {
            "cardinalities": {v.name: v.cardinality for v in d.variables},
            "intervened": sorted(d.intervened),
        }
        Path(sidecar).write_text(json.dumps(meta, sort_keys=True) + "\n")


def read_dataset_csv(path: str | Path, sidecar: str | Path | None = None) -> Dataset:
    path = Path(path)
    with path.open() as fh:
        header = fh.readline().strip()
        if not header:
            raise DataError(f"{path}: empty csv")
        names = header.split(",")
        rows = np.loadtxt(fh, dtype=np.int64, delimiter=",", ndmin=2)
    if rows.size == 0:
        rows = rows.reshape(0, len(names))
    cards: dict[str, int] = {}
    intervened: frozenset[str] = frozenset()
    if sidecar is not None and Path(sidecar).exists():
        meta = json.loads(Path(sidecar).read_text())
        cards = {str(k): int(v) for k, v in meta.get("cardinalities", {}).items()}
        intervened = frozenset(meta.get("intervened", []))
    variables = tuple(
        Variable(n, cards.get(n, max(2, int(rows[:, i].max()) + 1 if rows.size else 2)))
        for i, n in enumerate(names)
    )
    return Dataset(variables, rows, intervened)


# -- conditional models ---------------------------------------------------------


class ConditionalModel:
    """Sampler for one variable given a fixed context.

    Subclasses provide `conditional_table`, an array of shape
    (context cardinalities..., target cardinality) whose last axis sums to one.
    """

    target: Variable
    context: tuple[Variable, ...]

    def conditional_table(self) -> np.ndarray:
        raise NotImplementedError

    @property
    def context_names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.context)

    def sample(self, ctx: Mapping[str, int], rng: np.random.Generator) -> int:
        missing = [v.name for v in self.context if v.name not in ctx]
        if missing:
            raise DataError(f"missing context values {missing} for {self.target.name}")
        cols = {v.name: np.array([ctx[v.name]]) for v in self.context}
        return int(self.sample_n(cols, 1, rng)[0])

    def sample_n(self, ctx_cols: Mapping[str, np.ndarray], n: int, rng: np.random.Generator) -> np.ndarray:
        table = self.conditional_table().reshape(-1, self.target.cardinality)
        if self.context:
            missing = [v.name for v in self.context if v.name not in ctx_cols]
            if missing:
                raise DataError(f"missing context columns {missing} for {self.target.name}")
            idx = np.zeros(n, dtype=np.int64)
            for v in self.context:
                idx = idx * v.cardinality + ctx_cols[v.name]
        else:
            idx = np.zeros(n, dtype=np.int64)
        cdf = np.cumsum(table, axis=1)
        u = rng.random(n)
        draws = (u[:, None] > cdf[idx]).sum(axis=1)
        return np.clip(draws, 0, self.target.cardinality - 1).astype(np.int64)


@dataclass(frozen=True)
class CptModel(ConditionalModel):
    """Conditional probability table fitted from data (Laplace-smoothed)."""

    target: Variable
    context: tuple[Variable, ...]
    table: np.ndarray  # shape (context cards..., target card)

    def __post_init__(self):
        expected = tuple(v.cardinality for v in self.context) + (self.target.cardinality,)
        if self.table.shape != expected:
            raise DataError(f"table shape {self.table.shape} != {expected}")
        if np.any(self.table <= 0):
            raise DataError("cpt rows must be strictly positive (smoothed)")
        if not np.allclose(self.table.sum(axis=-1), 1.0, atol=1e-9):
            raise DataError("cpt rows must sum to 1")

    def conditional_table(self) -> np.ndarray:
        return self.table


@dataclass(frozen=True)
class ExactConditionalModel(ConditionalModel):
    """Conditional extracted exactly from a known joint table."""

    target: Variable
    context: tuple[Variable, ...]
    table: np.ndarray

    def conditional_table(self) -> np.ndarray:
        return self.table


@dataclass(frozen=True)
class UniformModel(ConditionalModel):
    """Context-free sampler emitting each target state with equal probability."""

    target: Variable
    context: tuple[Variable, ...] = field(default=(), init=False)

    def conditional_table(self) -> np.ndarray:
        k = self.target.cardinality
        return np.full((k,), 1.0 / k)


def uniform_model(v: Variable) -> UniformModel:
    return UniformModel(v)


def fit_conditional(d: Dataset, target: str, context: Sequence[str]) -> CptModel:
    """Maximum-likelihood CPT with additive (alpha=1) smoothing; context
    configurations never observed get the uniform row."""
    if d.n == 0:
        raise DataError("cannot fit on an empty dataset")
    tgt = d.variable(target)
    if target in context:
        raise DataError(f"target {target!r} appears in its own context")
    ctx_vars = tuple(d.variable(c) for c in context)
    k = tgt.cardinality
    n_ctx = 1
    for v in ctx_vars:
        n_ctx *= v.cardinality
    idx = np.zeros(d.n, dtype=np.int64)
    for v in ctx_vars:
        idx = idx * v.cardinality + d.column(v.name)
    flat = idx * k + d.column(target)
    counts = np.bincount(flat, minlength=n_ctx * k).reshape(n_ctx, k).astype(float)
    table = (counts + 1.0) / (counts.sum(axis=1, keepdims=True) + k)
    shape = tuple(v.cardinality for v in ctx_vars) + (k,)
    return CptModel(tgt, ctx_vars, table.reshape(shape))


def exact_conditional(joint: DistTable, target: str, context: Sequence[str]) -> ExactConditionalModel:
    """Model whose conditional equals the exact conditional of the given joint."""
    if target in context:
        raise DataError(f"target {target!r} appears in its own context")
    names = list(context) + [target]
    sub = joint.marginal(names)
    # put axes into (context..., target) order
    perm = [sub.names.index(n) for n in names]
    probs = np.transpose(sub.probs, perm)
    den = probs.sum(axis=-1, keepdims=True)
    if np.any(den <= 0):
        raise DataError("context configuration with zero marginal mass")
    ctx_vars = tuple(sub.variables[sub.names.index(c)] for c in context)
    tgt = sub.variables[sub.names.index(target)]
    return ExactConditionalModel(tgt, ctx_vars, probs / den)
