"""Compiles an interventional query into an executable network of conditional samplers.

The compiler follows the same seven-step recursion as symbolic identification,
but instead of algebra it fits conditional samplers: base cases fit one model
per variable on the current data, the factorization step builds one network per
confounded component and merges them, and the partial-intervention step redraws
the working dataset under do(X_Z) before recursing. Ancestral evaluation of the
finished network yields samples from the interventional distribution.

Two interchangeable data sources drive the fits: a finite dataset (CPT fits,
the end-to-end pipeline) and an exact joint table (exact conditionals, used to
isolate network correctness from estimation error).
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

import numpy as np

from .estimands import DistTable
from .graphs import Admg, GraphError, Variable
from .identify import Hedge, NotIdentifiable, TraceEntry, maximal_rule2_shift
from .models import (
    ConditionalModel,
    CptModel,
    Dataset,
    DataError,
    ExactConditionalModel,
    UniformModel,
    exact_conditional,
    fit_conditional,
    uniform_model,
)


class EngineError(RuntimeError):
    pass


class MergeConflict(EngineError):
    """Two sibling networks both produced a model for the same variable."""


# -- queries --------------------------------------------------------------------


@dataclass(frozen=True)
class QuerySpec:
    """An interventional query: targets, do-assignment, optional conditioning."""

    targets: tuple[str, ...]
    do: tuple[tuple[str, int], ...] = ()
    given: tuple[tuple[str, int], ...] = ()

    @property
    def do_map(self) -> dict[str, int]:
        return dict(self.do)

    @property
    def given_map(self) -> dict[str, int]:
        return dict(self.given)

    def validate(self, g: Admg):
        groups = [set(self.targets), {n for n, _ in self.do}, {n for n, _ in self.given}]
        if not self.targets:
            raise GraphError("query has no targets")
        for a, b in itertools.combinations(groups, 2):
            if a & b:
                raise GraphError("query sets overlap")
        for name, value in self.do + self.given:
            if not 0 <= value < g.variable(name).cardinality:
                raise GraphError(f"value {value} out of range for {name}")
        for name in self.targets:
            g.variable(name)


def parse_query(text: str) -> QuerySpec:
    targets: tuple[str, ...] = ()
    do: tuple[tuple[str, int], ...] = ()
    given: tuple[tuple[str, int], ...] = ()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise GraphError(f"query line {lineno}: expected key=value")
        key, _, value = line.partition("=")
        key = key.strip()
        if key == "target":
            targets = tuple(v.strip() for v in value.split(",") if v.strip())
        elif key in ("do", "given"):
            pairs = []
            for item in value.split(","):
                item = item.strip()
                if not item:
                    continue
                name, sep, val = item.partition("=")
                if not sep:
                    raise GraphError(f"query line {lineno}: expected var=value in {item!r}")
                pairs.append((name.strip(), int(val)))
            if key == "do":
                do = tuple(pairs)
            else:
                given = tuple(pairs)
        else:
            raise GraphError(f"query line {lineno}: unknown key {key!r}")
    return QuerySpec(targets, do, given)


def format_query(q: QuerySpec) -> str:
    lines = ["target=" + ",".join(q.targets)]
    if q.do:
        lines.append("do=" + ",".join(f"{n}={v}" for n, v in q.do))
    if q.given:
        lines.append("given=" + ",".join(f"{n}={v}" for n, v in q.given))
    return "\n".join(lines) + "\n"


# -- sampling networks ------------------------------------------------------------


@dataclass
class SamplingNetwork:
    """DAG of conditional samplers plus empty input placeholders.

    `global_order` is the root graph's topological order; every model's context
    precedes its target in it, which is what keeps merged networks acyclic.
    `required_inputs` are the placeholders whose values the target distribution
    actually depends on (the query's surviving do-variables); the remaining
    placeholders are history or absorbed variables whose values are irrelevant
    to the targets and may default to anything.
    """

    variables: dict[str, Variable]
    nodes: dict[str, ConditionalModel | None]
    global_order: tuple[str, ...]
    required_inputs: frozenset[str] = frozenset()

    def __post_init__(self):
        self.validate()

    @property
    def node_order(self) -> list[str]:
        return [n for n in self.global_order if n in self.nodes]

    def empty_nodes(self) -> list[str]:
        return [n for n in self.node_order if self.nodes[n] is None]

    def edges(self) -> list[tuple[str, str]]:
        out = []
        for name in self.node_order:
            model = self.nodes[name]
            if model is not None:
                out.extend((c, name) for c in model.context_names)
        return out

    def validate(self):
        position = {n: i for i, n in enumerate(self.global_order)}
        for name, model in self.nodes.items():
            if name not in self.variables or name not in position:
                raise EngineError(f"node {name} missing variable or ordering info")
            if model is None:
                continue
            if model.target.name != name:
                raise EngineError(f"node {name} holds a model for {model.target.name}")
            for c in model.context_names:
                if c not in self.nodes:
                    raise EngineError(f"node {name} depends on absent node {c}")
                if position[c] >= position[name]:
                    raise EngineError(f"edge {c} -> {name} violates the global order")


def merge_networks(parts: Sequence[SamplingNetwork]) -> SamplingNetwork:
    """Unify placeholder nodes with the sibling network that produces them."""
    if not parts:
        raise EngineError("nothing to merge")
    order = parts[0].global_order
    for p in parts[1:]:
        if p.global_order != order:
            raise EngineError("sibling networks disagree on the global order")
    variables: dict[str, Variable] = {}
    nodes: dict[str, ConditionalModel | None] = {}
    for part in parts:
        for name in part.node_order:
            model = part.nodes[name]
            if name not in nodes:
                variables[name] = part.variables[name]
                nodes[name] = model
            elif model is not None:
                if nodes[name] is not None:
                    raise MergeConflict(f"two models produce {name}")
                nodes[name] = model
    return SamplingNetwork(variables, nodes, order)


def project_targets(d: Dataset, y: Iterable[str]) -> Dataset:
    """Drop all non-target columns; row count is unchanged."""
    return d.restrict(y)


def ancestral_sample(
    h: SamplingNetwork,
    fixed: Mapping[str, int],
    n: int,
    rng: np.random.Generator,
    fallbacks: Mapping[str, ConditionalModel] | None = None,
    workers: int = 1,
) -> Dataset:
    """Evaluate the network in global order, n rows, returning the full joint.

    Every placeholder must be covered by `fixed` or `fallbacks`. Rows are
    exchangeable, so the work may be split across seeded worker streams.
    """
    if n <= 0:
        raise EngineError("sample count must be positive")
    fallbacks = fallbacks or {}
    for name in h.empty_nodes():
        if name not in fixed and name not in fallbacks:
            raise EngineError(f"placeholder {name} has no fixed value or fallback sampler")
    for name, value in fixed.items():
        if name not in h.nodes:
            raise EngineError(f"fixed value for non-node {name}")
        if not 0 <= value < h.variables[name].cardinality:
            raise EngineError(f"fixed value {value} out of range for {name}")

    workers = max(1, min(workers, n))
    sizes = [n // workers + (1 if i < n % workers else 0) for i in range(workers)]
    streams = rng.spawn(workers)

    def chunk(size: int, stream: np.random.Generator) -> np.ndarray:
        cols: dict[str, np.ndarray] = {}
        for name in h.node_order:
            model = h.nodes[name]
            if name in fixed:
                cols[name] = np.full(size, fixed[name], dtype=np.int64)
            elif model is None:
                cols[name] = fallbacks[name].sample_n(cols, size, stream)
            else:
                cols[name] = model.sample_n(cols, size, stream)
        return np.column_stack([cols[name] for name in h.node_order])

    if workers == 1:
        rows = chunk(sizes[0], streams[0])
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            pieces = list(pool.map(chunk, sizes, streams))
        rows = np.vstack(pieces)
    variables = tuple(h.variables[name] for name in h.node_order)
    return Dataset(variables, rows, frozenset(fixed))


def format_network(h: SamplingNetwork) -> str:
    """Deterministic textual manifest: nodes, model kinds, contexts, payloads."""
    kinds = {CptModel: "cpt", ExactConditionalModel: "exact", UniformModel: "uniform"}
    lines = ["order " + " ".join(h.node_order)]
    for name in h.node_order:
        model = h.nodes[name]
        card = h.variables[name].cardinality
        if model is None:
            flag = " required" if name in h.required_inputs else ""
            lines.append(f"node {name} kind=placeholder card={card}{flag}")
            continue
        kind = kinds.get(type(model), "custom")
        parts = [f"node {name} kind={kind} card={card}"]
        if model.context_names:
            parts.append("context=" + ",".join(model.context_names))
        table = model.conditional_table().reshape(-1, card)
        payload = ";".join(",".join(f"{p:.12g}" for p in row) for row in table)
        parts.append("table=" + payload)
        lines.append(" ".join(parts))
    return "\n".join(lines) + "\n"


# -- data sources -----------------------------------------------------------------


class DatasetSource:
    """Finite-sample source: CPT fits with Laplace smoothing, sampled regeneration."""

    def __init__(self, dataset: Dataset):
        self.dataset = dataset

    @property
    def columns(self) -> tuple[str, ...]:
        return self.dataset.names

    @property
    def intervened(self) -> frozenset[str]:
        return self.dataset.intervened

    def variable(self, name: str) -> Variable:
        return self.dataset.variable(name)

    def fit(self, target: str, context: Sequence[str]) -> ConditionalModel:
        return fit_conditional(self.dataset, target, context)

    def restrict(self, keep: Iterable[str]) -> DatasetSource:
        return DatasetSource(self.dataset.restrict(keep))

    def marginal_table(self, names: Sequence[str]) -> DistTable:
        variables = tuple(self.dataset.variable(n) for n in names)
        shape = tuple(v.cardinality for v in variables)
        idx = np.zeros(self.dataset.n, dtype=np.int64)
        for v in variables:
            idx = idx * v.cardinality + self.dataset.column(v.name)
        counts = np.bincount(idx, minlength=int(np.prod(shape))).astype(float)
        smoothed = counts + 1.0
        return DistTable(variables, (smoothed / smoothed.sum()).reshape(shape))

    def regenerate(
        self,
        chain: Sequence[ConditionalModel],
        proposal: DistTable,
        anchor_names: Sequence[str],
        order: Sequence[str],
        variables: Mapping[str, Variable],
        intervened: frozenset[str],
        multiplier: float,
        rng: np.random.Generator,
    ) -> DatasetSource:
        n_new = max(1, int(round(self.dataset.n * multiplier)))
        anchor_idx = np.arange(n_new, dtype=np.int64) % self.dataset.n
        cols: dict[str, np.ndarray] = {
            name: self.dataset.column(name)[anchor_idx] for name in anchor_names
        }
        cols.update(_sample_joint(proposal, n_new, rng))
        for model in chain:
            cols[model.target.name] = model.sample_n(cols, n_new, rng)
        rows = np.column_stack([cols[name] for name in order])
        data = Dataset(tuple(variables[name] for name in order), rows, intervened)
        return DatasetSource(data)


class ExactSource:
    """Exact source: the current joint law as a dense table, no estimation error."""

    def __init__(self, table: DistTable, intervened: frozenset[str] = frozenset()):
        self.table = table
        self._intervened = intervened

    @property
    def columns(self) -> tuple[str, ...]:
        return self.table.names

    @property
    def intervened(self) -> frozenset[str]:
        return self._intervened

    def variable(self, name: str) -> Variable:
        return self.table.variables[self.table.names.index(name)]

    def fit(self, target: str, context: Sequence[str]) -> ConditionalModel:
        return exact_conditional(self.table, target, context)

    def restrict(self, keep: Iterable[str]) -> ExactSource:
        keep = set(keep)
        return ExactSource(self.table.marginal(keep), self._intervened & keep)

    def marginal_table(self, names: Sequence[str]) -> DistTable:
        sub = self.table.marginal(names)
        perm = [sub.names.index(n) for n in names]
        return DistTable(tuple(sub.variables[i] for i in perm), np.transpose(sub.probs, perm))

    def regenerate(
        self,
        chain: Sequence[ConditionalModel],
        proposal: DistTable,
        anchor_names: Sequence[str],
        order: Sequence[str],
        variables: Mapping[str, Variable],
        intervened: frozenset[str],
        multiplier: float,
        rng: np.random.Generator,
    ) -> ExactSource:
        # analytic counterpart of sampled regeneration: anchor marginal times
        # proposal times the chain of exact conditionals
        axes = list(order)
        shape = tuple(variables[n].cardinality for n in axes)
        out = np.ones((1,) * len(axes))
        if anchor_names:
            anchors = self.marginal_table(anchor_names)
            out = out * _factor_over(axes, shape, anchors.names, anchors.probs)
        out = out * _factor_over(axes, shape, proposal.names, proposal.probs)
        for model in chain:
            names = model.context_names + (model.target.name,)
            out = out * _factor_over(axes, shape, names, model.conditional_table())
        table = DistTable(tuple(variables[n] for n in axes), np.broadcast_to(out, shape).copy())
        return ExactSource(table, intervened)


def _factor_over(
    axes: Sequence[str], shape: Sequence[int], names: Sequence[str], array: np.ndarray
) -> np.ndarray:
    """Reshape an array whose dims follow `names` for broadcasting over `axes`."""
    positions = [axes.index(n) for n in names]
    moved = np.transpose(array, np.argsort(positions))
    full = [1] * len(axes)
    for p, size in zip(sorted(positions), moved.shape):
        full[p] = size
    return moved.reshape(full)


def _sample_joint(table: DistTable, n: int, rng: np.random.Generator) -> dict[str, np.ndarray]:
    flat = table.probs.reshape(-1)
    cdf = np.cumsum(flat)
    draws = np.searchsorted(cdf, rng.random(n) * cdf[-1], side="right")
    draws = np.clip(draws, 0, flat.size - 1)
    idx = np.unravel_index(draws, table.probs.shape)
    return {v.name: idx[i].astype(np.int64) for i, v in enumerate(table.variables)}


# -- the recursion ------------------------------------------------------------------


@dataclass(frozen=True)
class RecursionState:
    """One level of the compile recursion.

    `g` is the working graph, `g_hat` the same graph with the accumulated
    partially-applied interventions `x_hat` retained as parentless context
    nodes; the data source always covers exactly g_hat's variables.
    """

    y: frozenset[str]
    x: frozenset[str]
    g: Admg
    source: DatasetSource | ExactSource
    x_hat: frozenset[str]
    g_hat: Admg

    def __post_init__(self):
        names = set(self.g_hat.names)
        if not self.x_hat <= names:
            raise EngineError("x_hat must be part of g_hat")
        if set(self.source.columns) != names:
            raise EngineError("data source columns must match g_hat's variables")
        if self.g_hat.induced_subgraph(names - self.x_hat) != self.g:
            raise EngineError("g must equal g_hat minus its intervened variables")


@dataclass
class BuildContext:
    root_order: tuple[str, ...]
    proposal: str = "uniform"
    dprime_mult: float = 1.0
    rng: np.random.Generator = field(default_factory=lambda: np.random.default_rng(0))
    trace: list[TraceEntry] = field(default_factory=list)


@dataclass
class BuildResult:
    network: SamplingNetwork | None
    hedge: Hedge | None
    trace: list[TraceEntry]

    @property
    def identifiable(self) -> bool:
        return self.hedge is None


def build_network(
    y: Iterable[str],
    x: Iterable[str],
    g: Admg,
    source: DatasetSource | ExactSource,
    proposal: str = "uniform",
    dprime_mult: float = 1.0,
    rng: np.random.Generator | None = None,
) -> BuildResult:
    """Compile P(y | do(x)) against the given data source into a sampling network."""
    y, x = frozenset(y), frozenset(x)
    for name in y | x:
        g.variable(name)
    if not y:
        raise GraphError("query target set is empty")
    if y & x:
        raise GraphError("target and intervention sets overlap")
    if proposal not in ("uniform", "marginal"):
        raise EngineError(f"unknown proposal {proposal!r}")
    state = RecursionState(y, x, g, source, frozenset(), g)
    ctx = BuildContext(
        root_order=tuple(g.topological_order()),
        proposal=proposal,
        dprime_mult=dprime_mult,
        rng=rng if rng is not None else np.random.default_rng(0),
    )
    try:
        network = compile_state(state, ctx)
    except NotIdentifiable as fail:
        return BuildResult(None, fail.hedge, ctx.trace)
    network.required_inputs = x & frozenset(network.empty_nodes())
    return BuildResult(network, None, ctx.trace)


def compile_state(state: RecursionState, ctx: BuildContext, depth: int = 0) -> SamplingNetwork:
    """One recursion level; mirrors the symbolic identification steps one-for-one."""
    y, x, g = state.y, state.x, state.g
    v = set(g.names)
    enter = lambda step: ctx.trace.append(TraceEntry(step, y, x, depth))

    if not x:
        enter("S1")
        # with nothing to intervene on, model every remaining variable
        return fit_conditional_models(frozenset(v), frozenset(), state, ctx)

    ancestors = g.ancestors(y)
    if v - ancestors:
        enter("S2")
        keep = ancestors | state.x_hat
        narrowed = RecursionState(
            y,
            x & ancestors,
            g.induced_subgraph(ancestors),
            state.source.restrict(keep),
            state.x_hat,
            state.g_hat.induced_subgraph(keep),
        )
        return compile_state(narrowed, ctx, depth + 1)

    w = (v - x) - g.remove_incoming(x).ancestors(y)
    if w:
        enter("S3")
        return compile_state(replace(state, x=x | w), ctx, depth + 1)

    components = g.induced_subgraph(v - x).c_components()
    if len(components) > 1:
        enter("S4")
        parts = [
            compile_state(replace(state, y=frozenset(s), x=frozenset(v - set(s))), ctx, depth + 1)
            for s in components
        ]
        return merge_networks(parts)

    (s,) = components
    s_set = frozenset(s)
    graph_components = g.c_components()

    if len(graph_components) == 1:
        enter("S5")
        raise NotIdentifiable(Hedge(frozenset(v), s_set))

    if any(set(c) == s_set for c in graph_components):
        enter("S6")
        return fit_conditional_models(s_set, x, state, ctx)

    s_prime = frozenset(next(set(c) for c in graph_components if s_set < set(c)))
    enter("S7")
    updated = apply_partial_intervention(s_prime, state, ctx)
    return compile_state(updated, ctx, depth + 1)


def fit_conditional_models(
    y: frozenset[str], x: frozenset[str], state: RecursionState, ctx: BuildContext
) -> SamplingNetwork:
    """Fit one conditional sampler per modelled variable, in topological order of
    the history graph; intervention and history variables become placeholders.
    Each model's context is every preceding variable available as a data column."""
    g_hat = state.g_hat
    variables: dict[str, Variable] = {}
    nodes: dict[str, ConditionalModel | None] = {}
    for name in sorted(x | state.x_hat, key=ctx.root_order.index):
        variables[name] = g_hat.variable(name)
        nodes[name] = None
    gh_names = set(g_hat.names)
    order = [n for n in ctx.root_order if n in gh_names]
    cols = set(state.source.columns)
    for pos, name in enumerate(order):
        if name not in y:
            continue
        context = [u for u in order[:pos] if u in cols]
        nodes[name] = state.source.fit(name, context)
        variables[name] = g_hat.variable(name)
    return SamplingNetwork(variables, nodes, ctx.root_order)


def apply_partial_intervention(
    s_prime: frozenset[str], state: RecursionState, ctx: BuildContext
) -> RecursionState:
    """Apply do(X_Z) for X_Z = x minus s_prime: fit samplers for s_prime, redraw
    the working data with X_Z from the proposal, and narrow every parameter to
    s_prime plus the enlarged intervention history."""
    if not s_prime:
        raise EngineError("empty component for partial intervention")
    x_z = state.x - s_prime
    inner = fit_conditional_models(s_prime, x_z, state, ctx)

    x_z_names = sorted(x_z, key=ctx.root_order.index)
    if ctx.proposal == "marginal":
        proposal = state.source.marginal_table(x_z_names)
    else:
        variables = [state.g_hat.variable(n) for n in x_z_names]
        shape = tuple(v.cardinality for v in variables)
        proposal = DistTable(tuple(variables), np.full(shape, 1.0 / math.prod(shape)))

    new_x_hat = state.x_hat | x_z
    new_cols = new_x_hat | s_prime
    order = [n for n in ctx.root_order if n in new_cols]
    variable_map = {n: state.g_hat.variable(n) for n in order}
    chain = [inner.nodes[n] for n in inner.node_order if n in s_prime]
    anchor_names = sorted(state.x_hat, key=ctx.root_order.index)
    source = state.source.regenerate(
        chain,
        proposal,
        anchor_names,
        order,
        variable_map,
        frozenset(new_x_hat),
        ctx.dprime_mult,
        ctx.rng,
    )
    g_new = state.g.induced_subgraph(s_prime)
    g_hat_new = state.g_hat.induced_subgraph(new_cols).remove_incoming(new_x_hat)
    return RecursionState(state.y, state.x & s_prime, g_new, source, frozenset(new_x_hat), g_hat_new)


# -- sampling a finished network ------------------------------------------------------


def sample_interventional(
    h: SamplingNetwork,
    query: QuerySpec,
    n: int,
    rng: np.random.Generator,
    workers: int = 1,
) -> Dataset:
    """Fix the do-values, give leftover placeholders uniform fallback samplers,
    and ancestrally sample the full joint.

    Do-variables the compiler pruned as irrelevant to the targets are not
    network nodes; their values cannot influence the draw and are ignored.
    Required inputs must all be fixed: defaulting one would draw from a mixture
    over its values instead of an intervention."""
    fixed = {name: value for name, value in query.do_map.items() if name in h.nodes}
    unset = h.required_inputs - set(fixed)
    if unset:
        raise EngineError(f"query must fix the network inputs {sorted(unset)}")
    fallbacks = {
        name: uniform_model(h.variables[name]) for name in h.empty_nodes() if name not in fixed
    }
    return ancestral_sample(h, fixed, n, rng, fallbacks=fallbacks, workers=workers)


# -- conditional interventional queries -------------------------------------------------


def build_conditional_sampler(
    query: QuerySpec,
    g: Admg,
    source: DatasetSource | ExactSource,
    n_train: int = 200_000,
    proposal: str = "uniform",
    dprime_mult: float = 1.0,
    rng: np.random.Generator | None = None,
) -> ConditionalModel:
    """Fit a sampler for P(y | do(x), z): shift the maximal rule-2 subset of z
    into the do-set, compile and sample the joint network over a full grid of
    intervention values, then fit the conditional of y on the rest."""
    if not query.given:
        raise GraphError("conditional sampler requires a non-empty conditioning set")
    query.validate(g)
    rng = rng if rng is not None else np.random.default_rng(0)
    y = frozenset(query.targets)
    x, z = maximal_rule2_shift(y, frozenset(query.do_map), frozenset(query.given_map), g)

    result = build_network(y | z, x, g, source, proposal=proposal, dprime_mult=dprime_mult, rng=rng)
    if result.hedge is not None:
        raise NotIdentifiable(result.hedge)
    network = result.network

    root_order = network.global_order
    x_names = sorted(x, key=root_order.index)
    grid = list(itertools.product(*(range(g.variable(n).cardinality) for n in x_names)))
    shard = max(1, math.ceil(n_train / len(grid)))
    keep = sorted(y | z | x, key=root_order.index)
    shards = []
    for combo in grid:
        fixed = dict(zip(x_names, combo))
        probe = QuerySpec(tuple(n for n in keep if n not in fixed), tuple(fixed.items()))
        joint = sample_interventional(network, probe, shard, rng)
        shards.append(joint.restrict(keep).rows)
    variables = tuple(g.variable(n) for n in keep)
    data = Dataset(variables, np.vstack(shards), frozenset(x_names))

    context = [n for n in keep if n not in y]
    targets = [n for n in keep if n in y]
    models = []
    for i, t in enumerate(targets):
        models.append(fit_conditional(data, t, context + targets[:i]))
    if len(models) == 1:
        return models[0]
    return ChainSampler(tuple(models))


@dataclass(frozen=True)
class ChainSampler(ConditionalModel):
    """Joint sampler for several targets, factored as a chain of fitted CPTs."""

    chain: tuple[CptModel, ...]

    @property
    def target(self) -> Variable:  # type: ignore[override]
        raise DataError("chain sampler has multiple targets")

    @property
    def context(self) -> tuple[Variable, ...]:  # type: ignore[override]
        return self.chain[0].context

    def conditional_table(self) -> np.ndarray:
        raise DataError("chain sampler has no single table")

    def sample_columns(
        self, ctx_cols: Mapping[str, np.ndarray], n: int, rng: np.random.Generator
    ) -> dict[str, np.ndarray]:
        cols = dict(ctx_cols)
        out = {}
        for model in self.chain:
            col = model.sample_n(cols, n, rng)
            cols[model.target.name] = col
            out[model.target.name] = col
        return out
