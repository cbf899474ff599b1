"""Ground-truth discrete structural causal models and the evaluation metrics.

An SCM here is fully tabular: independent categorical noise per variable, one
categorical latent per confounded pair, and a deterministic mechanism table
mapping (parent values, noise, incident latents) to an output state. Exact
joints and interventionals are computed by enumerating the exogenous space,
which is what every soundness test compares against.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .estimands import DistTable
from .graphs import Admg, Variable, format_graph, parse_graph
from .models import DataError, Dataset

ENUMERATION_BUDGET = 10_000_000


class ScmError(ValueError):
    pass


@dataclass(frozen=True)
class DiscreteScm:
    """Tabular SCM over an ADMG; validated strictly positive at construction."""

    graph: Admg
    noise: dict[str, np.ndarray]  # name -> categorical probabilities
    latents: dict[tuple[str, str], np.ndarray]  # canonical bidirected pair -> probabilities
    mechanisms: dict[str, np.ndarray]  # name -> table over (parents..., noise, latents...)

    def __post_init__(self):
        g = self.graph
        pairs = g.latent_pairs()
        if set(self.latents) != set(pairs):
            raise ScmError("latent distributions must cover exactly the bidirected edges")
        for name in g.names:
            if name not in self.noise or name not in self.mechanisms:
                raise ScmError(f"missing noise or mechanism for {name}")
            probs = self.noise[name]
            if probs.ndim != 1 or probs.min() <= 0 or abs(probs.sum() - 1.0) > 1e-9:
                raise ScmError(f"bad noise distribution for {name}")
            mech = self.mechanisms[name]
            expected = self._mech_shape(name)
            if mech.shape != expected:
                raise ScmError(f"mechanism for {name}: shape {mech.shape} != {expected}")
            if mech.min() < 0 or mech.max() >= g.variable(name).cardinality:
                raise ScmError(f"mechanism for {name} emits out-of-range states")
        for pair, probs in self.latents.items():
            if probs.ndim != 1 or probs.min() <= 0 or abs(probs.sum() - 1.0) > 1e-9:
                raise ScmError(f"bad latent distribution for {pair}")
        joint = exact_joint(self)
        if joint.probs.min() <= 0:
            raise ScmError("observational joint is not strictly positive")

    def incident_latents(self, name: str) -> list[tuple[str, str]]:
        return [p for p in self.graph.latent_pairs() if name in p]

    def _mech_shape(self, name: str) -> tuple[int, ...]:
        g = self.graph
        shape = [g.variable(p).cardinality for p in g.parents(name)]
        shape.append(self.noise[name].shape[0])
        shape.extend(self.latents[p].shape[0] for p in self.incident_latents(name))
        return tuple(shape)


def _exogenous_dims(m: DiscreteScm) -> tuple[list[tuple[str, np.ndarray]], list[tuple[tuple[str, str], np.ndarray]]]:
    noise = [(name, m.noise[name]) for name in m.graph.names]
    latents = [(pair, m.latents[pair]) for pair in m.graph.latent_pairs()]
    return noise, latents


def _evaluate_mechanisms(
    m: DiscreteScm,
    noise_cols: Mapping[str, np.ndarray],
    latent_cols: Mapping[tuple[str, str], np.ndarray],
    do: Mapping[str, int],
) -> dict[str, np.ndarray]:
    values: dict[str, np.ndarray] = {}
    for name in m.graph.topological_order():
        if name in do:
            n = next(iter(noise_cols.values())).shape[0]
            values[name] = np.full(n, do[name], dtype=np.int64)
            continue
        index = [values[p] for p in m.graph.parents(name)]
        index.append(noise_cols[name])
        index.extend(latent_cols[p] for p in m.incident_latents(name))
        values[name] = m.mechanisms[name][tuple(index)]
    return values


def sample_observational(m: DiscreteScm, n: int, rng: np.random.Generator) -> Dataset:
    """Draw exogenous values independently per row and push through the mechanisms."""
    if n <= 0:
        raise ScmError("sample count must be positive")
    noise, latents = _exogenous_dims(m)
    noise_cols = {name: _draw(probs, n, rng) for name, probs in noise}
    latent_cols = {pair: _draw(probs, n, rng) for pair, probs in latents}
    values = _evaluate_mechanisms(m, noise_cols, latent_cols, {})
    rows = np.column_stack([values[name] for name in m.graph.names])
    return Dataset(m.graph.variables, rows)


def _draw(probs: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
    cdf = np.cumsum(probs)
    out = np.searchsorted(cdf, rng.random(n) * cdf[-1], side="right")
    return np.clip(out, 0, probs.shape[0] - 1).astype(np.int64)


def _enumerate(m: DiscreteScm, do: Mapping[str, int]) -> DistTable:
    noise, latents = _exogenous_dims(m)
    dims = [probs.shape[0] for _, probs in noise] + [probs.shape[0] for _, probs in latents]
    total = math.prod(dims)
    if total > ENUMERATION_BUDGET:
        raise ScmError(f"exogenous space {total} exceeds the enumeration budget")
    grid = np.indices(dims).reshape(len(dims), total)
    weights = np.ones(total)
    for i, (_, probs) in enumerate(noise + latents):
        weights *= probs[grid[i]]
    noise_cols = {name: grid[i] for i, (name, _) in enumerate(noise)}
    latent_cols = {pair: grid[len(noise) + i] for i, (pair, _) in enumerate(latents)}
    values = _evaluate_mechanisms(m, noise_cols, latent_cols, do)
    cards = [v.cardinality for v in m.graph.variables]
    flat = np.zeros(total, dtype=np.int64)
    for name, card in zip(m.graph.names, cards):
        flat = flat * card + values[name]
    probs = np.bincount(flat, weights=weights, minlength=math.prod(cards))
    return DistTable(m.graph.variables, probs.reshape(tuple(cards)))


def exact_joint(m: DiscreteScm) -> DistTable:
    """Exact observational joint P(V) by exogenous enumeration."""
    return _enumerate(m, {})


def exact_interventional(m: DiscreteScm, do: Mapping[str, int]) -> DistTable:
    """Exact P(V | do(...)): mutilate the do-variables to constants and re-enumerate."""
    for name, value in do.items():
        if not 0 <= value < m.graph.variable(name).cardinality:
            raise ScmError(f"do value {value} out of range for {name}")
    return _enumerate(m, do)


# -- metrics ---------------------------------------------------------------------


def tvd(p: DistTable, q: DistTable) -> float:
    """Total variation distance, half the L1 distance between the tables."""
    if p.variables != q.variables:
        raise ScmError("tvd requires identical variable sets and ordering")
    return 0.5 * float(np.abs(p.probs - q.probs).sum())


def empirical_distribution(d: Dataset, names: Iterable[str]) -> DistTable:
    """Normalized joint frequency table of the given columns."""
    if d.n == 0:
        raise DataError("empty dataset")
    names = list(names)
    variables = tuple(d.variable(n) for n in names)
    cards = [v.cardinality for v in variables]
    flat = np.zeros(d.n, dtype=np.int64)
    for name, card in zip(names, cards):
        flat = flat * card + d.column(name)
    counts = np.bincount(flat, minlength=math.prod(cards)).astype(float)
    return DistTable(variables, (counts / d.n).reshape(tuple(cards)))


def sampling_tolerance(k: int, n: int, base: float = 0.01) -> float:
    """Monte-Carlo slack used by the soundness checks: base + 3 * sqrt(k / n)."""
    return base + 3.0 * math.sqrt(k / n)


# -- catalog ---------------------------------------------------------------------


@dataclass(frozen=True)
class CatalogQuery:
    targets: tuple[str, ...]
    do: tuple[str, ...]
    given: tuple[str, ...] = ()
    identifiable: bool = True


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    scm: DiscreteScm
    queries: tuple[CatalogQuery, ...]


FOLLOW_PROBABILITY = 0.8


def noisy_copy_scm(graph: Admg) -> DiscreteScm:
    """SCM whose mechanisms follow the parity of their inputs with probability
    0.8 and otherwise emit a uniform state; sources get a mildly biased
    categorical. Strictly positive by construction, with every edge visible."""
    noise: dict[str, np.ndarray] = {}
    latents: dict[tuple[str, str], np.ndarray] = {}
    mechanisms: dict[str, np.ndarray] = {}
    for pair in graph.latent_pairs():
        # biased, else a fair confounder XORed into the parity washes effects out
        latents[pair] = np.array([0.3, 0.7])
    for v in graph.variables:
        k = v.cardinality
        parents = graph.parents(v.name)
        incident = [p for p in graph.latent_pairs() if v.name in p]
        in_dims = [graph.variable(p).cardinality for p in parents] + [2] * len(incident)
        if not in_dims:
            weights = np.arange(2, k + 2, dtype=float)
            noise[v.name] = weights / weights.sum()
            mechanisms[v.name] = np.arange(k, dtype=np.int64)
            continue
        noise[v.name] = np.array([FOLLOW_PROBABILITY] + [(1 - FOLLOW_PROBABILITY) / k] * k)
        grid = np.indices(tuple(in_dims))
        parity = np.sum(grid, axis=0) % k
        table = np.zeros(tuple(in_dims) + (k + 1,), dtype=np.int64)
        table[..., 0] = parity
        for state in range(k):
            table[..., state + 1] = state
        # mechanism axes are (parents..., noise, latents...)
        mechanisms[v.name] = np.moveaxis(table, -1, len(parents))
    return DiscreteScm(graph, noise, latents, mechanisms)


def _graph(variables: Sequence[tuple[str, int]], directed, bidirected) -> Admg:
    return Admg([Variable(n, c) for n, c in variables], directed, bidirected)


def catalog_graphs() -> dict[str, Admg]:
    b = [("X", 2), ("S", 2), ("R", 2)]
    graphs = {
        "frontdoor": _graph(b, [("X", "S"), ("S", "R")], [("X", "R")]),
        "backdoor": _graph(
            [("A", 2), ("B", 2), ("V", 2), ("I", 2)],
            [("A", "B"), ("A", "V"), ("B", "V"), ("V", "I")],
            [("B", "I")],
        ),
        "zigzag": _graph(
            [("X", 2), ("W1", 2), ("W2", 2), ("Y", 2)],
            [("X", "W1"), ("W1", "W2"), ("W2", "Y")],
            [("X", "W2"), ("W1", "Y")],
        ),
        "napkin": _graph(
            [("W1", 2), ("W2", 2), ("X", 2), ("Y", 2)],
            [("W1", "W2"), ("W2", "X"), ("X", "Y")],
            [("W1", "X"), ("W1", "Y")],
        ),
        "double_napkin": _graph(
            [("W3", 2), ("W4", 2), ("R", 2), ("W2", 2), ("W1", 2), ("X", 2)],
            [("W3", "W4"), ("R", "W2"), ("W2", "W1"), ("W4", "W1"), ("W1", "X"), ("W2", "X")],
            [("W3", "W2"), ("R", "W1"), ("R", "X")],
        ),
        "bow": _graph([("X", 2), ("Y", 2)], [("X", "Y")], [("X", "Y")]),
    }
    return graphs


def catalog() -> list[CatalogEntry]:
    """Reference SCMs with their queries and identifiability flags.

    The flags are re-verified against symbolic identification at build time.
    """
    from .identify import identify_effect  # local import avoids a cycle at import time

    graphs = catalog_graphs()
    specs = {
        "frontdoor": [CatalogQuery(("R",), ("X",))],
        "backdoor": [
            CatalogQuery(("I",), ("V",)),
            CatalogQuery(("I",), ("V",), given=("A",)),
        ],
        "zigzag": [CatalogQuery(("Y",), ("X",))],
        "napkin": [
            CatalogQuery(("Y",), ("X",)),
            CatalogQuery(("Y",), ("W1",)),
        ],
        "double_napkin": [CatalogQuery(("W1", "W2", "W3", "W4", "X"), ("R",))],
        "bow": [CatalogQuery(("Y",), ("X",), identifiable=False)],
    }
    entries = []
    for name, graph in graphs.items():
        scm = noisy_copy_scm(graph)
        queries = []
        for q in specs[name]:
            result = identify_effect(q.targets, q.do, graph)
            if result.identifiable != q.identifiable:
                raise ScmError(f"catalog flag mismatch for {name}: {q}")
            queries.append(q)
        entries.append(CatalogEntry(name, scm, tuple(queries)))
    return entries


def catalog_entry(name: str) -> CatalogEntry:
    for entry in catalog():
        if entry.name == name:
            return entry
    raise ScmError(f"no catalog entry named {name!r}")


# -- text format -------------------------------------------------------------------
#
# Mechanism file, one line per mechanism row; the referenced graph file defines
# the variables and edges:
#
#   graph frontdoor.graph
#   noise X 0.4 0.6
#   latent X R 0.5 0.5
#   mech R <parent values> <noise value> <latent values> <output>


def write_scm(m: DiscreteScm, mech_path: str | Path, graph_path: str | Path):
    mech_path, graph_path = Path(mech_path), Path(graph_path)
    graph_path.write_text(format_graph(m.graph))
    lines = [f"graph {graph_path.name}"]
    for name in m.graph.names:
        lines.append(f"noise {name} " + " ".join(f"{p:.12g}" for p in m.noise[name]))
    for pair in m.graph.latent_pairs():
        lines.append(f"latent {pair[0]} {pair[1]} " + " ".join(f"{p:.12g}" for p in m.latents[pair]))
    for name in m.graph.names:
        mech = m.mechanisms[name]
        for idx in np.ndindex(mech.shape):
            fields = [str(i) for i in idx] + [str(int(mech[idx]))]
            lines.append(f"mech {name} " + " ".join(fields))
    mech_path.write_text("\n".join(lines) + "\n")


def read_scm(mech_path: str | Path) -> DiscreteScm:
    mech_path = Path(mech_path)
    graph: Admg | None = None
    noise: dict[str, np.ndarray] = {}
    latents: dict[tuple[str, str], np.ndarray] = {}
    raw_mech: dict[str, list[tuple[tuple[int, ...], int]]] = {}
    for lineno, rawline in enumerate(mech_path.read_text().splitlines(), start=1):
        line = rawline.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        kind = fields[0]
        if kind == "graph":
            graph = parse_graph((mech_path.parent / fields[1]).read_text())
        elif kind == "noise":
            noise[fields[1]] = np.array([float(f) for f in fields[2:]])
        elif kind == "latent":
            latents[(fields[1], fields[2])] = np.array([float(f) for f in fields[3:]])
        elif kind == "mech":
            idx = tuple(int(f) for f in fields[2:-1])
            raw_mech.setdefault(fields[1], []).append((idx, int(fields[-1])))
        else:
            raise ScmError(f"{mech_path}:{lineno}: unknown declaration {kind!r}")
    if graph is None:
        raise ScmError(f"{mech_path}: missing graph declaration")
    mechanisms: dict[str, np.ndarray] = {}
    for name in graph.names:
        rows = raw_mech.get(name, [])
        if not rows:
            raise ScmError(f"{mech_path}: no mechanism rows for {name}")
        shape = tuple(max(i[d] for i, _ in rows) + 1 for d in range(len(rows[0][0])))
        if len(rows) != math.prod(shape):
            raise ScmError(f"{mech_path}: incomplete mechanism table for {name}")
        table = np.zeros(shape, dtype=np.int64)
        for idx, value in rows:
            table[idx] = value
        mechanisms[name] = table
    canonical = {tuple(sorted(p, key=graph.index)): probs for p, probs in latents.items()}
    return DiscreteScm(graph, noise, canonical, mechanisms)


def interventional_marginal(m: DiscreteScm, do: Mapping[str, int], targets: Iterable[str]) -> DistTable:
    """Convenience oracle: exact P(targets | do(...))."""
    return exact_interventional(m, do).marginal(targets)
