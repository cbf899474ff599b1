"""Command-line surface: identify queries, build and sample networks, generate
synthetic data, and score samples against the exact oracle.

Exit codes: 0 success, 1 input error, 2 query not identifiable.
"""

from __future__ import annotations

import argparse
import itertools
import sys
from pathlib import Path

import numpy as np

from . import engine, identify, scm
from .estimands import evaluate_estimand, format_estimand
from .graphs import Admg, GraphError, parse_graph
from .models import DataError, Dataset, read_dataset_csv, write_dataset_csv

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_HEDGE = 2


class InputError(Exception):
    pass


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (GraphError, DataError, scm.ScmError, engine.EngineError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="causalgen",
        description="identify interventional queries and sample them through networks of conditional models",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("identify", help="print the symbolic estimand for a query")
    p.add_argument("--graph", required=True)
    p.add_argument("--query", required=True)
    p.set_defaults(handler=cmd_identify)

    p = sub.add_parser("sample", help="compile a query and draw interventional samples")
    p.add_argument("--graph", required=True)
    p.add_argument("--query", required=True)
    p.add_argument("--data", help="observational csv (fitted conditionals)")
    p.add_argument("--scm", help="scm file (exact conditionals)")
    p.add_argument("--n", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--proposal", choices=["uniform", "marginal"], default="uniform")
    p.add_argument("--dprime-mult", type=float, default=1.0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True, help="output prefix: writes <out>.csv and <out>.manifest")
    p.set_defaults(handler=cmd_sample)

    p = sub.add_parser("eval", help="score engine samples against the exact oracle")
    p.add_argument("--scm")
    p.add_argument("--query")
    p.add_argument("--catalog", help="catalog entry name, or 'all'")
    p.add_argument("--n", type=int, default=200_000)
    p.add_argument("--obs-n", type=int, default=500_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--proposal", choices=["uniform", "marginal"], default="uniform")
    p.add_argument("--dprime-mult", type=float, default=1.0)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(handler=cmd_eval)

    p = sub.add_parser("gen-data", help="draw observational samples from an scm")
    p.add_argument("--scm", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_gen_data)
    return parser


def _load_graph(path: str) -> Admg:
    try:
        return parse_graph(Path(path).read_text())
    except OSError as exc:
        raise InputError(str(exc)) from None
    except GraphError as exc:
        raise InputError(f"{path}: {exc}") from None


def _load_query(path: str, g: Admg) -> engine.QuerySpec:
    try:
        q = engine.parse_query(Path(path).read_text())
        q.validate(g)
        return q
    except OSError as exc:
        raise InputError(str(exc)) from None
    except GraphError as exc:
        raise InputError(f"{path}: {exc}") from None


def _print_hedge(hedge, trace):
    for entry in trace:
        print(f"  {entry.describe()}")
    print(f"not identifiable: hedge over {{{','.join(sorted(hedge.f))}}} "
          f"with component {{{','.join(sorted(hedge.f_prime))}}}")


def cmd_identify(args) -> int:
    g = _load_graph(args.graph)
    q = _load_query(args.query, g)
    y = frozenset(q.targets)
    x = frozenset(q.do_map)
    if q.given:
        result = identify.identify_conditional_effect(y, x, frozenset(q.given_map), g)
    else:
        result = identify.identify_effect(y, x, g)
    if not result.identifiable:
        _print_hedge(result.hedge, result.trace)
        return EXIT_HEDGE
    print(format_estimand(result.estimand))
    for entry in result.trace:
        print(f"  {entry.describe()}")
    return EXIT_OK


def _load_source(args, g: Admg):
    if bool(args.data) == bool(args.scm):
        raise InputError("provide exactly one of --data or --scm")
    if args.data:
        sidecar = Path(args.data).with_suffix(".sidecar.json")
        data = read_dataset_csv(args.data, sidecar if sidecar.exists() else None)
        if set(data.names) != set(g.names):
            raise InputError("dataset columns do not match the graph's variables")
        return engine.DatasetSource(data)
    model = scm.read_scm(args.scm)
    if model.graph != g:
        raise InputError("scm graph does not match --graph")
    return engine.ExactSource(scm.exact_joint(model))


def cmd_sample(args) -> int:
    if args.n <= 0:
        raise InputError("--n must be positive")
    g = _load_graph(args.graph)
    q = _load_query(args.query, g)
    source = _load_source(args, g)
    rng = np.random.default_rng(args.seed)
    if q.given:
        return _sample_conditional(args, g, q, source, rng)
    result = engine.build_network(
        frozenset(q.targets), frozenset(q.do_map), g, source,
        proposal=args.proposal, dprime_mult=args.dprime_mult, rng=rng,
    )
    if not result.identifiable:
        _print_hedge(result.hedge, result.trace)
        return EXIT_HEDGE
    joint = engine.sample_interventional(result.network, q, args.n, rng, workers=args.workers)
    samples = engine.project_targets(joint, q.targets)
    out = Path(args.out)
    write_dataset_csv(samples, out.with_suffix(".csv"), out.with_suffix(".sidecar.json"))
    out.with_suffix(".manifest").write_text(engine.format_network(result.network))
    print(f"wrote {samples.n} rows to {out.with_suffix('.csv')}")
    return EXIT_OK


def _conditional_chain(sampler) -> tuple:
    return sampler.chain if isinstance(sampler, engine.ChainSampler) else (sampler,)


def _draw_conditional(sampler, fixed: dict[str, int], n: int, rng) -> dict[str, np.ndarray]:
    cols = {name: np.full(n, value, dtype=np.int64) for name, value in fixed.items()}
    out = {}
    for model in _conditional_chain(sampler):
        col = model.sample_n(cols, n, rng)
        cols[model.target.name] = col
        out[model.target.name] = col
    return out


def _sample_conditional(args, g, q, source, rng) -> int:
    # the fitted conditional is not an ancestral network (conditioning may run
    # against the causal order), so it is sampled at the query's fixed values
    try:
        sampler = engine.build_conditional_sampler(
            q, g, source, n_train=max(args.n, 10_000),
            proposal=args.proposal, dprime_mult=args.dprime_mult, rng=rng,
        )
    except identify.NotIdentifiable as fail:
        _print_hedge(fail.hedge, [])
        return EXIT_HEDGE
    drawn = _draw_conditional(sampler, {**q.do_map, **q.given_map}, args.n, rng)
    variables = tuple(g.variable(t) for t in q.targets)
    rows = np.column_stack([drawn[t] for t in q.targets])
    samples = Dataset(variables, rows)
    out = Path(args.out)
    write_dataset_csv(samples, out.with_suffix(".csv"), out.with_suffix(".sidecar.json"))
    lines = []
    for model in _conditional_chain(sampler):
        card = model.target.cardinality
        table = model.conditional_table().reshape(-1, card)
        payload = ";".join(",".join(f"{p:.12g}" for p in row) for row in table)
        context = ",".join(model.context_names)
        lines.append(f"conditional {model.target.name} card={card} context={context} table={payload}")
    out.with_suffix(".manifest").write_text("\n".join(lines) + "\n")
    print(f"wrote {samples.n} rows to {out.with_suffix('.csv')}")
    return EXIT_OK


def _eval_one(entry: scm.CatalogEntry, query: scm.CatalogQuery, args, rng) -> str:
    g = entry.scm.graph
    label = f"{entry.name}: P({','.join(query.targets)} | do({','.join(query.do)})" + (
        f", {','.join(query.given)})" if query.given else ")"
    )
    if not query.identifiable:
        return f"| {label} | HEDGE | HEDGE |"
    joint = scm.exact_joint(entry.scm)
    obs = scm.sample_observational(entry.scm, args.obs_n, rng)
    columns = []
    for source in (engine.DatasetSource(obs), engine.ExactSource(joint)):
        if query.given:
            worst = _conditional_tvd(entry, query, source, joint, args, rng)
        else:
            worst = _unconditional_tvd(entry, query, source, args, rng)
        columns.append(f"{worst:.4f}")
    return f"| {label} | {columns[0]} | {columns[1]} |"


def _unconditional_tvd(entry, query, source, args, rng) -> float:
    g = entry.scm.graph
    build = engine.build_network(
        frozenset(query.targets), frozenset(query.do), g, source,
        proposal=args.proposal, dprime_mult=args.dprime_mult, rng=rng,
    )
    worst = 0.0
    for do_vals in _configurations(g, query.do):
        spec = engine.QuerySpec(query.targets, tuple(do_vals.items()))
        drawn = engine.sample_interventional(build.network, spec, args.n, rng, workers=args.workers)
        exact = scm.interventional_marginal(entry.scm, do_vals, query.targets)
        emp = scm.empirical_distribution(drawn, exact.names)
        worst = max(worst, scm.tvd(emp, exact))
    return worst


def _conditional_tvd(entry, query, source, joint, args, rng) -> float:
    g = entry.scm.graph
    spec = engine.QuerySpec(
        query.targets,
        tuple((n, 0) for n in query.do),
        tuple((n, 0) for n in query.given),
    )
    sampler = engine.build_conditional_sampler(
        spec, g, source, n_train=args.n, proposal=args.proposal,
        dprime_mult=args.dprime_mult, rng=rng,
    )
    ref = identify.identify_conditional_effect(
        frozenset(query.targets), frozenset(query.do), frozenset(query.given), g
    )
    table = evaluate_estimand(ref.estimand, joint)
    worst = 0.0
    for do_vals in _configurations(g, query.do):
        for given_vals in _configurations(g, query.given):
            ctx = {**do_vals, **given_vals}
            drawn = _draw_conditional(sampler, ctx, args.n, rng)
            variables = tuple(g.variable(t) for t in query.targets)
            rows = np.column_stack([drawn[t] for t in query.targets])
            exact = table.fix({k: v for k, v in ctx.items() if k in table.names})
            emp = scm.empirical_distribution(Dataset(variables, rows), exact.names)
            worst = max(worst, scm.tvd(emp, exact))
    return worst


def _configurations(g: Admg, names: tuple[str, ...]):
    cards = [g.variable(n).cardinality for n in names]
    for combo in itertools.product(*(range(c) for c in cards)):
        yield dict(zip(names, combo))


def cmd_eval(args) -> int:
    rng = np.random.default_rng(args.seed)
    rows = ["| query | fitted tvd | exact tvd |", "| --- | --- | --- |"]
    if args.catalog:
        entries = scm.catalog() if args.catalog == "all" else [scm.catalog_entry(args.catalog)]
        for entry in entries:
            for query in entry.queries:
                rows.append(_eval_one(entry, query, args, rng))
    elif args.scm and args.query:
        model = scm.read_scm(args.scm)
        q = engine.parse_query(Path(args.query).read_text())
        q.validate(model.graph)
        do_names = tuple(n for n, _ in q.do)
        given_names = tuple(n for n, _ in q.given)
        if given_names:
            result = identify.identify_conditional_effect(
                frozenset(q.targets), frozenset(do_names), frozenset(given_names), model.graph
            )
        else:
            result = identify.identify_effect(frozenset(q.targets), frozenset(do_names), model.graph)
        entry = scm.CatalogEntry(Path(args.scm).stem, model, ())
        query = scm.CatalogQuery(q.targets, do_names, given_names, identifiable=result.identifiable)
        rows.append(_eval_one(entry, query, args, rng))
    else:
        raise InputError("provide --catalog, or both --scm and --query")
    print("\n".join(rows))
    return EXIT_OK


def cmd_gen_data(args) -> int:
    if args.n <= 0:
        raise InputError("--n must be positive")
    try:
        model = scm.read_scm(args.scm)
    except OSError as exc:
        raise InputError(str(exc)) from None
    rng = np.random.default_rng(args.seed)
    data = scm.sample_observational(model, args.n, rng)
    out = Path(args.out)
    write_dataset_csv(data, out, out.with_suffix(".sidecar.json"))
    print(f"wrote {data.n} rows to {out}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
