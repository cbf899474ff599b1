from __future__ import annotations

import numpy as np
import pytest

from causalgen.engine import (
    BuildContext,
    DatasetSource,
    EngineError,
    ExactSource,
    MergeConflict,
    QuerySpec,
    RecursionState,
    SamplingNetwork,
    ancestral_sample,
    apply_partial_intervention,
    build_conditional_sampler,
    build_network,
    fit_conditional_models,
    format_network,
    merge_networks,
    parse_query,
    format_query,
    project_targets,
    sample_interventional,
)
from causalgen.estimands import DistTable
from causalgen.graphs import GraphError, Variable
from causalgen.identify import identify_effect
from causalgen.models import Dataset
from causalgen.scm import (
    empirical_distribution,
    exact_joint,
    interventional_marginal,
    noisy_copy_scm,
    sample_observational,
    tvd,
)
from conftest import (
    admg,
    bow_graph,
    chain_graph,
    frontdoor_graph,
    napkin_graph,
    random_admg,
    random_query,
    zigzag_graph,
)


def contexts(network: SamplingNetwork) -> dict[str, tuple[str, ...] | None]:
    return {
        name: (None if model is None else model.context_names)
        for name, model in network.nodes.items()
    }


def exact_source(g):
    return ExactSource(exact_joint(noisy_copy_scm(g)))


def root_state(y, x, g, source):
    return RecursionState(frozenset(y), frozenset(x), g, source, frozenset(), g)


class TestQuerySpec:
    def test_parse_and_format_round_trip(self):
        text = "target=Y\ndo=X=1\ngiven=A=0\n"
        q = parse_query(text)
        assert q == QuerySpec(("Y",), (("X", 1),), (("A", 0),))
        assert format_query(q) == text

    def test_validate_rejects_overlap_and_range(self):
        g = chain_graph()
        with pytest.raises(GraphError):
            QuerySpec(("C",), (("C", 0),)).validate(g)
        with pytest.raises(GraphError):
            QuerySpec(("C",), (("A", 9),)).validate(g)


class TestFitConditionalModels:
    def test_chain_factorization(self):
        g = admg("A B", [("A", "B")])
        src = exact_source(g)
        h = fit_conditional_models(
            frozenset({"A", "B"}), frozenset(), root_state({"B"}, set(), g, src),
            BuildContext(root_order=tuple(g.topological_order())),
        )
        assert contexts(h) == {"A": (), "B": ("A",)}

    def test_napkin_base_case_shape(self):
        # the base case reached by the napkin recursion: placeholders for the
        # remaining intervention and the intervened history, one model for Y
        g = napkin_graph()
        res = build_network({"Y"}, {"X"}, g, exact_source(g), rng=np.random.default_rng(0))
        assert contexts(res.network) == {"W2": None, "X": None, "Y": ("W2", "X")}

    def test_single_source_target(self):
        g = chain_graph()
        src = exact_source(g)
        h = fit_conditional_models(
            frozenset({"A"}), frozenset(), root_state({"A"}, set(), g, src),
            BuildContext(root_order=tuple(g.topological_order())),
        )
        assert contexts(h)["A"] == ()


class TestMergeNetworks:
    def test_zigzag_parts_unify(self):
        g = zigzag_graph()
        res = build_network({"Y"}, {"X"}, g, exact_source(g), rng=np.random.default_rng(0))
        got = contexts(res.network)
        assert got["X"] is None
        assert got["W1"] == ("X",)
        assert got["Y"] == ("X", "W1", "W2")
        assert got["W2"] is not None  # produced by the sibling component's network

    def test_single_part_identity(self):
        g = chain_graph()
        src = exact_source(g)
        h = fit_conditional_models(
            frozenset({"A", "B", "C"}), frozenset(), root_state({"C"}, set(), g, src),
            BuildContext(root_order=tuple(g.topological_order())),
        )
        merged = merge_networks([h])
        assert contexts(merged) == contexts(h)

    def test_disjoint_union(self):
        g = admg("A B")
        src = exact_source(g)
        order = tuple(g.topological_order())
        ha = SamplingNetwork({"A": g.variable("A")}, {"A": src.fit("A", [])}, order)
        hb = SamplingNetwork({"B": g.variable("B")}, {"B": src.fit("B", [])}, order)
        merged = merge_networks([ha, hb])
        assert set(merged.nodes) == {"A", "B"}
        assert not merged.empty_nodes()

    def test_conflicting_producers_rejected(self):
        g = admg("A")
        src = exact_source(g)
        ctx = BuildContext(root_order=("A",))
        h1 = fit_conditional_models(frozenset({"A"}), frozenset(), root_state({"A"}, set(), g, src), ctx)
        h2 = fit_conditional_models(frozenset({"A"}), frozenset(), root_state({"A"}, set(), g, src), ctx)
        with pytest.raises(MergeConflict):
            merge_networks([h1, h2])


class TestPartialIntervention:
    def napkin_step7_state(self, n=200_000, seed=0):
        g = napkin_graph()
        m = noisy_copy_scm(g)
        data = sample_observational(m, n, np.random.default_rng(seed))
        state = RecursionState(
            frozenset({"Y"}), frozenset({"W1", "W2", "X"}), g, DatasetSource(data), frozenset(), g
        )
        ctx = BuildContext(root_order=tuple(g.topological_order()), rng=np.random.default_rng(seed + 1))
        return m, state, ctx

    def test_napkin_partition_and_graphs(self):
        m, state, ctx = self.napkin_step7_state(n=500)
        new = apply_partial_intervention(frozenset({"W1", "X", "Y"}), state, ctx)
        assert new.x == {"W1", "X"}
        assert new.x_hat == {"W2"}
        assert new.g.names == ("W1", "X", "Y")
        assert new.g_hat.directed == frozenset({("W2", "X"), ("X", "Y")})
        assert new.source.intervened == {"W2"}
        assert set(new.source.columns) == {"W1", "W2", "X", "Y"}

    def test_napkin_regenerated_data_law(self):
        m, state, ctx = self.napkin_step7_state()
        new = apply_partial_intervention(frozenset({"W1", "X", "Y"}), state, ctx)
        d = new.source.dataset
        w2 = empirical_distribution(d, ["W2"])
        assert tvd(w2, DistTable((m.graph.variable("W2"),), np.array([0.5, 0.5]))) < 0.02
        for value in (0, 1):
            rows = d.rows[d.column("W2") == value]
            sub = Dataset(d.variables, rows, d.intervened)
            truth = interventional_marginal(m, {"W2": value}, ["W1", "X", "Y"])
            assert tvd(empirical_distribution(sub, truth.names), truth) < 0.03

    def test_exact_regeneration_matches_sampled_law(self):
        m, state, ctx = self.napkin_step7_state()
        sampled = apply_partial_intervention(frozenset({"W1", "X", "Y"}), state, ctx)
        exact_state = RecursionState(
            state.y, state.x, state.g, ExactSource(exact_joint(m)), frozenset(), state.g_hat
        )
        exact_new = apply_partial_intervention(frozenset({"W1", "X", "Y"}), exact_state, ctx)
        law = exact_new.source.table
        emp = empirical_distribution(sampled.source.dataset, law.names)
        assert tvd(emp, law) < 0.01

    def test_empty_component_rejected(self):
        _, state, ctx = self.napkin_step7_state(n=100)
        with pytest.raises(EngineError):
            apply_partial_intervention(frozenset(), state, ctx)

    def test_multiplier_scales_rows(self):
        _, state, ctx = self.napkin_step7_state(n=1000)
        ctx.dprime_mult = 2.0
        new = apply_partial_intervention(frozenset({"W1", "X", "Y"}), state, ctx)
        assert new.source.dataset.n == 2000

    def test_marginal_proposal_follows_data(self):
        m, state, ctx = self.napkin_step7_state()
        ctx.proposal = "marginal"
        new = apply_partial_intervention(frozenset({"W1", "X", "Y"}), state, ctx)
        w2 = empirical_distribution(new.source.dataset, ["W2"])
        truth = exact_joint(m).marginal(["W2"])
        assert tvd(w2, truth) < 0.02


class TestAncestralSampling:
    def test_two_node_network_matches_enumeration(self):
        g = admg("A B", [("A", "B")])
        m = noisy_copy_scm(g)
        res = build_network({"A", "B"}, set(), g, ExactSource(exact_joint(m)))
        d = ancestral_sample(res.network, {}, 200_000, np.random.default_rng(3))
        assert tvd(empirical_distribution(d, ["A", "B"]), exact_joint(m)) < 0.01

    def test_all_nodes_fixed_constant_rows(self):
        g = frontdoor_graph()
        res = build_network({"R"}, {"X"}, g, exact_source(g))
        h = res.network
        fixed = {name: 1 for name in h.node_order}
        d = ancestral_sample(h, fixed, 50, np.random.default_rng(0))
        assert np.all(d.rows == 1)

    def test_frontdoor_do_x_matches_oracle(self):
        g = frontdoor_graph()
        m = noisy_copy_scm(g)
        res = build_network({"R"}, {"X"}, g, ExactSource(exact_joint(m)))
        d = sample_interventional(res.network, QuerySpec(("R",), (("X", 1),)), 200_000, np.random.default_rng(4))
        emp = empirical_distribution(d, ["R"])
        assert tvd(emp, interventional_marginal(m, {"X": 1}, ["R"])) < 0.01

    def test_unassigned_placeholder_rejected(self):
        g = frontdoor_graph()
        res = build_network({"R"}, {"X"}, g, exact_source(g))
        with pytest.raises(EngineError):
            ancestral_sample(res.network, {}, 10, np.random.default_rng(0))

    def test_rejects_nonpositive_count(self):
        g = frontdoor_graph()
        res = build_network({"R"}, {"X"}, g, exact_source(g))
        with pytest.raises(EngineError):
            ancestral_sample(res.network, {"X": 0}, 0, np.random.default_rng(0))

    def test_worker_split_is_deterministic(self):
        g = frontdoor_graph()
        res = build_network({"R"}, {"X"}, g, exact_source(g))
        a = ancestral_sample(res.network, {"X": 0}, 999, np.random.default_rng(5), workers=3)
        b = ancestral_sample(res.network, {"X": 0}, 999, np.random.default_rng(5), workers=3)
        assert np.array_equal(a.rows, b.rows)


class TestProjectTargets:
    def test_identity_and_idempotence(self):
        d = Dataset((Variable("A", 2), Variable("B", 2)), np.array([[0, 1], [1, 0]]))
        assert np.array_equal(project_targets(d, ["A", "B"]).rows, d.rows)
        once = project_targets(d, ["B"])
        twice = project_targets(once, ["B"])
        assert np.array_equal(once.rows, twice.rows)

    def test_marginal_frequencies_preserved(self):
        d = Dataset((Variable("A", 2), Variable("B", 2)), np.array([[0, 1], [1, 1], [1, 0]]))
        projected = project_targets(d, ["B"])
        assert projected.n == 3
        assert np.array_equal(projected.column("B"), d.column("B"))


class TestBuildNetwork:
    def test_napkin_c_factor_query_network(self):
        # do on the confounded root: one factor per c-component of the rest,
        # merged into a network that regenerates its own inputs
        g = napkin_graph()
        res = build_network({"Y"}, {"W1"}, g, exact_source(g), rng=np.random.default_rng(0))
        steps = [e.step for e in res.trace]
        assert steps == ["S4", "S2", "S6", "S2", "S7", "S2", "S1", "S7", "S2", "S6"]
        got = contexts(res.network)
        assert got["W1"] is None
        assert got["W2"] == ("W1",)
        assert got["X"] == ("W2",)
        assert got["Y"] == ("W2", "X")

    def test_bow_returns_hedge(self):
        g = bow_graph()
        res = build_network({"Y"}, {"X"}, g, exact_source(g))
        assert not res.identifiable
        assert res.network is None
        assert sorted(res.hedge.f) == ["X", "Y"]

    def test_trace_mirrors_identification(self, rng):
        for _ in range(60):
            g = random_admg(rng)
            y, x = random_query(rng, g)
            symbolic = identify_effect(y, x, g)
            rows = rng.integers(0, 2, size=(128, len(g.names)))
            src = DatasetSource(Dataset(g.variables, rows))
            built = build_network(y, x, g, src, rng=np.random.default_rng(1))
            assert [(e.step, e.y, e.x, e.depth) for e in symbolic.trace] == [
                (e.step, e.y, e.x, e.depth) for e in built.trace
            ]
            assert symbolic.identifiable == built.identifiable
            assert symbolic.hedge == built.hedge

    def test_random_identifiable_queries_sound_in_exact_mode(self):
        # network sampling agrees with the mutilated-SCM oracle on whatever
        # recursion shapes random graphs produce
        rng = np.random.default_rng(77)
        checked = 0
        trial = 0
        while checked < 15:
            trial += 1
            g = random_admg(rng, max_nodes=5)
            y, x = random_query(rng, g)
            if not x:
                continue
            if not identify_effect(y, x, g).identifiable:
                continue
            m = noisy_copy_scm(g)
            built = build_network(y, x, g, ExactSource(exact_joint(m)),
                                  rng=np.random.default_rng(trial))
            srng = np.random.default_rng(1000 + trial)
            for value in (0, 1):
                do = {name: value for name in sorted(x)}
                truth = interventional_marginal(m, do, y)
                drawn = sample_interventional(
                    built.network, QuerySpec(tuple(y), tuple(do.items())), 50_000, srng
                )
                assert tvd(empirical_distribution(drawn, truth.names), truth) < 0.02
            checked += 1

    def test_structural_validity_on_random_builds(self, rng):
        for _ in range(40):
            g = random_admg(rng)
            y, x = random_query(rng, g)
            rows = rng.integers(0, 2, size=(128, len(g.names)))
            built = build_network(y, x, g, DatasetSource(Dataset(g.variables, rows)),
                                  rng=np.random.default_rng(2))
            if not built.identifiable:
                continue
            h = built.network
            h.validate()
            position = {n: i for i, n in enumerate(h.global_order)}
            assert all(position[a] < position[b] for a, b in h.edges())
            assert set(y) <= set(h.nodes)
            for name, model in h.nodes.items():
                assert (model is None) == (name in h.empty_nodes())

    def test_marginal_proposal_end_to_end(self):
        g = napkin_graph()
        m = noisy_copy_scm(g)
        data = sample_observational(m, 200_000, np.random.default_rng(0))
        built = build_network({"Y"}, {"X"}, g, DatasetSource(data),
                              proposal="marginal", rng=np.random.default_rng(1))
        rng = np.random.default_rng(2)
        for x in (0, 1):
            drawn = sample_interventional(built.network, QuerySpec(("Y",), (("X", x),)), 100_000, rng)
            truth = interventional_marginal(m, {"X": x}, ["Y"])
            assert tvd(empirical_distribution(drawn, truth.names), truth) < 0.02

    def test_mixed_cardinalities_end_to_end(self):
        # three-state treatment and outcome through identification, compilation,
        # partial intervention, and sampling
        g = admg(
            [("X", 3), ("S", 2), ("R", 3)], [("X", "S"), ("S", "R")], [("X", "R")]
        )
        m = noisy_copy_scm(g)
        joint = exact_joint(m)
        result = identify_effect({"R"}, {"X"}, g)
        from causalgen.estimands import evaluate_estimand

        table = evaluate_estimand(result.estimand, joint)
        built = build_network({"R"}, {"X"}, g, ExactSource(joint), rng=np.random.default_rng(3))
        rng = np.random.default_rng(4)
        for x in range(3):
            truth = interventional_marginal(m, {"X": x}, ["R"])
            assert np.abs(table.fix({"X": x}).probs - truth.probs).max() < 1e-9
            drawn = sample_interventional(built.network, QuerySpec(("R",), (("X", x),)), 100_000, rng)
            assert tvd(empirical_distribution(drawn, truth.names), truth) < 0.02

    def test_repeated_partial_interventions_stay_sound(self):
        # a recursion branch that applies do(X_Z) twice, so the second
        # regeneration anchors on a non-empty intervention history
        g = admg(
            "V0 V1 V2 V3 V4",
            [("V0", "V1"), ("V0", "V2"), ("V0", "V3"), ("V1", "V3"),
             ("V2", "V3"), ("V2", "V4"), ("V3", "V4")],
            [("V0", "V4"), ("V1", "V2"), ("V1", "V4")],
        )
        y, x = {"V2", "V4"}, {"V0", "V1", "V3"}
        result = identify_effect(y, x, g)
        steps = [e.step for e in result.trace]
        assert steps == ["S4", "S2", "S6", "S7", "S2", "S7", "S2", "S1"]
        m = noisy_copy_scm(g)
        joint = exact_joint(m)
        built = build_network(y, x, g, ExactSource(joint), rng=np.random.default_rng(9))
        rng = np.random.default_rng(10)
        import itertools

        worst = 0.0
        for combo in itertools.product((0, 1), repeat=3):
            do = dict(zip(sorted(x), combo))
            truth = interventional_marginal(m, do, y)
            drawn = sample_interventional(
                built.network, QuerySpec(tuple(y), tuple(do.items())), 100_000, rng
            )
            worst = max(worst, tvd(empirical_distribution(drawn, truth.names), truth))
        assert worst < 0.015

    def test_partial_do_assignment_rejected(self):
        # fixing only part of the do-set would sample a mixture, not an intervention
        g = admg("A B C", [("A", "C"), ("B", "C")])
        res = build_network({"C"}, {"A", "B"}, g, exact_source(g))
        assert res.network.required_inputs == {"A", "B"}
        with pytest.raises(EngineError, match="must fix"):
            sample_interventional(res.network, QuerySpec(("C",), (("A", 1),)), 10,
                                  np.random.default_rng(0))

    def test_rejects_bad_arguments(self):
        g = chain_graph()
        src = exact_source(g)
        with pytest.raises(GraphError):
            build_network(set(), {"A"}, g, src)
        with pytest.raises(GraphError):
            build_network({"A"}, {"A"}, g, src)
        with pytest.raises(EngineError):
            build_network({"C"}, {"A"}, g, src, proposal="other")

    def test_manifest_is_deterministic(self):
        g = frontdoor_graph()
        m = noisy_copy_scm(g)
        data = sample_observational(m, 5000, np.random.default_rng(0))
        a = build_network({"R"}, {"X"}, g, DatasetSource(data), rng=np.random.default_rng(1))
        b = build_network({"R"}, {"X"}, g, DatasetSource(data), rng=np.random.default_rng(1))
        assert format_network(a.network) == format_network(b.network)
        assert "kind=placeholder" in format_network(a.network)

    def test_manifest_golden_napkin_exact(self):
        g = napkin_graph()
        res = build_network({"Y"}, {"X"}, g, exact_source(g), rng=np.random.default_rng(0))
        # the fitted conditional is exactly independent of the regenerated W2,
        # which is what makes any fallback value for it valid at sampling time
        assert format_network(res.network) == (
            "order W2 X Y\n"
            "node W2 kind=placeholder card=2\n"
            "node X kind=placeholder card=2 required\n"
            "node Y kind=exact card=2 context=W2,X "
            "table=0.34,0.66;0.66,0.34;0.34,0.66;0.66,0.34\n"
        )


class TestConditionalSampler:
    def test_requires_conditioning_set(self):
        g = chain_graph()
        with pytest.raises(GraphError):
            build_conditional_sampler(QuerySpec(("C",), (("A", 0),)), g, exact_source(g))

    def test_chain_conditional_matches_plain_conditional(self):
        g = chain_graph()
        m = noisy_copy_scm(g)
        joint = exact_joint(m)
        sampler = build_conditional_sampler(
            QuerySpec(("C",), (("A", 0),), (("B", 0),)), g, ExactSource(joint),
            n_train=100_000, rng=np.random.default_rng(0),
        )
        assert sampler.context_names == ("A", "B")
        pbc = joint.marginal(["B", "C"])
        cond = pbc.probs / pbc.probs.sum(axis=1, keepdims=True)
        rng = np.random.default_rng(1)
        for a in range(2):
            for b in range(2):
                cols = {"A": np.full(100_000, a, dtype=np.int64), "B": np.full(100_000, b, dtype=np.int64)}
                draws = sampler.sample_n(cols, 100_000, rng)
                emp = empirical_distribution(
                    Dataset((g.variable("C"),), draws.reshape(-1, 1)), ["C"]
                )
                assert tvd(emp, DistTable((g.variable("C"),), cond[b])) < 0.02

    def test_hedge_propagates(self):
        g = admg("X Y Z", [("X", "Y"), ("Y", "Z")], [("X", "Y")])
        from causalgen.identify import NotIdentifiable

        with pytest.raises(NotIdentifiable):
            build_conditional_sampler(
                QuerySpec(("Y",), (("X", 0),), (("Z", 0),)), g, exact_source(g)
            )

    def test_multi_target_chain_sampler(self):
        g = admg("A B C D", [("A", "B"), ("B", "C"), ("C", "D")])
        m = noisy_copy_scm(g)
        joint = exact_joint(m)
        sampler = build_conditional_sampler(
            QuerySpec(("C", "D"), (("A", 0),), (("B", 0),)), g, ExactSource(joint),
            n_train=120_000, rng=np.random.default_rng(0),
        )
        # in the chain, P(c,d | do(a), b) = P(c,d | b)
        pbcd = joint.marginal(["B", "C", "D"])
        cond = pbcd.probs / pbcd.probs.sum(axis=(1, 2), keepdims=True)
        rng = np.random.default_rng(1)
        n = 120_000
        for b in range(2):
            cols = {"A": np.zeros(n, dtype=np.int64), "B": np.full(n, b, dtype=np.int64)}
            out = sampler.sample_columns(cols, n, rng)
            rows = np.column_stack([out["C"], out["D"]])
            emp = empirical_distribution(
                Dataset((g.variable("C"), g.variable("D")), rows), ["C", "D"]
            )
            truth = DistTable((g.variable("C"), g.variable("D")), cond[b])
            assert tvd(emp, truth) < 0.02
