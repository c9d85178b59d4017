"""Planner: limits, ranking, exhaustive enumeration, and goal-driven search."""

import dataclasses

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from patternforge import (
    Atom,
    Candidate,
    Limits,
    MultipleErrors,
    Par,
    Ranking,
    Seq,
    TypeMismatch,
    UnknownAttribute,
    enumerate_all,
    load_catalog,
    load_limits,
    load_network,
    load_ranking,
    parse_goal,
    plan,
    rank,
    render_combination,
    resolve_goal,
    significance_total,
    validate_state,
)
from patternforge.composition import atoms_of

from conftest import fixture_path
from oracles import brute_force_satisfying, brute_force_valid, random_instance

import json


class TestLimits:
    def test_defaults(self):
        limits = Limits()
        assert (limits.max_atoms, limits.max_par_width, limits.allow_par,
                limits.iteration_cap, limits.max_results) == (6, 3, True, 100, 10)

    def test_positive_integers_required(self):
        with pytest.raises(TypeMismatch):
            Limits(max_atoms=0)
        with pytest.raises(TypeMismatch):
            Limits(max_par_width=-1)
        with pytest.raises(TypeMismatch):
            Limits(iteration_cap=True)
        with pytest.raises(TypeMismatch):
            Limits(max_results=0)

    def test_allow_par_must_be_bool(self):
        with pytest.raises(TypeMismatch):
            Limits(allow_par=1)

    def test_load_limits(self):
        assert load_limits(None) == Limits()
        assert load_limits({"max_atoms": 4}) == Limits(max_atoms=4)
        with pytest.raises(TypeMismatch, match="unknown limits key"):
            load_limits({"atoms": 4})


class TestRanking:
    def test_load_forms(self, basic_catalog):
        assert load_ranking(None, basic_catalog) == Ranking()
        compact = load_ranking("min effort", basic_catalog)
        assert compact.criteria == (("effort", "minimize"),)
        spelled = load_ranking(["minimize effort"], basic_catalog)
        assert spelled == compact
        objects = load_ranking([{"attribute": "effort", "direction": "min"}],
                               basic_catalog)
        assert objects == compact

    def test_multiple_criteria_comma_string(self, automation_catalog):
        ranking = load_ranking("min effort, min defect_density", automation_catalog)
        assert ranking.criteria == (("effort", "minimize"),
                                    ("defect_density", "minimize"))

    def test_invalid_entries(self, basic_catalog):
        with pytest.raises(TypeMismatch):
            load_ranking(["lowest effort"], basic_catalog)
        with pytest.raises(UnknownAttribute):
            load_ranking("min budget", basic_catalog)
        with pytest.raises(TypeMismatch, match="must be a number"):
            load_ranking("min requirements_document", basic_catalog)

    def test_errors_aggregate(self, basic_catalog):
        with pytest.raises(MultipleErrors) as excinfo:
            load_ranking(["min budget", "lowest effort"], basic_catalog)
        assert len(excinfo.value.errors) == 2

    def test_direction_validated_on_construction(self):
        with pytest.raises(TypeMismatch):
            Ranking(criteria=(("effort", "upward"),))


def tiny_instance():
    catalog = load_catalog({
        "schema": [{"name": "cost", "kind": "number", "merge": "additive"}],
        "functions": [],
        "patterns": [
            {"id": "alpha", "transformations": ["cost := cost + 1"],
             "produces": ["seed"]},
            {"id": "bravo", "transformations": ["cost := cost + 2"],
             "consumes": ["seed"]},
            {"id": "charlie", "transformations": ["cost := cost + 4"]},
        ],
    })
    net = load_network({}, catalog)
    state = validate_state(catalog.schema, {"cost": 0})
    return catalog, net, state


class TestEnumeration:
    def test_shapes_and_order(self):
        catalog, net, state = tiny_instance()
        combos = enumerate_all(catalog, net, state, Limits(max_atoms=2))
        rendered = [render_combination(c) for c in combos]
        assert rendered == sorted(rendered)
        # bravo may never open a combination: nothing has produced seed yet
        assert "bravo" not in rendered
        assert "seq(alpha, bravo)" in rendered
        assert "par(alpha, charlie)" in rendered
        # a parallel branch cannot rely on a sibling's product
        assert "par(alpha, bravo)" not in rendered

    def test_no_repeated_atoms(self):
        catalog, net, state = tiny_instance()
        for comb in enumerate_all(catalog, net, state, Limits(max_atoms=3)):
            ids = [a.pattern_id for a in atoms_of(comb)]
            assert len(ids) == len(set(ids))

    def test_par_children_sorted(self):
        catalog, net, state = tiny_instance()
        for comb in enumerate_all(catalog, net, state, Limits(max_atoms=3)):
            steps = comb.children if isinstance(comb, Seq) else (comb,)
            for step in steps:
                if isinstance(step, Par):
                    ids = [a.pattern_id for a in step.children]
                    assert ids == sorted(ids)

    def test_every_step_prefix_is_listed(self):
        catalog, net, state = tiny_instance()
        rendered = {render_combination(c)
                    for c in enumerate_all(catalog, net, state, Limits(max_atoms=3))}
        for text in list(rendered):
            comb = next(c for c in enumerate_all(catalog, net, state, Limits(max_atoms=3))
                        if render_combination(c) == text)
            steps = comb.children if isinstance(comb, Seq) else (comb,)
            for k in range(1, len(steps)):
                prefix = steps[0] if k == 1 else Seq(steps[:k])
                assert render_combination(prefix) in rendered

    def test_allow_par_false_and_width_respected(self):
        catalog, net, state = tiny_instance()
        seq_only = enumerate_all(catalog, net, state,
                                 Limits(max_atoms=3, allow_par=False))
        assert all(not isinstance(step, Par)
                   for comb in seq_only
                   for step in (comb.children if isinstance(comb, Seq) else (comb,)))
        narrow = enumerate_all(catalog, net, state,
                               Limits(max_atoms=3, max_par_width=2))
        assert all(len(step.children) <= 2
                   for comb in narrow
                   for step in (comb.children if isinstance(comb, Seq) else (comb,))
                   if isinstance(step, Par))

    def test_max_atoms_respected(self):
        catalog, net, state = tiny_instance()
        for comb in enumerate_all(catalog, net, state, Limits(max_atoms=2)):
            assert len(list(atoms_of(comb))) <= 2

    @settings(max_examples=150, deadline=None)
    @given(st.integers(min_value=0, max_value=9999))
    def test_matches_unpruned_oracle(self, seed):
        # dual route: the pruned planner walk must equal the brute-force
        # enumeration filtered by the checker
        catalog, net, state, _, limits = random_instance(seed)
        fast = {render_combination(c)
                for c in enumerate_all(catalog, net, state, limits)}
        slow = {render_combination(c) for c in brute_force_valid(catalog, net, limits)}
        assert fast == slow


class TestRankOrdering:
    def make(self, score, significance=0, text="alpha"):
        catalog, net, state = tiny_instance()
        return Candidate(combination=Atom(text), final_state=state,
                         score=score, significance_total=significance)

    def test_minimize_prefers_smaller(self):
        ranking = Ranking(criteria=(("cost", "minimize"),))
        out = rank([self.make((700.0,)), self.make((654.0,))], ranking)
        assert [c.score[0] for c in out] == [654.0, 700.0]

    def test_maximize_prefers_larger(self):
        ranking = Ranking(criteria=(("cost", "maximize"),))
        out = rank([self.make((0.8,)), self.make((0.92,))], ranking)
        assert [c.score[0] for c in out] == [0.92, 0.8]

    def test_lexicographic_over_criteria(self):
        ranking = Ranking(criteria=(("cost", "minimize"), ("risk", "minimize")))
        out = rank([self.make((100.0, 5.0)), self.make((100.0, 2.0)),
                    self.make((90.0, 9.0))], ranking)
        assert [c.score for c in out] == [(90.0, 9.0), (100.0, 2.0), (100.0, 5.0)]

    def test_ties_prefer_higher_significance(self):
        ranking = Ranking(criteria=(("cost", "minimize"),))
        out = rank([self.make((654.0,), significance=9),
                    self.make((654.0,), significance=23)], ranking)
        assert [c.significance_total for c in out] == [23, 9]

    def test_final_tie_breaks_on_canonical_text(self):
        ranking = Ranking()
        out = rank([self.make((), text="zulu"), self.make((), text="alpha")], ranking)
        assert [render_combination(c.combination) for c in out] == ["alpha", "zulu"]


class TestPlan:
    def goal_of(self, catalog, text):
        return resolve_goal(parse_goal(text), catalog.schema)

    def test_basic_fixture_unique_answer(self, basic_catalog, basic_network):
        state = validate_state(basic_catalog.schema,
                               {"effort": 0, "requirements_document": "incomplete"})
        goal = self.goal_of(basic_catalog,
                            "effort < 700 & requirements_document = 'verified'")
        candidates = plan(basic_catalog, basic_network, state, goal,
                          Limits(max_atoms=3, max_par_width=2),
                          load_ranking("min effort", basic_catalog))
        assert [render_combination(c.combination) for c in candidates] == [
            "seq(par(elicit_functional, elicit_nonfunctional), verify_requirements)"]
        assert candidates[0].final_state.get("effort") == 654.0
        assert candidates[0].score == (654.0,)
        assert candidates[0].significance_total == 14 + 9 + 11

    def test_requirements_fixture_refinements_follow(self, requirements_catalog,
                                                     requirements_network):
        state = validate_state(requirements_catalog.schema,
                               {"effort": 0, "requirements_document": "incomplete"})
        goal = self.goal_of(requirements_catalog,
                            "effort < 700 & requirements_document = 'verified'")
        candidates = plan(requirements_catalog, requirements_network, state, goal,
                          Limits(max_atoms=4, max_par_width=2),
                          load_ranking("min effort", requirements_catalog))
        assert render_combination(candidates[0].combination) == \
            "seq(par(elicit_functional, elicit_nonfunctional), verify_requirements)"
        assert candidates[0].score == (654.0,)
        assert {c.score[0] for c in candidates[1:3]} == {664.0}
        scores = [c.score[0] for c in candidates]
        assert scores == sorted(scores)

    def test_goal_filter_can_leave_nothing(self, basic_catalog, basic_network):
        state = validate_state(basic_catalog.schema,
                               {"effort": 0, "requirements_document": "incomplete"})
        goal = self.goal_of(basic_catalog, "effort < 0")
        assert plan(basic_catalog, basic_network, state, goal) == []

    def test_max_results_truncates(self):
        catalog, net, state = tiny_instance()
        goal = self.goal_of(catalog, "cost >= 0")
        everything = plan(catalog, net, state, goal,
                          Limits(max_atoms=3, max_results=100))
        only_two = plan(catalog, net, state, goal,
                        Limits(max_atoms=3, max_results=2))
        assert len(only_two) == 2
        assert [render_combination(c.combination) for c in only_two] == \
            [render_combination(c.combination) for c in everything[:2]]

    def test_runtime_failures_are_skipped_not_raised(self, tmp_path):
        catalog = load_catalog({
            "schema": [{"name": "score", "kind": "number"}],
            "functions": [],
            "patterns": [
                {"id": "rate_high", "transformations": ["score := 90"]},
                {"id": "rate_low", "transformations": ["score := 60"]},
            ],
        })
        net = load_network({}, catalog)
        state = validate_state(catalog.schema, {"score": 0})
        goal = self.goal_of(catalog, "score > 0")
        candidates = plan(catalog, net, state, goal, Limits(max_atoms=2))
        rendered = {render_combination(c.combination) for c in candidates}
        # the conflicting parallel write is dropped silently
        assert "par(rate_high, rate_low)" not in rendered
        assert {"rate_high", "rate_low"} <= rendered

    def test_ranking_attribute_unbound_in_final_state_raises(self):
        catalog = load_catalog({
            "schema": [{"name": "cost", "kind": "number"},
                       {"name": "rating", "kind": "number"}],
            "functions": [],
            "patterns": [{"id": "spend", "transformations": ["cost := 5"]}],
        })
        net = load_network({}, catalog)
        state = validate_state(catalog.schema, {"cost": 0})
        goal = self.goal_of(catalog, "cost > 0")
        with pytest.raises(UnknownAttribute):
            plan(catalog, net, state, goal, Limits(max_atoms=1),
                 load_ranking("min rating", catalog))

    def test_matches_brute_force_on_sample_seeds(self):
        for seed in range(30):
            catalog, net, state, goal, limits = random_instance(seed)
            wide = dataclasses.replace(limits, max_results=10_000)
            fast = {render_combination(c.combination)
                    for c in plan(catalog, net, state, goal, wide)}
            slow = {render_combination(c)
                    for c in brute_force_satisfying(catalog, net, state, goal, limits)}
            assert fast == slow, f"seed {seed}"


class TestSignificance:
    def test_sums_usage_counts(self, basic_catalog):
        comb = Seq((Par((Atom("elicit_functional"), Atom("elicit_nonfunctional"))),
                    Atom("verify_requirements")))
        assert significance_total(basic_catalog, comb) == 34
