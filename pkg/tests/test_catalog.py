"""Catalog loading and validation, quality models, and pattern application."""

import copy
import json

import pytest

from patternforge import (
    ArityMismatch,
    MultipleErrors,
    PatternForgeError,
    TableDomainError,
    TypeMismatch,
    UnknownAttribute,
    UnknownPattern,
    apply_pattern,
    eval_function,
    load_catalog,
    load_catalog_file,
)
from patternforge.catalog import QualityModel
from patternforge.model import validate_state


def base_document():
    return {
        "schema": [
            {"name": "effort", "kind": "number", "unit": "person_hours",
             "merge": "additive"},
            {"name": "milestone", "kind": "enum", "domain": ["started", "done"]},
            {"name": "approved", "kind": "flag"},
        ],
        "functions": [
            {"name": "double", "params": ["x"], "body": "2 * x"},
            {"name": "predicted_test_effort", "params": ["complexity"],
             "table": [[0, 40], [50, 260], [100, 520]]},
        ],
        "patterns": [
            {"id": "raise_effort", "title": "Raise effort",
             "characterization": {"milestone": "started"},
             "significance": {"usage_count": 3, "contexts": ["automotive"]},
             "goal": "effort >= 20",
             "transformations": ["effort := effort + 10", "effort := effort * 2"],
             "consumes": ["draft"], "produces": ["report"]},
            {"id": "approve",
             "goal": "approved = true",
             "transformations": ["approved := true"],
             "consumes": ["report"], "produces": ["approval"]},
        ],
    }


def load_messages(document) -> list[str]:
    """Every violation the loader reports, as strings."""
    with pytest.raises(PatternForgeError) as excinfo:
        load_catalog(document)
    e = excinfo.value
    inner = e.errors if isinstance(e, MultipleErrors) else [e]
    return [str(x) for x in inner]


def assert_rejects(document, fragment: str):
    messages = load_messages(document)
    assert any(fragment in m for m in messages), (fragment, messages)


@pytest.fixture(scope="module")
def catalog():
    return load_catalog(base_document())


class TestQualityModels:
    def test_expression_body(self, catalog):
        assert catalog.function_env["double"](21.0) == 42.0

    def test_functions_can_call_each_other(self):
        doc = base_document()
        doc["functions"].append(
            {"name": "quadruple", "params": ["x"], "body": "double(double(x))"})
        catalog = load_catalog(doc)
        assert catalog.function_env["quadruple"](3.0) == 12.0

    def test_table_exact_at_knots(self, catalog):
        pte = catalog.function_env["predicted_test_effort"]
        assert pte(0.0) == 40.0
        assert pte(50.0) == 260.0
        assert pte(100.0) == 520.0

    def test_table_interpolates_between_knots(self, catalog):
        pte = catalog.function_env["predicted_test_effort"]
        # midpoint of the first segment: (40 + 260) / 2
        assert pte(25.0) == 150.0
        # 260 + (520 - 260) * 25 / 50
        assert pte(75.0) == 390.0

    def test_table_refuses_out_of_range(self, catalog):
        pte = catalog.function_env["predicted_test_effort"]
        with pytest.raises(TableDomainError):
            pte(-0.5)
        with pytest.raises(TableDomainError):
            pte(100.1)

    def test_arity_checked(self, catalog):
        with pytest.raises(ArityMismatch):
            catalog.function_env["double"](1.0, 2.0)

    def test_arguments_must_be_numbers(self, catalog):
        with pytest.raises(TypeMismatch):
            catalog.function_env["double"]("high")

    def test_eval_function_direct(self):
        model = QualityModel(name="t", params=("x",),
                             table=((0.0, 0.0), (10.0, 100.0)))
        assert eval_function(model, [4.0]) == 40.0


class TestLoadValidation:
    def test_valid_document_loads(self):
        catalog = load_catalog(base_document())
        assert set(catalog.patterns) == {"raise_effort", "approve"}
        assert set(catalog.functions) == {"double", "predicted_test_effort"}
        assert catalog.patterns["raise_effort"].title == "Raise effort"
        # title defaults to the id
        assert catalog.patterns["approve"].title == "approve"
        assert catalog.patterns["raise_effort"].significance.usage_count == 3
        assert catalog.patterns["raise_effort"].consumes == frozenset({"draft"})

    def test_numeric_characterization_normalized_to_float(self):
        doc = base_document()
        doc["patterns"][0]["characterization"] = {"effort": 5}
        catalog = load_catalog(doc)
        value = catalog.patterns["raise_effort"].characterization["effort"]
        assert value == 5.0 and isinstance(value, float)

    def test_unknown_top_level_key(self):
        doc = base_document()
        doc["extras"] = []
        assert_rejects(doc, "unknown key 'extras'")

    def test_duplicate_attribute(self):
        doc = base_document()
        doc["schema"].append({"name": "effort", "kind": "number"})
        assert_rejects(doc, "duplicate")

    def test_bad_attribute_kind(self):
        doc = base_document()
        doc["schema"][0]["kind"] = "numeric"
        assert_rejects(doc, "kind")

    def test_unit_only_on_numbers(self):
        doc = base_document()
        doc["schema"][1]["unit"] = "phase"
        assert_rejects(doc, "unit")

    def test_enum_requires_domain(self):
        doc = base_document()
        del doc["schema"][1]["domain"]
        assert_rejects(doc, "domain")

    def test_function_needs_exactly_one_of_body_or_table(self):
        doc = base_document()
        doc["functions"][0]["table"] = [[0, 0], [1, 1]]
        assert_rejects(doc, "exactly one of body or table")
        doc = base_document()
        del doc["functions"][0]["body"]
        assert_rejects(doc, "exactly one of body or table")

    def test_table_needs_two_rows(self):
        doc = base_document()
        doc["functions"][1]["table"] = [[0, 40]]
        assert_rejects(doc, "at least two")

    def test_table_rejects_bool_cells(self):
        doc = base_document()
        doc["functions"][1]["table"] = [[0, True], [1, 2]]
        assert_rejects(doc, "number pairs")

    def test_table_x_strictly_increasing(self):
        doc = base_document()
        doc["functions"][1]["table"] = [[0, 40], [0, 60], [10, 80]]
        assert_rejects(doc, "strictly increasing")

    def test_table_takes_one_parameter(self):
        doc = base_document()
        doc["functions"][1]["params"] = ["a", "b"]
        assert_rejects(doc, "exactly one parameter")

    def test_duplicate_parameters(self):
        doc = base_document()
        doc["functions"][0]["params"] = ["x", "x"]
        assert_rejects(doc, "duplicate parameter")

    def test_invalid_function_name(self):
        doc = base_document()
        doc["functions"][0]["name"] = "2bad"
        assert_rejects(doc, "invalid function name")

    def test_duplicate_function(self):
        doc = base_document()
        doc["functions"].append({"name": "double", "params": ["y"], "body": "y"})
        assert_rejects(doc, "duplicate function 'double'")

    def test_body_must_use_declared_params(self):
        doc = base_document()
        doc["functions"][0]["body"] = "2 * y"
        messages = load_messages(doc)
        assert any("y" in m and "function 'double'" in m for m in messages)

    def test_body_parse_error_is_located(self):
        doc = base_document()
        doc["functions"][0]["body"] = "2 *"
        assert_rejects(doc, "function 'double'")

    def test_function_cycle_reported(self):
        doc = base_document()
        doc["functions"] = [
            {"name": "f", "params": ["x"], "body": "g(x)"},
            {"name": "g", "params": ["x"], "body": "f(x)"},
        ]
        assert_rejects(doc, "f -> g -> f")

    def test_self_cycle_reported(self):
        doc = base_document()
        doc["functions"] = [{"name": "f", "params": ["x"], "body": "f(x)"}]
        assert_rejects(doc, "f -> f")

    def test_invalid_pattern_id(self):
        doc = base_document()
        doc["patterns"][0]["id"] = "Bad Id"
        assert_rejects(doc, "invalid pattern id")

    def test_duplicate_pattern_id(self):
        doc = base_document()
        doc["patterns"].append(copy.deepcopy(doc["patterns"][0]))
        assert_rejects(doc, "duplicate pattern 'raise_effort'")

    def test_characterization_unknown_attribute(self):
        doc = base_document()
        doc["patterns"][0]["characterization"] = {"phase": "started"}
        assert_rejects(doc, "unknown attribute 'phase'")

    def test_characterization_out_of_domain(self):
        doc = base_document()
        doc["patterns"][0]["characterization"] = {"milestone": "shipped"}
        assert_rejects(doc, "characterization of 'milestone'")

    def test_usage_count_rejects_bool_and_negative(self):
        doc = base_document()
        doc["patterns"][0]["significance"] = {"usage_count": True}
        assert_rejects(doc, "usage_count")
        doc = base_document()
        doc["patterns"][0]["significance"] = {"usage_count": -1}
        assert_rejects(doc, "usage_count")

    def test_goal_kind_error(self):
        doc = base_document()
        doc["patterns"][0]["goal"] = "effort = 'done'"
        assert_rejects(doc, "cannot compare number with enum")

    def test_goal_parse_error_is_located(self):
        doc = base_document()
        doc["patterns"][0]["goal"] = "effort <"
        assert_rejects(doc, "pattern 'raise_effort'")

    def test_transformation_requires_assignment_form(self):
        doc = base_document()
        doc["patterns"][0]["transformations"] = ["effort + 10"]
        assert_rejects(doc, "attr := expr")

    def test_transformation_unknown_target(self):
        doc = base_document()
        doc["patterns"][0]["transformations"] = ["budget := 10"]
        assert_rejects(doc, "unknown transformation target 'budget'")

    def test_transformation_kind_mismatch(self):
        doc = base_document()
        doc["patterns"][0]["transformations"] = ["milestone := 3"]
        assert_rejects(doc, "'milestone' is enum but the right-hand side is number")

    def test_transformation_rhs_unknown_attribute(self):
        doc = base_document()
        doc["patterns"][0]["transformations"] = ["effort := budget + 1"]
        assert_rejects(doc, "budget")

    def test_invalid_artifact_name(self):
        doc = base_document()
        doc["patterns"][0]["consumes"] = ["not an ident"]
        assert_rejects(doc, "invalid artifact name")

    def test_refines_must_not_be_self(self):
        doc = base_document()
        doc["patterns"][0]["refines"] = "raise_effort"
        assert_rejects(doc, "cannot refine itself")

    def test_refines_must_exist(self):
        doc = base_document()
        doc["patterns"][0]["refines"] = "ghost"
        assert_rejects(doc, "refines unknown pattern 'ghost'")

    def test_refines_valid_target_accepted(self):
        doc = base_document()
        doc["patterns"][0]["refines"] = "approve"
        catalog = load_catalog(doc)
        assert catalog.patterns["raise_effort"].refines == "approve"

    def test_all_violations_reported_together(self):
        doc = base_document()
        doc["patterns"][0]["goal"] = "effort = 'done'"
        doc["patterns"][0]["transformations"] = ["budget := 10"]
        doc["patterns"][1]["refines"] = "ghost"
        with pytest.raises(MultipleErrors) as excinfo:
            load_catalog(doc)
        assert len(excinfo.value.errors) == 3

    def test_load_catalog_file(self, tmp_path):
        path = tmp_path / "catalog.json"
        path.write_text(json.dumps(base_document()), encoding="utf-8")
        catalog = load_catalog_file(path)
        assert set(catalog.patterns) == {"raise_effort", "approve"}

    def test_unknown_pattern_lookup(self):
        catalog = load_catalog(base_document())
        with pytest.raises(UnknownPattern):
            catalog.pattern("ghost")


class TestApplyPattern:
    def state(self, catalog, **values):
        defaults = {"effort": 0, "milestone": "started", "approved": False}
        defaults.update(values)
        return validate_state(catalog.schema, defaults)

    def test_assignments_apply_in_order(self, catalog):
        # (0 + 10) * 2, not 0 * 2 + 10: later right-hand sides see earlier writes
        after, trace = apply_pattern(catalog.patterns["raise_effort"],
                                     self.state(catalog), catalog.function_env)
        assert after.get("effort") == 20.0
        assert trace.pattern_id == "raise_effort"
        assert trace.state_before.get("effort") == 0.0
        assert trace.state_after.get("effort") == 20.0

    def test_pattern_goal_checked_on_final_state(self, catalog):
        _, trace = apply_pattern(catalog.patterns["raise_effort"],
                                 self.state(catalog), catalog.function_env)
        assert trace.pattern_goal_satisfied  # effort >= 20 holds at exactly 20

        _, trace = apply_pattern(catalog.patterns["approve"],
                                 self.state(catalog), catalog.function_env)
        assert trace.pattern_goal_satisfied

    def test_goal_can_fail_without_error(self, catalog):
        doc = base_document()
        doc["patterns"][0]["goal"] = "effort >= 100"
        strict = load_catalog(doc)
        after, trace = apply_pattern(strict.patterns["raise_effort"],
                                     self.state(strict), strict.function_env)
        assert after.get("effort") == 20.0
        assert not trace.pattern_goal_satisfied

    def test_transformations_may_call_functions(self, catalog):
        doc = base_document()
        doc["patterns"][0]["transformations"] = [
            "effort := double(effort) + predicted_test_effort(25)"]
        cat = load_catalog(doc)
        after, _ = apply_pattern(cat.patterns["raise_effort"],
                                 self.state(cat, effort=7), cat.function_env)
        assert after.get("effort") == 164.0  # 14 + 150

    def test_reading_unbound_attribute_raises(self, catalog):
        partial = validate_state(
            catalog.schema, {"milestone": "started", "approved": False})
        with pytest.raises(UnknownAttribute):
            apply_pattern(catalog.patterns["raise_effort"], partial,
                          catalog.function_env)
