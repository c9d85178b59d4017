"""Pattern catalogs: schema + quality-model functions + process patterns.

A catalog is loaded from a JSON document and validated in one pass that
reports every violation. After loading, all embedded expressions and goals
are resolved ASTs and all cross-references are known to exist.
"""

from __future__ import annotations

import json
from bisect import bisect_right
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

from .errors import (
    ArityMismatch,
    BadRefinesTarget,
    DuplicateId,
    MultipleErrors,
    ParseError,
    PatternForgeError,
    TableDomainError,
    TypeMismatch,
    UnknownFunction,
    UnknownPattern,
    raise_collected,
)
from .expr import (
    AttrRef,
    BoolLit,
    Binary,
    Call,
    Compare,
    Const,
    EnumLit,
    ExprAst,
    FunctionEnv,
    GoalAst,
    Member,
    Neg,
    Not,
    And,
    Or,
    Implies,
    Iff,
    NumberLit,
    StringLit,
    eval_expression,
    eval_goal,
    parse_expression,
    parse_goal,
    referenced_calls,
    resolve_expression,
    resolve_goal,
)
from .model import (
    DEFAULT_TOLERANCE,
    IDENT_RE,
    AttributeDef,
    Schema,
    State,
    Tolerance,
    Value,
    kind_of,
)

# ---------------------------------------------------------------- types


@dataclass(frozen=True)
class QualityModel:
    """A named cause-effect model: an expression over parameters, or an
    interpolated table of measured points."""

    name: str
    params: tuple[str, ...]
    body: ExprAst | None = None
    table: tuple[tuple[float, float], ...] = ()


@dataclass(frozen=True)
class Transformation:
    target: str
    rhs: ExprAst
    source: str = field(default="", compare=False)  # original `attr := expr` text


@dataclass(frozen=True)
class Significance:
    usage_count: int = 0
    contexts: tuple[str, ...] = ()


@dataclass(frozen=True)
class ProcessPattern:
    id: str
    title: str
    characterization: Mapping[str, Value]
    significance: Significance
    pattern_goal: GoalAst
    transformations: tuple[Transformation, ...]
    consumes: frozenset[str]
    produces: frozenset[str]
    refines: str | None = None


@dataclass(frozen=True)
class AtomApplied:
    """Trace record for one pattern application."""

    pattern_id: str
    state_before: State
    state_after: State
    pattern_goal_satisfied: bool


# apply_pattern's per-application record; same shape as the trace event
AtomTrace = AtomApplied


@dataclass(frozen=True)
class Catalog:
    schema: Schema
    functions: Mapping[str, QualityModel]
    patterns: Mapping[str, ProcessPattern]

    def pattern(self, pattern_id: str) -> ProcessPattern:
        try:
            return self.patterns[pattern_id]
        except KeyError:
            raise UnknownPattern(f"unknown pattern '{pattern_id}'") from None

    @property
    def function_env(self) -> FunctionEnv:
        env: dict[str, Any] = {}

        def bind(model: QualityModel):
            return lambda *args: eval_function(model, list(args), env)

        for name, model in self.functions.items():
            env[name] = bind(model)
        return env


# ---------------------------------------------------------------- functions


def eval_function(model: QualityModel, args: list[Value],
                  functions: FunctionEnv | None = None) -> float:
    """Apply a quality model to numeric arguments.

    Tables interpolate piecewise-linearly and refuse arguments outside the
    measured range; no extrapolation.
    """
    if len(args) != len(model.params):
        raise ArityMismatch(
            f"function '{model.name}' takes {len(model.params)} argument(s), got {len(args)}")
    values: list[float] = []
    for param, arg in zip(model.params, args):
        if kind_of(arg) != "number":
            raise TypeMismatch(f"argument '{param}' of '{model.name}' must be a number, "
                               f"got {arg!r}")
        values.append(float(arg))
    if model.table:
        x = values[0]
        xs = [p[0] for p in model.table]
        if x < xs[0] or x > xs[-1]:
            raise TableDomainError(
                f"argument {x} outside table range [{xs[0]}, {xs[-1]}] of '{model.name}'")
        i = bisect_right(xs, x) - 1
        x0, y0 = model.table[i]
        if x == x0:
            return y0
        x1, y1 = model.table[i + 1]
        return y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    params_schema = Schema(attributes={
        p: AttributeDef(name=p, kind="number") for p in model.params})
    bound = State(schema=params_schema, values=dict(zip(model.params, values)))
    result = eval_expression(model.body, bound, functions or {})
    if kind_of(result) != "number":
        raise TypeMismatch(f"function '{model.name}' produced non-number {result!r}")
    return float(result)


# ---------------------------------------------------------------- static checks


def infer_kind(node: ExprAst, schema: Schema, functions: Mapping[str, QualityModel],
               errors: list[PatternForgeError], location: str) -> str | None:
    """Static kind of an expression: number, enum, or flag. Appends one error
    per problem and returns None when the kind cannot be determined."""
    match node:
        case NumberLit():
            return "number"
        case StringLit() | EnumLit():
            return "enum"
        case BoolLit():
            return "flag"
        case AttrRef(name):
            base = name.split(".", 1)[-1]
            if base in schema:
                return schema[base].kind
            errors.append(TypeMismatch(f"unresolved attribute '{name}'", location))
            return None
        case Neg(operand):
            k = infer_kind(operand, schema, functions, errors, location)
            if k not in (None, "number"):
                errors.append(TypeMismatch(f"negation requires a number, got {k}", location))
            return "number"
        case Binary(op, left, right):
            for side in (left, right):
                k = infer_kind(side, schema, functions, errors, location)
                if k not in (None, "number"):
                    errors.append(TypeMismatch(
                        f"operator '{op}' requires numbers, got {k}", location))
            return "number"
        case Call(name, args):
            model = functions.get(name)
            if model is None:
                errors.append(UnknownFunction(f"unknown function '{name}'", location))
            elif len(args) != len(model.params):
                errors.append(ArityMismatch(
                    f"function '{name}' takes {len(model.params)} argument(s), "
                    f"got {len(args)}", location))
            for a in args:
                k = infer_kind(a, schema, functions, errors, location)
                if k not in (None, "number"):
                    errors.append(TypeMismatch(
                        f"argument of '{name}' must be a number, got {k}", location))
            return "number"
    errors.append(TypeMismatch(f"unsupported expression node {node!r}", location))
    return None


def check_goal_static(goal: GoalAst, schema: Schema,
                      functions: Mapping[str, QualityModel],
                      errors: list[PatternForgeError], location: str) -> None:
    """Kind-level validation of a goal: comparisons relate equal kinds,
    ordering needs numbers, membership elements match the subject's kind."""
    match goal:
        case Const():
            return
        case Compare(left, op, right):
            lk = infer_kind(left, schema, functions, errors, location)
            rk = infer_kind(right, schema, functions, errors, location)
            if lk and rk and lk != rk:
                errors.append(TypeMismatch(f"cannot compare {lk} with {rk}", location))
            elif op in ("<", "<=", ">", ">=") and lk and lk != "number":
                errors.append(TypeMismatch(
                    f"ordering comparison '{op}' requires numbers, got {lk}", location))
        case Member(left, elements):
            lk = infer_kind(left, schema, functions, errors, location)
            for e in elements:
                ek = infer_kind(e, schema, functions, errors, location)
                if lk and ek and lk != ek:
                    errors.append(TypeMismatch(
                        f"membership mixes {lk} with {ek}", location))
        case Not(operand):
            check_goal_static(operand, schema, functions, errors, location)
        case And(left, right) | Or(left, right) | Implies(left, right) | Iff(left, right):
            check_goal_static(left, schema, functions, errors, location)
            check_goal_static(right, schema, functions, errors, location)


# ---------------------------------------------------------------- loading


def _located(err: PatternForgeError, location: str,
             out: list[PatternForgeError]) -> None:
    if isinstance(err, MultipleErrors):
        for e in err.errors:
            _located(e, location, out)
    elif isinstance(err, ParseError):
        out.append(ParseError(f"{location}: {err.message}", err.position, err.text))
    elif err.location is None:
        out.append(type(err)(err.message, location))
    else:
        out.append(err)


def _check_keys(obj: Mapping[str, Any], allowed: set[str], location: str,
                errors: list[PatternForgeError]) -> None:
    for key in obj:
        if key not in allowed:
            errors.append(TypeMismatch(f"unknown key {key!r}", location))


def _parse_transformation(text: str, schema: Schema,
                          functions: Mapping[str, QualityModel],
                          location: str,
                          errors: list[PatternForgeError]) -> Transformation | None:
    if ":=" not in text:
        errors.append(ParseError(f"{location}: transformation must be 'attr := expr', "
                                 f"got {text!r}"))
        return None
    target, rhs_text = (part.strip() for part in text.split(":=", 1))
    if target not in schema:
        errors.append(TypeMismatch(f"unknown transformation target '{target}'", location))
        return None
    try:
        rhs = resolve_expression(parse_expression(rhs_text), schema)
    except PatternForgeError as e:
        _located(e, location, errors)
        return None
    kind = infer_kind(rhs, schema, functions, errors, location)
    target_kind = schema[target].kind
    if kind is not None and kind != target_kind:
        errors.append(TypeMismatch(
            f"'{target}' is {target_kind} but the right-hand side is {kind}", location))
    return Transformation(target=target, rhs=rhs, source=text)


def _load_function(obj: Mapping[str, Any], location: str,
                   errors: list[PatternForgeError]) -> QualityModel | None:
    _check_keys(obj, {"name", "params", "body", "table"}, location, errors)
    name = obj.get("name")
    if not isinstance(name, str) or not IDENT_RE.match(name):
        errors.append(TypeMismatch(f"invalid function name {name!r}", location))
        return None
    params = obj.get("params", [])
    if (not isinstance(params, list)
            or any(not isinstance(p, str) or not IDENT_RE.match(p) for p in params)):
        errors.append(TypeMismatch("params must be a list of identifiers", location))
        return None
    if len(set(params)) != len(params):
        errors.append(TypeMismatch("duplicate parameter names", location))
    has_body = "body" in obj
    has_table = "table" in obj
    if has_body == has_table:
        errors.append(TypeMismatch("exactly one of body or table is required", location))
        return None
    if has_table:
        table = obj["table"]
        ok = (isinstance(table, list) and len(table) >= 2
              and all(isinstance(row, list) and len(row) == 2
                      and all(isinstance(v, (int, float)) and not isinstance(v, bool)
                              for v in row)
                      for row in table))
        if not ok:
            errors.append(TypeMismatch(
                "table must be a list of at least two [x, y] number pairs", location))
            return None
        points = tuple((float(x), float(y)) for x, y in table)
        if any(points[i][0] >= points[i + 1][0] for i in range(len(points) - 1)):
            errors.append(TypeMismatch("table x values must be strictly increasing", location))
        if len(params) != 1:
            errors.append(TypeMismatch("a table function takes exactly one parameter",
                                       location))
        return QualityModel(name=name, params=tuple(params), table=points)
    body_text = obj["body"]
    if not isinstance(body_text, str):
        errors.append(TypeMismatch("body must be an expression string", location))
        return None
    try:
        body = parse_expression(body_text)
    except ParseError as e:
        _located(e, location, errors)
        return None
    return QualityModel(name=name, params=tuple(params), body=body)


def _check_function_body(model: QualityModel, functions: Mapping[str, QualityModel],
                         errors: list[PatternForgeError]) -> None:
    location = f"function '{model.name}'"
    params_schema = Schema(attributes={
        p: AttributeDef(name=p, kind="number") for p in model.params})
    try:
        resolved = resolve_expression(model.body, params_schema)
    except PatternForgeError as e:
        _located(e, location, errors)
        return
    infer_kind(resolved, params_schema, functions, errors, location)


def _check_function_cycles(functions: Mapping[str, QualityModel],
                           errors: list[PatternForgeError]) -> None:
    def calls_of(model: QualityModel) -> set[str]:
        if model.body is None:
            return set()
        return {name for name, _ in referenced_calls(model.body)}

    graph = {name: calls_of(m) & set(functions) for name, m in functions.items()}
    state: dict[str, int] = {}  # 0 visiting, 1 done

    def visit(name: str, stack: list[str]) -> None:
        if state.get(name) == 1:
            return
        if state.get(name) == 0:
            cycle = stack[stack.index(name):] + [name]
            errors.append(TypeMismatch(
                f"quality models call each other in a cycle: {' -> '.join(cycle)}"))
            return
        state[name] = 0
        for callee in sorted(graph[name]):
            visit(callee, stack + [name])
        state[name] = 1

    for name in functions:
        visit(name, [])


def _load_pattern(obj: Mapping[str, Any], schema: Schema,
                  functions: Mapping[str, QualityModel],
                  errors: list[PatternForgeError]) -> ProcessPattern | None:
    pid = obj.get("id")
    location = f"pattern '{pid}'"
    _check_keys(obj, {"id", "title", "characterization", "significance", "goal",
                      "transformations", "consumes", "produces", "refines"},
                location, errors)
    if not isinstance(pid, str) or not IDENT_RE.match(pid):
        errors.append(TypeMismatch(f"invalid pattern id {pid!r}", "patterns"))
        return None
    title = obj.get("title", pid)
    if not isinstance(title, str):
        errors.append(TypeMismatch("title must be a string", location))
        title = pid

    characterization: dict[str, Value] = {}
    raw_char = obj.get("characterization", {})
    if not isinstance(raw_char, Mapping):
        errors.append(TypeMismatch("characterization must be an object", location))
        raw_char = {}
    for attr, value in raw_char.items():
        if attr not in schema:
            errors.append(TypeMismatch(f"characterization names unknown attribute '{attr}'",
                                       location))
            continue
        value = float(value) if isinstance(value, (int, float)) and not isinstance(value, bool) \
            else value
        problem = schema[attr].conforms(value)
        if problem:
            errors.append(TypeMismatch(f"characterization of '{attr}': {problem}", location))
            continue
        characterization[attr] = value

    raw_sig = obj.get("significance", {})
    if not isinstance(raw_sig, Mapping):
        errors.append(TypeMismatch("significance must be an object", location))
        raw_sig = {}
    _check_keys(raw_sig, {"usage_count", "contexts"}, location, errors)
    usage = raw_sig.get("usage_count", 0)
    if not isinstance(usage, int) or isinstance(usage, bool) or usage < 0:
        errors.append(TypeMismatch("usage_count must be a non-negative integer", location))
        usage = 0
    contexts = raw_sig.get("contexts", [])
    if not isinstance(contexts, list) or any(not isinstance(c, str) for c in contexts):
        errors.append(TypeMismatch("contexts must be a list of strings", location))
        contexts = []
    significance = Significance(usage_count=usage, contexts=tuple(contexts))

    goal_text = obj.get("goal", "true")
    goal: GoalAst = Const(True)
    if not isinstance(goal_text, str):
        errors.append(TypeMismatch("goal must be a formula string", location))
    else:
        try:
            goal = resolve_goal(parse_goal(goal_text), schema)
            check_goal_static(goal, schema, functions, errors, location)
        except PatternForgeError as e:
            _located(e, location, errors)

    transformations: list[Transformation] = []
    raw_transforms = obj.get("transformations", [])
    if not isinstance(raw_transforms, list):
        errors.append(TypeMismatch("transformations must be a list of strings", location))
        raw_transforms = []
    for raw in raw_transforms:
        if not isinstance(raw, str):
            errors.append(TypeMismatch(f"transformation must be a string, got {raw!r}",
                                       location))
            continue
        t = _parse_transformation(raw, schema, functions, location, errors)
        if t is not None:
            transformations.append(t)

    artifacts: dict[str, frozenset[str]] = {}
    for key in ("consumes", "produces"):
        raw_names = obj.get(key, [])
        names: set[str] = set()
        if not isinstance(raw_names, list):
            errors.append(TypeMismatch(f"{key} must be a list of artifact names", location))
            raw_names = []
        for name in raw_names:
            if not isinstance(name, str) or not IDENT_RE.match(name):
                errors.append(TypeMismatch(f"invalid artifact name {name!r} in {key}",
                                           location))
                continue
            names.add(name)
        artifacts[key] = frozenset(names)

    refines = obj.get("refines")
    if refines is not None and not isinstance(refines, str):
        errors.append(TypeMismatch("refines must be a pattern id", location))
        refines = None

    return ProcessPattern(
        id=pid, title=title, characterization=characterization,
        significance=significance, pattern_goal=goal,
        transformations=tuple(transformations),
        consumes=artifacts["consumes"], produces=artifacts["produces"],
        refines=refines)


def load_catalog(document: Mapping[str, Any]) -> Catalog:
    """Validate a parsed catalog document; reports every violation at once."""
    errors: list[PatternForgeError] = []
    if not isinstance(document, Mapping):
        raise TypeMismatch("catalog document must be a JSON object")
    _check_keys(document, {"schema", "functions", "patterns"}, "catalog", errors)

    raw_schema = document.get("schema", [])
    defs: list[AttributeDef] = []
    if not isinstance(raw_schema, list):
        errors.append(TypeMismatch("schema must be a list of attribute objects", "catalog"))
        raw_schema = []
    for obj in raw_schema:
        if not isinstance(obj, Mapping):
            errors.append(TypeMismatch(f"attribute entry must be an object, got {obj!r}",
                                       "schema"))
            continue
        loc = f"attribute '{obj.get('name')}'"
        _check_keys(obj, {"name", "kind", "unit", "domain", "merge"}, loc, errors)
        defs.append(AttributeDef(
            name=obj.get("name", ""), kind=obj.get("kind", ""),
            unit=obj.get("unit"), domain=tuple(obj.get("domain", ())),
            merge=obj.get("merge", "agree")))
    try:
        schema = Schema.of(defs)
    except PatternForgeError as e:
        _located(e, "schema", errors)
        schema = Schema(attributes={d.name: d for d in defs if IDENT_RE.match(d.name)})

    functions: dict[str, QualityModel] = {}
    raw_functions = document.get("functions", [])
    if not isinstance(raw_functions, list):
        errors.append(TypeMismatch("functions must be a list", "catalog"))
        raw_functions = []
    for obj in raw_functions:
        if not isinstance(obj, Mapping):
            errors.append(TypeMismatch(f"function entry must be an object, got {obj!r}",
                                       "functions"))
            continue
        model = _load_function(obj, f"function '{obj.get('name')}'", errors)
        if model is None:
            continue
        if model.name in functions:
            errors.append(DuplicateId(f"duplicate function '{model.name}'"))
            continue
        functions[model.name] = model
    for model in functions.values():
        if model.body is not None:
            _check_function_body(model, functions, errors)
    _check_function_cycles(functions, errors)

    patterns: dict[str, ProcessPattern] = {}
    raw_patterns = document.get("patterns", [])
    if not isinstance(raw_patterns, list):
        errors.append(TypeMismatch("patterns must be a list", "catalog"))
        raw_patterns = []
    for obj in raw_patterns:
        if not isinstance(obj, Mapping):
            errors.append(TypeMismatch(f"pattern entry must be an object, got {obj!r}",
                                       "patterns"))
            continue
        pattern = _load_pattern(obj, schema, functions, errors)
        if pattern is None:
            continue
        if pattern.id in patterns:
            errors.append(DuplicateId(f"duplicate pattern '{pattern.id}'"))
            continue
        patterns[pattern.id] = pattern
    for pattern in patterns.values():
        if pattern.refines is not None:
            if pattern.refines == pattern.id:
                errors.append(BadRefinesTarget(
                    f"pattern '{pattern.id}' cannot refine itself"))
            elif pattern.refines not in patterns:
                errors.append(BadRefinesTarget(
                    f"pattern '{pattern.id}' refines unknown pattern '{pattern.refines}'"))

    raise_collected(errors)
    return Catalog(schema=schema, functions=functions, patterns=patterns)


def load_catalog_file(path: str | Path) -> Catalog:
    with open(path, encoding="utf-8") as fh:
        return load_catalog(json.load(fh))


# ---------------------------------------------------------------- application


def apply_pattern(pattern: ProcessPattern, state: State,
                  functions: FunctionEnv,
                  tolerance: Tolerance = DEFAULT_TOLERANCE) -> tuple[State, AtomTrace]:
    """Run the pattern's transformations in order; each assignment is visible
    to the right-hand sides that follow it."""
    current = state
    for t in pattern.transformations:
        value = eval_expression(t.rhs, current, functions, tolerance)
        current = current.with_values({t.target: value})
    satisfied, _ = eval_goal(pattern.pattern_goal, current, functions, tolerance)
    trace = AtomApplied(pattern_id=pattern.id, state_before=state,
                        state_after=current, pattern_goal_satisfied=satisfied)
    return current, trace
