"""JSON shapes for states, expressions, goals, combinations, traces, and
planner output. The CLI's --json mode and the HTTP service share these.

Combinations and goals are accepted either as DSL strings or as structured
trees; encoders always emit both the tree and the canonical text where a
client might want to re-edit.
"""

from __future__ import annotations

from typing import Any, Mapping

from .catalog import AtomApplied, Catalog, QualityModel, Transformation
from .composition import (
    Atom,
    Combination,
    Cond,
    CondTaken,
    Iter,
    IterCount,
    Par,
    ParMerged,
    Seq,
    Trace,
    VerifyReport,
    parse_combination,
    render_combination,
)
from .errors import TypeMismatch
from .expr import (
    And,
    AttrRef,
    Binary,
    BoolLit,
    Call,
    Compare,
    Const,
    EnumLit,
    EvalBreakdown,
    ExprAst,
    GoalAst,
    Iff,
    Implies,
    Member,
    Neg,
    Not,
    NumberLit,
    Or,
    StringLit,
    parse_goal,
    render_expression,
    render_goal,
)
from .model import Schema, State, Value, kind_of, validate_state
from .network import Network, Violation
from .planner import Candidate

# ---------------------------------------------------------------- values


def encode_value(value: Value) -> Any:
    if isinstance(value, bool) or isinstance(value, str):
        return value
    number = float(value)
    if number == int(number) and abs(number) < 1e15:
        return int(number)
    return number


def encode_state(state: State) -> dict[str, Any]:
    return {name: encode_value(value) for name, value in state.values.items()}


def decode_state(raw: Any, schema: Schema) -> State:
    if not isinstance(raw, Mapping):
        raise TypeMismatch("state must be an object of attribute values")
    return validate_state(schema, dict(raw))


# ---------------------------------------------------------------- expressions


def encode_expression(node: ExprAst) -> dict[str, Any]:
    match node:
        case NumberLit(value):
            return {"type": "number", "value": encode_value(float(value))}
        case StringLit(text):
            return {"type": "string", "text": text}
        case EnumLit(name):
            return {"type": "enum", "name": name}
        case BoolLit(value):
            return {"type": "bool", "value": value}
        case AttrRef(name):
            return {"type": "attr", "name": name}
        case Neg(operand):
            return {"type": "neg", "operand": encode_expression(operand)}
        case Binary(op, left, right):
            return {"type": "binary", "op": op,
                    "left": encode_expression(left), "right": encode_expression(right)}
        case Call(name, args):
            return {"type": "call", "name": name,
                    "args": [encode_expression(a) for a in args]}
    raise TypeMismatch(f"unsupported expression node {node!r}")


def decode_expression(raw: Any) -> ExprAst:
    if not isinstance(raw, Mapping) or "type" not in raw:
        raise TypeMismatch(f"expression node must be an object with a type, got {raw!r}")
    kind = raw["type"]
    try:
        if kind == "number":
            return NumberLit(float(raw["value"]))
        if kind == "string":
            return StringLit(str(raw["text"]))
        if kind == "enum":
            return EnumLit(str(raw["name"]))
        if kind == "bool":
            return BoolLit(bool(raw["value"]))
        if kind == "attr":
            return AttrRef(str(raw["name"]))
        if kind == "neg":
            return Neg(decode_expression(raw["operand"]))
        if kind == "binary":
            if raw["op"] not in ("+", "-", "*", "/"):
                raise TypeMismatch(f"unknown operator {raw['op']!r}")
            return Binary(raw["op"], decode_expression(raw["left"]),
                          decode_expression(raw["right"]))
        if kind == "call":
            return Call(str(raw["name"]),
                        tuple(decode_expression(a) for a in raw["args"]))
    except KeyError as e:
        raise TypeMismatch(f"expression node {kind!r} is missing {e}") from None
    raise TypeMismatch(f"unknown expression node type {kind!r}")


# ---------------------------------------------------------------- goals


def encode_goal(node: GoalAst) -> dict[str, Any]:
    match node:
        case Const(value):
            return {"type": "const", "value": value}
        case Compare(left, op, right):
            return {"type": "compare", "op": op,
                    "left": encode_expression(left), "right": encode_expression(right)}
        case Member(left, elements):
            return {"type": "member", "left": encode_expression(left),
                    "elements": [encode_expression(e) for e in elements]}
        case Not(operand):
            return {"type": "not", "operand": encode_goal(operand)}
        case And(left, right):
            return {"type": "and", "left": encode_goal(left), "right": encode_goal(right)}
        case Or(left, right):
            return {"type": "or", "left": encode_goal(left), "right": encode_goal(right)}
        case Implies(left, right):
            return {"type": "implies", "left": encode_goal(left),
                    "right": encode_goal(right)}
        case Iff(left, right):
            return {"type": "iff", "left": encode_goal(left), "right": encode_goal(right)}
    raise TypeMismatch(f"unsupported goal node {node!r}")


def decode_goal(raw: Any) -> GoalAst:
    """A goal from a DSL string or a structured tree."""
    if isinstance(raw, str):
        return parse_goal(raw)
    if not isinstance(raw, Mapping) or "type" not in raw:
        raise TypeMismatch(f"goal must be a string or an object with a type, got {raw!r}")
    kind = raw["type"]
    try:
        if kind == "const":
            return Const(bool(raw["value"]))
        if kind == "compare":
            if raw["op"] not in ("<", "<=", ">", ">=", "="):
                raise TypeMismatch(f"unknown relational operator {raw['op']!r}")
            return Compare(decode_expression(raw["left"]), raw["op"],
                           decode_expression(raw["right"]))
        if kind == "member":
            elements = raw["elements"]
            if not isinstance(elements, list) or not elements:
                raise TypeMismatch("member elements must be a non-empty list")
            return Member(decode_expression(raw["left"]),
                          tuple(decode_expression(e) for e in elements))
        if kind == "not":
            return Not(decode_goal(raw["operand"]))
        if kind == "and":
            return And(decode_goal(raw["left"]), decode_goal(raw["right"]))
        if kind == "or":
            return Or(decode_goal(raw["left"]), decode_goal(raw["right"]))
        if kind == "implies":
            return Implies(decode_goal(raw["left"]), decode_goal(raw["right"]))
        if kind == "iff":
            return Iff(decode_goal(raw["left"]), decode_goal(raw["right"]))
    except KeyError as e:
        raise TypeMismatch(f"goal node {kind!r} is missing {e}") from None
    raise TypeMismatch(f"unknown goal node type {kind!r}")


# ---------------------------------------------------------------- combinations


def encode_combination(comb: Combination) -> dict[str, Any]:
    match comb:
        case Atom(pattern_id):
            return {"type": "atom", "pattern": pattern_id}
        case Seq(children):
            return {"type": "seq", "children": [encode_combination(c) for c in children]}
        case Par(children):
            return {"type": "par", "children": [encode_combination(c) for c in children]}
        case Cond(guard, then, None):
            return {"type": "if", "guard": encode_goal(guard),
                    "then": encode_combination(then)}
        case Cond(guard, then, orelse):
            return {"type": "if", "guard": encode_goal(guard),
                    "then": encode_combination(then), "else": encode_combination(orelse)}
        case Iter(guard, body):
            return {"type": "while", "guard": encode_goal(guard),
                    "body": encode_combination(body)}
    raise TypeMismatch(f"unsupported combination node {comb!r}")


def decode_combination(raw: Any) -> Combination:
    """A combination from a DSL string or a structured tree."""
    if isinstance(raw, str):
        return parse_combination(raw)
    if not isinstance(raw, Mapping) or "type" not in raw:
        raise TypeMismatch(f"combination must be a string or an object with a type, "
                           f"got {raw!r}")
    kind = raw["type"]
    try:
        if kind == "atom":
            return Atom(str(raw["pattern"]))
        if kind in ("seq", "par"):
            children = raw["children"]
            if not isinstance(children, list) or len(children) < 2:
                raise TypeMismatch(f"{kind} needs at least two children")
            decoded = tuple(decode_combination(c) for c in children)
            return Seq(decoded) if kind == "seq" else Par(decoded)
        if kind == "if":
            orelse = raw.get("else")
            return Cond(decode_goal(raw["guard"]), decode_combination(raw["then"]),
                        None if orelse is None else decode_combination(orelse))
        if kind == "while":
            return Iter(decode_goal(raw["guard"]), decode_combination(raw["body"]))
    except KeyError as e:
        raise TypeMismatch(f"combination node {kind!r} is missing {e}") from None
    raise TypeMismatch(f"unknown combination node type {kind!r}")


# ---------------------------------------------------------------- reports


def encode_trace(trace: Trace) -> list[dict[str, Any]]:
    out: list[dict[str, Any]] = []
    for event in trace.events:
        if isinstance(event, AtomApplied):
            out.append({"event": "atom", "pattern": event.pattern_id,
                        "state_before": encode_state(event.state_before),
                        "state_after": encode_state(event.state_after),
                        "pattern_goal_satisfied": event.pattern_goal_satisfied})
        elif isinstance(event, ParMerged):
            out.append({"event": "par_merged", "attribute": event.attribute,
                        "policy": event.policy,
                        "branch_values": [encode_value(v) for v in event.branch_values],
                        "merged": encode_value(event.merged)})
        elif isinstance(event, CondTaken):
            out.append({"event": "cond", "branch": event.branch,
                        "guard_value": event.guard_value})
        elif isinstance(event, IterCount):
            out.append({"event": "iter", "count": event.count})
        else:
            raise TypeMismatch(f"unsupported trace event {event!r}")
    return out


def encode_breakdown(bd: EvalBreakdown) -> dict[str, Any]:
    out: dict[str, Any] = {"node": bd.node_type, "text": bd.text, "value": bd.value}
    if bd.operands is not None:
        out["operands"] = [encode_value(v) for v in bd.operands]
    if bd.children:
        out["children"] = [encode_breakdown(c) for c in bd.children]
    return out


def encode_violation(v: Violation) -> dict[str, Any]:
    return {"kind": v.kind, "location": list(v.location), "message": v.message}


def encode_verify_report(report: VerifyReport) -> dict[str, Any]:
    return {"verified": report.verified,
            "final_state": encode_state(report.final_state),
            "breakdown": encode_breakdown(report.breakdown),
            "trace": encode_trace(report.trace)}


def encode_candidate(c: Candidate) -> dict[str, Any]:
    return {"combination_text": render_combination(c.combination),
            "combination": encode_combination(c.combination),
            "final_state": encode_state(c.final_state),
            "score": [encode_value(v) for v in c.score],
            "significance_total": c.significance_total}


# ---------------------------------------------------------------- snapshots


def _transformation_text(t: Transformation) -> str:
    return t.source or f"{t.target} := {render_expression(t.rhs)}"


def _encode_function(model: QualityModel) -> dict[str, Any]:
    out: dict[str, Any] = {"name": model.name, "params": list(model.params)}
    if model.table:
        out["table"] = [[encode_value(x), encode_value(y)] for x, y in model.table]
    else:
        out["body"] = render_expression(model.body)
    return out


def encode_catalog(catalog: Catalog) -> dict[str, Any]:
    schema = []
    for d in catalog.schema.attributes.values():
        entry: dict[str, Any] = {"name": d.name, "kind": d.kind, "merge": d.merge}
        if d.unit is not None:
            entry["unit"] = d.unit
        if d.domain:
            entry["domain"] = list(d.domain)
        schema.append(entry)
    patterns = []
    for p in catalog.patterns.values():
        entry = {"id": p.id, "title": p.title,
                 "characterization": {k: encode_value(v)
                                      for k, v in p.characterization.items()},
                 "significance": {"usage_count": p.significance.usage_count,
                                  "contexts": list(p.significance.contexts)},
                 "goal": render_goal(p.pattern_goal),
                 "transformations": [_transformation_text(t) for t in p.transformations],
                 "consumes": sorted(p.consumes),
                 "produces": sorted(p.produces)}
        if p.refines is not None:
            entry["refines"] = p.refines
        patterns.append(entry)
    return {"schema": schema,
            "functions": [_encode_function(m) for m in catalog.functions.values()],
            "patterns": patterns}


def encode_network(net: Network) -> dict[str, Any]:
    return {"adjacency": [{"from": r.source, "to": r.target} for r in net.adjacency],
            "compatibility": [p.source or render_goal(p.formula)
                              for p in net.compatibility],
            "initial_artifacts": sorted(net.initial_artifacts)}
