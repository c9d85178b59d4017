"""Process combinations: seq/par/if/while over atoms, their evaluation
semantics, goal verification, and structural edits.

Evaluation is denotational: a combination maps an input state to an output
state and leaves a trace of what happened. Parallel branches all read the
same input state and their writes are joined per-attribute by the schema's
merge policy.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Union

from .catalog import (
    AtomApplied,
    Catalog,
    apply_pattern,
    check_goal_static,
)
from .errors import (
    BadPath,
    IterationLimitExceeded,
    ParseError,
    PatternForgeError,
    RefinementMismatch,
    UnknownAttribute,
    raise_collected,
)
from .expr import (
    EvalBreakdown,
    FunctionEnv,
    GoalAst,
    _Parser,
    eval_goal,
    render_goal,
    resolve_goal,
)
from .model import DEFAULT_TOLERANCE, State, Tolerance, Value, merge

# ---------------------------------------------------------------- types


@dataclass(frozen=True)
class Atom:
    pattern_id: str


@dataclass(frozen=True)
class Seq:
    children: tuple["Combination", ...]


@dataclass(frozen=True)
class Par:
    children: tuple["Combination", ...]


@dataclass(frozen=True)
class Cond:
    guard: GoalAst
    then: "Combination"
    orelse: "Combination | None" = None


@dataclass(frozen=True)
class Iter:
    guard: GoalAst
    body: "Combination"


Combination = Union[Atom, Seq, Par, Cond, Iter]


@dataclass(frozen=True)
class ParMerged:
    attribute: str
    policy: str
    branch_values: tuple[Value, ...]
    merged: Value


@dataclass(frozen=True)
class CondTaken:
    branch: str  # then | else
    guard_value: bool


@dataclass(frozen=True)
class IterCount:
    count: int


TraceEvent = Union[AtomApplied, ParMerged, CondTaken, IterCount]


@dataclass(frozen=True)
class Trace:
    events: tuple[TraceEvent, ...]


@dataclass(frozen=True)
class VerifyReport:
    verified: bool
    final_state: State
    breakdown: EvalBreakdown
    trace: Trace


Path = list[int]


# ---------------------------------------------------------------- parsing

_OPERATORS = ("seq", "par", "if", "while")


class _CombParser(_Parser):
    def comb(self) -> Combination:
        tok = self.peek()
        if tok.kind != "ident":
            raise self.fail(f"expected a combination, found {tok.text or 'end of input'!r}")
        if tok.text in _OPERATORS and self.peek(1).text == "(":
            self.next()
            self.expect("(")
            node = self.operator_tail(tok.text, tok.pos)
            self.expect(")")
            return node
        self.next()
        return Atom(tok.text)

    def operator_tail(self, op: str, pos: int) -> Combination:
        if op == "seq" or op == "par":
            children = [self.comb()]
            while self.peek().text == ",":
                self.next()
                children.append(self.comb())
            if len(children) < 2:
                raise ParseError(f"{op} needs at least two children", pos, self.text)
            return Seq(tuple(children)) if op == "seq" else Par(tuple(children))
        guard = self.goal()
        self.expect(",")
        first = self.comb()
        if op == "while":
            return Iter(guard, first)
        if self.peek().text == ",":
            self.next()
            return Cond(guard, first, self.comb())
        return Cond(guard, first)


def parse_combination(text: str) -> Combination:
    """Parse the combination language: IDENT | seq(c, c, ...) | par(c, c, ...)
    | if(goal, c[, c]) | while(goal, c)."""
    p = _CombParser(text)
    node = p.comb()
    p.finish()
    return node


def render_combination(comb: Combination) -> str:
    match comb:
        case Atom(pattern_id):
            return pattern_id
        case Seq(children):
            return f"seq({', '.join(render_combination(c) for c in children)})"
        case Par(children):
            return f"par({', '.join(render_combination(c) for c in children)})"
        case Cond(guard, then, None):
            return f"if({render_goal(guard)}, {render_combination(then)})"
        case Cond(guard, then, orelse):
            return (f"if({render_goal(guard)}, {render_combination(then)}, "
                    f"{render_combination(orelse)})")
        case Iter(guard, body):
            return f"while({render_goal(guard)}, {render_combination(body)})"
    raise BadPath(f"unsupported combination node {comb!r}")


# ---------------------------------------------------------------- binding


def atoms_of(comb: Combination) -> Iterator[Atom]:
    """Every atom in the tree, left to right."""
    match comb:
        case Atom():
            yield comb
        case Seq(children) | Par(children):
            for c in children:
                yield from atoms_of(c)
        case Cond(_, then, orelse):
            yield from atoms_of(then)
            if orelse is not None:
                yield from atoms_of(orelse)
        case Iter(_, body):
            yield from atoms_of(body)


def bind_combination(comb: Combination, catalog: Catalog) -> Combination:
    """Check every atom against the catalog and resolve guard formulas
    against the schema. Returns the resolved tree."""
    errors: list[PatternForgeError] = []

    def bind(node: Combination) -> Combination:
        match node:
            case Atom(pattern_id):
                try:
                    catalog.pattern(pattern_id)
                except PatternForgeError as e:
                    errors.append(e)
                return node
            case Seq(children):
                return Seq(tuple(bind(c) for c in children))
            case Par(children):
                return Par(tuple(bind(c) for c in children))
            case Cond(guard, then, orelse):
                guard = _bind_guard(guard)
                return Cond(guard, bind(then), None if orelse is None else bind(orelse))
            case Iter(guard, body):
                return Iter(_bind_guard(guard), bind(body))

    def _bind_guard(guard: GoalAst) -> GoalAst:
        try:
            resolved = resolve_goal(guard, catalog.schema)
        except PatternForgeError as e:
            errors.append(e)
            return guard
        check_goal_static(resolved, catalog.schema, catalog.functions, errors, "guard")
        return resolved

    bound = bind(comb)
    raise_collected(errors)
    return bound


# ---------------------------------------------------------------- evaluation


def evaluate(comb: Combination, state: State, catalog: Catalog,
             iteration_cap: int = 100,
             tolerance: Tolerance = DEFAULT_TOLERANCE) -> tuple[State, Trace]:
    """Run a combination on a state.

    Seq composes left to right. Par evaluates every branch from the same
    input state and merges written attributes. Cond takes the branch the
    guard selects (a missing else is the identity). Iter repeats its body
    while the guard holds, up to iteration_cap full iterations.
    """
    env = catalog.function_env
    events: list[TraceEvent] = []
    final = _run(comb, state, catalog, env, iteration_cap, tolerance, events)[0]
    return final, Trace(events=tuple(events))


def _run(comb: Combination, state: State, catalog: Catalog, env: FunctionEnv,
         iteration_cap: int, tolerance: Tolerance,
         events: list[TraceEvent]) -> tuple[State, frozenset[str]]:
    match comb:
        case Atom(pattern_id):
            pattern = catalog.pattern(pattern_id)
            after, trace = apply_pattern(pattern, state, env, tolerance)
            events.append(trace)
            return after, frozenset(t.target for t in pattern.transformations)
        case Seq(children):
            written: set[str] = set()
            current = state
            for child in children:
                current, w = _run(child, current, catalog, env, iteration_cap,
                                  tolerance, events)
                written |= w
            return current, frozenset(written)
        case Par(children):
            outcomes = []
            for child in children:
                # branches all start from the Par's own input state
                outcomes.append(_run(child, state, catalog, env, iteration_cap,
                                     tolerance, events))
            written_any: set[str] = set()
            for _, w in outcomes:
                written_any |= w
            merged: dict[str, Value] = {}
            for attr in state.schema.attributes:
                if attr not in written_any:
                    continue
                def_ = state.schema[attr]
                writes = [s.get(attr) for s, w in outcomes if attr in w]
                if attr in state:
                    base = state.get(attr)
                elif def_.merge == "additive":
                    raise UnknownAttribute(
                        f"additive merge of '{attr}' needs a value in the input state")
                else:
                    base = writes[0]
                value = merge(def_, base, writes, tolerance)
                merged[attr] = value
                events.append(ParMerged(attribute=attr, policy=def_.merge,
                                        branch_values=tuple(writes), merged=value))
            return state.with_values(merged), frozenset(written_any)
        case Cond(guard, then, orelse):
            taken, _ = eval_goal(guard, state, env, tolerance)
            events.append(CondTaken(branch="then" if taken else "else", guard_value=taken))
            if taken:
                return _run(then, state, catalog, env, iteration_cap, tolerance, events)
            if orelse is None:
                return state, frozenset()
            return _run(orelse, state, catalog, env, iteration_cap, tolerance, events)
        case Iter(guard, body):
            current = state
            written: set[str] = set()
            count = 0
            while True:
                keep_going, _ = eval_goal(guard, current, env, tolerance)
                if not keep_going:
                    break
                if count >= iteration_cap:
                    raise IterationLimitExceeded(
                        f"guard still true after {iteration_cap} iterations: "
                        f"{render_goal(guard)}")
                current, w = _run(body, current, catalog, env, iteration_cap,
                                  tolerance, events)
                written |= w
                count += 1
            events.append(IterCount(count=count))
            return current, frozenset(written)
    raise BadPath(f"unsupported combination node {comb!r}")


def replay(trace: Trace, initial: State) -> State:
    """Reapply a trace's state changes; reproduces evaluate's final state."""
    current = initial
    for event in trace.events:
        if isinstance(event, AtomApplied):
            before, after = event.state_before, event.state_after
            delta = {k: v for k, v in after.values.items()
                     if k not in before.values or before.values[k] != v}
            current = current.with_values(delta)
        elif isinstance(event, ParMerged):
            current = current.with_values({event.attribute: event.merged})
    return current


def verify(comb: Combination, state: State, goal: GoalAst, catalog: Catalog,
           iteration_cap: int = 100,
           tolerance: Tolerance = DEFAULT_TOLERANCE) -> VerifyReport:
    """Evaluate the combination, then check the goal on the final state."""
    final, trace = evaluate(comb, state, catalog, iteration_cap, tolerance)
    verified, breakdown = eval_goal(goal, final, catalog.function_env, tolerance)
    return VerifyReport(verified=verified, final_state=final,
                        breakdown=breakdown, trace=trace)


# ---------------------------------------------------------------- edits


@dataclass(frozen=True)
class Replace:
    path: tuple[int, ...]
    new: Combination


@dataclass(frozen=True)
class Refine:
    path: tuple[int, ...]
    new: Combination


@dataclass(frozen=True)
class Augment:
    path: tuple[int, ...]
    index: int
    new: Combination


Edit = Union[Replace, Refine, Augment]


def node_at(comb: Combination, path: tuple[int, ...] | list[int]) -> Combination:
    node = comb
    for step, index in enumerate(path):
        children = _children(node)
        if index < 0 or index >= len(children):
            raise BadPath(f"no child {index} at {list(path[:step])} "
                          f"in {render_combination(comb)}")
        node = children[index]
    return node


def _children(node: Combination) -> tuple[Combination, ...]:
    match node:
        case Atom():
            return ()
        case Seq(children) | Par(children):
            return children
        case Cond(_, then, None):
            return (then,)
        case Cond(_, then, orelse):
            return (then, orelse)
        case Iter(_, body):
            return (body,)
    raise BadPath(f"unsupported combination node {node!r}")


def _rebuild(node: Combination, path: tuple[int, ...], new: Combination) -> Combination:
    if not path:
        return new
    index, rest = path[0], path[1:]
    children = _children(node)
    if index < 0 or index >= len(children):
        raise BadPath(f"no child {index} in {render_combination(node)}")
    replaced = _rebuild(children[index], rest, new)
    match node:
        case Seq(children):
            return Seq(children[:index] + (replaced,) + children[index + 1:])
        case Par(children):
            return Par(children[:index] + (replaced,) + children[index + 1:])
        case Cond(guard, then, orelse):
            if index == 0:
                return Cond(guard, replaced, orelse)
            return Cond(guard, then, replaced)
        case Iter(guard, _):
            return Iter(guard, replaced)
    raise BadPath(f"unsupported combination node {node!r}")


def rewrite(comb: Combination, edit: Edit, catalog: Catalog | None = None) -> Combination:
    """Apply one structural edit; the input tree is never modified.

    replace swaps any node. refine swaps an atom for a tree whose atoms all
    declare they refine that atom's pattern (needs the catalog for the
    declared links). augment inserts a child into a seq or par node.
    """
    path = tuple(edit.path)
    match edit:
        case Replace(_, new):
            node_at(comb, path)
            return _rebuild(comb, path, new)
        case Refine(_, new):
            target = node_at(comb, path)
            if not isinstance(target, Atom):
                raise BadPath(f"refine needs an atom at {list(path)}, "
                              f"found {render_combination(target)}")
            if catalog is None:
                raise RefinementMismatch("refinement check requires a catalog")
            for atom in atoms_of(new):
                declared = catalog.pattern(atom.pattern_id).refines
                if declared != target.pattern_id:
                    raise RefinementMismatch(
                        f"'{atom.pattern_id}' does not declare that it refines "
                        f"'{target.pattern_id}'")
            return _rebuild(comb, path, new)
        case Augment(_, index, new):
            target = node_at(comb, path)
            if not isinstance(target, (Seq, Par)):
                raise BadPath(f"augment needs a seq or par at {list(path)}, "
                              f"found {render_combination(target)}")
            if index < 0 or index > len(target.children):
                raise BadPath(f"insert position {index} out of range "
                              f"0..{len(target.children)}")
            children = target.children[:index] + (new,) + target.children[index:]
            grown = Seq(children) if isinstance(target, Seq) else Par(children)
            return _rebuild(comb, path, grown)
    raise BadPath(f"unsupported edit {edit!r}")
