"""Composition networks: which patterns may combine, in what order, and
which artifacts must flow between them.

Three constraint families: adjacency rules over sequentially adjacent atoms,
pairwise compatibility predicates over pattern characterizations, and
artifact flow from initial artifacts through produced ones.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path as FsPath
from typing import Any, Iterator, Mapping, Union

from .catalog import Catalog, ProcessPattern, check_goal_static
from .composition import Atom, Combination, Cond, Iter, Par, Seq, atoms_of
from .errors import (
    PatternForgeError,
    TypeMismatch,
    UnknownPattern,
    raise_collected,
)
from .expr import (
    GoalAst,
    eval_goal,
    parse_goal,
    referenced_attributes,
    render_goal,
    resolve_goal,
)
from .model import (
    DEFAULT_TOLERANCE,
    IDENT_RE,
    AttributeDef,
    Schema,
    State,
    Tolerance,
)

WILDCARD = "*"


@dataclass(frozen=True)
class AdjacencyRule:
    source: str  # pattern id or "*"
    target: str

    def matches(self, a: str, b: str) -> bool:
        return (self.source in (WILDCARD, a)) and (self.target in (WILDCARD, b))


@dataclass(frozen=True)
class CompatibilityPredicate:
    formula: GoalAst  # over left.<attr> / right.<attr>
    source: str = ""  # original text


@dataclass(frozen=True)
class Network:
    adjacency: tuple[AdjacencyRule, ...] = ()
    compatibility: tuple[CompatibilityPredicate, ...] = ()
    initial_artifacts: frozenset[str] = frozenset()

    def with_artifacts(self, extra: frozenset[str]) -> "Network":
        return replace(self, initial_artifacts=self.initial_artifacts | extra)


@dataclass(frozen=True)
class Violation:
    kind: str  # adjacency | compatibility | artifact_flow
    location: tuple[str, ...]
    message: str


# ---------------------------------------------------------------- loading


def load_network(document: Mapping[str, Any], catalog: Catalog) -> Network:
    """Validate a parsed network document against a catalog."""
    errors: list[PatternForgeError] = []
    if not isinstance(document, Mapping):
        raise TypeMismatch("network document must be a JSON object")
    for key in document:
        if key not in ("adjacency", "compatibility", "initial_artifacts"):
            errors.append(TypeMismatch(f"unknown key {key!r}", "network"))

    rules: list[AdjacencyRule] = []
    raw_rules = document.get("adjacency", [])
    if not isinstance(raw_rules, list):
        errors.append(TypeMismatch("adjacency must be a list of {from, to} rules",
                                   "network"))
        raw_rules = []
    for obj in raw_rules:
        if not isinstance(obj, Mapping) or set(obj) != {"from", "to"}:
            errors.append(TypeMismatch(f"adjacency rule must be {{from, to}}, got {obj!r}",
                                       "network"))
            continue
        source, target = obj["from"], obj["to"]
        ok = True
        for end in (source, target):
            if not isinstance(end, str) or (end != WILDCARD and not IDENT_RE.match(end)):
                errors.append(TypeMismatch(f"invalid adjacency endpoint {end!r}", "network"))
                ok = False
            elif end != WILDCARD and end not in catalog.patterns:
                errors.append(UnknownPattern(f"adjacency rule names unknown pattern '{end}'"))
                ok = False
        if ok:
            rules.append(AdjacencyRule(source=source, target=target))

    predicates: list[CompatibilityPredicate] = []
    raw_preds = document.get("compatibility", [])
    if not isinstance(raw_preds, list):
        errors.append(TypeMismatch("compatibility must be a list of formula strings",
                                   "network"))
        raw_preds = []
    for text in raw_preds:
        if not isinstance(text, str):
            errors.append(TypeMismatch(f"compatibility predicate must be a string, "
                                       f"got {text!r}", "network"))
            continue
        try:
            formula = resolve_goal(parse_goal(text, pairwise=True), catalog.schema,
                                   pairwise=True)
        except PatternForgeError as e:
            errors.append(e)
            continue
        check_goal_static(formula, catalog.schema, catalog.functions, errors,
                          f"compatibility '{text}'")
        predicates.append(CompatibilityPredicate(formula=formula, source=text))

    artifacts: set[str] = set()
    raw_artifacts = document.get("initial_artifacts", [])
    if not isinstance(raw_artifacts, list):
        errors.append(TypeMismatch("initial_artifacts must be a list of names", "network"))
        raw_artifacts = []
    for name in raw_artifacts:
        if not isinstance(name, str) or not IDENT_RE.match(name):
            errors.append(TypeMismatch(f"invalid artifact name {name!r}", "network"))
            continue
        artifacts.add(name)

    raise_collected(errors)
    return Network(adjacency=tuple(rules), compatibility=tuple(predicates),
                   initial_artifacts=frozenset(artifacts))


def load_network_file(path: str | FsPath, catalog: Catalog) -> Network:
    with open(path, encoding="utf-8") as fh:
        return load_network(json.load(fh), catalog)


# ---------------------------------------------------------------- compatibility


def _pair_state(schema: Schema, left: ProcessPattern, right: ProcessPattern) -> State:
    defs: dict[str, AttributeDef] = {}
    values: dict[str, Any] = {}
    for prefix, pattern in (("left", left), ("right", right)):
        for attr, value in pattern.characterization.items():
            name = f"{prefix}.{attr}"
            defs[name] = replace(schema[attr], name=name)
            values[name] = value
    return State(schema=Schema(attributes=defs), values=values)


def _predicate_applicable(pred: CompatibilityPredicate, left: ProcessPattern,
                          right: ProcessPattern) -> bool:
    # a predicate only binds pairs whose characterizations carry every
    # attribute it mentions; missing attributes make it vacuously true
    for name in referenced_attributes(pred.formula):
        side, _, attr = name.partition(".")
        pattern = left if side == "left" else right
        if attr not in pattern.characterization:
            return False
    return True


def compatible_pair(net: Network, catalog: Catalog, a: str, b: str,
                    tolerance: Tolerance = DEFAULT_TOLERANCE) -> bool:
    """True when every predicate holds with (a, b) bound both ways."""
    pa, pb = catalog.pattern(a), catalog.pattern(b)
    for pred in net.compatibility:
        for left, right in ((pa, pb), (pb, pa)):
            if not _predicate_applicable(pred, left, right):
                continue
            ok, _ = eval_goal(pred.formula, _pair_state(catalog.schema, left, right),
                              catalog.function_env, tolerance)
            if not ok:
                return False
    return True


# ---------------------------------------------------------------- adjacency


def _edge_atoms(node: Combination, first: bool) -> list[str]:
    """Atoms adjacent to a Seq boundary; Par/Cond/Iter cut the adjacency."""
    match node:
        case Atom(pattern_id):
            return [pattern_id]
        case Seq(children):
            return _edge_atoms(children[0] if first else children[-1], first)
        case _:
            return []


def adjacent_atom_pairs(comb: Combination) -> Iterator[tuple[str, str]]:
    """Ordered pairs of atoms that follow each other directly in a seq."""
    match comb:
        case Atom():
            return
        case Seq(children):
            for left, right in zip(children, children[1:]):
                for a in _edge_atoms(left, first=False):
                    for b in _edge_atoms(right, first=True):
                        yield (a, b)
            for c in children:
                yield from adjacent_atom_pairs(c)
        case Par(children):
            for c in children:
                yield from adjacent_atom_pairs(c)
        case Cond(_, then, orelse):
            yield from adjacent_atom_pairs(then)
            if orelse is not None:
                yield from adjacent_atom_pairs(orelse)
        case Iter(_, body):
            yield from adjacent_atom_pairs(body)


def adjacency_allows(net: Network, a: str, b: str) -> bool:
    if not net.adjacency:
        return True
    return any(rule.matches(a, b) for rule in net.adjacency)


# ---------------------------------------------------------------- flow


def _flow(node: Combination, catalog: Catalog, available: frozenset[str],
          violations: list[Violation]) -> frozenset[str]:
    """Check consumption against availability; returns guaranteed productions."""
    match node:
        case Atom(pattern_id):
            pattern = catalog.pattern(pattern_id)
            missing = pattern.consumes - available
            if missing:
                violations.append(Violation(
                    kind="artifact_flow", location=(pattern_id,),
                    message=f"'{pattern_id}' consumes "
                            f"{', '.join(sorted(missing))} before any production"))
            return pattern.produces
        case Seq(children):
            produced: frozenset[str] = frozenset()
            current = available
            for child in children:
                p = _flow(child, catalog, current, violations)
                current |= p
                produced |= p
            return produced
        case Par(children):
            produced = frozenset()
            for child in children:
                # a branch cannot consume what only a sibling produces
                produced |= _flow(child, catalog, available, violations)
            return produced
        case Cond(_, then, orelse):
            _flow(then, catalog, available, violations)
            if orelse is not None:
                _flow(orelse, catalog, available, violations)
            return frozenset()  # conditional production is not guaranteed
        case Iter(_, body):
            _flow(body, catalog, available, violations)
            return frozenset()
    return frozenset()


# ---------------------------------------------------------------- checking


def check_combination(net: Network, catalog: Catalog, comb: Combination,
                      initial_artifacts: frozenset[str] | None = None,
                      tolerance: Tolerance = DEFAULT_TOLERANCE) -> list[Violation]:
    """All constraint violations in a combination; empty list means valid."""
    violations: list[Violation] = []

    if net.adjacency:
        for a, b in adjacent_atom_pairs(comb):
            if not adjacency_allows(net, a, b):
                violations.append(Violation(
                    kind="adjacency", location=(a, b),
                    message=f"no adjacency rule allows '{a}' before '{b}'"))

    atom_ids = [atom.pattern_id for atom in atoms_of(comb)]
    seen_pairs: set[tuple[str, str]] = set()
    for i in range(len(atom_ids)):
        for j in range(i + 1, len(atom_ids)):
            pair = tuple(sorted((atom_ids[i], atom_ids[j])))
            if pair in seen_pairs:
                continue
            seen_pairs.add(pair)
            if not compatible_pair(net, catalog, pair[0], pair[1], tolerance):
                violations.append(Violation(
                    kind="compatibility", location=pair,
                    message=f"'{pair[0]}' and '{pair[1]}' violate a "
                            f"compatibility predicate"))

    available = net.initial_artifacts if initial_artifacts is None else initial_artifacts
    _flow(comb, catalog, available, violations)
    return violations


# ---------------------------------------------------------------- successors


def allowed_successors(net: Network, catalog: Catalog, prefix_atoms: list[str],
                       available_artifacts: frozenset[str],
                       tolerance: Tolerance = DEFAULT_TOLERANCE) -> list[str]:
    """Pattern ids that may directly follow the given atom prefix."""
    for pid in prefix_atoms:
        catalog.pattern(pid)
    out: list[str] = []
    last = prefix_atoms[-1] if prefix_atoms else None
    for pid in sorted(catalog.patterns):
        if last is not None and not adjacency_allows(net, last, pid):
            continue
        if not catalog.pattern(pid).consumes <= available_artifacts:
            continue
        if any(not compatible_pair(net, catalog, q, pid, tolerance)
               for q in prefix_atoms):
            continue
        out.append(pid)
    return out
