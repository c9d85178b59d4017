"""Typed attribute schema, project states, comparison and parallel-merge rules.

Attribute values are native Python scalars: bool for flags, int/float for
numbers, str for enum literals. bool must be tested before int everywhere
(bool subclasses int).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Union

from .errors import (
    MultipleErrors,
    ParallelWriteConflict,
    PatternForgeError,
    TypeMismatch,
    UnknownAttribute,
    raise_collected,
)

Value = Union[bool, int, float, str]

IDENT_RE = re.compile(r"^[a-zA-Z_][a-zA-Z0-9_]*$")

# `true`/`false` are boolean literals in the expression language, `in` is the
# membership keyword; none of them may name an attribute.
RESERVED_WORDS = frozenset({"true", "false", "in"})

NUMBER = "number"
ENUM = "enum"
FLAG = "flag"
KINDS = (NUMBER, ENUM, FLAG)

MERGE_AGREE = "agree"
MERGE_ADDITIVE = "additive"
MERGE_MAX = "max"
MERGE_MIN = "min"
MERGE_POLICIES = (MERGE_AGREE, MERGE_ADDITIVE, MERGE_MAX, MERGE_MIN)


@dataclass(frozen=True)
class Tolerance:
    """Relative+absolute tolerance used by numeric equality."""

    rel: float = 1e-9
    abs: float = 1e-12


DEFAULT_TOLERANCE = Tolerance()


def kind_of(value: Value) -> str:
    if isinstance(value, bool):
        return FLAG
    if isinstance(value, (int, float)):
        return NUMBER
    if isinstance(value, str):
        return ENUM
    raise TypeMismatch(f"unsupported value {value!r}")


@dataclass(frozen=True)
class AttributeDef:
    """One characterizing attribute: kind, optional unit/domain, merge policy."""

    name: str
    kind: str
    unit: str | None = None
    domain: tuple[str, ...] = ()
    merge: str = MERGE_AGREE

    def validate(self) -> list[PatternForgeError]:
        errors: list[PatternForgeError] = []
        loc = f"attribute '{self.name}'"
        if not IDENT_RE.match(self.name) or self.name in RESERVED_WORDS:
            errors.append(TypeMismatch(f"invalid attribute name {self.name!r}", loc))
        if self.kind not in KINDS:
            errors.append(TypeMismatch(f"unknown kind {self.kind!r}", loc))
            return errors
        if self.unit is not None and self.kind != NUMBER:
            errors.append(TypeMismatch("unit is only allowed on number attributes", loc))
        if self.kind == ENUM:
            if not self.domain:
                errors.append(TypeMismatch("enum domain must be non-empty", loc))
            if len(set(self.domain)) != len(self.domain):
                errors.append(TypeMismatch("enum domain has duplicate literals", loc))
            for lit in self.domain:
                if not IDENT_RE.match(lit) or lit in RESERVED_WORDS:
                    errors.append(TypeMismatch(f"invalid enum literal {lit!r}", loc))
        elif self.domain:
            errors.append(TypeMismatch("domain is only allowed on enum attributes", loc))
        if self.merge not in MERGE_POLICIES:
            errors.append(TypeMismatch(f"unknown merge policy {self.merge!r}", loc))
        elif self.merge != MERGE_AGREE and self.kind != NUMBER:
            errors.append(TypeMismatch(f"merge policy {self.merge!r} requires number kind", loc))
        return errors

    def conforms(self, value: Value) -> str | None:
        """Return a problem description, or None if `value` fits this attribute."""
        k = kind_of(value)
        if k != self.kind:
            return f"expected {self.kind}, got {k} {value!r}"
        if self.kind == NUMBER and not math.isfinite(float(value)):
            return f"number must be finite, got {value!r}"
        if self.kind == ENUM and value not in self.domain:
            return f"{value!r} not in domain {list(self.domain)}"
        return None


@dataclass(frozen=True)
class Schema:
    """Attribute definitions keyed by name."""

    attributes: Mapping[str, AttributeDef]

    @staticmethod
    def of(defs: Iterable[AttributeDef]) -> "Schema":
        seen: dict[str, AttributeDef] = {}
        errors: list[PatternForgeError] = []
        for d in defs:
            if d.name in seen:
                errors.append(TypeMismatch(f"duplicate attribute {d.name!r}", "schema"))
            seen[d.name] = d
            errors.extend(d.validate())
        raise_collected(errors)
        return Schema(attributes=dict(seen))

    def __contains__(self, name: str) -> bool:
        return name in self.attributes

    def __getitem__(self, name: str) -> AttributeDef:
        return self.attributes[name]

    def enum_literals(self) -> frozenset[str]:
        lits: set[str] = set()
        for d in self.attributes.values():
            lits.update(d.domain)
        return frozenset(lits)


@dataclass(frozen=True)
class State:
    """Immutable assignment of values to attributes; updates return new States."""

    schema: Schema
    values: Mapping[str, Value] = field(default_factory=dict)

    def get(self, name: str) -> Value:
        try:
            return self.values[name]
        except KeyError:
            raise UnknownAttribute(f"attribute '{name}' is not bound in the state") from None

    def __contains__(self, name: str) -> bool:
        return name in self.values

    def with_values(self, updates: Mapping[str, Value]) -> "State":
        merged = dict(self.values)
        errors: list[PatternForgeError] = []
        for name, value in updates.items():
            if name not in self.schema:
                errors.append(UnknownAttribute(f"unknown attribute '{name}'"))
                continue
            problem = self.schema[name].conforms(value)
            if problem:
                errors.append(TypeMismatch(problem, f"attribute '{name}'"))
                continue
            merged[name] = value
        raise_collected(errors)
        return State(schema=self.schema, values=merged)


def validate_state(schema: Schema, raw: Mapping[str, Value]) -> State:
    """Check every entry against the schema; reports all violations at once."""
    errors: list[PatternForgeError] = []
    values: dict[str, Value] = {}
    for name, value in raw.items():
        if name not in schema:
            errors.append(UnknownAttribute(f"unknown attribute '{name}'"))
            continue
        problem = schema[name].conforms(value)
        if problem:
            errors.append(TypeMismatch(problem, f"attribute '{name}'"))
            continue
        values[name] = float(value) if kind_of(value) == NUMBER else value
    raise_collected(errors)
    return State(schema=schema, values=values)


def numbers_equal(a: float, b: float, tolerance: Tolerance = DEFAULT_TOLERANCE) -> bool:
    return abs(a - b) <= tolerance.abs + tolerance.rel * max(abs(a), abs(b))


def compare(a: Value, b: Value, relop: str, tolerance: Tolerance = DEFAULT_TOLERANCE) -> bool:
    """Evaluate `a relop b`; ordering requires numbers, `=` is tolerant on numbers.

    On numbers exactly one of <, =, > holds: `<` means strictly below and not
    equal under the tolerance rule.
    """
    ka, kb = kind_of(a), kind_of(b)
    if ka != kb:
        raise TypeMismatch(f"cannot compare {ka} with {kb} ({a!r} {relop} {b!r})")
    if relop in ("=", "!="):
        if ka == NUMBER:
            eq = numbers_equal(float(a), float(b), tolerance)
        else:
            eq = a == b
        return eq if relop == "=" else not eq
    if relop not in ("<", "<=", ">", ">="):
        raise TypeMismatch(f"unknown relational operator {relop!r}")
    if ka != NUMBER:
        raise TypeMismatch(f"ordering comparison {relop!r} requires numbers, got {ka}")
    x, y = float(a), float(b)
    if numbers_equal(x, y, tolerance):
        return relop in ("<=", ">=")
    if relop in ("<", "<="):
        return x < y
    return x > y


def merge(
    def_: AttributeDef,
    base: Value,
    writes: list[Value],
    tolerance: Tolerance = DEFAULT_TOLERANCE,
) -> Value:
    """Join the values written by parallel branches under the attribute's policy."""
    if not writes:
        raise TypeMismatch("merge requires at least one write", f"attribute '{def_.name}'")
    errors: list[PatternForgeError] = []
    for w in writes:
        problem = def_.conforms(w)
        if problem:
            errors.append(TypeMismatch(problem, f"attribute '{def_.name}'"))
    raise_collected(errors)

    if def_.merge == MERGE_ADDITIVE:
        b = float(base)
        return b + sum(float(w) - b for w in writes)
    if def_.merge == MERGE_MAX:
        return max(float(w) for w in writes)
    if def_.merge == MERGE_MIN:
        return min(float(w) for w in writes)
    # agree: every branch must have produced the same value
    first = writes[0]
    for w in writes[1:]:
        if not compare(first, w, "=", tolerance):
            raise ParallelWriteConflict(
                f"parallel branches disagree on '{def_.name}': {first!r} vs {w!r}"
            )
    return first


__all__ = [
    "Value",
    "Tolerance",
    "DEFAULT_TOLERANCE",
    "AttributeDef",
    "Schema",
    "State",
    "validate_state",
    "compare",
    "numbers_equal",
    "merge",
    "kind_of",
    "IDENT_RE",
    "RESERVED_WORDS",
    "MultipleErrors",
]
