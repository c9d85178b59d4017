"""Arithmetic expressions and boolean goal formulas: parse, evaluate, render.

Two small languages share one tokenizer. Expressions appear on the right-hand
side of attribute transformations and inside goal atoms; goals are boolean
combinations of comparisons and set membership.

Surface syntax (ASCII): & | ! => <=> for the connectives, `in { }` for
membership, quoted 'literals' for enum values, NUMBER% as parse-time sugar
for NUMBER/100.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from decimal import Decimal
from typing import Callable, Iterator, Mapping, NamedTuple, Union

from .errors import (
    DivisionByZero,
    ParseError,
    PatternForgeError,
    TypeMismatch,
    UnknownAttribute,
    UnknownFunction,
    raise_collected,
)
from .model import (
    DEFAULT_TOLERANCE,
    Schema,
    State,
    Tolerance,
    Value,
    compare,
    kind_of,
)

FunctionEnv = Mapping[str, Callable[..., Value]]

# ---------------------------------------------------------------- AST nodes


@dataclass(frozen=True)
class NumberLit:
    value: float
    # purely cosmetic provenance: `0.8%` parses to value 0.008 with percent
    # set; the flag never affects evaluation, equality, or rendering
    percent: bool = field(default=False, compare=False)


@dataclass(frozen=True)
class StringLit:
    text: str


@dataclass(frozen=True)
class EnumLit:
    """A bare identifier resolved to an enum literal (e.g. `high`)."""

    name: str


@dataclass(frozen=True)
class BoolLit:
    value: bool


@dataclass(frozen=True)
class AttrRef:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "ExprAst"


@dataclass(frozen=True)
class Binary:
    op: str  # one of + - * /
    left: "ExprAst"
    right: "ExprAst"


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple["ExprAst", ...]


ExprAst = Union[NumberLit, StringLit, EnumLit, BoolLit, AttrRef, Neg, Binary, Call]


@dataclass(frozen=True)
class Const:
    value: bool


@dataclass(frozen=True)
class Compare:
    left: ExprAst
    op: str  # one of < <= > >= =  (`!=` desugars to Not(Compare(=)))
    right: ExprAst


@dataclass(frozen=True)
class Member:
    left: ExprAst
    elements: tuple[ExprAst, ...]


@dataclass(frozen=True)
class Not:
    operand: "GoalAst"


@dataclass(frozen=True)
class And:
    left: "GoalAst"
    right: "GoalAst"


@dataclass(frozen=True)
class Or:
    left: "GoalAst"
    right: "GoalAst"


@dataclass(frozen=True)
class Implies:
    left: "GoalAst"
    right: "GoalAst"


@dataclass(frozen=True)
class Iff:
    left: "GoalAst"
    right: "GoalAst"


GoalAst = Union[Const, Compare, Member, Not, And, Or, Implies, Iff]


@dataclass(frozen=True)
class EvalBreakdown:
    """Per-node truth values from a goal evaluation, mirroring the goal tree."""

    node_type: str
    text: str
    value: bool
    operands: tuple[Value, ...] | None = None
    children: tuple["EvalBreakdown", ...] = ()


# ---------------------------------------------------------------- tokenizer

RELOPS = ("<=", ">=", "!=", "<", ">", "=")

_TOKEN_RE = re.compile(
    r"""
      (?P<ws>\s+)
    | (?P<number>\d+(?:\.\d+)?)
    | (?P<string>'[^']*')
    | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
    | (?P<op><=>|=>|<=|>=|!=|[-+*/%<>=!&|(){},.])
    """,
    re.VERBOSE,
)


class Token(NamedTuple):
    kind: str  # number | string | ident | op | end
    text: str
    pos: int


def _tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", pos, text)
        if m.lastgroup != "ws":
            tokens.append(Token(m.lastgroup, m.group(), pos))
        pos = m.end()
    tokens.append(Token("end", "", len(text)))
    return tokens


class _Parser:
    """Recursive descent over the token list; index-based so `(` ambiguity in
    goals (parenthesized subgoal vs parenthesized expression) can backtrack."""

    def __init__(self, text: str, pairwise: bool = False):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0
        self.pairwise = pairwise

    def peek(self, ahead: int = 0) -> Token:
        j = min(self.i + ahead, len(self.tokens) - 1)
        return self.tokens[j]

    def next(self) -> Token:
        tok = self.tokens[self.i]
        if tok.kind != "end":
            self.i += 1
        return tok

    def expect(self, text: str) -> Token:
        tok = self.next()
        if tok.text != text:
            raise ParseError(f"expected {text!r}, found {tok.text or 'end of input'!r}",
                             tok.pos, self.text)
        return tok

    def fail(self, message: str) -> ParseError:
        tok = self.peek()
        return ParseError(message, tok.pos, self.text)

    def at_end(self) -> bool:
        return self.peek().kind == "end"

    def finish(self) -> None:
        if not self.at_end():
            raise self.fail(f"unexpected trailing input {self.peek().text!r}")

    # -- expressions: expr > term > factor > primary

    def expr(self) -> ExprAst:
        node = self.term()
        while self.peek().text in ("+", "-"):
            op = self.next().text
            node = Binary(op, node, self.term())
        return node

    def term(self) -> ExprAst:
        node = self.factor()
        while self.peek().text in ("*", "/"):
            op = self.next().text
            node = Binary(op, node, self.factor())
        return node

    def factor(self) -> ExprAst:
        if self.peek().text == "-":
            self.next()
            return Neg(self.factor())
        return self.primary()

    def primary(self) -> ExprAst:
        tok = self.peek()
        if tok.kind == "number":
            self.next()
            return self.number_tail(tok)
        if tok.kind == "string":
            self.next()
            return StringLit(tok.text[1:-1])
        if tok.kind == "ident":
            self.next()
            if tok.text in ("true", "false"):
                return BoolLit(tok.text == "true")
            if tok.text == "in":
                raise ParseError("'in' is reserved", tok.pos, self.text)
            if self.pairwise and self.peek().text == ".":
                self.next()
                attr = self.next()
                if attr.kind != "ident":
                    raise ParseError("expected attribute name after '.'", attr.pos, self.text)
                return AttrRef(f"{tok.text}.{attr.text}")
            if self.peek().text == "(":
                self.next()
                args: list[ExprAst] = []
                if self.peek().text != ")":
                    args.append(self.expr())
                    while self.peek().text == ",":
                        self.next()
                        args.append(self.expr())
                self.expect(")")
                return Call(tok.text, tuple(args))
            return AttrRef(tok.text)
        if tok.text == "(":
            self.next()
            node = self.expr()
            self.expect(")")
            return node
        raise self.fail(f"expected an expression, found {tok.text or 'end of input'!r}")

    def number_tail(self, tok: Token) -> NumberLit:
        value = float(tok.text)
        if self.peek().text == "%":
            self.next()
            return NumberLit(value / 100, percent=True)
        return NumberLit(value)

    # -- goals: iff > imp > disj > conj > neg > atom

    def goal(self) -> GoalAst:
        node = self.imp()
        while self.peek().text == "<=>":
            self.next()
            node = Iff(node, self.imp())
        return node

    def imp(self) -> GoalAst:
        node = self.disj()
        if self.peek().text == "=>":
            self.next()
            return Implies(node, self.imp())
        return node

    def disj(self) -> GoalAst:
        node = self.conj()
        while self.peek().text == "|":
            self.next()
            node = Or(node, self.conj())
        return node

    def conj(self) -> GoalAst:
        node = self.neg()
        while self.peek().text == "&":
            self.next()
            node = And(node, self.neg())
        return node

    def neg(self) -> GoalAst:
        if self.peek().text == "!":
            self.next()
            return Not(self.neg())
        if self.peek().text == "(":
            # Either a parenthesized subgoal or an expression starting with
            # `(`; try the subgoal reading and fall back on failure, or when
            # a relational operator follows the closing paren.
            saved = self.i
            try:
                self.next()
                node = self.goal()
                self.expect(")")
            except ParseError:
                self.i = saved
                return self.atom()
            if self.peek().text in RELOPS or self.peek().text == "in":
                self.i = saved
                return self.atom()
            return node
        return self.atom()

    def atom(self) -> GoalAst:
        tok = self.peek()
        if (tok.kind == "ident" and tok.text in ("true", "false")
                and self.peek(1).text not in RELOPS and self.peek(1).text != "in"):
            self.next()
            return Const(tok.text == "true")
        left = self.expr()
        op = self.peek()
        if op.text in RELOPS:
            self.next()
            right = self.expr()
            if op.text == "!=":
                return Not(Compare(left, "=", right))
            return Compare(left, op.text, right)
        if op.text == "in":
            self.next()
            self.expect("{")
            elements = [self.member_literal()]
            while self.peek().text == ",":
                self.next()
                elements.append(self.member_literal())
            self.expect("}")
            if len(set(elements)) != len(elements):
                raise ParseError("duplicate literal in membership set", op.pos, self.text)
            return Member(left, tuple(elements))
        raise self.fail(
            f"expected a relational operator or 'in', found {op.text or 'end of input'!r}")

    def member_literal(self) -> ExprAst:
        tok = self.peek()
        if tok.text == "-":
            self.next()
            num = self.next()
            if num.kind != "number":
                raise ParseError("expected a number after '-'", num.pos, self.text)
            lit = self.number_tail(num)
            return NumberLit(-lit.value, percent=lit.percent)
        if tok.kind == "number":
            self.next()
            return self.number_tail(tok)
        if tok.kind == "string":
            self.next()
            return StringLit(tok.text[1:-1])
        if tok.kind == "ident":
            self.next()
            if tok.text in ("true", "false"):
                return BoolLit(tok.text == "true")
            return EnumLit(tok.text)
        raise self.fail(f"expected a literal, found {tok.text or 'end of input'!r}")


def parse_expression(text: str, *, pairwise: bool = False) -> ExprAst:
    """Parse an arithmetic/value expression.

    With pairwise=True, dotted references like `left.tool` are accepted; used
    by compatibility predicates that relate two adjacent patterns.
    """
    p = _Parser(text, pairwise=pairwise)
    node = p.expr()
    p.finish()
    return node


def parse_goal(text: str, *, pairwise: bool = False) -> GoalAst:
    """Parse a boolean goal formula."""
    p = _Parser(text, pairwise=pairwise)
    node = p.goal()
    p.finish()
    return node


# ---------------------------------------------------------------- resolution


def _resolve_expr(node: ExprAst, schema: Schema, enum_lits: frozenset[str],
                  pairwise: bool, errors: list[PatternForgeError]) -> ExprAst:
    match node:
        case AttrRef(name):
            if pairwise:
                side, _, attr = name.partition(".")
                if attr:
                    if side not in ("left", "right"):
                        errors.append(UnknownAttribute(
                            f"'{name}': prefix must be left. or right."))
                    elif attr not in schema:
                        errors.append(UnknownAttribute(f"unknown attribute '{attr}'"))
                    return node
                if name in schema:
                    errors.append(UnknownAttribute(
                        f"'{name}' needs a left. or right. prefix in a pairwise predicate"))
                    return node
            elif name in schema:
                return node
            if name in enum_lits:
                return EnumLit(name)
            errors.append(UnknownAttribute(f"unknown attribute '{name}'"))
            return node
        case EnumLit(name):
            if name not in enum_lits:
                errors.append(UnknownAttribute(f"'{name}' is not a literal of any enum attribute"))
            return node
        case Neg(operand):
            return Neg(_resolve_expr(operand, schema, enum_lits, pairwise, errors))
        case Binary(op, left, right):
            return Binary(op, _resolve_expr(left, schema, enum_lits, pairwise, errors),
                          _resolve_expr(right, schema, enum_lits, pairwise, errors))
        case Call(name, args):
            return Call(name, tuple(_resolve_expr(a, schema, enum_lits, pairwise, errors)
                                    for a in args))
        case _:
            return node


def _resolve_goal(node: GoalAst, schema: Schema, enum_lits: frozenset[str],
                  pairwise: bool, errors: list[PatternForgeError]) -> GoalAst:
    match node:
        case Const():
            return node
        case Compare(left, op, right):
            return Compare(_resolve_expr(left, schema, enum_lits, pairwise, errors), op,
                           _resolve_expr(right, schema, enum_lits, pairwise, errors))
        case Member(left, elements):
            return Member(_resolve_expr(left, schema, enum_lits, pairwise, errors),
                          tuple(_resolve_expr(e, schema, enum_lits, pairwise, errors)
                                for e in elements))
        case Not(operand):
            return Not(_resolve_goal(operand, schema, enum_lits, pairwise, errors))
        case And(left, right):
            return And(_resolve_goal(left, schema, enum_lits, pairwise, errors),
                       _resolve_goal(right, schema, enum_lits, pairwise, errors))
        case Or(left, right):
            return Or(_resolve_goal(left, schema, enum_lits, pairwise, errors),
                      _resolve_goal(right, schema, enum_lits, pairwise, errors))
        case Implies(left, right):
            return Implies(_resolve_goal(left, schema, enum_lits, pairwise, errors),
                           _resolve_goal(right, schema, enum_lits, pairwise, errors))
        case Iff(left, right):
            return Iff(_resolve_goal(left, schema, enum_lits, pairwise, errors),
                       _resolve_goal(right, schema, enum_lits, pairwise, errors))


def resolve_expression(node: ExprAst, schema: Schema, *, pairwise: bool = False) -> ExprAst:
    """Bind bare identifiers: schema attributes stay references, names that
    only occur in an enum domain become enum literals, anything else is an
    unknown-attribute error. Reports every unresolved name at once."""
    errors: list[PatternForgeError] = []
    out = _resolve_expr(node, schema, schema.enum_literals(), pairwise, errors)
    raise_collected(errors)
    return out


def resolve_goal(node: GoalAst, schema: Schema, *, pairwise: bool = False) -> GoalAst:
    errors: list[PatternForgeError] = []
    out = _resolve_goal(node, schema, schema.enum_literals(), pairwise, errors)
    raise_collected(errors)
    return out


# ---------------------------------------------------------------- evaluation


def _require_number(value: Value, context: str) -> float:
    if kind_of(value) != "number":
        raise TypeMismatch(f"{context} requires a number, got {value!r}")
    return float(value)


def eval_expression(node: ExprAst, state: State, functions: FunctionEnv,
                    tolerance: Tolerance = DEFAULT_TOLERANCE) -> Value:
    """Strictly evaluate an expression against a state."""
    match node:
        case NumberLit(value):
            return float(value)
        case StringLit(text):
            return text
        case EnumLit(name):
            return name
        case BoolLit(value):
            return value
        case AttrRef(name):
            return state.get(name)
        case Neg(operand):
            return -_require_number(
                eval_expression(operand, state, functions, tolerance), "negation")
        case Binary(op, left, right):
            lv = _require_number(eval_expression(left, state, functions, tolerance),
                                 f"operator '{op}'")
            rv = _require_number(eval_expression(right, state, functions, tolerance),
                                 f"operator '{op}'")
            if op == "+":
                return lv + rv
            if op == "-":
                return lv - rv
            if op == "*":
                return lv * rv
            if op == "/":
                if rv == 0:
                    raise DivisionByZero(f"division by zero in {render_expression(node)}")
                return lv / rv
            raise TypeMismatch(f"unknown operator {op!r}")
        case Call(name, args):
            fn = functions.get(name)
            if fn is None:
                raise UnknownFunction(f"unknown function '{name}'")
            values = [eval_expression(a, state, functions, tolerance) for a in args]
            return fn(*values)
    raise TypeMismatch(f"unsupported expression node {node!r}")


def eval_goal(node: GoalAst, state: State, functions: FunctionEnv,
              tolerance: Tolerance = DEFAULT_TOLERANCE) -> tuple[bool, EvalBreakdown]:
    """Evaluate a goal formula; returns the verdict plus a per-node breakdown.

    Evaluation is strict: both sides of every connective are evaluated, so an
    unbound attribute is an error even under a short-circuiting truth value.
    """
    bd = _eval_goal(node, state, functions, tolerance)
    return bd.value, bd


def _eval_goal(node: GoalAst, state: State, functions: FunctionEnv,
               tolerance: Tolerance) -> EvalBreakdown:
    text = render_goal(node)
    match node:
        case Const(value):
            return EvalBreakdown("const", text, value)
        case Compare(left, op, right):
            lv = eval_expression(left, state, functions, tolerance)
            rv = eval_expression(right, state, functions, tolerance)
            return EvalBreakdown("compare", text, compare(lv, rv, op, tolerance),
                                 operands=(lv, rv))
        case Member(left, elements):
            lv = eval_expression(left, state, functions, tolerance)
            values = [eval_expression(e, state, functions, tolerance) for e in elements]
            hit = any(compare(lv, v, "=", tolerance) for v in values)
            return EvalBreakdown("member", text, hit, operands=(lv, *values))
        case Not(operand):
            child = _eval_goal(operand, state, functions, tolerance)
            return EvalBreakdown("not", text, not child.value, children=(child,))
        case And(left, right):
            lc = _eval_goal(left, state, functions, tolerance)
            rc = _eval_goal(right, state, functions, tolerance)
            return EvalBreakdown("and", text, lc.value and rc.value, children=(lc, rc))
        case Or(left, right):
            lc = _eval_goal(left, state, functions, tolerance)
            rc = _eval_goal(right, state, functions, tolerance)
            return EvalBreakdown("or", text, lc.value or rc.value, children=(lc, rc))
        case Implies(left, right):
            lc = _eval_goal(left, state, functions, tolerance)
            rc = _eval_goal(right, state, functions, tolerance)
            return EvalBreakdown("implies", text, (not lc.value) or rc.value,
                                 children=(lc, rc))
        case Iff(left, right):
            lc = _eval_goal(left, state, functions, tolerance)
            rc = _eval_goal(right, state, functions, tolerance)
            return EvalBreakdown("iff", text, lc.value == rc.value, children=(lc, rc))
    raise TypeMismatch(f"unsupported goal node {node!r}")


# ---------------------------------------------------------------- rendering


def format_number(value: float) -> str:
    """Decimal text without exponent notation; integral values drop the `.0`."""
    if value == int(value) and abs(value) < 1e16:
        return str(int(value))
    s = repr(value)
    if "e" in s or "E" in s:
        s = format(Decimal(s), "f")
    return s


def _wrap_expr(node: ExprAst) -> str:
    if isinstance(node, (Binary, Neg)):
        return f"({render_expression(node)})"
    return render_expression(node)


def render_expression(node: ExprAst) -> str:
    """Canonical text; compound subterms are parenthesized, `%` sugar is not
    re-emitted (0.008 prints as 0.008)."""
    match node:
        case NumberLit(value):
            return format_number(value)
        case StringLit(text):
            return f"'{text}'"
        case EnumLit(name):
            return f"'{name}'"
        case BoolLit(value):
            return "true" if value else "false"
        case AttrRef(name):
            return name
        case Neg(operand):
            return f"-{_wrap_expr(operand)}"
        case Binary(op, left, right):
            return f"{_wrap_expr(left)} {op} {_wrap_expr(right)}"
        case Call(name, args):
            return f"{name}({', '.join(render_expression(a) for a in args)})"
    raise TypeMismatch(f"unsupported expression node {node!r}")


def _member_literal_text(node: ExprAst) -> str:
    # bare names inside membership sets always denote enum literals
    if isinstance(node, EnumLit):
        return node.name
    if isinstance(node, NumberLit) and node.value < 0:
        return f"-{format_number(-node.value)}"
    return render_expression(node)


def _wrap_goal(node: GoalAst) -> str:
    if isinstance(node, (And, Or, Implies, Iff)):
        return f"({render_goal(node)})"
    return render_goal(node)


def render_goal(node: GoalAst) -> str:
    match node:
        case Const(value):
            return "true" if value else "false"
        case Compare(left, op, right):
            return f"{render_expression(left)} {op} {render_expression(right)}"
        case Member(left, elements):
            inner = ", ".join(_member_literal_text(e) for e in elements)
            return f"{render_expression(left)} in {{{inner}}}"
        case Not(Compare(left, "=", right)):
            return f"{render_expression(left)} != {render_expression(right)}"
        case Not(operand):
            return f"!({render_goal(operand)})"
        case And(left, right):
            return f"{_wrap_goal(left)} & {_wrap_goal(right)}"
        case Or(left, right):
            return f"{_wrap_goal(left)} | {_wrap_goal(right)}"
        case Implies(left, right):
            return f"{_wrap_goal(left)} => {_wrap_goal(right)}"
        case Iff(left, right):
            return f"{_wrap_goal(left)} <=> {_wrap_goal(right)}"
    raise TypeMismatch(f"unsupported goal node {node!r}")


# ---------------------------------------------------------------- traversal


def iter_expr_nodes(node: ExprAst) -> Iterator[ExprAst]:
    yield node
    match node:
        case Neg(operand):
            yield from iter_expr_nodes(operand)
        case Binary(_, left, right):
            yield from iter_expr_nodes(left)
            yield from iter_expr_nodes(right)
        case Call(_, args):
            for a in args:
                yield from iter_expr_nodes(a)
        case _:
            pass


def iter_goal_exprs(node: GoalAst) -> Iterator[ExprAst]:
    match node:
        case Const():
            return
        case Compare(left, _, right):
            yield left
            yield right
        case Member(left, elements):
            yield left
            yield from elements
        case Not(operand):
            yield from iter_goal_exprs(operand)
        case And(left, right) | Or(left, right) | Implies(left, right) | Iff(left, right):
            yield from iter_goal_exprs(left)
            yield from iter_goal_exprs(right)


def referenced_attributes(node: ExprAst | GoalAst) -> frozenset[str]:
    """Names of every attribute an expression or goal reads."""
    exprs: list[ExprAst]
    if isinstance(node, (Const, Compare, Member, Not, And, Or, Implies, Iff)):
        exprs = list(iter_goal_exprs(node))
    else:
        exprs = [node]
    names: set[str] = set()
    for e in exprs:
        for sub in iter_expr_nodes(e):
            if isinstance(sub, AttrRef):
                names.add(sub.name)
    return frozenset(names)


def referenced_calls(node: ExprAst | GoalAst) -> list[tuple[str, int]]:
    """(function name, arity) for every call site, in traversal order."""
    exprs: list[ExprAst]
    if isinstance(node, (Const, Compare, Member, Not, And, Or, Implies, Iff)):
        exprs = list(iter_goal_exprs(node))
    else:
        exprs = [node]
    out: list[tuple[str, int]] = []
    for e in exprs:
        for sub in iter_expr_nodes(e):
            if isinstance(sub, Call):
                out.append((sub.name, len(sub.args)))
    return out
