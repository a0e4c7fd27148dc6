"""Recursive descent parser for bounded temporal contract formulas.

Grammar, loosest to tightest binding:

    implication:  disjunction ("->" implication)?          right associative
    disjunction:  conjunction ("|" conjunction)*           left associative
    conjunction:  until ("&" until)*                       left associative
    until:        unary ("U[r]" until)?                    right associative
    unary:        "!" unary | "N[r]" unary | "F[r]" unary | "G[r]" unary
                  | "(" implication ")" | identifier

Every accepted token stream has exactly one syntax tree under these
rules; anything else raises :class:`ParseError` anchored to the offending
token's span.  The end marker must be reached exactly when the
implication level returns, so trailing tokens are errors rather than
ignored suffixes.  Unknown atom names are not a parse error; they fail
later when a formula is evaluated against a trace environment.

Structural equality of formulas ignores source spans, so a reparsed
canonical rendering compares equal to the original tree.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from decimal import Decimal
from typing import Iterator, Sequence

from .lexer import EMPTY_SPAN, LexError, SourceSpan, Token, TokenKind, tokenize


class Formula:
    """Marker base class for formula nodes."""

    __slots__ = ()

    span: SourceSpan


def _check_radius(radius: float) -> None:
    if not (math.isfinite(radius) and radius > 0.0):
        raise ValueError(f"temporal radius must be positive and finite, got {radius!r}")


@dataclass(frozen=True)
class Atom(Formula):
    name: str
    span: SourceSpan = field(default=EMPTY_SPAN, compare=False, repr=False)


@dataclass(frozen=True)
class Not(Formula):
    child: Formula
    span: SourceSpan = field(default=EMPTY_SPAN, compare=False, repr=False)


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula
    span: SourceSpan = field(default=EMPTY_SPAN, compare=False, repr=False)


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula
    span: SourceSpan = field(default=EMPTY_SPAN, compare=False, repr=False)


@dataclass(frozen=True)
class Implies(Formula):
    left: Formula
    right: Formula
    span: SourceSpan = field(default=EMPTY_SPAN, compare=False, repr=False)


@dataclass(frozen=True)
class Near(Formula):
    """True where the child holds within ``radius`` seconds in either direction."""

    child: Formula
    radius: float
    span: SourceSpan = field(default=EMPTY_SPAN, compare=False, repr=False)

    def __post_init__(self) -> None:
        _check_radius(self.radius)


@dataclass(frozen=True)
class Future(Formula):
    """True where the child holds within ``radius`` seconds ahead (inclusive of now)."""

    child: Formula
    radius: float
    span: SourceSpan = field(default=EMPTY_SPAN, compare=False, repr=False)

    def __post_init__(self) -> None:
        _check_radius(self.radius)


@dataclass(frozen=True)
class Always(Formula):
    """True where the child holds at every frame of the clipped future window."""

    child: Formula
    radius: float
    span: SourceSpan = field(default=EMPTY_SPAN, compare=False, repr=False)

    def __post_init__(self) -> None:
        _check_radius(self.radius)


@dataclass(frozen=True)
class Until(Formula):
    """Right witness within ``radius`` seconds, left formula holding strictly before it."""

    left: Formula
    right: Formula
    radius: float
    span: SourceSpan = field(default=EMPTY_SPAN, compare=False, repr=False)

    def __post_init__(self) -> None:
        _check_radius(self.radius)


class ParseError(Exception):
    """Raised on a token stream the grammar rejects.

    ``span`` points at the offending token.
    """

    def __init__(self, span: SourceSpan, expected: str, found: str) -> None:
        super().__init__(f"expected {expected}, found {found} at offset {span.start}")
        self.span = span
        self.expected = expected
        self.found = found


def children(formula: Formula) -> tuple[Formula, ...]:
    match formula:
        case Atom():
            return ()
        case Not(child=c) | Near(child=c) | Future(child=c) | Always(child=c):
            return (c,)
        case And(left=l, right=r) | Or(left=l, right=r) | Implies(left=l, right=r):
            return (l, r)
        case Until(left=l, right=r):
            return (l, r)
    raise TypeError(f"not a formula node: {formula!r}")


def walk(formula: Formula) -> Iterator[Formula]:
    """Yield every node of the tree, children before parents."""
    for child in children(formula):
        yield from walk(child)
    yield formula


def node_count(formula: Formula) -> int:
    return sum(1 for _ in walk(formula))


def atom_names(formula: Formula) -> frozenset[str]:
    return frozenset(node.name for node in walk(formula) if isinstance(node, Atom))


def temporal_depth(formula: Formula) -> int:
    """Maximum nesting depth of bounded temporal operators."""
    kids = children(formula)
    inner = max((temporal_depth(c) for c in kids), default=0)
    return inner + 1 if isinstance(formula, (Near, Future, Always, Until)) else inner


def radius_sum(formula: Formula) -> float:
    """Sum of all temporal radii in seconds over the tree."""
    total = 0.0
    for node in walk(formula):
        if isinstance(node, (Near, Future, Always, Until)):
            total += node.radius
    return total


def _describe(token: Token) -> str:
    if token.kind is TokenKind.END:
        return "end of input"
    return repr(token.value)


class _Parser:
    def __init__(self, tokens: Sequence[Token]) -> None:
        self._tokens = tokens
        self._index = 0

    def peek(self) -> Token:
        return self._tokens[self._index]

    def advance(self) -> Token:
        token = self._tokens[self._index]
        if token.kind is not TokenKind.END:
            self._index += 1
        return token

    def implication(self) -> Formula:
        left = self.disjunction()
        token = self.peek()
        if token.kind is TokenKind.OPERATOR and token.value == "->":
            self.advance()
            right = self.implication()
            return Implies(left, right, SourceSpan(left.span.start, right.span.end))
        return left

    def disjunction(self) -> Formula:
        left = self.conjunction()
        while True:
            token = self.peek()
            if token.kind is TokenKind.OPERATOR and token.value == "|":
                self.advance()
                right = self.conjunction()
                left = Or(left, right, SourceSpan(left.span.start, right.span.end))
            else:
                return left

    def conjunction(self) -> Formula:
        left = self.until()
        while True:
            token = self.peek()
            if token.kind is TokenKind.OPERATOR and token.value == "&":
                self.advance()
                right = self.until()
                left = And(left, right, SourceSpan(left.span.start, right.span.end))
            else:
                return left

    def until(self) -> Formula:
        left = self.unary()
        token = self.peek()
        if token.kind is TokenKind.TEMPORAL and token.temporal_name == "U":
            self.advance()
            radius = self._required_radius(token)
            right = self.until()
            return Until(left, right, radius, SourceSpan(left.span.start, right.span.end))
        return left

    def unary(self) -> Formula:
        token = self.peek()
        if token.kind is TokenKind.OPERATOR and token.value == "!":
            self.advance()
            child = self.unary()
            return Not(child, SourceSpan(token.span.start, child.span.end))
        if token.kind is TokenKind.TEMPORAL:
            name = token.temporal_name
            if name == "U":
                raise ParseError(token.span, "a formula", _describe(token))
            self.advance()
            radius = self._required_radius(token)
            child = self.unary()
            span = SourceSpan(token.span.start, child.span.end)
            if name == "N":
                return Near(child, radius, span)
            if name == "F":
                return Future(child, radius, span)
            return Always(child, radius, span)
        if token.kind is TokenKind.LEFT_PAREN:
            self.advance()
            inner = self.implication()
            closing = self.peek()
            if closing.kind is not TokenKind.RIGHT_PAREN:
                raise ParseError(closing.span, "')'", _describe(closing))
            self.advance()
            return replace(inner, span=SourceSpan(token.span.start, closing.span.end))
        if token.kind is TokenKind.IDENTIFIER:
            self.advance()
            return Atom(token.value, token.span)
        raise ParseError(token.span, "a formula", _describe(token))

    def _required_radius(self, token: Token) -> float:
        if token.radius is None:
            raise ParseError(token.span, f"'{token.temporal_name}[radius]'", _describe(token))
        if token.radius <= 0.0:
            raise ParseError(token.span, "a positive radius", _describe(token))
        return token.radius


def parse(tokens: Sequence[Token]) -> Formula:
    """Parse a token stream into its unique syntax tree.

    The stream must end with the end marker produced by
    :func:`tracecontracts.lexer.tokenize`.
    """
    if not tokens or tokens[-1].kind is not TokenKind.END:
        raise ValueError("token stream must end with the end marker")
    parser = _Parser(tokens)
    formula = parser.implication()
    trailing = parser.peek()
    if trailing.kind is not TokenKind.END:
        raise ParseError(trailing.span, "end of input", _describe(trailing))
    return formula


def parse_text(source: str) -> Formula:
    """Tokenize and parse in one step."""
    return parse(tokenize(source))


# Rendering levels; a child is parenthesised when it binds looser than
# the position it is printed in.
_LEVEL_IMPLICATION = 1
_LEVEL_OR = 2
_LEVEL_AND = 3
_LEVEL_UNTIL = 4
_LEVEL_UNARY = 5
_LEVEL_ATOM = 6

_LEVELS: dict[type, int] = {
    Implies: _LEVEL_IMPLICATION,
    Or: _LEVEL_OR,
    And: _LEVEL_AND,
    Until: _LEVEL_UNTIL,
    Not: _LEVEL_UNARY,
    Near: _LEVEL_UNARY,
    Future: _LEVEL_UNARY,
    Always: _LEVEL_UNARY,
    Atom: _LEVEL_ATOM,
}

_UNARY_NAMES = {Near: "N", Future: "F", Always: "G"}


def radius_text(radius: float) -> str:
    """Positional decimal rendering of a radius that re-lexes to the same float."""
    text = repr(radius)
    if "e" in text or "E" in text:
        text = format(Decimal(text), "f")
    return text


def format_formula(formula: Formula) -> str:
    """Canonical rendering without redundant parentheses.

    The output reparses to a structurally identical tree; parentheses
    appear only where the fixed precedence would otherwise reassociate.
    """
    return _render(formula, _LEVEL_IMPLICATION)


def _render(formula: Formula, minimum: int) -> str:
    if _LEVELS[type(formula)] < minimum:
        return "(" + _render(formula, _LEVEL_IMPLICATION) + ")"
    match formula:
        case Atom(name=name):
            return name
        case Not(child=child):
            return "!" + _render(child, _LEVEL_UNARY)
        case Near() | Future() | Always():
            name = _UNARY_NAMES[type(formula)]
            return f"{name}[{radius_text(formula.radius)}] " + _render(formula.child, _LEVEL_UNARY)
        case Until(left=left, right=right, radius=radius):
            return (
                _render(left, _LEVEL_UNARY)
                + f" U[{radius_text(radius)}] "
                + _render(right, _LEVEL_UNTIL)
            )
        case And(left=left, right=right):
            return _render(left, _LEVEL_AND) + " & " + _render(right, _LEVEL_UNTIL)
        case Or(left=left, right=right):
            return _render(left, _LEVEL_OR) + " | " + _render(right, _LEVEL_AND)
        case Implies(left=left, right=right):
            return _render(left, _LEVEL_OR) + " -> " + _render(right, _LEVEL_IMPLICATION)
    raise TypeError(f"not a formula node: {formula!r}")


__all__ = [
    "Formula",
    "Atom",
    "Not",
    "And",
    "Or",
    "Implies",
    "Near",
    "Future",
    "Always",
    "Until",
    "ParseError",
    "LexError",
    "parse",
    "parse_text",
    "format_formula",
    "radius_text",
    "children",
    "walk",
    "node_count",
    "atom_names",
    "temporal_depth",
    "radius_sum",
]
