"""Formula syntax tree, concrete grammar, and structural transforms.

The grammar (tightest binding first):

    atom    := NAME | 'true' | '(' formula ')' | '[' formula ']' '^' '[' INT ',' INT ']'
    hold    := 'H' '^' INT ['!'] (NAME | 'true') | atom
    neg     := '!' neg | hold
    concat  := neg ('.' neg)*
    conj    := concat ('&' concat)*
    disj    := conj ('|' conj)*
    formula := disj ('=>' disj)*

All binary operators associate to the left.  ``a => b`` is sugar for
``!a | b`` and is desugared during parsing.  ``H^0 p`` prints as ``p``;
a negated atom prints in explicit hold form (``H^0 !p``) so that printing
and re-parsing reproduce the same tree.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterator, Optional, Sequence, Union

from .errors import (
    InfeasibleFormulaError,
    NormalizationError,
    ParseError,
    UnknownPropositionError,
)

NEG_INF = float("-inf")


@dataclass(frozen=True)
class Hold:
    """Hold a literal for ``duration + 1`` consecutive symbols.

    ``prop is None`` encodes the ``true`` constant, which any symbol
    satisfies.  ``negated`` asks for symbols that do not contain the
    proposition.
    """

    duration: int
    prop: Optional[str]
    negated: bool = False

    def __post_init__(self):
        if self.duration < 0:
            raise ValueError("hold duration must be non-negative")
        if self.prop is None and self.negated:
            raise ValueError("negated true-hold is vacuously unsatisfiable")


@dataclass(frozen=True)
class And:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Or:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Not:
    child: "Formula"


@dataclass(frozen=True)
class Concat:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Within:
    """Bound satisfaction of ``child`` to the window ``[lo, hi]``."""

    child: "Formula"
    lo: int
    hi: int

    def __post_init__(self):
        if self.lo < 0:
            raise ValueError("window lower bound must be non-negative")
        if self.lo > self.hi:
            raise ValueError(f"window [{self.lo},{self.hi}] has lo > hi")


Formula = Union[Hold, And, Or, Not, Concat, Within]

_BINARY = (And, Or, Concat)


# ---------------------------------------------------------------------------
# Parsing

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<name>[A-Za-z_][A-Za-z0-9_]*)|(?P<int>\d+)|(?P<op>=>|[!&|.()\[\],^]))"
)


def _tokenize(text):
    tokens = []
    pos = 0
    while pos < len(text):
        match = _TOKEN_RE.match(text, pos)
        if match is None:
            break
        kind = match.lastgroup
        tokens.append((kind, match.group(kind), match.start(kind) + 1))
        pos = match.end()
    if text[pos:].strip():
        raise ParseError(f"unexpected character {text[pos:].strip()[0]!r}", column=pos + 1)
    return tokens


class _Parser:
    def __init__(self, tokens, ap):
        self.tokens = tokens
        self.pos = 0
        self.ap = ap

    def peek(self):
        if self.pos < len(self.tokens):
            return self.tokens[self.pos]
        return (None, None, self.tokens[-1][2] + 1 if self.tokens else 1)

    def next(self):
        token = self.peek()
        self.pos += 1
        return token

    def expect(self, value):
        kind, text, col = self.next()
        if text != value:
            raise ParseError(f"expected {value!r}, found {text!r}", column=col)

    def error(self, message):
        raise ParseError(message, column=self.peek()[2])

    def parse(self):
        node = self.implication()
        if self.peek()[0] is not None:
            self.error(f"trailing input starting at {self.peek()[1]!r}")
        return node

    def implication(self):
        node = self.disjunction()
        while self.peek()[1] == "=>":
            self.next()
            right = self.disjunction()
            node = Or(Not(node), right)
        return node

    def disjunction(self):
        node = self.conjunction()
        while self.peek()[1] == "|":
            self.next()
            node = Or(node, self.conjunction())
        return node

    def conjunction(self):
        node = self.concatenation()
        while self.peek()[1] == "&":
            self.next()
            node = And(node, self.concatenation())
        return node

    def concatenation(self):
        node = self.negation()
        while self.peek()[1] == ".":
            self.next()
            node = Concat(node, self.negation())
        return node

    def negation(self):
        if self.peek()[1] == "!":
            self.next()
            return Not(self.negation())
        return self.hold()

    def hold(self):
        kind, text, col = self.peek()
        if kind == "name" and text == "H":
            self.next()
            self.expect("^")
            duration = self.integer()
            negated = False
            if self.peek()[1] == "!":
                self.next()
                negated = True
            return self.literal(duration, negated)
        return self.atom()

    def literal(self, duration, negated):
        kind, text, col = self.next()
        if kind != "name":
            raise ParseError("hold operator needs a proposition or 'true'", column=col)
        if text == "true":
            if negated:
                raise ParseError("negated true-hold is vacuously unsatisfiable", column=col)
            return Hold(duration, None)
        self.check_prop(text, col)
        return Hold(duration, text, negated)

    def atom(self):
        kind, text, col = self.next()
        if text == "(":
            node = self.implication()
            self.expect(")")
            return node
        if text == "[":
            child = self.implication()
            self.expect("]")
            self.expect("^")
            self.expect("[")
            lo = self.integer()
            self.expect(",")
            hi = self.integer()
            self.expect("]")
            if lo > hi:
                raise ParseError(f"window [{lo},{hi}] has lo > hi", column=col)
            return Within(child, lo, hi)
        if kind == "name":
            if text == "true":
                return Hold(0, None)
            self.check_prop(text, col)
            return Hold(0, text)
        raise ParseError(f"unexpected token {text!r}", column=col)

    def integer(self):
        kind, text, col = self.next()
        if kind != "int":
            raise ParseError(f"expected integer, found {text!r}", column=col)
        return int(text)

    def check_prop(self, name, col):
        if self.ap is not None and name not in self.ap:
            raise UnknownPropositionError(
                f"proposition {name!r} not in alphabet {sorted(self.ap)} (column {col})"
            )


def parse(text: str, ap: Optional[Sequence[str]] = None) -> Formula:
    """Parse formula text.

    When ``ap`` is given, every proposition must belong to it; otherwise the
    alphabet is inferred (see :func:`propositions`).
    """
    tokens = _tokenize(text)
    if not tokens:
        raise ParseError("empty formula")
    return _Parser(tokens, set(ap) if ap is not None else None).parse()


# ---------------------------------------------------------------------------
# Printing

_LEVEL = {Or: 1, And: 2, Concat: 3, Not: 4}


def _fmt(node, parent_level):
    if isinstance(node, Hold):
        if node.prop is None:
            body = "true" if node.duration == 0 else f"H^{node.duration} true"
        elif node.negated:
            body = f"H^{node.duration} !{node.prop}"
        elif node.duration == 0:
            body = node.prop
        else:
            body = f"H^{node.duration} {node.prop}"
        return body
    if isinstance(node, Within):
        return f"[{_fmt(node.child, 0)}]^[{node.lo},{node.hi}]"
    if isinstance(node, Not):
        return f"!{_fmt(node.child, _LEVEL[Not])}"
    op = {Or: "|", And: "&", Concat: "."}[type(node)]
    level = _LEVEL[type(node)]
    text = f"{_fmt(node.left, level - 1)} {op} {_fmt(node.right, level)}"
    if level <= parent_level:
        return f"({text})"
    return text


def format_formula(f: Formula) -> str:
    """Render a formula so that parsing the result reproduces the same tree."""
    return _fmt(f, 0)


def propositions(f: Formula) -> frozenset:
    """The set of proposition names appearing in the formula."""
    out = set()
    for node in walk(f):
        if isinstance(node, Hold) and node.prop is not None:
            out.add(node.prop)
    return frozenset(out)


def walk(f: Formula) -> Iterator[Formula]:
    """Post-order traversal of the syntax tree."""
    if isinstance(node := f, _BINARY):
        yield from walk(node.left)
        yield from walk(node.right)
    elif isinstance(f, Not):
        yield from walk(f.child)
    elif isinstance(f, Within):
        yield from walk(f.child)
    yield f


# ---------------------------------------------------------------------------
# Measures

def time_bound(f: Formula) -> int:
    """Maximum time needed to satisfy the formula."""
    if isinstance(f, Hold):
        return f.duration
    if isinstance(f, (And, Or)):
        return max(time_bound(f.left), time_bound(f.right))
    if isinstance(f, Not):
        return time_bound(f.child)
    if isinstance(f, Concat):
        return time_bound(f.left) + time_bound(f.right) + 1
    return f.hi


def min_duration(f: Formula) -> int:
    """Minimal window span the formula's task occupies.

    A nested window counts as its own deadline: a task bounded by ``[a,b]``
    may legitimately run until ``b``, so an enclosing window must budget for
    that, not for the earliest possible completion.
    """
    if isinstance(f, Hold):
        return f.duration
    if isinstance(f, And):
        return max(min_duration(f.left), min_duration(f.right))
    if isinstance(f, Or):
        return min(min_duration(f.left), min_duration(f.right))
    if isinstance(f, Not):
        return min_duration(f.child)
    if isinstance(f, Concat):
        return min_duration(f.left) + min_duration(f.right) + 1
    return f.hi


def is_feasible(f: Formula) -> bool:
    """True iff every window is long enough for its enclosed task."""
    if isinstance(f, Hold):
        return True
    if isinstance(f, Not):
        return is_feasible(f.child)
    if isinstance(f, Within):
        return f.hi - f.lo >= min_duration(f.child) and is_feasible(f.child)
    return is_feasible(f.left) and is_feasible(f.right)


def is_primitive(f: Formula) -> bool:
    """True iff the formula contains no within operator."""
    return not any(isinstance(node, Within) for node in walk(f))


def within_operators(f: Formula) -> list:
    """Within nodes in post-order; the shared index base for relaxations."""
    return [node for node in walk(f) if isinstance(node, Within)]


def within_count(f: Formula) -> int:
    return len(within_operators(f))


def deadlines(f: Formula) -> tuple:
    """Upper window bounds in post-order."""
    return tuple(node.hi for node in within_operators(f))


# ---------------------------------------------------------------------------
# Transforms

def push_negation(f: Formula) -> Formula:
    """Rewrite so negation appears only on atomic propositions.

    Uses double negation, De Morgan, and ``!(H^d p) = [!p]^[0,d]``.  There is
    no rewrite for a negated concatenation or a negated window, so those
    raise :class:`NormalizationError`.
    """
    if isinstance(f, Hold):
        return f
    if isinstance(f, (And, Or, Concat)):
        return type(f)(push_negation(f.left), push_negation(f.right))
    if isinstance(f, Within):
        return Within(push_negation(f.child), f.lo, f.hi)
    child = f.child
    if isinstance(child, Not):
        return push_negation(child.child)
    if isinstance(child, Hold):
        if child.prop is None:
            raise NormalizationError("negated true-hold is vacuously unsatisfiable")
        flipped = Hold(0, child.prop, not child.negated)
        if child.duration == 0:
            return flipped
        return Within(flipped, 0, child.duration)
    if isinstance(child, And):
        return Or(push_negation(Not(child.left)), push_negation(Not(child.right)))
    if isinstance(child, Or):
        return And(push_negation(Not(child.left)), push_negation(Not(child.right)))
    raise NormalizationError(
        f"no rewrite eliminates negation over {type(child).__name__.lower()}"
    )


def _disjuncts(f: Formula) -> list:
    """Split into window-free-choice disjuncts, distributing over | where needed."""
    if isinstance(f, Hold):
        return [f]
    if isinstance(f, Or):
        return _disjuncts(f.left) + _disjuncts(f.right)
    if isinstance(f, And):
        return [And(a, b) for a in _disjuncts(f.left) for b in _disjuncts(f.right)]
    if isinstance(f, Concat):
        return [Concat(a, b) for a in _disjuncts(f.left) for b in _disjuncts(f.right)]
    if isinstance(f, Within):
        return [Within(d, f.lo, f.hi) for d in _disjuncts(f.child)]
    raise NormalizationError("push_negation must run before to_dfw")


def _or_join(parts):
    node = parts[0]
    for part in parts[1:]:
        node = Or(node, part)
    return node


def to_dfw(f: Formula) -> Formula:
    """Pull every disjunction out of window bodies (disjunction-free-within).

    Expects a negation-normalized formula.
    """
    if isinstance(f, Hold):
        return f
    if isinstance(f, (And, Or, Concat)):
        return type(f)(to_dfw(f.left), to_dfw(f.right))
    if isinstance(f, Not):
        raise NormalizationError("push_negation must run before to_dfw")
    child = to_dfw(f.child)
    return _or_join([Within(d, f.lo, f.hi) for d in _disjuncts(child)])


def has_disjunction_in_window(f: Formula) -> bool:
    """True when some window body still contains a disjunction."""
    for node in walk(f):
        if isinstance(node, Within):
            if any(isinstance(inner, Or) for inner in walk(node.child)):
                return True
    return False


def normalize(f: Formula) -> Formula:
    """push_negation followed by to_dfw; the translation pipeline entry."""
    return to_dfw(push_negation(f))


def relax(f: Formula, tau: Sequence[int]) -> Formula:
    """Add ``tau[i]`` to the upper bound of the i-th window (post-order).

    All entries must be finite and the result must stay feasible.
    """
    offsets = list(tau)
    if len(offsets) != within_count(f):
        raise ValueError(
            f"relaxation vector has {len(offsets)} entries, formula has "
            f"{within_count(f)} within operators"
        )
    if any(x == NEG_INF or x != int(x) for x in offsets):
        raise ValueError("relaxation entries must be finite integers")
    counter = iter(range(len(offsets)))

    def rebuild(node):
        if isinstance(node, Hold):
            return node
        if isinstance(node, Not):
            return Not(rebuild(node.child))
        if isinstance(node, _BINARY):
            return type(node)(rebuild(node.left), rebuild(node.right))
        child = rebuild(node.child)
        hi = node.hi + int(offsets[next(counter)])
        if hi < node.lo:
            raise InfeasibleFormulaError(
                f"window [{node.lo},{node.hi}] relaxed below its lower bound"
            )
        return Within(child, node.lo, hi)

    out = rebuild(f)
    if not is_feasible(out):
        raise InfeasibleFormulaError(
            f"relaxation {tuple(offsets)} makes the formula infeasible"
        )
    return out
