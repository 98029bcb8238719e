"""Query text to AST.

The accepted language is a read-only MATCH/WHERE/RETURN subset:

    query  := "MATCH" pattern ("WHERE" pred)? "RETURN" ident
    pattern := (ident "=")? node (rel node)*
    node   := "(" ident? (":" ident)? ")"
    rel    := "<-" body "-" | "-" body "->" | "-" body "-"
    body   := ("[" ident? (":" TYPE)? ("*" INT?)? "]")?
    pred   := and ("OR" and)* ;  and := cmp ("AND" cmp)*
    cmp    := ident "." ident ("="|"<>") literal | ident "<>" ident

Keywords are case-insensitive; variables, labels and relationship types
are case-sensitive. AND binds tighter than OR.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from skygraph.errors import QuerySyntaxError

Literal = str | bool | int

KEYWORDS = {"MATCH", "WHERE", "RETURN", "AND", "OR"}


@dataclass(frozen=True)
class NodePattern:
    var: str | None = None
    label: str | None = None


@dataclass(frozen=True)
class HopRange:
    """Hop count bounds of a relationship pattern.

    `max` is None for a bare star, whose upper bound comes from the
    evaluator's configured default.
    """

    min: int = 1
    max: int | None = 1

    @property
    def is_single(self) -> bool:
        return self.min == 1 and self.max == 1


@dataclass(frozen=True)
class RelPattern:
    var: str | None = None
    type: str | None = None
    direction: str = "undirected"  # left | right | undirected
    hops: HopRange = HopRange()


@dataclass(frozen=True)
class PropertyComparison:
    var: str
    key: str
    op: str  # "=" or "<>"
    literal: Literal


@dataclass(frozen=True)
class NodeComparison:
    """`left <> right`: distinct bound nodes by value (class, name and
    properties)."""

    left: str
    right: str


@dataclass(frozen=True)
class BoolExpr:
    op: str  # "AND" or "OR"
    operands: tuple


Predicate = PropertyComparison | NodeComparison | BoolExpr


@dataclass(frozen=True)
class QueryAst:
    path_var: str | None
    pattern: tuple  # alternating NodePattern / RelPattern
    where: Predicate | None
    return_items: tuple[str, ...]

    @property
    def node_patterns(self) -> list[NodePattern]:
        return [p for p in self.pattern if isinstance(p, NodePattern)]

    @property
    def rel_patterns(self) -> list[RelPattern]:
        return [p for p in self.pattern if isinstance(p, RelPattern)]


# -- tokenizer ----------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<int>\d+)
  | (?P<string>"(?:[^"\\]|\\.)*")
  | (?P<arrow_left><-)
  | (?P<neq><>)
  | (?P<arrow_right>->)
  | (?P<sym>[()\[\]:.*=,-])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Token:
    kind: str  # IDENT, INT, STRING, or the symbol text itself
    value: str
    offset: int


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise QuerySyntaxError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        value = m.group()
        if kind == "ident":
            tokens.append(_Token("IDENT", value, pos))
        elif kind == "int":
            tokens.append(_Token("INT", value, pos))
        elif kind == "string":
            tokens.append(_Token("STRING", value, pos))
        elif kind != "ws":
            tokens.append(_Token(value, value, pos))
        pos = m.end()
    tokens.append(_Token("EOF", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self, ahead: int = 0) -> _Token:
        return self.tokens[min(self.pos + ahead, len(self.tokens) - 1)]

    def advance(self) -> _Token:
        token = self.tokens[self.pos]
        if token.kind != "EOF":
            self.pos += 1
        return token

    def expect(self, kind: str) -> _Token:
        token = self.peek()
        if token.kind != kind:
            raise QuerySyntaxError(
                f"expected {kind!r}, found {token.value or 'end of input'!r}",
                token.offset,
            )
        return self.advance()

    def keyword(self, word: str) -> bool:
        token = self.peek()
        return token.kind == "IDENT" and token.value.upper() == word

    def expect_keyword(self, word: str) -> None:
        token = self.peek()
        if not self.keyword(word):
            raise QuerySyntaxError(
                f"expected {word}, found {token.value or 'end of input'!r}",
                token.offset,
            )
        self.advance()

    def expect_ident(self) -> str:
        token = self.peek()
        if token.kind != "IDENT" or token.value.upper() in KEYWORDS:
            raise QuerySyntaxError(
                f"expected identifier, found {token.value or 'end of input'!r}",
                token.offset,
            )
        return self.advance().value

    # -- grammar --------------------------------------------------------

    def parse(self) -> QueryAst:
        self.expect_keyword("MATCH")
        path_var = None
        if (
            self.peek().kind == "IDENT"
            and self.peek().value.upper() not in KEYWORDS
            and self.peek(1).kind == "="
        ):
            path_var = self.advance().value
            self.advance()
        pattern: list = [self.parse_node()]
        while self.peek().kind in ("-", "<-"):
            pattern.append(self.parse_rel())
            pattern.append(self.parse_node())
        where = None
        if self.keyword("WHERE"):
            self.advance()
            where = self.parse_pred()
        self.expect_keyword("RETURN")
        return_items = (self.expect_ident(),)
        token = self.peek()
        if token.kind != "EOF":
            raise QuerySyntaxError(f"unexpected trailing {token.value!r}", token.offset)
        ast = QueryAst(
            path_var=path_var,
            pattern=tuple(pattern),
            where=where,
            return_items=return_items,
        )
        self._check_bindings(ast)
        return ast

    def parse_node(self) -> NodePattern:
        self.expect("(")
        var = None
        label = None
        if self.peek().kind == "IDENT":
            var = self.expect_ident()
        if self.peek().kind == ":":
            self.advance()
            label = self.expect_ident()
        self.expect(")")
        return NodePattern(var=var, label=label)

    def parse_rel(self) -> RelPattern:
        token = self.advance()  # "-" or "<-"
        leftward = token.kind == "<-"
        var, rtype, hops = self.parse_rel_body()
        closing = self.peek()
        if leftward:
            self.expect("-")
            direction = "left"
        elif closing.kind == "->":
            self.advance()
            direction = "right"
        elif closing.kind == "-":
            self.advance()
            direction = "undirected"
        else:
            raise QuerySyntaxError(
                f"expected '-' or '->', found {closing.value or 'end of input'!r}",
                closing.offset,
            )
        return RelPattern(var=var, type=rtype, direction=direction, hops=hops)

    def parse_rel_body(self) -> tuple[str | None, str | None, HopRange]:
        if self.peek().kind != "[":
            return None, None, HopRange(1, 1)
        self.advance()
        var = None
        rtype = None
        hops = HopRange(1, 1)
        if self.peek().kind == "IDENT":
            var = self.expect_ident()
        if self.peek().kind == ":":
            self.advance()
            rtype = self.expect_ident()
        if self.peek().kind == "*":
            self.advance()
            if self.peek().kind == "INT":
                k = int(self.advance().value)
                if k < 1:
                    raise QuerySyntaxError("hop count must be >= 1", self.peek().offset)
                hops = HopRange(k, k)
            else:
                hops = HopRange(1, None)
        self.expect("]")
        return var, rtype, hops

    def parse_pred(self) -> Predicate:
        operands = [self.parse_and()]
        while self.keyword("OR"):
            self.advance()
            operands.append(self.parse_and())
        if len(operands) == 1:
            return operands[0]
        return BoolExpr("OR", tuple(operands))

    def parse_and(self) -> Predicate:
        operands = [self.parse_cmp()]
        while self.keyword("AND"):
            self.advance()
            operands.append(self.parse_cmp())
        if len(operands) == 1:
            return operands[0]
        return BoolExpr("AND", tuple(operands))

    def parse_cmp(self) -> Predicate:
        var = self.expect_ident()
        token = self.peek()
        if token.kind == ".":
            self.advance()
            key = self.expect_ident()
            op_token = self.peek()
            if op_token.kind not in ("=", "<>"):
                raise QuerySyntaxError(
                    f"expected '=' or '<>', found {op_token.value or 'end of input'!r}",
                    op_token.offset,
                )
            self.advance()
            return PropertyComparison(
                var=var, key=key, op=op_token.kind, literal=self.parse_literal()
            )
        if token.kind == "<>":
            self.advance()
            return NodeComparison(left=var, right=self.expect_ident())
        raise QuerySyntaxError(
            f"expected '.' or '<>', found {token.value or 'end of input'!r}",
            token.offset,
        )

    def parse_literal(self) -> Literal:
        token = self.peek()
        if token.kind == "STRING":
            self.advance()
            body = token.value[1:-1]
            return body.replace('\\"', '"').replace("\\\\", "\\")
        if token.kind == "INT":
            self.advance()
            return int(token.value)
        if token.kind == "IDENT" and token.value.lower() in ("true", "false"):
            self.advance()
            return token.value.lower() == "true"
        raise QuerySyntaxError(
            f"expected literal, found {token.value or 'end of input'!r}", token.offset
        )

    def _check_bindings(self, ast: QueryAst) -> None:
        bound = {ast.path_var} if ast.path_var else set()
        for part in ast.pattern:
            if part.var is not None:
                bound.add(part.var)

        def check(var: str) -> None:
            if var not in bound:
                raise QuerySyntaxError(
                    f"variable {var!r} is not bound in the pattern", len(self.text)
                )

        def walk(pred: Predicate) -> None:
            if isinstance(pred, PropertyComparison):
                check(pred.var)
            elif isinstance(pred, NodeComparison):
                check(pred.left)
                check(pred.right)
            else:
                for operand in pred.operands:
                    walk(operand)

        if ast.where is not None:
            walk(ast.where)
        for item in ast.return_items:
            check(item)


def parse_query(text: str) -> QueryAst:
    """Parse query text; raises QuerySyntaxError with the failing offset."""
    return _Parser(text).parse()
