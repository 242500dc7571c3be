"""Parser and pretty-printer for the feature expression grammar.

Function-call prefix syntax with infix arithmetic sugar:

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := '-' unary | primary
    primary := NUMBER | call | '(' expr ')'
    call    := NAME '(' arg (',' arg)* ')'
    arg     := expr | NAME '=' literal

``col(name)`` references a panel column by bare identifier. Keyword
arguments take numeric or true/false literals. Pretty-printing emits a
canonical form that re-parses to a structurally equal tree.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

from .nodes import (BINARY_OPS, Binary, ColumnRef, Const, CsRank, CsZScore,
                    EwmMean, Expr, FillMissing, GroupZScore, Lag, Rolling,
                    Unary, rolling_max, rolling_mean, rolling_min, rolling_std)


class ParseError(ValueError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{message} at line {line}, column {col}")
        self.line = line
        self.col = col


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>\d+\.\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?|\d+(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z0-9_.]*)
  | (?P<op>[()+\-*/,=])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Token:
    kind: str  # number | name | op | eof
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    line, line_start = 1, 0
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        tok = m.group()
        if kind == "ws":
            line += tok.count("\n")
            if "\n" in tok:
                line_start = m.start() + tok.rindex("\n") + 1
        else:
            tokens.append(_Token(kind, tok, line, m.start() - line_start + 1))
        pos = m.end()
    tokens.append(_Token("eof", "", line, len(text) - line_start + 1))
    return tokens


_ARITIES = {
    "col": (1, 1), "lag": (2, 2), "ewm_mean": (2, 2), "group_zscore": (2, 2),
    "cs_rank": (1, 1), "cs_zscore": (1, 1), "fillna": (2, 2),
    "abs": (1, 1), "log": (1, 1), "sqrt": (1, 1), "neg": (1, 1),
    "rolling_mean": (2, 3), "rolling_std": (2, 4),
    "rolling_min": (2, 3), "rolling_max": (2, 3),
}


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, text: str) -> _Token:
        tok = self.peek()
        if tok.kind == "eof" or tok.text != text:
            got = "end of input" if tok.kind == "eof" else repr(tok.text)
            raise ParseError(f"expected {text!r}, found {got}", tok.line, tok.col)
        return self.advance()

    def parse(self) -> Expr:
        expr = self.expr()
        tok = self.peek()
        if tok.kind != "eof":
            raise ParseError(f"unexpected trailing input {tok.text!r}", tok.line, tok.col)
        return expr

    def expr(self) -> Expr:
        node = self.term()
        while self.peek().text in ("+", "-") and self.peek().kind == "op":
            op = self.advance().text
            node = Binary(op, node, self.term())
        return node

    def term(self) -> Expr:
        node = self.unary()
        while self.peek().text in ("*", "/") and self.peek().kind == "op":
            op = self.advance().text
            node = Binary(op, node, self.unary())
        return node

    def unary(self) -> Expr:
        tok = self.peek()
        if tok.kind == "op" and tok.text == "-":
            self.advance()
            operand = self.unary()
            if isinstance(operand, Const):
                return Const(-operand.value)
            return Unary("neg", operand)
        return self.primary()

    def primary(self) -> Expr:
        tok = self.peek()
        if tok.kind == "number":
            self.advance()
            return Const(float(tok.text))
        if tok.kind == "name":
            return self.call()
        if tok.kind == "op" and tok.text == "(":
            self.advance()
            node = self.expr()
            self.expect(")")
            return node
        got = "end of input" if tok.kind == "eof" else repr(tok.text)
        raise ParseError(f"expected expression, found {got}", tok.line, tok.col)

    def call(self) -> Expr:
        name_tok = self.advance()
        name = name_tok.text
        if name not in _ARITIES:
            raise ParseError(f"unknown function {name!r}", name_tok.line, name_tok.col)
        self.expect("(")
        args: list = []
        kwargs: dict[str, float | bool] = {}
        if name == "col":
            col_tok = self.peek()
            if col_tok.kind != "name":
                raise ParseError("col() takes a column name", col_tok.line, col_tok.col)
            self.advance()
            self.expect(")")
            return ColumnRef(col_tok.text)
        while True:
            tok = self.peek()
            if tok.kind == "name" and self.tokens[self.pos + 1].text == "=" \
                    and self.tokens[self.pos + 1].kind == "op":
                key = self.advance().text
                self.advance()  # '='
                kwargs[key] = self._literal()
            else:
                if kwargs:
                    raise ParseError("positional argument after keyword argument",
                                     tok.line, tok.col)
                args.append(self.expr())
            if self.peek().text == "," and self.peek().kind == "op":
                self.advance()
                continue
            break
        self.expect(")")
        lo, hi = _ARITIES[name]
        n = len(args) + len(kwargs)
        if not lo <= n <= hi:
            raise ParseError(f"{name}() takes {lo}..{hi} arguments, got {n}",
                             name_tok.line, name_tok.col)
        return self._build(name, name_tok, args, kwargs)

    def _literal(self) -> float | bool:
        tok = self.peek()
        if tok.kind == "name" and tok.text in ("true", "false"):
            self.advance()
            return tok.text == "true"
        negative = False
        if tok.kind == "op" and tok.text == "-":
            self.advance()
            negative = True
            tok = self.peek()
        if tok.kind != "number":
            raise ParseError("expected a numeric or true/false literal", tok.line, tok.col)
        self.advance()
        value = float(tok.text)
        return -value if negative else value

    @staticmethod
    def _num(tok: _Token, node: Expr, what: str) -> float:
        if isinstance(node, Const):
            return node.value
        raise ParseError(f"{what} must be a numeric literal", tok.line, tok.col)

    def _build(self, name: str, tok: _Token, args: list, kwargs: dict) -> Expr:
        def ikw(key, default):
            v = kwargs.pop(key, default)
            return None if v is None else int(v)

        if name in ("abs", "log", "sqrt", "neg"):
            return Unary(name, args[0])
        if name == "cs_rank":
            return CsRank(args[0])
        if name == "cs_zscore":
            return CsZScore(args[0])
        if name == "lag":
            return Lag(args[0], int(self._num(tok, args[1], "lag periods")))
        if name == "ewm_mean":
            return EwmMean(args[0], int(self._num(tok, args[1], "ewm span")))
        if name == "group_zscore":
            return GroupZScore(args[0], int(self._num(tok, args[1], "window")))
        if name == "fillna":
            return FillMissing(args[0], self._num(tok, args[1], "fill value"))
        if name.startswith("rolling_"):
            window = int(self._num(tok, args[1], "window"))
            min_periods = int(self._num(tok, args[2], "min_periods")) if len(args) > 2 \
                else ikw("min_periods", None)
            builder = {"rolling_mean": rolling_mean, "rolling_std": rolling_std,
                       "rolling_min": rolling_min, "rolling_max": rolling_max}[name]
            if name == "rolling_std":
                sample = bool(kwargs.pop("sample", False))
                node = builder(args[0], window, min_periods, sample)
            else:
                node = builder(args[0], window, min_periods)
            if kwargs:
                raise ParseError(f"unknown keyword {next(iter(kwargs))!r} for {name}()",
                                 tok.line, tok.col)
            return node
        raise AssertionError(name)


def parse_feature(text: str) -> Expr:
    """Parse one feature expression; raises ParseError with line/column."""
    return _Parser(text).parse()


# -- pretty printer ----------------------------------------------------------

_PRECEDENCE = {"+": 1, "-": 1, "*": 2, "/": 2}


def _fmt_num(value: float) -> str:
    if value == int(value) and abs(value) < 1e15:
        return str(int(value))
    return repr(value)


def pretty(expr: Expr) -> str:
    """Canonical text form; parse(pretty(e)) == e."""
    return _pretty(expr, 0)


def _pretty(expr: Expr, parent_prec: int) -> str:
    if isinstance(expr, ColumnRef):
        return f"col({expr.name})"
    if isinstance(expr, Const):
        if expr.value < 0:
            return f"({_fmt_num(expr.value)})" if parent_prec > 0 else _fmt_num(expr.value)
        return _fmt_num(expr.value)
    if isinstance(expr, Unary):
        return f"{expr.op}({_pretty(expr.operand, 0)})"
    if isinstance(expr, Binary):
        prec = _PRECEDENCE[expr.op]
        left = _pretty(expr.left, prec - 1)
        # right operand binds tighter: '-' and '/' are left-associative
        right = _pretty(expr.right, prec)
        text = f"{left} {expr.op} {right}"
        return f"({text})" if prec <= parent_prec else text
    if isinstance(expr, Lag):
        return f"lag({_pretty(expr.operand, 0)}, {expr.periods})"
    if isinstance(expr, Rolling):
        parts = [f"rolling_{expr.stat}({_pretty(expr.operand, 0)}, {expr.window}"]
        if expr.min_periods != expr.window:
            parts.append(f", min_periods={expr.min_periods}")
        if expr.stat == "std" and expr.sample:
            parts.append(", sample=true")
        return "".join(parts) + ")"
    if isinstance(expr, EwmMean):
        return f"ewm_mean({_pretty(expr.operand, 0)}, {expr.span})"
    if isinstance(expr, GroupZScore):
        return f"group_zscore({_pretty(expr.operand, 0)}, {expr.window})"
    if isinstance(expr, CsRank):
        return f"cs_rank({_pretty(expr.operand, 0)})"
    if isinstance(expr, CsZScore):
        return f"cs_zscore({_pretty(expr.operand, 0)})"
    if isinstance(expr, FillMissing):
        return f"fillna({_pretty(expr.operand, 0)}, {_fmt_num(expr.value)})"
    raise TypeError(f"unknown node {type(expr).__name__}")
