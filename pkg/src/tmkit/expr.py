"""Arithmetic expressions over model variables.

The grammar is the four operations, parentheses, numeric literals and
variable names. Evaluation order is the written order: operators are
left-associative with the usual precedence, so `H + br * H - a * L * H`
evaluates as ((H + (br * H)) - ((a * L) * H)). That exact operation
order is part of the engine's determinism contract.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Union

Expr = Union["Num", "Var", "Neg", "BinOp"]


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: Expr


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * /
    left: Expr
    right: Expr


class ExprSyntaxError(ValueError):
    pass


class ExprEvalError(ArithmeticError):
    """Division by zero or an undeclared variable at evaluation time."""


_PRECEDENCE = {"+": 1, "-": 1, "*": 2, "/": 2}


def parse_expr(text: str) -> Expr:
    tokens = _tokenize(text)
    expr, pos = _parse_binary(tokens, 0, 1)
    if pos != len(tokens):
        raise ExprSyntaxError(f"unexpected token {tokens[pos]!r} in {text!r}")
    return expr


def _tokenize(text: str) -> list[str]:
    tokens: list[str] = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch.isspace():
            i += 1
        elif ch in "+-*/()":
            tokens.append(ch)
            i += 1
        elif ch.isdigit() or ch == ".":
            j = i
            while j < len(text) and (text[j].isdigit() or text[j] in ".eE"):
                # allow a sign directly after an exponent marker
                if text[j] in "eE" and j + 1 < len(text) and text[j + 1] in "+-":
                    j += 1
                j += 1
            tokens.append(text[i:j])
            i = j
        elif ch.isalpha() or ch == "_":
            j = i
            while j < len(text) and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(text[i:j])
            i = j
        else:
            raise ExprSyntaxError(f"unexpected character {ch!r} in {text!r}")
    return tokens


def _parse_binary(tokens: list[str], pos: int, min_prec: int) -> tuple[Expr, int]:
    left, pos = _parse_unary(tokens, pos)
    while pos < len(tokens) and tokens[pos] in _PRECEDENCE:
        op = tokens[pos]
        prec = _PRECEDENCE[op]
        if prec < min_prec:
            break
        right, pos = _parse_binary(tokens, pos + 1, prec + 1)
        left = BinOp(op, left, right)
    return left, pos


def _parse_unary(tokens: list[str], pos: int) -> tuple[Expr, int]:
    if pos >= len(tokens):
        raise ExprSyntaxError("expression ended unexpectedly")
    tok = tokens[pos]
    if tok == "-":
        operand, pos = _parse_unary(tokens, pos + 1)
        return Neg(operand), pos
    if tok == "(":
        expr, pos = _parse_binary(tokens, pos + 1, 1)
        if pos >= len(tokens) or tokens[pos] != ")":
            raise ExprSyntaxError("missing closing parenthesis")
        return expr, pos + 1
    if tok[0].isdigit() or tok[0] == ".":
        try:
            return Num(float(tok)), pos + 1
        except ValueError as exc:
            raise ExprSyntaxError(f"bad numeric literal {tok!r}") from exc
    if tok[0].isalpha() or tok[0] == "_":
        return Var(tok), pos + 1
    raise ExprSyntaxError(f"unexpected token {tok!r}")


def evaluate(expr: Expr, env: Mapping[str, float]) -> float:
    if isinstance(expr, Num):
        return expr.value
    if isinstance(expr, Var):
        try:
            return env[expr.name]
        except KeyError:
            raise ExprEvalError(f"undeclared variable {expr.name!r}") from None
    if isinstance(expr, Neg):
        return -evaluate(expr.operand, env)
    left = evaluate(expr.left, env)
    right = evaluate(expr.right, env)
    if expr.op == "+":
        return left + right
    if expr.op == "-":
        return left - right
    if expr.op == "*":
        return left * right
    if right == 0.0:
        raise ExprEvalError("division by zero")
    return left / right


def variables_of(expr: Expr) -> frozenset[str]:
    if isinstance(expr, Num):
        return frozenset()
    if isinstance(expr, Var):
        return frozenset({expr.name})
    if isinstance(expr, Neg):
        return variables_of(expr.operand)
    return variables_of(expr.left) | variables_of(expr.right)


def render(expr: Expr, parent_prec: int = 0) -> str:
    """Canonical text form; emits parentheses only where grouping requires."""
    if isinstance(expr, Num):
        value = expr.value
        return repr(int(value)) if value == int(value) and abs(value) < 1e15 else repr(value)
    if isinstance(expr, Var):
        return expr.name
    if isinstance(expr, Neg):
        inner = render(expr.operand, 3)
        return f"-{inner}"
    prec = _PRECEDENCE[expr.op]
    left = render(expr.left, prec)
    # the right side of - and / must re-parenthesize equal precedence
    right = render(expr.right, prec + 1)
    text = f"{left} {expr.op} {right}"
    if prec < parent_prec:
        return f"({text})"
    return text
