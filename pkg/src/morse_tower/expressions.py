"""Scenario expression language: arithmetic, powers, exp, sin, cos.

Expressions are validated on the Python AST before sympy ever sees them, so
a scenario file cannot smuggle in attribute access or arbitrary calls.
"""
from __future__ import annotations

import ast
from typing import Iterable, Sequence

import numpy as np
import sympy as sp

ALLOWED_FUNCS = {"exp": sp.exp, "sin": sp.sin, "cos": sp.cos}
ALLOWED_CONSTS = {"pi": sp.pi}

_ALLOWED_NODES = (ast.Expression, ast.BinOp, ast.UnaryOp, ast.Add, ast.Sub, ast.Mult,
                  ast.Div, ast.Pow, ast.USub, ast.UAdd, ast.Constant, ast.Name, ast.Load,
                  ast.Call)


class ExpressionError(ValueError):
    pass


def parse(text: str, variables: Iterable[str]) -> sp.Expr:
    """Parse ``text`` into a sympy expression over ``variables``."""
    variables = list(variables)
    if not isinstance(text, str) or not text.strip():
        raise ExpressionError("expression must be a non-empty string")
    try:
        tree = ast.parse(text.replace("^", "**"), mode="eval")
    except SyntaxError as exc:
        raise ExpressionError(f"cannot parse {text!r}: {exc.msg}") from None
    for node in ast.walk(tree):
        if not isinstance(node, _ALLOWED_NODES):
            raise ExpressionError(f"{type(node).__name__} not allowed in {text!r}")
        if isinstance(node, ast.Constant) and not isinstance(node.value, (int, float)):
            raise ExpressionError(f"non-numeric constant in {text!r}")
        if isinstance(node, ast.Call):
            if not isinstance(node.func, ast.Name) or node.func.id not in ALLOWED_FUNCS:
                raise ExpressionError(f"only {sorted(ALLOWED_FUNCS)} may be called in {text!r}")
            if len(node.args) != 1 or node.keywords:
                raise ExpressionError(f"functions take exactly one argument in {text!r}")
        if isinstance(node, ast.Name):
            if node.id not in variables and node.id not in ALLOWED_FUNCS and node.id not in ALLOWED_CONSTS:
                raise ExpressionError(f"unknown symbol {node.id!r} in {text!r}")
    names = {v: sp.Symbol(v, real=True) for v in variables}
    names.update(ALLOWED_FUNCS)
    names.update(ALLOWED_CONSTS)
    return _to_sympy(tree.body, names)


def _to_sympy(node, names):
    if isinstance(node, ast.Constant):
        return sp.Rational(node.value) if isinstance(node.value, int) else sp.Float(node.value)
    if isinstance(node, ast.Name):
        return names[node.id]
    if isinstance(node, ast.UnaryOp):
        val = _to_sympy(node.operand, names)
        return -val if isinstance(node.op, ast.USub) else val
    if isinstance(node, ast.Call):
        return names[node.func.id](_to_sympy(node.args[0], names))
    left = _to_sympy(node.left, names)
    right = _to_sympy(node.right, names)
    op = type(node.op)
    if op is ast.Add:
        return left + right
    if op is ast.Sub:
        return left - right
    if op is ast.Mult:
        return left * right
    if op is ast.Div:
        return left / right
    return left ** right


def symbols(names: Sequence[str]) -> list[sp.Symbol]:
    return [sp.Symbol(n, real=True) for n in names]


def compile_numeric(exprs: Sequence[sp.Expr], args: Sequence[sp.Symbol], cse: bool = True):
    """Vectorized evaluator returning one broadcast array per expression."""
    fn = sp.lambdify(list(args), list(exprs), modules="numpy", cse=cse)

    def evaluate(*arrays):
        shape = np.broadcast(*arrays).shape if arrays else ()
        out = fn(*arrays)
        return [o if isinstance(o, np.ndarray) and o.shape == shape and o.dtype == float
                else np.broadcast_to(np.asarray(o, dtype=float), shape) for o in out]

    return evaluate
