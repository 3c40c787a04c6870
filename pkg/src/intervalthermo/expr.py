"""A small arithmetic grammar for user-defined branch expressions.

Expressions are written in ``x`` with ``+ - * / ^ **``, numeric literals, the
constants ``pi`` and ``e``, and the functions ``sin cos tan exp log sqrt abs``.
Parsing goes through :mod:`ast` with a whitelist, so nothing is ever evaluated
as Python; the validated tree is rebuilt as a sympy expression, differentiated
symbolically and compiled to numpy.
"""

import ast
import operator

import numpy as np
import sympy

from .errors import ConfigError

_X = sympy.Symbol("x", real=True)

_FUNCS = {
    "sin": sympy.sin,
    "cos": sympy.cos,
    "tan": sympy.tan,
    "exp": sympy.exp,
    "log": sympy.log,
    "sqrt": sympy.sqrt,
    "abs": sympy.Abs,
}
_CONSTS = {"pi": sympy.pi, "e": sympy.E}
_BINOPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
}


def _build(node):
    if isinstance(node, ast.Expression):
        return _build(node.body)
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        return _BINOPS[type(node.op)](_build(node.left), _build(node.right))
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        inner = _build(node.operand)
        return -inner if isinstance(node.op, ast.USub) else inner
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) and not isinstance(node.value, bool):
        return sympy.nsimplify(node.value) if isinstance(node.value, int) else sympy.Float(node.value)
    if isinstance(node, ast.Name):
        if node.id == "x":
            return _X
        if node.id in _CONSTS:
            return _CONSTS[node.id]
        raise ConfigError(f"unknown name {node.id!r} in expression")
    if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id in _FUNCS:
        if len(node.args) != 1 or node.keywords:
            raise ConfigError(f"{node.func.id}() takes exactly one argument")
        return _FUNCS[node.func.id](_build(node.args[0]))
    raise ConfigError(f"unsupported syntax in expression: {ast.dump(node)[:60]}")


def parse(text):
    """Parse ``text`` into a sympy expression in ``x``."""
    source = text.strip().replace("^", "**")
    if not source:
        raise ConfigError("empty expression")
    try:
        tree = ast.parse(source, mode="eval")
    except SyntaxError as exc:
        raise ConfigError(f"cannot parse expression {text!r}: {exc.msg}") from None
    return _build(tree)


def _vectorize(fn, expr):
    if expr.free_symbols:
        return fn

    def const(x):
        return np.full(np.shape(x), float(expr))

    return const


def compile_expression(text):
    """Return ``(f, df)`` numpy callables for the expression and its derivative."""
    expr = parse(text)
    deriv = sympy.diff(expr, _X)
    f = _vectorize(sympy.lambdify(_X, expr, modules="numpy"), expr)
    df = _vectorize(sympy.lambdify(_X, deriv, modules="numpy"), deriv)
    return f, df
