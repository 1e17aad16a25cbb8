# expr.py
"""
Small arithmetic-expression evaluator for user-defined metric coefficients.

Expressions use + - * / ^ (or **), the functions sin, cos, sqrt, exp, the
constant pi, the variables x and y, and any named parameters supplied by the
caller. Parsing goes through sympy; evaluation is a numpy lambdified function
that always broadcasts to the shape of its inputs.
"""

import logging
import re

import numpy as np
import sympy
from sympy.parsing.sympy_parser import (
    convert_xor,
    parse_expr,
    standard_transformations,
)

from .errors import ExpressionError

log = logging.getLogger(__name__)

# ---- CONFIG ----
ALLOWED_FUNCTIONS = {
    "sin": sympy.sin,
    "cos": sympy.cos,
    "sqrt": sympy.sqrt,
    "exp": sympy.exp,
}
VARIABLES = ("x", "y")
_TOKEN_OK = re.compile(r"^[0-9A-Za-z_+\-*/^(). \t]*$")
_TRANSFORMS = standard_transformations + (convert_xor,)

X, Y = sympy.symbols("x y", real=True)


def _check_text(text):
    if not isinstance(text, str) or not text.strip():
        raise ExpressionError(f"empty expression: {text!r}")
    if not _TOKEN_OK.match(text) or "__" in text:
        raise ExpressionError(f"illegal characters in expression: {text!r}")


def parse(text, params=None, variables=VARIABLES):
    """
    Parse `text` into a sympy expression with parameters substituted.
    Raises ExpressionError for syntax errors or unknown names.
    """
    _check_text(text)
    params = dict(params or {})
    symbols = {name: sympy.Symbol(name, real=True) for name in variables}
    local = dict(ALLOWED_FUNCTIONS)
    local.update(symbols)
    local["pi"] = sympy.pi
    for name in params:
        local[name] = sympy.Symbol(name, real=True)
    global_dict = {
        "__builtins__": {},
        "Symbol": sympy.Symbol,
        "Function": sympy.Function,
        "Integer": sympy.Integer,
        "Float": sympy.Float,
        "Rational": sympy.Rational,
    }
    try:
        expr = parse_expr(text, local_dict=local, global_dict=global_dict,
                          transformations=_TRANSFORMS)
    except (SyntaxError, TypeError, ValueError, AttributeError, NameError) as exc:
        raise ExpressionError(f"cannot parse {text!r}: {exc}") from exc
    if not isinstance(expr, sympy.Expr):
        raise ExpressionError(f"{text!r} is not an arithmetic expression")

    allowed_names = set(variables) | set(params)
    unknown = sorted(s.name for s in expr.free_symbols if s.name not in allowed_names)
    if unknown:
        raise ExpressionError(f"unknown names in {text!r}: {', '.join(unknown)}")
    for func in expr.atoms(sympy.Function):
        if type(func).__name__ not in ALLOWED_FUNCTIONS:
            raise ExpressionError(f"function {type(func).__name__!r} not allowed in {text!r}")

    if params:
        expr = expr.subs({local[k]: sympy.Float(float(v)) for k, v in params.items()})
    return expr


class Expression:
    """A parsed expression f(x, y), callable on scalars or numpy arrays."""

    def __init__(self, expr, text=None):
        self.expr = expr
        self.text = text if text is not None else str(expr)
        self._fn = sympy.lambdify((X, Y), expr, modules="numpy")

    @classmethod
    def from_text(cls, text, params=None):
        return cls(parse(text, params), text)

    def __call__(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            value = np.asarray(self._fn(x, y), dtype=float)
        shape = np.broadcast(x, y).shape
        if value.shape != shape:
            value = np.broadcast_to(value, shape).copy()
        return value if shape else float(value)

    def derivative(self, var):
        """Symbolic partial derivative with respect to "x" or "y"."""
        sym = X if var == "x" else Y
        return Expression(sympy.diff(self.expr, sym))

    def depends_on(self, var):
        return any(s.name == var for s in self.expr.free_symbols)

    def __repr__(self):
        return f"Expression({self.text!r})"


def compile_expression(text, params=None):
    return Expression.from_text(text, params)


def evaluate_constant(value, params=None):
    """Numbers pass through; strings are parsed with `params` and no variables."""
    if isinstance(value, (int, float)):
        return float(value)
    expr = parse(str(value), params, variables=())
    try:
        return float(expr.evalf())
    except TypeError as exc:
        raise ExpressionError(f"{value!r} does not evaluate to a number") from exc
