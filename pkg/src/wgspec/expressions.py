"""Small expression grammar for config-supplied functions.

Expressions are strings over the identifiers ``x, p1, p2, p3`` (and ``pi``),
the operators ``+ - * / ^`` and the functions ``sin, cos, exp, sech, sqrt``.
They are parsed with sympy so that derivatives are exact; evaluation goes
through ``sympy.lambdify`` onto numpy.
"""

import re

import numpy as np
import sympy
from sympy.parsing.sympy_parser import (
    convert_xor,
    parse_expr,
    standard_transformations,
)

from .errors import ConfigError

_SYMBOLS = {name: sympy.Symbol(name, real=True) for name in ("x", "p1", "p2", "p3")}
_FUNCTIONS = {
    "sin": sympy.sin,
    "cos": sympy.cos,
    "exp": sympy.exp,
    "sech": sympy.sech,
    "sqrt": sympy.sqrt,
}
_TOKEN = re.compile(r"\s*(?:(\d+\.?\d*(?:[eE][-+]?\d+)?|\.\d+(?:[eE][-+]?\d+)?)|([A-Za-z_][A-Za-z_0-9]*)|([-+*/^()]))")
_TRANSFORMS = standard_transformations + (convert_xor,)

# sympy's lambdify does not know sech for numpy
_NUMPY_MODULES = [{"sech": lambda z: 1.0 / np.cosh(z)}, "numpy"]


def _check_tokens(text):
    pos = 0
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            raise ConfigError(f"unexpected character in expression {text!r} at {pos}")
        ident = m.group(2)
        if ident is not None and ident not in _SYMBOLS and ident not in _FUNCTIONS and ident != "pi":
            raise ConfigError(f"unknown identifier {ident!r} in expression {text!r}")
        pos = m.end()


class Expression:
    """A parsed scalar expression in a fixed list of variables."""

    def __init__(self, source, variables=("x",)):
        if isinstance(source, (int, float)):
            source = repr(float(source))
        if isinstance(source, sympy.Expr):
            expr = source
        else:
            _check_tokens(source)
            local = dict(_SYMBOLS)
            local.update(_FUNCTIONS)
            local["pi"] = sympy.pi
            try:
                expr = parse_expr(source, local_dict=local, transformations=_TRANSFORMS, evaluate=True)
            except Exception as exc:  # sympy raises a zoo of exception types
                raise ConfigError(f"cannot parse expression {source!r}: {exc}") from exc
        self.variables = tuple(variables)
        free = {s.name for s in expr.free_symbols}
        extra = free - set(self.variables)
        if extra:
            raise ConfigError(f"expression {source!r} uses {sorted(extra)}, allowed {self.variables}")
        self.expr = sympy.sympify(expr)
        self.source = str(source)
        self._fn = sympy.lambdify([_SYMBOLS[v] for v in self.variables], self.expr, modules=_NUMPY_MODULES)

    def __call__(self, *args):
        args = [np.asarray(a, dtype=float) for a in args]
        out = self._fn(*args)
        shape = np.broadcast_shapes(*(a.shape for a in args)) if args else ()
        return np.broadcast_to(np.asarray(out, dtype=float), shape).copy()

    def diff(self, var, order=1):
        return Expression(sympy.diff(self.expr, _SYMBOLS[var], order), self.variables)

    @property
    def is_constant(self):
        return not self.expr.free_symbols

    def __repr__(self):
        return f"Expression({self.source!r})"


def _fd_derivative(values, h, order):
    """4th-order finite differences on a uniform grid (one-sided at the ends)."""
    v = np.asarray(values, dtype=float)
    n = v.size
    if n < 7:
        raise ConfigError("need at least 7 samples for 4th-order differences")
    d = np.empty_like(v)
    if order == 1:
        d[2:-2] = (v[:-4] - 8 * v[1:-3] + 8 * v[3:-1] - v[4:]) / (12 * h)
        c = np.array([-25, 48, -36, 16, -3]) / (12 * h)
        d[0] = c @ v[:5]
        d[1] = np.array([-3, -10, 18, -6, 1]) / (12 * h) @ v[:5]
        d[-1] = -(c @ v[::-1][:5])
        d[-2] = -(np.array([-3, -10, 18, -6, 1]) / (12 * h) @ v[::-1][:5])
    elif order == 2:
        d[2:-2] = (-v[:-4] + 16 * v[1:-3] - 30 * v[2:-2] + 16 * v[3:-1] - v[4:]) / (12 * h * h)
        c0 = np.array([45, -154, 214, -156, 61, -10]) / (12 * h * h)
        c1 = np.array([10, -15, -4, 14, -6, 1]) / (12 * h * h)
        d[0] = c0 @ v[:6]
        d[1] = c1 @ v[:6]
        d[-1] = c0 @ v[::-1][:6]
        d[-2] = c1 @ v[::-1][:6]
    else:
        raise ValueError("order must be 1 or 2")
    return d


class ScalarFunction:
    """A function of arc length with up to two derivatives.

    Built from an expression string (exact derivatives) or from samples on a
    uniform grid (4th-order finite differences, cubic interpolation between
    samples).
    """

    def __init__(self, expression=None, samples=None):
        if (expression is None) == (samples is None):
            raise ValueError("give exactly one of expression or samples")
        self._expr = None
        self._samples = None
        if expression is not None:
            e = expression if isinstance(expression, Expression) else Expression(expression, ("x",))
            self._expr = (e, e.diff("x"), e.diff("x", 2))
            self.source = e.source
        else:
            xs, vs = (np.asarray(a, dtype=float) for a in samples)
            h = xs[1] - xs[0]
            if not np.allclose(np.diff(xs), h, rtol=1e-9, atol=1e-12):
                raise ConfigError("sampled functions need a uniform grid")
            from scipy.interpolate import CubicSpline

            self._samples = tuple(
                CubicSpline(xs, d) for d in (vs, _fd_derivative(vs, h, 1), _fd_derivative(vs, h, 2))
            )
            self.source = "sampled"

    @classmethod
    def constant(cls, value):
        return cls(expression=repr(float(value)))

    @property
    def is_constant(self):
        return self._expr is not None and self._expr[0].is_constant

    def __call__(self, x, derivative=0):
        if self._expr is not None:
            return self._expr[derivative](x)
        return self._samples[derivative](np.asarray(x, dtype=float))

    def __repr__(self):
        return f"ScalarFunction({self.source!r})"


def as_scalar_function(value):
    if value is None:
        return None
    if isinstance(value, ScalarFunction):
        return value
    if isinstance(value, (int, float)):
        return ScalarFunction.constant(value)
    if isinstance(value, str):
        return ScalarFunction(expression=value)
    if callable(value):
        raise TypeError("plain callables lack derivatives; wrap them as ScalarFunction samples")
    raise TypeError(f"cannot interpret {value!r} as a scalar function")
