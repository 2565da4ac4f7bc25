"""Truncated Taylor-jet arithmetic (orders 0..2) and evaluable scalar fields.

A ``Jet`` carries the value, gradient and symmetric Hessian of a scalar
quantity at one point of R^n.  Propagating jets through an expression tree
yields exact first and second derivatives; finite differences are used only
as cross-checks (:func:`fd_crosscheck`).

Scalar fields are anything with ``.jet(point, order)``; expression-backed
fields support order 2, and each directional derivative consumes one order
(asking for more raises :class:`OrderExhausted`).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, DomainError, OrderExhausted

MAX_ORDER = 2


class Jet:
    """Value / gradient / Hessian of a scalar at a point of R^n.

    ``grad`` is present iff order >= 1, ``hess`` iff order == 2.  The Hessian
    stays exactly symmetric: every arithmetic rule below only ever adds
    symmetric arrays or symmetrized outer products.
    """

    __slots__ = ("n", "order", "value", "grad", "hess")

    def __init__(self, n, order, value, grad=None, hess=None):
        if order not in (0, 1, 2):
            raise DimensionMismatch(f"jet order must be 0, 1 or 2, got {order}")
        self.n = int(n)
        self.order = int(order)
        self.value = float(value)
        self.grad = None if order < 1 else np.asarray(grad, dtype=float)
        self.hess = None if order < 2 else np.asarray(hess, dtype=float)
        if self.grad is not None and self.grad.shape != (self.n,):
            raise DimensionMismatch("gradient length does not match n")
        if self.hess is not None and self.hess.shape != (self.n, self.n):
            raise DimensionMismatch("hessian shape does not match n")

    @staticmethod
    def constant(value, n, order):
        return Jet(n, order, value,
                   np.zeros(n) if order >= 1 else None,
                   np.zeros((n, n)) if order >= 2 else None)

    @staticmethod
    def coordinate(value, index, n, order):
        grad = hess = None
        if order >= 1:
            grad = np.zeros(n)
            grad[index] = 1.0
        if order >= 2:
            hess = np.zeros((n, n))
        return Jet(n, order, value, grad, hess)

    def truncated(self, order):
        """Drop derivative data above ``order`` (no recomputation)."""
        if order > self.order:
            raise OrderExhausted(f"jet holds order {self.order}, asked for {order}")
        return Jet(self.n, order, self.value, self.grad, self.hess)

    def _check(self, other):
        if self.n != other.n:
            raise DimensionMismatch(f"jet dimensions differ: {self.n} vs {other.n}")
        if self.order != other.order:
            raise DimensionMismatch(f"jet orders differ: {self.order} vs {other.order}")

    def _coerce(self, other):
        if isinstance(other, Jet):
            return other
        return Jet.constant(float(other), self.n, self.order)

    def __add__(self, other):
        o = self._coerce(other)
        self._check(o)
        return Jet(self.n, self.order, self.value + o.value,
                   None if self.order < 1 else self.grad + o.grad,
                   None if self.order < 2 else self.hess + o.hess)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        self._check(o)
        return Jet(self.n, self.order, self.value - o.value,
                   None if self.order < 1 else self.grad - o.grad,
                   None if self.order < 2 else self.hess - o.hess)

    def __rsub__(self, other):
        return self._coerce(other).__sub__(self)

    def __neg__(self):
        return Jet(self.n, self.order, -self.value,
                   None if self.order < 1 else -self.grad,
                   None if self.order < 2 else -self.hess)

    def __mul__(self, other):
        o = self._coerce(other)
        self._check(o)
        grad = hess = None
        if self.order >= 1:
            grad = self.value * o.grad + o.value * self.grad
        if self.order >= 2:
            cross = np.outer(self.grad, o.grad)
            hess = self.value * o.hess + o.value * self.hess + cross + cross.T
        return Jet(self.n, self.order, self.value * o.value, grad, hess)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        self._check(o)
        if o.value == 0.0:
            raise DomainError("division by zero")
        return self * o._reciprocal()

    def __rtruediv__(self, other):
        return self._coerce(other).__truediv__(self)

    def _reciprocal(self):
        v = self.value
        return self.compose(1.0 / v, -1.0 / (v * v), 2.0 / (v * v * v))

    def __pow__(self, exponent):
        if not isinstance(exponent, int):
            raise DomainError("integer exponents only")
        if exponent == 0:
            return Jet.constant(1.0, self.n, self.order)
        if exponent == 1:
            return Jet(self.n, self.order, self.value, self.grad, self.hess)
        v = self.value
        if v == 0.0 and exponent < 0:
            raise DomainError("zero raised to a negative power")
        if v == 0.0:
            d1 = 1.0 if exponent == 1 else 0.0
            d2 = 2.0 if exponent == 2 else 0.0
            return self.compose(0.0, d1, d2)
        return self.compose(v ** exponent,
                            exponent * v ** (exponent - 1),
                            exponent * (exponent - 1) * v ** (exponent - 2))

    def compose(self, f0, f1, f2):
        """Chain rule through a scalar function with derivatives f0, f1, f2 at self.value."""
        grad = hess = None
        if self.order >= 1:
            grad = f1 * self.grad
        if self.order >= 2:
            hess = f1 * self.hess + f2 * np.outer(self.grad, self.grad)
        return Jet(self.n, self.order, f0, grad, hess)

    def __repr__(self):
        return f"Jet(n={self.n}, order={self.order}, value={self.value!r})"


def sin(j: Jet) -> Jet:
    return j.compose(math.sin(j.value), math.cos(j.value), -math.sin(j.value))


def cos(j: Jet) -> Jet:
    return j.compose(math.cos(j.value), -math.sin(j.value), -math.cos(j.value))


def exp(j: Jet) -> Jet:
    e = math.exp(j.value)
    return j.compose(e, e, e)


def log(j: Jet) -> Jet:
    if j.value <= 0.0:
        raise DomainError(f"log of non-positive value {j.value}")
    return j.compose(math.log(j.value), 1.0 / j.value, -1.0 / (j.value * j.value))


def sqrt(j: Jet) -> Jet:
    if j.value < 0.0:
        raise DomainError(f"sqrt of negative value {j.value}")
    if j.value == 0.0:
        if j.order == 0:
            return Jet.constant(0.0, j.n, 0)
        raise DomainError("sqrt not differentiable at zero")
    r = math.sqrt(j.value)
    return j.compose(r, 0.5 / r, -0.25 / (r * j.value))


# --------------------------------------------------------------------------
# Expression trees
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Expression:
    """Base node; subclasses form the closed expression language."""


@dataclass(frozen=True)
class Const(Expression):
    value: float


@dataclass(frozen=True)
class Coord(Expression):
    index: int


@dataclass(frozen=True)
class Add(Expression):
    left: Expression
    right: Expression


@dataclass(frozen=True)
class Sub(Expression):
    left: Expression
    right: Expression


@dataclass(frozen=True)
class Mul(Expression):
    left: Expression
    right: Expression


@dataclass(frozen=True)
class Div(Expression):
    left: Expression
    right: Expression


@dataclass(frozen=True)
class Neg(Expression):
    arg: Expression


@dataclass(frozen=True)
class Pow(Expression):
    base: Expression
    exponent: int


@dataclass(frozen=True)
class Call(Expression):
    fn: str
    arg: Expression


FUNCTIONS = {"sin": sin, "cos": cos, "exp": exp, "log": log, "sqrt": sqrt}

ZERO = Const(0.0)
ONE = Const(1.0)


def coordinate_indices(expr: Expression) -> set[int]:
    """All coordinate indices referenced by the expression."""
    out: set[int] = set()
    stack = [expr]
    while stack:
        node = stack.pop()
        if isinstance(node, Coord):
            out.add(node.index)
        elif isinstance(node, (Add, Sub, Mul, Div)):
            stack.extend((node.left, node.right))
        elif isinstance(node, Neg):
            stack.append(node.arg)
        elif isinstance(node, Pow):
            stack.append(node.base)
        elif isinstance(node, Call):
            stack.append(node.arg)
    return out


def jet_eval(expr: Expression, point, order: int) -> Jet:
    """Evaluate an expression tree to a jet at ``point``.

    Raises DomainError for division by zero / log of non-positive /
    sqrt of negative, DimensionMismatch for out-of-range coordinates.
    """
    p = np.asarray(point, dtype=float)
    if p.ndim != 1:
        raise DimensionMismatch("point must be a flat coordinate sequence")
    if order not in (0, 1, 2):
        raise DimensionMismatch(f"order must be 0, 1 or 2, got {order}")
    n = p.shape[0]

    def rec(node):
        if isinstance(node, Const):
            return Jet.constant(node.value, n, order)
        if isinstance(node, Coord):
            if not 0 <= node.index < n:
                raise DimensionMismatch(
                    f"coordinate index {node.index} out of range for dimension {n}")
            return Jet.coordinate(p[node.index], node.index, n, order)
        if isinstance(node, Add):
            return rec(node.left) + rec(node.right)
        if isinstance(node, Sub):
            return rec(node.left) - rec(node.right)
        if isinstance(node, Mul):
            return rec(node.left) * rec(node.right)
        if isinstance(node, Div):
            return rec(node.left) / rec(node.right)
        if isinstance(node, Neg):
            return -rec(node.arg)
        if isinstance(node, Pow):
            return rec(node.base) ** node.exponent
        if isinstance(node, Call):
            return FUNCTIONS[node.fn](rec(node.arg))
        raise TypeError(f"not an expression node: {node!r}")

    return rec(expr)


# --------------------------------------------------------------------------
# Scalar and vector fields
# --------------------------------------------------------------------------

class ScalarField:
    """Evaluable scalar field: ``jet(point, order)`` for order <= max_order."""

    n: int
    max_order: int

    def jet(self, point, order: int) -> Jet:
        raise NotImplementedError

    def value(self, point) -> float:
        return self.jet(point, 0).value

    def _guard(self, order):
        if order > self.max_order:
            raise OrderExhausted(
                f"field supports jets up to order {self.max_order}, asked for {order}")


class ExprField(ScalarField):
    """Scalar field backed by an expression tree (full order-2 jets)."""

    def __init__(self, expr: Expression, n: int):
        self.expr = expr
        self.n = n
        self.max_order = MAX_ORDER

    def jet(self, point, order):
        self._guard(order)
        return jet_eval(self.expr, point, order)

    def __repr__(self):
        return f"ExprField({self.expr!r}, n={self.n})"


class ConstField(ScalarField):
    def __init__(self, value: float, n: int):
        self.const = float(value)
        self.n = n
        self.max_order = MAX_ORDER

    def jet(self, point, order):
        return Jet.constant(self.const, self.n, order)


class VectorField:
    """Tuple of scalar component fields X^k, so X = sum_k X^k d/dx_k."""

    def __init__(self, components):
        comps = tuple(components)
        if not comps:
            raise DimensionMismatch("vector field needs at least one component")
        n = comps[0].n
        if any(c.n != n for c in comps) or len(comps) != n:
            raise DimensionMismatch("vector field needs exactly n components on R^n")
        self.components = comps
        self.n = n
        self.max_order = min(c.max_order for c in comps)

    @staticmethod
    def from_expressions(exprs, n):
        return VectorField(tuple(ExprField(e, n) for e in exprs))

    def values(self, point):
        return np.array([c.jet(point, 0).value for c in self.components])


class DirectionalDerivativeField(ScalarField):
    """X(f): contraction of f's next-order jet with X's components.

    Evaluating at order k consumes f at order k+1 and the components at
    order k, so the result supports one order less than its inputs.
    """

    def __init__(self, field: ScalarField, direction: VectorField):
        if field.n != direction.n:
            raise DimensionMismatch("field and direction live on different R^n")
        self.field = field
        self.direction = direction
        self.n = field.n
        self.max_order = min(field.max_order - 1, direction.max_order)

    def jet(self, point, order):
        self._guard(order)
        fj = self.field.jet(point, order + 1)
        comps = [c.jet(point, order) for c in self.direction.components]
        vals = np.array([c.value for c in comps])
        value = float(vals @ fj.grad)
        grad = None
        if order >= 1:
            cgrads = np.stack([c.grad for c in comps])        # (n over m, n over a)
            grad = cgrads.T @ fj.grad + fj.hess @ vals
        return Jet(self.n, order, value, grad, None)


def directional_derivative(field: ScalarField, direction: VectorField) -> ScalarField:
    """Derivative of a scalar field along a vector field, as a new field."""
    return DirectionalDerivativeField(field, direction)


def fd_crosscheck(field: ScalarField, point, direction: VectorField, step: float) -> float:
    """|jet directional derivative - central difference| / max(1, |jet value|)."""
    if step <= 0:
        raise DomainError("finite-difference step must be positive")
    p = np.asarray(point, dtype=float)
    d = direction.values(p)
    dd = directional_derivative(field, direction).jet(p, 0).value
    fplus = field.jet(p + step * d, 0).value
    fminus = field.jet(p - step * d, 0).value
    fd = (fplus - fminus) / (2.0 * step)
    return abs(dd - fd) / max(1.0, abs(dd))
