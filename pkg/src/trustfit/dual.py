"""Forward-mode dual numbers with a fixed number of derivative slots.

A :class:`Dual` carries a value and the partial derivatives of that value with
respect to ``n`` seed variables.  Values may be numpy arrays, in which case
each element is an independent dual scalar; the derivative array always has
one extra trailing axis of length ``n``.  Derivative arrays are allowed to be
broadcastable rather than fully expanded, e.g. a seed parameter combined with
a ``(v,)`` data array keeps a ``(n,)`` derivative until it is multiplied by
something that varies per point.

Numpy ufuncs dispatch here through ``__array_ufunc__``, so model code can be
written with ``np.exp``, ``np.sin`` and friends and evaluated over either
plain floats or duals.
"""

import numpy as np

__all__ = ["Dual", "seed", "value_of", "jacobian_of"]


def _col(a):
    # value -> shape that broadcasts against a derivative array
    return np.expand_dims(np.asarray(a), -1)


class Dual:
    """Scalar (or elementwise array) dual number."""

    __slots__ = ("value", "deriv")

    def __init__(self, value, deriv):
        self.value = value
        self.deriv = np.asarray(deriv, dtype=float)

    @property
    def nslots(self):
        return self.deriv.shape[-1]

    def __repr__(self):
        return f"Dual({self.value!r}, {self.deriv!r})"

    # numpy dispatch -------------------------------------------------------

    def __array_ufunc__(self, ufunc, method, *inputs, **kwargs):
        if method != "__call__" or kwargs.get("out") is not None:
            return NotImplemented
        rule = _UFUNC_RULES.get(ufunc)
        if rule is None:
            return NotImplemented
        return rule(*inputs)

    # python operators -----------------------------------------------------

    def __add__(self, other):
        return _add(self, other)

    def __radd__(self, other):
        return _add(other, self)

    def __sub__(self, other):
        return _sub(self, other)

    def __rsub__(self, other):
        return _sub(other, self)

    def __mul__(self, other):
        return _mul(self, other)

    def __rmul__(self, other):
        return _mul(other, self)

    def __truediv__(self, other):
        return _div(self, other)

    def __rtruediv__(self, other):
        return _div(other, self)

    def __pow__(self, other):
        return _pow(self, other)

    def __rpow__(self, other):
        return _pow(other, self)

    def __neg__(self):
        return Dual(-np.asarray(self.value), -self.deriv)

    def __pos__(self):
        return self

    def __abs__(self):
        return _abs(self)


def _split(a):
    if isinstance(a, Dual):
        return a.value, a.deriv
    return a, None


def _add(a, b):
    av, ad = _split(a)
    bv, bd = _split(b)
    if ad is None:
        return Dual(np.add(av, bv), bd)
    if bd is None:
        return Dual(np.add(av, bv), ad)
    return Dual(np.add(av, bv), ad + bd)


def _sub(a, b):
    av, ad = _split(a)
    bv, bd = _split(b)
    if ad is None:
        return Dual(np.subtract(av, bv), -bd)
    if bd is None:
        return Dual(np.subtract(av, bv), ad)
    return Dual(np.subtract(av, bv), ad - bd)


def _mul(a, b):
    av, ad = _split(a)
    bv, bd = _split(b)
    if ad is None:
        return Dual(np.multiply(av, bv), _col(av) * bd)
    if bd is None:
        return Dual(np.multiply(av, bv), ad * _col(bv))
    return Dual(np.multiply(av, bv), ad * _col(bv) + _col(av) * bd)


def _div(a, b):
    av, ad = _split(a)
    bv, bd = _split(b)
    q = np.divide(av, bv)
    if bd is None:
        return Dual(q, ad / _col(bv))
    # d(a/b) = (a' - q b') / b
    num = -_col(q) * bd if ad is None else ad - _col(q) * bd
    return Dual(q, num / _col(bv))


def _pow(a, b):
    av, ad = _split(a)
    bv, bd = _split(b)
    out = np.power(av, bv)
    deriv = 0.0
    if ad is not None:
        if bd is None and np.ndim(bv) == 0 and float(bv) == 0.0:
            deriv = ad * 0.0
        else:
            deriv = ad * _col(np.multiply(bv, np.power(av, np.subtract(bv, 1))))
    if bd is not None:
        deriv = deriv + bd * _col(np.multiply(out, np.log(av)))
    return Dual(out, deriv)


def _unary(f, df):
    def rule(a):
        v = a.value
        return Dual(f(v), a.deriv * _col(df(v)))

    return rule


def _abs(a):
    return Dual(np.abs(a.value), a.deriv * _col(np.sign(a.value)))


def _sqrt(a):
    s = np.sqrt(a.value)
    return Dual(s, a.deriv * _col(0.5 / s))


def _exp(a):
    e = np.exp(a.value)
    return Dual(e, a.deriv * _col(e))


_UFUNC_RULES = {
    np.add: _add,
    np.subtract: _sub,
    np.multiply: _mul,
    np.true_divide: _div,
    np.power: _pow,
    np.negative: lambda a: -a,
    np.positive: lambda a: a,
    np.absolute: _abs,
    np.exp: _exp,
    np.sqrt: _sqrt,
    np.square: lambda a: _mul(a, a),
    np.log: _unary(np.log, lambda v: 1.0 / v),
    np.log1p: _unary(np.log1p, lambda v: 1.0 / (1.0 + v)),
    np.expm1: _unary(np.expm1, np.exp),
    np.sin: _unary(np.sin, np.cos),
    np.cos: _unary(np.cos, lambda v: -np.sin(v)),
    np.tan: _unary(np.tan, lambda v: 1.0 / np.cos(v) ** 2),
    np.tanh: _unary(np.tanh, lambda v: 1.0 - np.tanh(v) ** 2),
    np.arctan: _unary(np.arctan, lambda v: 1.0 / (1.0 + v * v)),
}


def seed(x):
    """Return one dual per entry of ``x`` with unit derivative in its own slot."""
    x = np.asarray(x, dtype=float)
    eye = np.eye(x.size)
    return [Dual(float(x[j]), eye[j]) for j in range(x.size)]


def value_of(a):
    """Real part of ``a`` (identity for plain numbers)."""
    return a.value if isinstance(a, Dual) else a


def jacobian_of(a, shape, n):
    """Expand the derivative part of ``a`` to a dense ``shape + (n,)`` array.

    Plain numbers (no dependence on the seeds) give zeros.
    """
    if not isinstance(a, Dual):
        return np.zeros(tuple(shape) + (n,))
    return np.array(np.broadcast_to(a.deriv, tuple(shape) + (n,)), dtype=float)
