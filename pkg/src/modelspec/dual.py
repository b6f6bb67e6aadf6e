"""
Forward-mode automatic differentiation over numpy arrays.

Dual carries one infinitesimal (value, derivative). HyperDual carries two
infinitesimals and their product, which yields mixed second derivatives.
Both operate elementwise on arrays, so a whole grid is differentiated in
one pass.
"""

from typing import Callable, Tuple, Union

import numpy as np

Number = Union[float, np.ndarray]


def _as_field(x: Number) -> np.ndarray:
    """Float array, or complex when the input carries complex entries."""
    arr = np.asarray(x)
    return arr.astype(complex if np.iscomplexobj(arr) else float, copy=False)


class Dual:
    """First-order dual number a + b*eps with eps^2 = 0."""

    __slots__ = ('val', 'dot')
    __array_ufunc__ = None

    def __init__(self, val: Number, dot: Number = 0.0):
        self.val = _as_field(val)
        self.dot = _as_field(dot)

    @staticmethod
    def lift(other) -> 'Dual':
        return other if isinstance(other, Dual) else Dual(other, 0.0)

    def _chain(self, f0, f1) -> 'Dual':
        return Dual(f0, f1 * self.dot)

    def __add__(self, other):
        o = Dual.lift(other)
        return Dual(self.val + o.val, self.dot + o.dot)

    __radd__ = __add__

    def __sub__(self, other):
        o = Dual.lift(other)
        return Dual(self.val - o.val, self.dot - o.dot)

    def __rsub__(self, other):
        return Dual.lift(other) - self

    def __neg__(self):
        return Dual(-self.val, -self.dot)

    def __mul__(self, other):
        o = Dual.lift(other)
        return Dual(self.val * o.val, self.dot * o.val + self.val * o.dot)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = Dual.lift(other)
        return Dual(self.val / o.val, (self.dot * o.val - self.val * o.dot) / o.val ** 2)

    def __rtruediv__(self, other):
        return Dual.lift(other) / self

    def __pow__(self, p: float):
        return self._chain(self.val ** p, p * self.val ** (p - 1))

    def sqrt(self) -> 'Dual':
        root = np.sqrt(self.val)
        return self._chain(root, 0.5 / root)

    def exp(self) -> 'Dual':
        e = np.exp(self.val)
        return self._chain(e, e)

    def log(self) -> 'Dual':
        return self._chain(np.log(self.val), 1.0 / self.val)


class HyperDual:
    """
    Hyper-dual number f + f1*e1 + f2*e2 + f12*e1*e2 with e1^2 = e2^2 = 0.

    Seeding e1 and e2 with two variables gives f, both first derivatives and
    the mixed second derivative; seeding both with the same variable gives
    the pure second derivative in f12.
    """

    __slots__ = ('f', 'f1', 'f2', 'f12')
    __array_ufunc__ = None

    def __init__(self, f: Number, f1: Number = 0.0, f2: Number = 0.0, f12: Number = 0.0):
        self.f = f
        self.f1 = f1
        self.f2 = f2
        self.f12 = f12

    @staticmethod
    def lift(other) -> 'HyperDual':
        return other if isinstance(other, HyperDual) else HyperDual(other)

    def parts(self) -> Tuple[Number, Number, Number, Number]:
        return self.f, self.f1, self.f2, self.f12

    def chain(self, g0: Number, g1: Number, g2: Number) -> 'HyperDual':
        """Apply a scalar function given its value, first and second derivative at f."""
        return HyperDual(
            g0,
            g1 * self.f1,
            g1 * self.f2,
            g2 * self.f1 * self.f2 + g1 * self.f12,
        )

    def __add__(self, other):
        o = HyperDual.lift(other)
        return HyperDual(self.f + o.f, self.f1 + o.f1, self.f2 + o.f2, self.f12 + o.f12)

    __radd__ = __add__

    def __sub__(self, other):
        o = HyperDual.lift(other)
        return HyperDual(self.f - o.f, self.f1 - o.f1, self.f2 - o.f2, self.f12 - o.f12)

    def __rsub__(self, other):
        return HyperDual.lift(other) - self

    def __neg__(self):
        return HyperDual(-self.f, -self.f1, -self.f2, -self.f12)

    def __mul__(self, other):
        o = HyperDual.lift(other)
        return HyperDual(
            self.f * o.f,
            self.f1 * o.f + self.f * o.f1,
            self.f2 * o.f + self.f * o.f2,
            self.f12 * o.f + self.f1 * o.f2 + self.f2 * o.f1 + self.f * o.f12,
        )

    __rmul__ = __mul__

    def reciprocal(self) -> 'HyperDual':
        inv = 1.0 / self.f
        return self.chain(inv, -inv ** 2, 2.0 * inv ** 3)

    def __truediv__(self, other):
        return self * HyperDual.lift(other).reciprocal()

    def __rtruediv__(self, other):
        return HyperDual.lift(other) * self.reciprocal()

    def power(self, p: float) -> 'HyperDual':
        """Constant real exponent."""
        return self.chain(self.f ** p, p * self.f ** (p - 1), p * (p - 1) * self.f ** (p - 2))

    def apply(self, fn: Callable[[Number], Tuple[Number, Number, Number]]) -> 'HyperDual':
        return self.chain(*fn(self.f))


def _sin(v):
    return np.sin(v), np.cos(v), -np.sin(v)


def _cos(v):
    return np.cos(v), -np.sin(v), -np.cos(v)


def _exp(v):
    e = np.exp(v)
    return e, e, e


def _log(v):
    return np.log(v), 1.0 / v, -1.0 / v ** 2


def _sqrt(v):
    r = np.sqrt(v)
    return r, 0.5 / r, -0.25 / (r * v)


def _tanh(v):
    th = np.tanh(v)
    sech2 = 1.0 - th ** 2
    return th, sech2, -2.0 * th * sech2


# value, first and second derivative of the unary functions of the grammar
UNARY_JETS = {
    'sin': _sin,
    'cos': _cos,
    'exp': _exp,
    'log': _log,
    'sqrt': _sqrt,
    'tanh': _tanh,
}
