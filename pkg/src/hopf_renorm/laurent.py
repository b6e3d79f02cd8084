"""Truncated formal Laurent series in z with complex coefficients.

Each series records the highest exponent it knows exactly (its order).
Sums keep the smaller order; products keep only what is determined by the
known coefficients of both factors, so a pole in one factor costs precision
in the result.
"""
from __future__ import annotations

import math
from numbers import Number
from typing import Iterable, Mapping

import numpy as np

from .errors import DomainError, PoleError

DEFAULT_ORDER = 8


class LaurentSeries:
    __slots__ = ("low", "coeffs", "order")

    def __init__(self, low: int, coeffs: Iterable[complex], order: int = DEFAULT_ORDER):
        c = np.array(list(coeffs) if not isinstance(coeffs, np.ndarray) else coeffs,
                     dtype=complex).ravel()
        keep = max(0, order - low + 1)
        c = c[:keep]
        nz = np.flatnonzero(c)
        if nz.size == 0:
            low, c = order + 1, np.zeros(0, dtype=complex)
        else:
            low += int(nz[0])
            c = c[nz[0]:]
        c.setflags(write=False)
        self.low = int(low)
        self.coeffs = c
        self.order = int(order)

    # -- constructors -----------------------------------------------------

    @classmethod
    def zero(cls, order: int = DEFAULT_ORDER) -> "LaurentSeries":
        return cls(0, [], order)

    @classmethod
    def constant(cls, value: complex, order: int = DEFAULT_ORDER) -> "LaurentSeries":
        return cls(0, [value], order)

    @classmethod
    def one(cls, order: int = DEFAULT_ORDER) -> "LaurentSeries":
        return cls.constant(1.0, order)

    @classmethod
    def monomial(cls, power: int, value: complex = 1.0,
                 order: int = DEFAULT_ORDER) -> "LaurentSeries":
        return cls(power, [value], order)

    @classmethod
    def from_dict_of_powers(cls, terms: Mapping[int, complex],
                            order: int = DEFAULT_ORDER) -> "LaurentSeries":
        if not terms:
            return cls.zero(order)
        low = min(terms)
        c = np.zeros(max(terms) - low + 1, dtype=complex)
        for k, v in terms.items():
            c[k - low] += v
        return cls(low, c, order)

    @classmethod
    def scale_factor(cls, t: float, loops: int, order: int = DEFAULT_ORDER) -> "LaurentSeries":
        """exp(z * loops * ln t), the eigenvalue of t^{zY} on a loops-graded element."""
        if not t > 0:
            raise DomainError(f"scale factor needs t > 0, got {t}")
        a = loops * math.log(t)
        return cls(0, [a ** k / math.factorial(k) for k in range(order + 1)], order)

    # -- inspection ----------------------------------------------------------

    def coeff(self, power: int) -> complex:
        if power > self.order:
            raise DomainError(f"z^{power} lies beyond the truncation order {self.order}")
        i = power - self.low
        if 0 <= i < self.coeffs.size:
            return complex(self.coeffs[i])
        return 0j

    def as_dict(self) -> dict[int, complex]:
        return {self.low + i: complex(v) for i, v in enumerate(self.coeffs) if v != 0}

    def is_zero(self) -> bool:
        return self.coeffs.size == 0

    @property
    def pole_order(self) -> int:
        return max(0, -self.low) if not self.is_zero() else 0

    def dense(self, lo: int, hi: int) -> np.ndarray:
        """Coefficients of z^lo..z^hi as a dense array."""
        return np.array([self.coeff(k) if k <= self.order else np.nan for k in range(lo, hi + 1)])

    # -- arithmetic ----------------------------------------------------------

    @staticmethod
    def _lift(x, order):
        if isinstance(x, LaurentSeries):
            return x
        if isinstance(x, Number):
            return LaurentSeries.constant(complex(x), order)
        return None

    def __add__(self, other):
        other = self._lift(other, self.order)
        if other is None:
            return NotImplemented
        order = min(self.order, other.order)
        if self.is_zero() and other.is_zero():
            return LaurentSeries.zero(order)
        low = min(self.low, other.low)
        hi = max(self.low + self.coeffs.size, other.low + other.coeffs.size)
        c = np.zeros(max(hi - low, 0), dtype=complex)
        c[self.low - low:self.low - low + self.coeffs.size] += self.coeffs
        c[other.low - low:other.low - low + other.coeffs.size] += other.coeffs
        return LaurentSeries(low, c, order)

    __radd__ = __add__

    def __neg__(self):
        return LaurentSeries(self.low, -self.coeffs, self.order)

    def __sub__(self, other):
        other = self._lift(other, self.order)
        if other is None:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Number):
            return LaurentSeries(self.low, self.coeffs * complex(other), self.order)
        if not isinstance(other, LaurentSeries):
            return NotImplemented
        order = min(self.order + other.low, other.order + self.low)
        if self.is_zero() or other.is_zero():
            return LaurentSeries.zero(order)
        return LaurentSeries(self.low + other.low, np.convolve(self.coeffs, other.coeffs), order)

    __rmul__ = __mul__

    def invert(self) -> "LaurentSeries":
        if self.is_zero():
            raise ZeroDivisionError("cannot invert the zero series")
        n = self.order - self.low + 1
        u = np.zeros(n, dtype=complex)
        u[:self.coeffs.size] = self.coeffs
        b = np.zeros(n, dtype=complex)
        b[0] = 1.0 / u[0]
        for k in range(1, n):
            b[k] = -np.dot(u[1:k + 1], b[k - 1::-1][:k]) / u[0]
        return LaurentSeries(-self.low, b, self.order - 2 * self.low)

    def __truediv__(self, other):
        if isinstance(other, Number):
            return self * (1.0 / complex(other))
        if not isinstance(other, LaurentSeries):
            return NotImplemented
        return self * other.invert()

    def __rtruediv__(self, other):
        return self.invert() * other

    def __pow__(self, k: int):
        out = LaurentSeries.one(self.order)
        base = self
        if k < 0:
            base, k = self.invert(), -k
        for _ in range(k):
            out = out * base
        return out

    def truncate(self, order: int) -> "LaurentSeries":
        if order > self.order:
            raise DomainError(f"cannot extend a series known to z^{self.order} up to z^{order}")
        return LaurentSeries(self.low, self.coeffs, order)

    def rescale_variable(self, c: complex) -> "LaurentSeries":
        """The series of f(c z)."""
        k = np.arange(self.low, self.low + self.coeffs.size)
        return LaurentSeries(self.low, self.coeffs * np.power(complex(c), k), self.order)

    def chop(self, tol: float) -> "LaurentSeries":
        c = np.where(np.abs(self.coeffs) <= tol, 0, self.coeffs)
        return LaurentSeries(self.low, c, self.order)

    # -- splitting and evaluation -------------------------------------------------

    def split(self) -> tuple["LaurentSeries", "LaurentSeries"]:
        """(negative-power part, non-negative part); both keep this order."""
        minus = {k: v for k, v in self.as_dict().items() if k < 0}
        plus = {k: v for k, v in self.as_dict().items() if k >= 0}
        return (LaurentSeries.from_dict_of_powers(minus, self.order),
                LaurentSeries.from_dict_of_powers(plus, self.order))

    @property
    def minus(self) -> "LaurentSeries":
        return self.split()[0]

    @property
    def plus(self) -> "LaurentSeries":
        return self.split()[1]

    def eval_at_zero(self) -> complex:
        if self.pole_order:
            raise PoleError(f"series has a pole of order {self.pole_order} at z = 0",
                            self.pole_order)
        return self.coeff(0) if self.order >= 0 else 0j

    def residue(self) -> complex:
        return self.coeff(-1)

    # -- comparison -----------------------------------------------------------------

    def max_difference(self, other: "LaurentSeries") -> float:
        """Largest coefficient difference up to the common order."""
        order = min(self.order, other.order)
        lo = min(self.low, other.low, 0)
        if lo > order:
            return 0.0
        diff = [abs(self.coeff(k) - other.coeff(k)) for k in range(lo, order + 1)]
        return max(diff) if diff else 0.0

    def almost_equal(self, other: "LaurentSeries", atol: float = 1e-12, rtol: float = 0.0) -> bool:
        scale = max([1.0] + [abs(v) for v in self.coeffs] + [abs(v) for v in other.coeffs])
        return self.max_difference(other) <= atol + rtol * scale

    def __eq__(self, other):
        other = self._lift(other, self.order)
        if other is None:
            return NotImplemented
        return self.max_difference(other) == 0.0

    def __hash__(self):
        return hash((self.low, self.order, tuple(self.coeffs)))

    def __repr__(self):
        terms = " + ".join(f"({v:.6g})z^{k}" for k, v in sorted(self.as_dict().items()))
        return f"LaurentSeries[{terms or '0'}; O(z^{self.order + 1})]"

    # -- serialization ------------------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "lowest": self.low,
            "order": self.order,
            "coeffs": [[float(v.real), float(v.imag)] for v in self.coeffs],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "LaurentSeries":
        coeffs = [complex(re, im) for re, im in data["coeffs"]]
        return cls(int(data["lowest"]), coeffs, int(data.get("order", DEFAULT_ORDER)))


def scale_factor(t: float, loops: int, order: int = DEFAULT_ORDER) -> LaurentSeries:
    return LaurentSeries.scale_factor(t, loops, order)


def split(a: LaurentSeries) -> tuple[LaurentSeries, LaurentSeries]:
    return a.split()


def eval_at_zero(a: LaurentSeries) -> complex:
    return a.eval_at_zero()
