"""Characters H -> Laurent series, their convolution group, and Birkhoff factorization."""
from __future__ import annotations

import json
from typing import Mapping

from .errors import AlignmentError, ClosureError, DomainError, UnknownGeneratorError
from .hopf import HopfAlgebra, HopfPolynomial, Monomial
from .laurent import DEFAULT_ORDER, LaurentSeries


class Character:
    """Values of a multiplicative map on generators; extended to monomials by products.

    ``order`` is the declared truncation.  Individual values may know fewer
    coefficients after arithmetic with poles.
    """

    def __init__(self, algebra: HopfAlgebra, values: Mapping[str, LaurentSeries],
                 order: int = DEFAULT_ORDER, pole_bound: bool = True):
        self.algebra = algebra
        self.order = order
        self._values = dict(values)
        if pole_bound:
            for lab, v in self._values.items():
                if v.pole_order > algebra.loops(lab):
                    raise DomainError(
                        f"pole order {v.pole_order} exceeds loop number on {algebra.name(lab)}")

    @property
    def labels(self) -> list[str]:
        return sorted(self._values)

    def __contains__(self, label: str) -> bool:
        return label in self._values

    def value(self, label: str) -> LaurentSeries:
        try:
            return self._values[label]
        except KeyError:
            raise UnknownGeneratorError(label) from None

    def __getitem__(self, label: str) -> LaurentSeries:
        return self.value(label)

    def monomial(self, mono: Monomial) -> LaurentSeries:
        out = LaurentSeries.one(self.order)
        for lab in mono:
            out = out * self.value(lab)
        return out

    def evaluate(self, p: HopfPolynomial) -> LaurentSeries:
        out = LaurentSeries.zero(self.order)
        for mono, c in p.items():
            out = out + self.monomial(mono) * float(c)
        return out

    def max_difference(self, other: "Character") -> float:
        return max((self.value(l).max_difference(other.value(l)) for l in self.labels), default=0.0)

    def to_dict(self) -> dict:
        return {
            "order": self.order,
            "values": {
                lab: dict(self._values[lab].to_dict(), name=self.algebra.name(lab))
                for lab in self.labels
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, algebra: HopfAlgebra, data: dict) -> "Character":
        values = {lab: LaurentSeries.from_dict(v) for lab, v in data["values"].items()}
        for lab in values:
            algebra.graph(lab)
        return cls(algebra, values, int(data.get("order", DEFAULT_ORDER)))


def _require(c: Character, label: str, host: str) -> LaurentSeries:
    if label not in c:
        raise ClosureError(
            f"{c.algebra.name(host)} needs a value on {c.algebra.name(label)}", label=label)
    return c.value(label)


def _domain(c: Character) -> list[str]:
    return sorted(c.labels, key=lambda l: (c.algebra.loops(l), l))


def evaluate(c: Character, p: HopfPolynomial) -> LaurentSeries:
    return c.evaluate(p)


def epsilon(algebra: HopfAlgebra, labels, order: int = DEFAULT_ORDER) -> Character:
    """Convolution unit: 1 on the empty graph, 0 on every generator."""
    return Character(algebra, {l: LaurentSeries.zero(order) for l in labels}, order)


def convolve(a: Character, b: Character) -> Character:
    if a.order != b.order:
        raise AlignmentError(f"truncation orders differ: {a.order} vs {b.order}")
    if a.algebra is not b.algebra:
        raise DomainError("characters live on different Hopf algebras")
    alg = a.algebra
    out = {}
    for lab in _domain(a):
        v = _require(a, lab, lab) + _require(b, lab, lab)
        for (left, right), c in sorted(alg.reduced_terms(lab).items()):
            for l in left:
                _require(a, l, lab)
            _require(b, right, lab)
            v = v + a.monomial(left) * b.value(right) * float(c)
        out[lab] = v
    return Character(alg, out, a.order, pole_bound=False)


def star_inverse(a: Character) -> Character:
    """a o S, the inverse of a under convolution."""
    alg = a.algebra
    out = {}
    for lab in _domain(a):
        s = alg.antipode(HopfPolynomial.generator(lab))
        for l in s.labels():
            _require(a, l, lab)
        out[lab] = a.evaluate(s)
    return Character(alg, out, a.order, pole_bound=False)


def birkhoff(gamma: Character) -> tuple[Character, Character]:
    """Minimal-subtraction factorization gamma = gamma_minus^{*-1} * gamma_plus."""
    alg = gamma.algebra
    minus: dict[str, LaurentSeries] = {}
    plus: dict[str, LaurentSeries] = {}

    def minus_mono(mono, host):
        out = LaurentSeries.one(gamma.order)
        for l in mono:
            _require(gamma, l, host)
            out = out * minus[l]
        return out

    for lab in _domain(gamma):
        bracket = gamma.value(lab)
        for (left, right), c in sorted(alg.reduced_terms(lab).items()):
            gr = _require(gamma, right, lab)
            bracket = bracket + minus_mono(left, lab) * gr * float(c)
        neg, pos = bracket.split()
        minus[lab] = -neg
        plus[lab] = pos
    return (Character(alg, minus, gamma.order, pole_bound=False),
            Character(alg, plus, gamma.order, pole_bound=False))


def renormalized_value(gamma: Character, label: str) -> complex:
    _, plus = birkhoff(gamma)
    return plus.value(label).eval_at_zero()
