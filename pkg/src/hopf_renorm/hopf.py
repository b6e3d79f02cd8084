"""Connes-Kreimer Hopf algebra of 1PI phi^3 graphs with exact rational coefficients."""
from __future__ import annotations

import hashlib
import json
import threading
from collections import defaultdict
from fractions import Fraction
from typing import Iterable, Mapping, Union

from .errors import DomainError, IncompleteUniverseError, UnknownGeneratorError
from .graphs import (
    FeynmanGraph,
    contract,
    enumerate_admissible_subgraphs,
    generator_label,
    is_one_particle_irreducible,
    loop_number,
)

Monomial = tuple  # sorted tuple of generator labels; () is the unit
Scalar = Union[int, Fraction]


def _mono(labels: Iterable[str]) -> Monomial:
    return tuple(sorted(labels))


def _mono_mul(a: Monomial, b: Monomial) -> Monomial:
    return tuple(sorted(a + b))


class HopfPolynomial:
    """Polynomial in the generators x_label with Fraction coefficients."""

    __slots__ = ("_terms",)

    def __init__(self, terms: Mapping[Monomial, Scalar] | None = None):
        clean = {}
        for mono, c in (terms or {}).items():
            c = Fraction(c)
            if c:
                key = _mono(mono)
                clean[key] = clean.get(key, Fraction(0)) + c
                if not clean[key]:
                    del clean[key]
        self._terms = clean

    @classmethod
    def one(cls) -> "HopfPolynomial":
        return cls({(): 1})

    @classmethod
    def generator(cls, label: str) -> "HopfPolynomial":
        return cls({(label,): 1})

    @classmethod
    def constant(cls, c: Scalar) -> "HopfPolynomial":
        return cls({(): c})

    @property
    def terms(self) -> dict[Monomial, Fraction]:
        return dict(self._terms)

    def items(self):
        return sorted(self._terms.items())

    def labels(self) -> set[str]:
        return {lab for mono in self._terms for lab in mono}

    def is_zero(self) -> bool:
        return not self._terms

    def coefficient(self, mono: Iterable[str]) -> Fraction:
        return self._terms.get(_mono(mono), Fraction(0))

    def _coerce(self, other) -> "HopfPolynomial":
        if isinstance(other, HopfPolynomial):
            return other
        if isinstance(other, (int, Fraction)):
            return HopfPolynomial.constant(other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out = dict(self._terms)
        for m, c in other._terms.items():
            out[m] = out.get(m, Fraction(0)) + c
        return HopfPolynomial(out)

    __radd__ = __add__

    def __neg__(self):
        return HopfPolynomial({m: -c for m, c in self._terms.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return HopfPolynomial({m: c * other for m, c in self._terms.items()})
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out: dict = defaultdict(Fraction)
        for m1, c1 in self._terms.items():
            for m2, c2 in other._terms.items():
                out[_mono_mul(m1, m2)] += c1 * c2
        return HopfPolynomial(out)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        out = HopfPolynomial.one()
        for _ in range(k):
            out = out * self
        return out

    def __eq__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self._terms == other._terms

    def __hash__(self):
        return hash(frozenset(self._terms.items()))

    def __repr__(self):
        return f"HopfPolynomial({self.items()!r})"


class TensorPolynomial:
    """Element of H (x) H (or a higher tensor power) in normal form."""

    __slots__ = ("_terms",)

    def __init__(self, terms: Mapping[tuple, Scalar] | None = None):
        clean: dict = {}
        for key, c in (terms or {}).items():
            c = Fraction(c)
            if c:
                key = tuple(_mono(m) for m in key)
                clean[key] = clean.get(key, Fraction(0)) + c
                if not clean[key]:
                    del clean[key]
        self._terms = clean

    @property
    def terms(self) -> dict:
        return dict(self._terms)

    def items(self):
        return sorted(self._terms.items())

    def is_zero(self) -> bool:
        return not self._terms

    def coefficient(self, *monos) -> Fraction:
        return self._terms.get(tuple(_mono(m) for m in monos), Fraction(0))

    def __add__(self, other: "TensorPolynomial"):
        out = dict(self._terms)
        for k, c in other._terms.items():
            out[k] = out.get(k, Fraction(0)) + c
        return TensorPolynomial(out)

    def __sub__(self, other: "TensorPolynomial"):
        return self + TensorPolynomial({k: -c for k, c in other._terms.items()})

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return TensorPolynomial({k: c * other for k, c in self._terms.items()})
        out: dict = defaultdict(Fraction)
        for k1, c1 in self._terms.items():
            for k2, c2 in other._terms.items():
                out[tuple(_mono_mul(a, b) for a, b in zip(k1, k2))] += c1 * c2
        return TensorPolynomial(out)

    def __eq__(self, other):
        if not isinstance(other, TensorPolynomial):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self):
        return hash(frozenset(self._terms.items()))

    def __repr__(self):
        return f"TensorPolynomial({self.items()!r})"

    def to_dict(self) -> dict:
        return {
            "terms": [
                {"factors": [list(m) for m in key], "coeff": str(c)}
                for key, c in self.items()
            ]
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _tensor_one(rank: int = 2) -> TensorPolynomial:
    return TensorPolynomial({((),) * rank: 1})


def _short_name(label: str) -> str:
    return "g" + hashlib.sha1(label.encode()).hexdigest()[:6]


class HopfAlgebra:
    """Registry of generators plus the structure maps.

    Generators are keyed by their canonical label.  Subgraphs and quotients
    reached by the coproduct are registered automatically.  Memo tables are
    guarded by a lock, so one instance may be shared between threads.
    """

    def __init__(self, dim: int = 6):
        self.dim = dim
        self._graphs: dict[str, FeynmanGraph] = {}
        self._names: dict[str, str] = {}
        self._reduced: dict[str, dict] = {}
        self._antipode: dict[str, HopfPolynomial] = {}
        self._lock = threading.RLock()

    # -- registry -----------------------------------------------------------

    def register(self, g: FeynmanGraph, name: str | None = None) -> str:
        if not is_one_particle_irreducible(g):
            raise DomainError("only 1PI graphs generate the Hopf algebra")
        label = generator_label(g)
        with self._lock:
            self._graphs.setdefault(label, g)
            if name is not None:
                self._names[label] = name
        return label

    def x(self, g: FeynmanGraph, name: str | None = None) -> HopfPolynomial:
        return HopfPolynomial.generator(self.register(g, name))

    def graph(self, label: str) -> FeynmanGraph:
        try:
            return self._graphs[label]
        except KeyError:
            raise UnknownGeneratorError(label) from None

    def labels(self) -> list[str]:
        return sorted(self._graphs)

    def name(self, label: str) -> str:
        return self._names.get(label, _short_name(label))

    def loops(self, label: str) -> int:
        return loop_number(self.graph(label))

    def _check(self, p: HopfPolynomial):
        for lab in p.labels():
            self.graph(lab)

    # -- coproduct ------------------------------------------------------------

    def reduced_terms(self, label: str) -> dict[tuple[Monomial, str], Fraction]:
        """Sum over proper admissible subgraphs: {(subgraph monomial, quotient label): count}."""
        with self._lock:
            if label in self._reduced:
                return self._reduced[label]
        g = self.graph(label)
        out: dict = defaultdict(Fraction)
        for emb in enumerate_admissible_subgraphs(g, self.dim):
            left = _mono(self.register(c) for c in emb.component_graphs())
            right = self.register(contract(g, emb, self.dim))
            out[(left, right)] += 1
        out = dict(out)
        with self._lock:
            self._reduced[label] = out
        return out

    def _generator_coproduct(self, label: str) -> TensorPolynomial:
        terms = {((label,), ()): 1, ((), (label,)): 1}
        for (left, right), c in self.reduced_terms(label).items():
            key = (left, (right,))
            terms[key] = terms.get(key, 0) + c
        return TensorPolynomial(terms)

    def coproduct(self, p: HopfPolynomial) -> TensorPolynomial:
        self._check(p)
        total = TensorPolynomial()
        for mono, c in p.items():
            t = _tensor_one()
            for lab in mono:
                t = t * self._generator_coproduct(lab)
            total = total + t * c
        return total

    def counit(self, p: HopfPolynomial) -> Fraction:
        return p.coefficient(())

    # -- antipode ------------------------------------------------------------------

    def _generator_antipode(self, label: str) -> HopfPolynomial:
        with self._lock:
            if label in self._antipode:
                return self._antipode[label]
        out = -HopfPolynomial.generator(label)
        for (left, right), c in self.reduced_terms(label).items():
            if self.loops(right) >= self.loops(label):
                raise RuntimeError(f"loop grading failed to decrease for {label}")
            out = out - self._monomial_antipode(left) * HopfPolynomial.generator(right) * c
        with self._lock:
            self._antipode[label] = out
        return out

    def _monomial_antipode(self, mono: Monomial) -> HopfPolynomial:
        out = HopfPolynomial.one()
        for lab in mono:
            out = out * self._generator_antipode(lab)
        return out

    def antipode(self, p: HopfPolynomial) -> HopfPolynomial:
        self._check(p)
        out = HopfPolynomial()
        for mono, c in p.items():
            out = out + self._monomial_antipode(mono) * c
        return out

    # -- grading ----------------------------------------------------------------------

    def monomial_loops(self, mono: Monomial) -> int:
        return sum(self.loops(lab) for lab in mono)

    def loop_grade(self, p: HopfPolynomial) -> dict[int, HopfPolynomial]:
        self._check(p)
        parts: dict = defaultdict(dict)
        for mono, c in p.items():
            parts[self.monomial_loops(mono)][mono] = c
        return {k: HopfPolynomial(v) for k, v in sorted(parts.items())}

    # -- axiom helpers ------------------------------------------------------------------

    def _apply_left(self, t: TensorPolynomial, fn) -> TensorPolynomial:
        out = TensorPolynomial()
        for key, c in t.items():
            head = fn(HopfPolynomial({key[0]: 1}))
            for hk, hc in head.items():
                out = out + TensorPolynomial({hk + key[1:]: hc * c})
        return out

    def _apply_right(self, t: TensorPolynomial, fn) -> TensorPolynomial:
        out = TensorPolynomial()
        for key, c in t.items():
            tail = fn(HopfPolynomial({key[-1]: 1}))
            for tk, tc in tail.items():
                out = out + TensorPolynomial({key[:-1] + tk: tc * c})
        return out

    def coassociativity_sides(self, p: HopfPolynomial) -> tuple[TensorPolynomial, TensorPolynomial]:
        """Return ((Delta x id) Delta p, (id x Delta) Delta p)."""
        d = self.coproduct(p)
        return self._apply_left(d, self.coproduct), self._apply_right(d, self.coproduct)

    def counit_sides(self, p: HopfPolynomial) -> tuple[HopfPolynomial, HopfPolynomial]:
        """Return ((eps x id) Delta p, (id x eps) Delta p) as polynomials."""
        left = HopfPolynomial()
        right = HopfPolynomial()
        for (a, b), c in self.coproduct(p).items():
            left = left + HopfPolynomial({b: c * (1 if a == () else 0)})
            right = right + HopfPolynomial({a: c * (1 if b == () else 0)})
        return left, right

    def antipode_sides(self, p: HopfPolynomial) -> tuple[HopfPolynomial, HopfPolynomial]:
        """Return (m(S x id) Delta p, m(id x S) Delta p)."""
        left = HopfPolynomial()
        right = HopfPolynomial()
        for (a, b), c in self.coproduct(p).items():
            pa, pb = HopfPolynomial({a: 1}), HopfPolynomial({b: 1})
            left = left + self.antipode(pa) * pb * c
            right = right + pa * self.antipode(pb) * c
        return left, right

    # -- dual Lie algebra -------------------------------------------------------------------

    def _linear_labels(self, p) -> dict[str, Fraction]:
        if isinstance(p, FeynmanGraph):
            return {self.register(p): Fraction(1)}
        out = {}
        for mono, c in p.items():
            if len(mono) != 1:
                raise DomainError("insertion operations act on linear combinations of generators")
            out[mono[0]] = c
        return out

    def _closed_universe(self, universe: Iterable[FeynmanGraph]) -> list[str]:
        labels = sorted({self.register(g) for g in universe})
        members = set(labels)
        for lab in labels:
            for (left, right) in self.reduced_terms(lab):
                for needed in left + (right,):
                    if needed not in members:
                        raise IncompleteUniverseError(
                            f"universe is not closed: {self.name(lab)} needs {self.name(needed)}",
                            label=needed,
                        )
        return labels

    def insertion_product(self, a, b, universe: Iterable[FeynmanGraph]) -> HopfPolynomial:
        """a * b = sum over hosts G of <delta_a (x) delta_b, Delta x_G> x_G.

        ``a`` is the inserted subgraph and ``b`` the quotient; both may be graphs
        or linear combinations of generators.
        """
        labels = self._closed_universe(universe)
        la, lb = self._linear_labels(a), self._linear_labels(b)
        out: dict = defaultdict(Fraction)
        for host in labels:
            for (left, right), c in self.reduced_terms(host).items():
                if len(left) == 1 and left[0] in la and right in lb:
                    out[(host,)] += c * la[left[0]] * lb[right]
        return HopfPolynomial(out)

    def lie_bracket(self, a, b, universe: Iterable[FeynmanGraph]) -> HopfPolynomial:
        universe = list(universe)
        return self.insertion_product(a, b, universe) - self.insertion_product(b, a, universe)

    # -- rendering ----------------------------------------------------------------------------

    def render(self, p: HopfPolynomial) -> str:
        if p.is_zero():
            return "0"
        pieces = []
        for mono, c in sorted(p.items(), key=lambda mc: [self.name(l) for l in mc[0]]):
            counts: dict = {}
            for lab in mono:
                counts[self.name(lab)] = counts.get(self.name(lab), 0) + 1
            body = "*".join(
                f"x[{n}]" + (f"^{k}" if k > 1 else "") for n, k in sorted(counts.items())
            )
            mag = abs(c)
            if not body:
                text = str(mag)
            elif mag == 1:
                text = body
            else:
                text = f"{mag}*{body}"
            pieces.append(("-" if c < 0 else "+", text))
        sign, first = pieces[0]
        out = ("-" if sign == "-" else "") + first
        for sign, text in pieces[1:]:
            out += f" {sign} {text}"
        return out

    def render_tensor(self, t: TensorPolynomial) -> str:
        if t.is_zero():
            return "0"
        parts = []
        for key, c in t.items():
            factors = [self.render(HopfPolynomial({m: 1})) for m in key]
            coeff = "" if c == 1 else f"{c}*"
            parts.append(coeff + " (x) ".join(factors))
        return " + ".join(parts)
