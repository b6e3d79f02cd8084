"""Scale action on characters, counterterm locality, and beta-function extraction."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .characters import Character, birkhoff, convolve, star_inverse
from .errors import DomainError, LocalityError
from .laurent import LaurentSeries

DEFAULT_SAMPLES = (0.5, 2.0, math.e)
LOCALITY_TOL = 1e-9


class ScaledCharacter(Character):
    """gamma_t(x) = t^{z L(x)} gamma(x) on every generator."""

    def __init__(self, base: Character, t: float):
        if not t > 0:
            raise DomainError(f"scale needs t > 0, got {t}")
        alg = base.algebra
        values = {}
        for lab in base.labels:
            v = base.value(lab)
            # enough terms of t^{zL} that the product keeps the base precision
            f = LaurentSeries.scale_factor(t, alg.loops(lab), max(v.order - v.low, 0))
            values[lab] = (f * v).truncate(v.order) if not v.is_zero() else v
        super().__init__(alg, values, base.order, pole_bound=False)
        self.base = base
        self.t = t


def scale(gamma: Character, t: float) -> Character:
    return ScaledCharacter(gamma, t)


@dataclass
class LocalityReport:
    samples: tuple
    tolerance: float
    deviations: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(d <= self.tolerance for d in self.deviations.values())

    @property
    def max_deviation(self) -> float:
        return max(self.deviations.values(), default=0.0)

    def to_dict(self, algebra=None) -> dict:
        name = algebra.name if algebra else (lambda l: l)
        return {
            "samples": list(self.samples),
            "tolerance": self.tolerance,
            "passed": self.passed,
            "deviations": {name(l): d for l, d in sorted(self.deviations.items())},
        }


def check_locality(gamma: Character, t_samples: Sequence[float] = DEFAULT_SAMPLES,
                   tol: float = LOCALITY_TOL) -> LocalityReport:
    """Max coefficient drift of gamma_minus(t) from gamma_minus(1) per generator."""
    ref, _ = birkhoff(gamma)
    report = LocalityReport(tuple(t_samples), tol, {l: 0.0 for l in ref.labels})
    for t in t_samples:
        m_t, _ = birkhoff(scale(gamma, t))
        for lab in ref.labels:
            d = ref.value(lab).max_difference(m_t.value(lab))
            report.deviations[lab] = max(report.deviations[lab], d)
    return report


def flow(gamma: Character, t: float) -> Character:
    """F_t = gamma^{*-1} * gamma_t."""
    return convolve(star_inverse(gamma), scale(gamma, t))


def _labels(gamma: Character, universe: Iterable | None) -> list[str]:
    if universe is None:
        return gamma.labels
    alg = gamma.algebra
    out = []
    for g in universe:
        out.append(g if isinstance(g, str) else alg.register(g))
    return sorted(set(out))


def beta(gamma: Character, universe: Iterable | None = None,
         t_samples: Sequence[float] = DEFAULT_SAMPLES, tol: float = LOCALITY_TOL) -> dict[str, complex]:
    """d/d(ln t) at t = 1 of the z^0 coefficient of F_t, per generator.

    F_t(x) = sum over coproduct terms of gamma^{-1}(x') gamma(x'') t^{z L(x'')}.
    Only the linear term of t^{zL} survives the derivative, so the result is
    L(x'') times the residue of gamma^{-1}(x') gamma(x''), summed over terms.
    """
    report = check_locality(gamma, t_samples, tol)
    if not report.passed:
        raise LocalityError(
            f"counterterms depend on the scale (max deviation {report.max_deviation:.3e})",
            deviation=report.deviations)
    alg = gamma.algebra
    inv = star_inverse(gamma)
    for t in t_samples:
        ft = flow(gamma, t)
        for lab in _labels(gamma, universe):
            if ft.value(lab).minus.chop(tol * 10).pole_order:
                raise RuntimeError(f"F_t keeps a pole on {alg.name(lab)} despite locality")
    out = {}
    for lab in _labels(gamma, universe):
        total = alg.loops(lab) * gamma.value(lab).residue()
        for (left, right), c in alg.reduced_terms(lab).items():
            term = inv.monomial(left) * gamma.value(right)
            total += float(c) * alg.loops(right) * term.residue()
        out[lab] = complex(total)
    return out


def beta_by_fit(gamma: Character, universe: Iterable | None = None,
                half_width: float = 0.5) -> dict[str, complex]:
    """Same derivative, read off a polynomial fit in ln t of the z^0 coefficient of F_t.

    The z^0 coefficient has degree at most L in ln t, so L + 1 sample scales
    determine it exactly.
    """
    alg = gamma.algebra
    labels = _labels(gamma, universe)
    deg = max((alg.loops(l) for l in labels), default=1)
    xs = np.linspace(-half_width, half_width, deg + 1)
    flows = [flow(gamma, math.exp(x)) for x in xs]
    out = {}
    for lab in labels:
        ys = np.array([f.value(lab).coeff(0) for f in flows])
        coeffs = np.polynomial.polynomial.polyfit(xs, ys, deg)
        out[lab] = complex(coeffs[1])
    return out


def local_character(algebra, residues: dict, regular: dict, order: int = 8) -> Character:
    """Character whose counterterms are scale independent.

    Generators are filled in by loop order.  The residue and the regular
    coefficients of each generator are free; the higher pole coefficients are
    fixed by requiring the linear ln t drift of the counterterm to vanish.
    """
    labels = sorted(set(residues) | set(regular), key=lambda l: (algebra.loops(l), l))
    values: dict = {}
    minus: dict = {}
    for lab in labels:
        loops = algebra.loops(lab)
        terms = []
        for (left, right), c in algebra.reduced_terms(lab).items():
            m = LaurentSeries.one(order)
            for l in left:
                m = m * minus[l]
            terms.append((algebra.loops(right), m * values[right] * float(c)))
        coeffs = {-1: complex(residues.get(lab, 0.0))}
        for k, v in enumerate(regular.get(lab, [])):
            coeffs[k] = complex(v)
        for p in range(2, loops + 1):
            coeffs[-p] = -sum(lk * y.coeff(-p) for lk, y in terms) / loops
        x = LaurentSeries.from_dict_of_powers(coeffs, order)
        values[lab] = x
        bracket = x
        for _, y in terms:
            bracket = bracket + y
        minus[lab] = -bracket.minus
    return Character(algebra, values, order)


# One-loop flat-space values quoted from the literature, for documentation output only.
_LITERATURE = {
    "phi3": ("scalar phi^3, six dimensions", "-g^3/(128 pi^3)"),
    "phi4": ("scalar phi^4, four dimensions", "3 g^2/(16 pi^2)"),
    "qed": ("quantum electrodynamics", "e^3/(12 pi^2)"),
    "yang-mills": ("pure Yang-Mills", "-11 g^3 C2(G)/(48 pi^2)"),
    "qcd": ("quantum chromodynamics, N_f flavours", "-(33 - 2 N_f) g^3/(48 pi^2)"),
}


def physics_beta_report(tag: str) -> list[dict]:
    """Literature one-loop beta functions; ``all`` returns every entry."""
    tags = sorted(_LITERATURE) if tag == "all" else [tag]
    rows = []
    for t in tags:
        if t not in _LITERATURE:
            raise DomainError(f"unknown theory tag {t!r}; known: {', '.join(sorted(_LITERATURE))}")
        theory, value = _LITERATURE[t]
        rows.append({"tag": t, "theory": theory, "beta": value,
                     "kind": "literature value, not computed"})
    return rows
