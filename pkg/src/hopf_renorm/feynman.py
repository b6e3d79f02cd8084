"""Regularized Feynman rules on flat tori.

External legs are amputated: leg j injects the mode e_j into the internal
vertex it attaches to.  Every internal edge carries a mode k with propagator
lambda_k^{-(1+z)}; every internal vertex contributes the momentum tensor,
which on the exponential basis is vol^{-1/2} times momentum conservation.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .characters import Character
from .errors import (ConvergenceError, DomainError, PoleInstabilityError, ResourceError,
                     UnsupportedBackendError)
from .graphs import FeynmanGraph, canonical_form, generator_label, loop_number, symmetry_factor
from .hopf import HopfAlgebra
from .laurent import DEFAULT_ORDER, LaurentSeries
from .spectral import TorusBackend, massless_zeta_expansion

MAX_BOX = 5_000_000
PAIR_RTOL = 1e-6
# Cauchy-circle parameters for Taylor coefficients of the convergent remainder.
CAUCHY_RADIUS = 0.25
CAUCHY_POINTS = 32


def thread_cap() -> int:
    try:
        return max(1, int(os.environ.get("HOPF_RENORM_THREADS", "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class ExternalData:
    """One mode vector per external leg (zero vector = constant function)."""

    modes: tuple

    @classmethod
    def zero_momentum(cls, legs: int, dim: int) -> "ExternalData":
        return cls(tuple((0,) * dim for _ in range(legs)))

    def check(self, g: FeynmanGraph, backend: TorusBackend):
        if len(self.modes) != g.n_ext:
            raise DomainError(f"{len(self.modes)} external modes for {g.n_ext} legs")
        for m in self.modes:
            if len(m) != backend.dim:
                raise DomainError(f"external mode {m} has the wrong dimension")

    @property
    def total(self) -> np.ndarray:
        return np.sum(np.array(self.modes, dtype=int), axis=0) if self.modes else None

    def is_zero(self) -> bool:
        return all(not any(m) for m in self.modes)


@dataclass
class FeynmanEvaluation:
    label: str
    backend: dict
    external: tuple
    series: LaurentSeries
    cutoffs: tuple = ()
    values: dict = field(default_factory=dict)
    tolerance: float = 0.0

    def to_dict(self) -> dict:
        return {
            "graph": self.label,
            "backend": self.backend,
            "external": [list(m) for m in self.external],
            "series": self.series.to_dict(),
            "cutoffs": list(self.cutoffs),
            "tolerance": self.tolerance,
        }


# -- momentum routing ------------------------------------------------------------

@dataclass(frozen=True)
class Routing:
    """Edge momenta k = C @ loops + P @ externals, for internal edges."""

    edges: tuple
    cycle: np.ndarray
    particular: np.ndarray


def routing(g: FeynmanGraph) -> Routing:
    ints = list(g.internal_vertices)
    pos = {v: i for i, v in enumerate(ints)}
    edges = [g.edges[i] for i in g.internal_edge_indices]
    n_v, n_e = len(ints), len(edges)
    # incidence: edge e = (a, b) carries k from a to b
    inc = np.zeros((n_v, n_e))
    for e, (a, b) in enumerate(edges):
        inc[pos[a], e] -= 1
        inc[pos[b], e] += 1
    # spanning tree by DFS; the rest are chords
    tree, seen = [], {ints[0]} if ints else set()
    stack = ints[:1]
    while stack:
        v = stack.pop()
        for e, (a, b) in enumerate(edges):
            if v in (a, b):
                u = b if a == v else a
                if u not in seen:
                    seen.add(u)
                    tree.append(e)
                    stack.append(u)
    chords = [e for e in range(n_e) if e not in tree]
    cycle = np.zeros((n_e, len(chords)))
    sub = inc[:, tree]
    for c, e in enumerate(chords):
        rhs = -inc[:, e]
        sol = np.linalg.lstsq(sub, rhs, rcond=None)[0] if tree else np.zeros(0)
        cycle[tree, c] = np.rint(sol)
        cycle[e, c] = 1
    legs = g.legs()
    ext_ids = g.external_vertices
    particular = np.zeros((n_e, len(ext_ids)))
    for j, xv in enumerate(ext_ids):
        # mode e_j flows into its host and out at the root; the root terms cancel
        # once the external modes sum to zero
        inj = np.zeros(n_v)
        inj[pos[legs[xv]]] += 1.0
        inj[0] -= 1.0
        sol = np.linalg.lstsq(sub, -inj, rcond=None)[0] if tree else np.zeros(0)
        particular[tree, j] = np.rint(sol)
    return Routing(tuple(edges), cycle.astype(int), particular.astype(int))


def _prefactor(g: FeynmanGraph, backend: TorusBackend, coupling: float, symmetrize: bool) -> float:
    v = len(g.internal_vertices)
    out = coupling ** v * backend.volume ** (-v / 2)
    if symmetrize:
        out *= float(symmetry_factor(g))
    return out


def _mode_sum(g: FeynmanGraph, backend: TorusBackend, ext: ExternalData, z: complex,
              cutoff: int) -> complex:
    if ext.modes and np.any(ext.total != 0):
        return 0j
    r = routing(g)
    n_loops = r.cycle.shape[1]
    n_edges = len(r.edges)
    if n_edges == 0:
        return 1 + 0j
    ext_k = np.array(ext.modes, dtype=int).reshape(len(ext.modes), backend.dim) if ext.modes \
        else np.zeros((0, backend.dim), dtype=int)
    shift = r.particular @ ext_k  # (edges, dim)
    if n_loops == 1 and ext.is_zero() and np.all(np.abs(r.cycle[:, 0]) == 1):
        lam0, mult = backend.massless_histogram(cutoff)
        lam = lam0 + backend.mass ** 2
        total = np.sum(mult * np.exp(-n_edges * (1 + z) * np.log(lam)))
        if backend.mass > 0:
            total += np.exp(-n_edges * (1 + z) * np.log(backend.mass ** 2))
        return complex(total)
    side = 2 * cutoff + 1
    if side ** (backend.dim * n_loops) > MAX_BOX:
        raise ResourceError(
            f"{side ** (backend.dim * n_loops)} loop-momentum points exceed the limit {MAX_BOX}")
    box = np.arange(-cutoff, cutoff + 1)
    grid = np.stack(np.meshgrid(*([box] * (backend.dim * n_loops)), indexing="ij"), -1)
    loops = grid.reshape(-1, n_loops, backend.dim)
    k = np.einsum("el,mld->med", r.cycle, loops) + shift[None]
    ok = np.all(np.abs(k) <= cutoff, axis=(1, 2))
    lam = backend.eigenvalues_of(k.reshape(-1, backend.dim)).reshape(k.shape[:2])
    if backend.drops_zero_mode:
        ok &= np.all(lam > 0, axis=1)
    lam = np.where(ok[:, None], lam, 1.0)
    terms = np.exp(-(1 + z) * np.sum(np.log(lam), axis=1))
    return complex(np.sum(terms[ok]))


def pair(g: FeynmanGraph, backend: TorusBackend, ext: ExternalData | None = None, z: complex = 0,
         coupling: float = 1.0, symmetrize: bool = True, rtol: float = PAIR_RTOL) -> complex:
    """Truncated pairing, checked for stability under cutoff doubling."""
    ext = ext or ExternalData.zero_momentum(g.n_ext, backend.dim)
    ext.check(g, backend)
    pref = _prefactor(g, backend, coupling, symmetrize)
    n = backend.cutoff
    v1 = _mode_sum(g, backend, ext, z, n)
    v2 = _mode_sum(g, backend, ext, z, 2 * n)
    if abs(v2 - v1) > rtol * max(1.0, abs(v2)):
        raise ConvergenceError(
            f"pairing moved by {abs(v2 - v1):.3e} between cutoffs {n} and {2 * n}")
    return pref * v2


# -- Laurent expansion by asymptotic subtraction --------------------------------------

def _is_zero_momentum_one_loop(g: FeynmanGraph, ext: ExternalData) -> bool:
    if loop_number(g) != 1 or not ext.is_zero():
        return False
    r = routing(g)
    return r.cycle.shape[1] == 1 and bool(np.all(np.abs(r.cycle[:, 0]) == 1))


def default_depth(n_edges: int, dim: int) -> int:
    """Smallest subtraction depth with remainder tail decaying at least like N^-6."""
    return max(1, math.ceil((dim + 6) / 2 - n_edges))


def _remainder(backend: TorusBackend, n_edges: int, depth: int, z: np.ndarray,
               cutoff: int) -> np.ndarray:
    """sum_{k != 0} [lam^{-s} - sum_{j<J} binom(-s, j) m^{2j} lam0^{-s-j}] with s = I(1+z)."""
    lam0, mult = backend.massless_histogram(cutoff)
    m2 = backend.mass ** 2
    s = n_edges * (1 + z)[:, None]
    log0 = np.log(lam0)[None, :]
    full = np.exp(-s * np.log(lam0 + m2)[None, :])
    sub = np.zeros_like(full)
    coef = np.ones_like(s)
    for j in range(depth):
        # coef = binom(-s, j)
        sub += coef * m2 ** j * np.exp(-(s + j) * log0)
        coef = coef * (-s - j) / (j + 1)
    return (full - sub) @ mult


def _remainder_taylor(backend, n_edges, depth, order, cutoff):
    w = np.exp(2j * np.pi * np.arange(CAUCHY_POINTS) / CAUCHY_POINTS)
    vals = _remainder(backend, n_edges, depth, CAUCHY_RADIUS * w, cutoff)
    c = np.fft.fft(vals) / CAUCHY_POINTS
    return np.array([c[k] / CAUCHY_RADIUS ** k for k in range(order + 1)])


def _binom_series(n_edges: int, j: int, order: int) -> LaurentSeries:
    """binom(-s, j) with s = I(1+z), as a polynomial in z."""
    poly = np.poly1d([1.0])
    for i in range(j):
        poly *= np.poly1d([-n_edges, -n_edges - i])
    poly = poly / math.factorial(j)
    return LaurentSeries(0, poly.coeffs[::-1], order)


def laurent_expansion(g: FeynmanGraph, backend: TorusBackend, ext: ExternalData | None = None,
                      order: int = DEFAULT_ORDER, coupling: float = 1.0, symmetrize: bool = True,
                      depth: int | None = None) -> FeynmanEvaluation:
    """Laurent series at z = 0 of the pairing.

    Available for one-loop graphs with zero external momenta, where every
    internal edge carries the loop momentum and the sum is
    sum_k lam_k^{-I(1+z)}.  The summand is expanded in powers of m^2; each
    pure power is a continued massless zeta value and the remainder is a
    convergent lattice sum, extrapolated under cutoff doubling.
    """
    if not isinstance(backend, TorusBackend):
        raise UnsupportedBackendError("Laurent expansion needs a torus backend")
    ext = ext or ExternalData.zero_momentum(g.n_ext, backend.dim)
    ext.check(g, backend)
    label = canonical_form(g)[0]
    pref = _prefactor(g, backend, coupling, symmetrize)
    if not g.internal_edge_indices:
        v = pref * _mode_sum(g, backend, ext, 0, backend.cutoff)
        return FeynmanEvaluation(label, backend.to_config(), ext.modes,
                                 LaurentSeries.constant(v, order))
    if not _is_zero_momentum_one_loop(g, ext):
        raise UnsupportedBackendError(
            f"graph {label}: expansion implemented for one-loop zero-momentum graphs only")
    n_edges = len(g.internal_edge_indices)
    n = backend.dim
    m2 = backend.mass ** 2
    if m2 == 0:
        depth = 1
    depth = default_depth(n_edges, n) if depth is None else depth
    rate = 2 * (n_edges + depth) - n
    if m2 > 0 and rate < 2:
        raise PoleInstabilityError(
            f"subtraction depth {depth} leaves a remainder decaying like N^{-rate}")
    work = order + 1
    total = LaurentSeries.zero(work)
    for j in range(depth if m2 > 0 else 1):
        zeta = massless_zeta_expansion(backend.periods, n_edges + j, work + 1)
        zeta = LaurentSeries(zeta.low, zeta.coeffs, zeta.order).rescale_variable(n_edges)
        total = total + _binom_series(n_edges, j, work) * zeta * (m2 ** j)
    values = {}
    tol = 0.0
    cut = (backend.cutoff, 2 * backend.cutoff)
    if m2 > 0:
        const = LaurentSeries(0, [m2 ** (-n_edges) * (-n_edges * math.log(m2)) ** k / math.factorial(k)
                                  for k in range(work + 1)], work)
        r1 = _remainder_taylor(backend, n_edges, depth, work, cut[0])
        r2 = _remainder_taylor(backend, n_edges, depth, work, cut[1])
        rich = r2 + (r2 - r1) / (2 ** rate - 1)
        tol = float(np.max(np.abs(rich - r2)))
        values = {cut[0]: r1.tolist(), cut[1]: r2.tolist()}
        total = total + const + LaurentSeries(0, rich, work)
    series = (total * pref).truncate(order)
    return FeynmanEvaluation(label, backend.to_config(), ext.modes, series, cut, values, tol)


def character_from_rules(backend: TorusBackend, universe: Sequence[FeynmanGraph],
                         algebra: HopfAlgebra | None = None, order: int = DEFAULT_ORDER,
                         coupling: float = 1.0, symmetrize: bool = True) -> Character:
    """Character assigning each universe generator its zero-momentum expansion."""
    algebra = algebra or HopfAlgebra()
    graphs = {algebra.register(g): g for g in universe}

    def run(label):
        g = graphs[label]
        try:
            return label, laurent_expansion(g, backend, None, order, coupling, symmetrize).series
        except Exception as exc:
            raise type(exc)(f"expansion failed for {algebra.name(label)}: {exc}") from exc

    with ThreadPoolExecutor(max_workers=thread_cap()) as pool:
        results = dict(pool.map(run, sorted(graphs)))
    return Character(algebra, results, order)
