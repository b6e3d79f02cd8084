"""Flat-torus spectral backends: eigen-data, Green's functions, zeta traces.

The operator is A = -Delta + m^2 with eigenfunctions
phi_k(x) = vol^{-1/2} exp(2 pi i k.x / L) for k in Z^n.  With m = 0 the
constant mode is dropped.  Zeta traces are continued with the Mellin
transform of the heat trace, split at t = 1.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import mpmath
import numpy as np
from scipy import integrate, special

from .errors import CapabilityError, DivergenceWarning, DomainError, ResourceError
from .laurent import LaurentSeries

MAX_EXPANSION_ORDER = 12
MAX_MODES = 20_000_000


def default_cutoff(dim: int) -> int:
    return 20 if dim <= 2 else 6


@dataclass(frozen=True)
class HeatKernelExpansion:
    """Tr exp(-tA) ~ (4 pi t)^{-n/2} sum_k a_k t^k."""

    dim: int
    coeffs: tuple

    def trace(self, t: float) -> float:
        return (4 * math.pi * t) ** (-self.dim / 2) * sum(a * t ** k for k, a in enumerate(self.coeffs))


class TorusBackend:
    def __init__(self, periods: Sequence[float], mass: float = 0.0, cutoff: int | None = None,
                 kind: str = "torus"):
        periods = tuple(float(p) for p in periods)
        if not periods or any(p <= 0 for p in periods):
            raise DomainError("torus periods must be positive")
        if mass < 0:
            raise DomainError("mass must be non-negative")
        self.periods = periods
        self.dim = len(periods)
        self.mass = float(mass)
        self.cutoff = int(cutoff) if cutoff is not None else default_cutoff(self.dim)
        if self.cutoff < 1:
            raise DomainError("cutoff must be at least 1")
        self.kind = kind

    @classmethod
    def circle(cls, radius: float = 1.0, mass: float = 0.0, cutoff: int | None = None):
        return cls((2 * math.pi * radius,), mass, cutoff, kind="circle")

    @classmethod
    def unit_torus(cls, dim: int, mass: float = 0.0, cutoff: int | None = None):
        return cls((1.0,) * dim, mass, cutoff)

    @classmethod
    def from_config(cls, cfg: dict) -> "TorusBackend":
        kind = cfg.get("kind", "torus")
        if kind == "circle":
            return cls.circle(cfg.get("radius", 1.0), cfg.get("mass", 0.0), cfg.get("cutoff"))
        if kind != "torus":
            raise DomainError(f"unknown backend kind {kind!r}")
        periods = cfg.get("periods")
        if periods is None:
            periods = [1.0] * int(cfg["dim"])
        if "dim" in cfg and int(cfg["dim"]) != len(periods):
            raise DomainError("dim does not match the number of periods")
        return cls(periods, cfg.get("mass", 0.0), cfg.get("cutoff"))

    def to_config(self) -> dict:
        if self.kind == "circle":
            return {"kind": "circle", "radius": self.periods[0] / (2 * math.pi),
                    "mass": self.mass, "cutoff": self.cutoff}
        return {"kind": "torus", "dim": self.dim, "periods": list(self.periods),
                "mass": self.mass, "cutoff": self.cutoff}

    def with_cutoff(self, cutoff: int) -> "TorusBackend":
        return TorusBackend(self.periods, self.mass, cutoff, self.kind)

    def with_mass(self, mass: float) -> "TorusBackend":
        return TorusBackend(self.periods, mass, self.cutoff, self.kind)

    @property
    def volume(self) -> float:
        return float(np.prod(self.periods))

    @property
    def drops_zero_mode(self) -> bool:
        return self.mass == 0.0

    @property
    def equal_periods(self) -> bool:
        return len(set(self.periods)) == 1

    # -- modes ------------------------------------------------------------

    def modes(self, cutoff: int | None = None) -> np.ndarray:
        """Retained k vectors with |k|_inf <= cutoff, sorted by eigenvalue then lexicographically."""
        n = self.cutoff if cutoff is None else cutoff
        count = (2 * n + 1) ** self.dim
        if count > MAX_MODES:
            raise ResourceError(f"{count} modes exceed the limit {MAX_MODES}")
        axes = [np.arange(-n, n + 1)] * self.dim
        k = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, self.dim)
        if self.drops_zero_mode:
            k = k[np.any(k != 0, axis=1)]
        lam = self.eigenvalues_of(k)
        order = np.lexsort(tuple(k[:, i] for i in reversed(range(self.dim))) + (lam,))
        return k[order]

    def eigenvalues_of(self, k: np.ndarray) -> np.ndarray:
        k = np.atleast_2d(k)
        w = (2 * np.pi / np.array(self.periods)) ** 2
        return (k.astype(float) ** 2) @ w + self.mass ** 2

    def eigenvalues(self, cutoff: int | None = None) -> np.ndarray:
        return self.eigenvalues_of(self.modes(cutoff))

    def massless_histogram(self, cutoff: int | None = None) -> tuple[np.ndarray, np.ndarray]:
        """Distinct nonzero eigenvalues of -Delta in the cutoff box and their multiplicities."""
        n = self.cutoff if cutoff is None else cutoff
        ks = np.arange(-n, n + 1)
        if self.equal_periods:
            counts = np.zeros(1, dtype=np.int64)
            counts[0] = 1
            axis = np.bincount(ks ** 2)
            for _ in range(self.dim):
                counts = np.convolve(counts, axis)
            sq = np.nonzero(counts)[0]
            mult = counts[sq]
            keep = sq > 0
            scale = (2 * np.pi / self.periods[0]) ** 2
            return sq[keep] * scale, mult[keep].astype(float)
        table = {0.0: 1}
        for period in self.periods:
            vals = (2 * np.pi * ks / period) ** 2
            new: dict = {}
            for lam, c in table.items():
                for v in vals:
                    key = round(lam + v, 10)
                    new[key] = new.get(key, 0) + c
            if len(new) > MAX_MODES:
                raise ResourceError("eigenvalue table too large")
            table = new
        table.pop(0.0, None)
        lam = np.array(sorted(table))
        return lam, np.array([table[l] for l in lam], dtype=float)

    # -- eigenfunctions ---------------------------------------------------------

    def eigenfunction(self, k, x) -> complex:
        k = np.asarray(k, dtype=float)
        x = np.asarray(x, dtype=float)
        phase = 2 * np.pi * np.sum(k * x / np.array(self.periods), axis=-1)
        return np.exp(1j * phase) / math.sqrt(self.volume)

    def real_eigenfunction(self, k: int, x):
        """Real Fourier basis on a circle: cos for k > 0, sin for k < 0, constant for 0."""
        if self.dim != 1:
            raise DomainError("the real basis is provided for circles only")
        period = self.periods[0]
        x = np.asarray(x, dtype=float)
        w = 2 * np.pi * abs(k) / period
        if k == 0:
            return np.full_like(x, 1 / math.sqrt(period))
        f = np.cos if k > 0 else np.sin
        return f(w * x) * math.sqrt(2 / period)

    def orthonormality_residual(self, basis: str = "exp") -> float:
        """max |<phi_i, phi_j> - delta_ij| by trapezoid quadrature.

        The exponential basis is a product over axes, so the per-axis Gram
        matrices determine the full one.
        """
        n = self.cutoff
        worst = 0.0
        for period in self.periods:
            m = 4 * n + 4
            x = np.arange(m) * period / m
            if basis == "exp":
                ks = np.arange(-n, n + 1)
                phi = np.exp(2j * np.pi * np.outer(ks, x) / period) / math.sqrt(period)
            elif basis == "real":
                ks = range(-n, n + 1)
                phi = np.array([TorusBackend.circle(period / (2 * np.pi)).real_eigenfunction(k, x)
                                for k in ks])
            else:
                raise DomainError(f"unknown basis {basis!r}")
            gram = (phi @ phi.conj().T) * period / m
            worst = max(worst, float(np.max(np.abs(gram - np.eye(len(gram))))))
        return worst

    # -- Green's function --------------------------------------------------------

    def _green_sum(self, z: complex, dx: np.ndarray, cutoff: int) -> complex:
        k = self.modes(cutoff)
        lam = self.eigenvalues_of(k)
        phase = 2 * np.pi * (k @ (dx / np.array(self.periods)))
        terms = np.exp(1j * phase) * np.exp(-(1 + z) * np.log(lam))
        return complex(np.sum(terms) / self.volume)

    def green_function(self, z: complex, x, y) -> complex:
        """Truncated kernel of A^{-(1+z)} at (x, y)."""
        dx = np.atleast_1d(np.asarray(x, dtype=float) - np.asarray(y, dtype=float))
        value = self._green_sum(z, dx, self.cutoff)
        coincident = np.allclose(np.mod(dx / np.array(self.periods) + 0.5, 1.0) - 0.5, 0.0)
        if coincident and (1 + z).real <= self.dim / 2:
            half = self._green_sum(z, dx, max(self.cutoff // 2, 1))
            warnings.warn(
                f"coincident-point sum diverges for Re(1+z) <= {self.dim / 2}: "
                f"value grew from {half:.6g} to {value:.6g} when the cutoff doubled",
                DivergenceWarning, stacklevel=2)
        return value

    # -- heat trace and zeta ---------------------------------------------------------

    def heat_kernel_expansion(self, terms: int = 4) -> HeatKernelExpansion:
        m2 = self.mass ** 2
        return HeatKernelExpansion(
            self.dim, tuple(self.volume * (-m2) ** k / math.factorial(k) for k in range(terms)))

    def heat_trace(self, t: float) -> float:
        """Tr exp(-tA) over all retained modes (no cutoff)."""
        log_terms = [math.log1p(_axis_excess(t, p)) for p in self.periods]
        prod = math.expm1(sum(log_terms))
        full = math.exp(-t * self.mass ** 2) * (1 + prod)
        return full - 1.0 if self.drops_zero_mode else full

    def _small_t_excess(self, t: float) -> float:
        """rho(t) with prod_i S_i(t) = vol (4 pi t)^{-n/2} (1 + rho(t))."""
        logs = [math.log1p(2 * _poisson_tail(t, p)) for p in self.periods]
        return math.expm1(sum(logs))

    def _polar_sum(self, s) -> complex:
        """Continuation of int_0^1 t^{s-1} vol (4 pi t)^{-n/2} e^{-t m^2} dt, minus the zero mode."""
        m2 = self.mass ** 2
        with mpmath.workdps(30 + int(m2 / 2.3)):
            pref = mpmath.mpf(self.volume) * (4 * mpmath.pi) ** (-mpmath.mpf(self.dim) / 2)
            total = mpmath.mpf(0)
            for j in range(_polar_terms(m2)):
                total += (-m2) ** j / mpmath.factorial(j) / (s - mpmath.mpf(self.dim) / 2 + j)
            total *= pref
            if self.drops_zero_mode:
                total -= 1 / mpmath.mpmathify(s)
            return complex(total)

    def _mellin_parts(self, s: complex, log_power: int = 0) -> complex:
        """int_0^1 t^{s-1} (ln t)^p/p! vol(4 pi t)^{-n/2} e^{-tm^2} rho dt + int_1^inf t^{s-1} (ln t)^p/p! theta dt."""
        n = self.dim
        m2 = self.mass ** 2
        pref = self.volume * (4 * math.pi) ** (-n / 2)
        fact = math.factorial(log_power)

        def weight(t):
            return t ** (s - 1) * (math.log(t) ** log_power) / fact

        def low(t):
            if t <= 0:
                return 0.0
            rho = self._small_t_excess(t)
            if rho == 0.0:
                return 0.0
            return weight(t) * pref * t ** (-n / 2) * math.exp(-t * m2) * rho

        def high(t):
            return weight(t) * self.heat_trace(t)

        return _cquad(low, 0.0, 1.0) + _cquad(high, 1.0, np.inf)

    def zeta_trace(self, s: complex) -> complex:
        """Tr A^{-s}, analytically continued."""
        s = complex(s)
        if s.imag == 0 and s.real <= 0 and float(s.real).is_integer():
            return self.zeta_trace_expansion(s.real, 0).coeff(0)
        h = self._polar_sum(s) + self._mellin_parts(s)
        return complex(special.rgamma(s) * h)

    def zeta_trace_expansion(self, s0: float, order: int = 4) -> LaurentSeries:
        """Laurent series of Tr A^{-(s0 + w)} in w."""
        if order > MAX_EXPANSION_ORDER:
            raise CapabilityError(f"expansion order {order} exceeds {MAX_EXPANSION_ORDER}")
        s0 = float(s0)
        top = order + 1
        n = self.dim
        m2 = self.mass ** 2
        rg = mpmath.taylor(mpmath.rgamma, s0, top + 1)
        rgamma = LaurentSeries(0, [complex(c) for c in rg], top)
        coeffs: dict = {}
        with mpmath.workdps(30 + int(m2 / 2.3)):
            pref = mpmath.mpf(self.volume) * (4 * mpmath.pi) ** (-mpmath.mpf(n) / 2)
            poles = [(pref * (-m2) ** j / mpmath.factorial(j), mpmath.mpf(s0) - mpmath.mpf(n) / 2 + j)
                     for j in range(_polar_terms(m2))]
            if self.drops_zero_mode:
                poles.append((mpmath.mpf(-1), mpmath.mpf(s0)))
            for c, a in poles:
                if abs(a) < 1e-12:
                    coeffs[-1] = coeffs.get(-1, 0) + complex(c)
                    continue
                for k in range(top + 1):
                    coeffs[k] = coeffs.get(k, 0) + complex(c * (-1) ** k / a ** (k + 1))
        for k in range(top + 1):
            coeffs[k] = coeffs.get(k, 0) + self._mellin_parts(s0, k)
        h = LaurentSeries.from_dict_of_powers(coeffs, top)
        return (rgamma * h).truncate(order)

    def zeta_poles(self, count: int = 6) -> list[tuple[float, float]]:
        """(s, residue) for the first poles of Tr A^{-s}: s = n/2 - j with nonzero residue."""
        out = []
        m2 = self.mass ** 2
        pref = self.volume * (4 * math.pi) ** (-self.dim / 2)
        for j in range(count):
            s = self.dim / 2 - j
            if s <= 0 and float(s).is_integer():
                continue
            res = pref * (-m2) ** j / math.factorial(j) / math.gamma(s)
            if res != 0:
                out.append((s, res))
        return out

    def direct_zeta(self, s: complex, cutoff: int | None = None) -> complex:
        """Truncated eigenvalue sum, valid for Re s > n/2."""
        lam = self.eigenvalues(cutoff)
        return complex(np.sum(np.exp(-complex(s) * np.log(lam))))

    # -- momentum tensor --------------------------------------------------------------

    def _check_mode(self, k):
        k = np.atleast_1d(np.asarray(k, dtype=int))
        if k.shape != (self.dim,):
            raise DomainError(f"mode {k} has the wrong dimension")
        if np.max(np.abs(k)) > self.cutoff:
            raise DomainError(f"mode {k} lies outside the cutoff {self.cutoff}")
        return k

    def momentum_tensor(self, i, j, k, basis: str = "exp") -> complex:
        """a(i,j,k) = integral of phi_i phi_j phi_k over the torus."""
        if basis == "exp":
            ki, kj, kk = (self._check_mode(v) for v in (i, j, k))
            if np.any(ki + kj + kk != 0):
                return 0.0
            return 1.0 / math.sqrt(self.volume)
        if basis == "real":
            idx = [int(np.atleast_1d(v)[0]) for v in (i, j, k)]
            for v in idx:
                self._check_mode([v])
            period = self.periods[0]
            m = 4 * self.cutoff + 4
            x = np.arange(m) * period / m
            f = np.prod([self.real_eigenfunction(v, x) for v in idx], axis=0)
            return float(np.sum(f) * period / m)
        raise DomainError(f"unknown basis {basis!r}")


def _polar_terms(m2: float) -> int:
    return 1 if m2 == 0 else int(40 + 3 * m2)


def _axis_excess(t: float, period: float) -> float:
    """S(t) - 1 where S(t) = sum_k exp(-4 pi^2 t k^2 / L^2)."""
    a = 4 * math.pi ** 2 * t / period ** 2
    if a >= 1.0:
        kmax = int(math.sqrt(50 / a)) + 2
        return 2 * sum(math.exp(-a * k * k) for k in range(1, kmax))
    return (period / math.sqrt(4 * math.pi * t)) * (1 + 2 * _poisson_tail(t, period)) - 1


def _poisson_tail(t: float, period: float) -> float:
    """sum_{n>=1} exp(-L^2 n^2 / (4t))."""
    b = period ** 2 / (4 * t)
    if b > 745:
        return 0.0
    nmax = int(math.sqrt(50 / b)) + 2
    return sum(math.exp(-b * n * n) for n in range(1, nmax))


def _cquad(f, a, b) -> complex:
    with warnings.catch_warnings():
        # quad flags round-off when the integrand is already at machine precision
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        opts = dict(limit=400, epsabs=1e-15, epsrel=1e-13)
        re = integrate.quad(lambda t: complex(f(t)).real, a, b, **opts)[0]
        im = integrate.quad(lambda t: complex(f(t)).imag, a, b, **opts)[0]
    return complex(re, im)


def circle(radius: float = 1.0, mass: float = 0.0, cutoff: int | None = None) -> TorusBackend:
    return TorusBackend.circle(radius, mass, cutoff)


@lru_cache(maxsize=None)
def _epstein_cache(periods: tuple, s0: float, order: int) -> LaurentSeries:
    return TorusBackend(periods, 0.0).zeta_trace_expansion(s0, order)


def massless_zeta_expansion(periods: Sequence[float], s0: float, order: int) -> LaurentSeries:
    """Laurent series of the massless torus zeta (Epstein zeta) about s0; memoized."""
    return _epstein_cache(tuple(float(p) for p in periods), float(s0), int(order))
