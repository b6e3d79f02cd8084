"""Densities and conformal operators on periodic grids.

A metric is g = e^{2f} delta on the torus [0, L)^n sampled on an N^n grid,
so |g| = e^{2nf} and u = e^f.  A weight-r density is stored through its
trivialized coefficient c, meaning phi = c |g|^{r/2n} in coordinates.
"""
from __future__ import annotations

import ast
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import svds

from .errors import DomainError, SpectrumError

ASYMMETRY_TOL = 1e-10

_ALLOWED_NAMES = {
    "pi": np.pi, "e": np.e, "sin": np.sin, "cos": np.cos, "exp": np.exp, "sqrt": np.sqrt,
    "tanh": np.tanh, "log": np.log, "abs": np.abs,
}
_ALLOWED_NODES = (ast.Expression, ast.BinOp, ast.UnaryOp, ast.Call, ast.Name, ast.Load,
                  ast.Constant, ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow, ast.USub, ast.UAdd)


def compile_expression(expr: str, n: int) -> Callable:
    """Turn an arithmetic expression in x (and y) into a vectorized function."""
    tree = ast.parse(expr, mode="eval")
    coords = ["x", "y", "z"][:n] if n <= 3 else [f"x{i}" for i in range(n)]
    for node in ast.walk(tree):
        if not isinstance(node, _ALLOWED_NODES):
            raise DomainError(f"unsupported syntax in {expr!r}: {type(node).__name__}")
        if isinstance(node, ast.Name) and node.id not in _ALLOWED_NAMES and node.id not in coords:
            raise DomainError(f"unknown name {node.id!r} in {expr!r}")
        if isinstance(node, ast.Call) and not isinstance(node.func, ast.Name):
            raise DomainError(f"unsupported call in {expr!r}")
    code = compile(tree, "<expr>", "eval")

    def fn(*xs):
        env = dict(_ALLOWED_NAMES)
        env.update(zip(coords, xs))
        out = eval(code, {"__builtins__": {}}, env)
        return np.broadcast_to(np.asarray(out, dtype=float), np.shape(xs[0])).copy()

    return fn


class ConformalMetric:
    def __init__(self, n: int, grid: int, f=None, length: float = 1.0):
        if n not in (1, 2):
            raise DomainError("grids are supported for n = 1 and n = 2")
        if grid < 3:
            raise DomainError("grid needs at least 3 points per axis")
        self.n = n
        self.grid = grid
        self.length = float(length)
        shape = (grid,) * n
        f = np.zeros(shape) if f is None else np.broadcast_to(np.asarray(f, dtype=float), shape)
        self.f = np.array(f)

    @classmethod
    def from_expression(cls, n: int, grid: int, expr: str, length: float = 1.0) -> "ConformalMetric":
        base = cls(n, grid, None, length)
        return cls(n, grid, compile_expression(expr, n)(*base.coordinates()), length)

    def coordinates(self) -> list[np.ndarray]:
        x = np.arange(self.grid) * self.h
        return list(np.meshgrid(*([x] * self.n), indexing="ij"))

    @property
    def h(self) -> float:
        return self.length / self.grid

    @property
    def cell(self) -> float:
        return self.h ** self.n

    @property
    def det(self) -> np.ndarray:
        return np.exp(2 * self.n * self.f)

    @property
    def u(self) -> np.ndarray:
        return np.exp(self.f)

    def rescaled(self, f) -> "ConformalMetric":
        """The metric e^{2f} g."""
        return ConformalMetric(self.n, self.grid, self.f + f, self.length)

    def evaluate(self, expr: str) -> np.ndarray:
        return compile_expression(expr, self.n)(*self.coordinates())

    def volume(self) -> float:
        return float(np.sum(np.sqrt(self.det)) * self.cell)

    def scalar_curvature(self) -> np.ndarray:
        if self.n == 1:
            return np.zeros_like(self.f)
        lap = (flat_laplacian(self.n, self.grid, self.h) @ self.f.ravel()).reshape(self.f.shape)
        return -2 * np.exp(-2 * self.f) * lap


@dataclass
class Density:
    weight: float
    coeff: np.ndarray
    metric: ConformalMetric

    def __post_init__(self):
        self.coeff = np.broadcast_to(np.asarray(self.coeff, dtype=float), self.metric.f.shape).copy()

    def coordinate_values(self) -> np.ndarray:
        return self.coeff * self.metric.det ** (self.weight / (2 * self.metric.n))

    def retrivialize(self, metric: ConformalMetric) -> "Density":
        """Same density, coefficient taken with respect to another metric."""
        c = self.coordinate_values() * metric.det ** (-self.weight / (2 * metric.n))
        return Density(self.weight, c, metric)

    def __mul__(self, other: "Density") -> "Density":
        if other.metric is not self.metric:
            other = other.retrivialize(self.metric)
        return Density(self.weight + other.weight, self.coeff * other.coeff, self.metric)


def density_norm(phi: Density) -> float:
    r, n = phi.weight, phi.metric.n
    if r < 0:
        raise DomainError("density norms need weight r >= 0")
    if r == 0:
        return float(np.max(np.abs(phi.coeff)))
    p = n / r
    integral = np.sum(np.abs(phi.coeff) ** p * np.sqrt(phi.metric.det)) * phi.metric.cell
    return float(integral ** (1 / p))


def inner_product(phi: Density, psi: Density) -> float:
    n = phi.metric.n
    if phi.weight != n / 2 or psi.weight != n / 2:
        raise DomainError(f"inner product needs two weight-{n / 2} densities")
    return float(np.sum(phi.coordinate_values() * psi.coordinate_values()) * phi.metric.cell)


def change_weight(phi: Density, new_weight: float) -> Density:
    m = phi.metric
    factor = m.det ** ((new_weight - phi.weight) / (2 * m.n))
    return Density(new_weight, phi.coeff * factor, m)


# -- operators -------------------------------------------------------------------------

def _shift(grid: int, n: int, axis: int) -> sp.csr_matrix:
    one = sp.eye(grid, format="csr")
    s = sp.csr_matrix(np.roll(np.eye(grid), 1, axis=1))  # (S v)_i = v_{i+1}
    mats = [one] * n
    mats[axis] = s
    out = mats[0]
    for m in mats[1:]:
        out = sp.kron(out, m, format="csr")
    return out


def flat_laplacian(n: int, grid: int, h: float) -> sp.csr_matrix:
    size = grid ** n
    out = sp.csr_matrix((size, size))
    for a in range(n):
        s = _shift(grid, n, a)
        out = out + (s + s.T - 2 * sp.eye(size)) / h ** 2
    return out.tocsr()


def divergence_form(gm: ConformalMetric) -> sp.csr_matrix:
    """K = -sum_a D_a^T diag(c_a) D_a with c_a the half-node value of sqrt|g| g^{aa}.

    c_a is the product of the two-point averages of sqrt|g| and g^{aa}, which
    makes Delta_g = |g|^{-1/2} K second-order accurate but not exactly
    conformally covariant on the grid.
    """
    n, grid, h = gm.n, gm.grid, gm.h
    size = grid ** n
    s = np.exp(n * gm.f).ravel()
    q = np.exp(-2 * gm.f).ravel()
    out = sp.csr_matrix((size, size))
    for a in range(n):
        sh = _shift(grid, n, a)
        c = 0.25 * (s + sh @ s) * (q + sh @ q)
        d = (sh - sp.eye(size)) / h
        out = out - d.T @ sp.diags(c) @ d
    return out.tocsr()


def _symmetrize(a):
    dense = a.toarray() if sp.issparse(a) else a
    asym = np.max(np.abs(dense - dense.T)) if dense.size else 0.0
    scale = max(1.0, np.max(np.abs(dense)))
    if asym > ASYMMETRY_TOL * scale:
        raise RuntimeError(f"operator asymmetry {asym:.3e} before symmetrization")
    return (a + a.T) / 2


def _kappa(n: int) -> float:
    return 0.25 * (n - 2) / (n - 1)


def conformal_laplacian(gm: ConformalMetric, form: str = "function") -> sp.csr_matrix:
    """Delta_[g] = Delta_g - kappa R.

    ``function`` gives the operator on functions, |g|^{-1/2} K - kappa R,
    which is symmetric only for dvol(g).  ``density`` gives the symmetric
    conjugate W K W - e^{2f} kappa R with W = e^{-(n-2) f / 2}, acting on
    coordinate values.
    """
    if gm.n < 2:
        raise DomainError("the conformal Laplacian needs n >= 2")
    k = divergence_form(gm)
    kr = _kappa(gm.n) * gm.scalar_curvature().ravel()
    if form == "function":
        return (sp.diags(np.exp(-gm.n * gm.f).ravel()) @ k - sp.diags(kr)).tocsr()
    if form == "density":
        w = sp.diags(np.exp(-(gm.n - 2) * gm.f / 2).ravel())
        p = w @ k @ w - sp.diags(np.exp(2 * gm.f).ravel() * kr)
        return _symmetrize(p).tocsr()
    raise DomainError(f"unknown form {form!r}")


def yamabe_pairing(phi: Density, gm: ConformalMetric | None = None) -> float:
    """integral of phi (-Delta_g + kappa R) phi dvol(g) for a weight (n-2)/2 density."""
    gm = gm or phi.metric
    if phi.weight != (gm.n - 2) / 2:
        raise DomainError(f"Yamabe pairing needs weight {(gm.n - 2) / 2}, got {phi.weight}")
    if phi.metric is not gm:
        phi = phi.retrivialize(gm)
    v = phi.coeff.ravel()
    k = divergence_form(gm)
    kr = _kappa(gm.n) * gm.scalar_curvature().ravel()
    vol = np.exp(gm.n * gm.f).ravel()
    return float((-(v @ (k @ v)) + np.sum(kr * v * v * vol)) * gm.cell)


def Y_operator(gm: ConformalMetric, mass: float = 0.0) -> sp.csr_matrix:
    """|g|^{-1/2n} (-Delta_[g] + m^2) |g|^{-1/2n} in symmetric form."""
    if mass < 0:
        raise DomainError("mass must be non-negative")
    p = -conformal_laplacian(gm, "density") + sp.diags((np.exp(2 * gm.f) * mass ** 2).ravel())
    g_inv = sp.diags(np.exp(-gm.f).ravel())
    return _symmetrize(g_inv @ p @ g_inv).tocsr()


@dataclass
class _Spectrum:
    values: np.ndarray
    vectors: np.ndarray


def _spectrum(y, zero_mode: str, tol: float = 1e-9) -> _Spectrum:
    dense = y.toarray() if sp.issparse(y) else np.asarray(y)
    lam, vec = np.linalg.eigh(dense)
    floor = tol * max(1.0, float(np.max(np.abs(lam))))
    if zero_mode == "retain":
        if lam[0] <= floor:
            raise SpectrumError(f"smallest eigenvalue {lam[0]:.3e} is not positive")
        return _Spectrum(lam, vec)
    if zero_mode == "drop":
        keep = lam > floor
        if np.any(lam < -floor):
            raise SpectrumError(f"negative eigenvalue {lam[0]:.3e}")
        return _Spectrum(lam[keep], vec[:, keep])
    raise DomainError(f"unknown zero-mode policy {zero_mode!r}")


def _power(spec: _Spectrum, p: complex) -> np.ndarray:
    w = np.exp(p * np.log(spec.values))
    return (spec.vectors * w) @ spec.vectors.T


def Y_tilde(gm: ConformalMetric, mass: float, z: complex, zero_mode: str = "retain") -> np.ndarray:
    """|g|^{1/2n} Y^{1+z} |g|^{1/2n} by dense eigen-decomposition."""
    spec = _spectrum(Y_operator(gm, mass), zero_mode)
    g = np.exp(gm.f).ravel()
    return g[:, None] * _power(spec, 1 + z) * g[None, :]


def Y_tilde_series(gm: ConformalMetric, mass: float, order: int,
                   zero_mode: str = "retain") -> list[np.ndarray]:
    """Matrix coefficients a_i with Y~(z) = sum_i a_i z^i."""
    spec = _spectrum(Y_operator(gm, mass), zero_mode)
    g = np.exp(gm.f).ravel()
    log = np.log(spec.values)
    out = []
    for i in range(order + 1):
        w = spec.values * log ** i / math.factorial(i)
        out.append(g[:, None] * ((spec.vectors * w) @ spec.vectors.T) * g[None, :])
    return out


def series_remainder_bound(gm: ConformalMetric, mass: float, order: int, z: complex) -> float:
    """Bound on the spectral norm of the series tail, relative to ||Y~(z)||."""
    spec = _spectrum(Y_operator(gm, mass), "retain")
    a = np.abs(z) * np.max(np.abs(np.log(spec.values)))
    tail = math.exp(a) - sum(a ** i / math.factorial(i) for i in range(order + 1))
    lam = spec.values
    ratio = np.max(lam) / np.min(np.abs(np.exp((1 + z) * np.log(lam))))
    g = np.exp(gm.f)
    return float(tail * ratio * (np.max(g) / np.min(g)) ** 2)


def _opnorm(a: np.ndarray) -> float:
    if a.shape[0] <= 1024 or not np.any(a):
        return float(np.linalg.norm(a, 2))
    # a full SVD dominates the cost on large grids; Lanczos finds the top value alone
    return float(svds(a, k=1, return_singular_vectors=False)[0])


def conformal_expansion_check(gm: ConformalMetric, f, z: complex, mass: float = 1.0,
                              zero_mode: str = "retain") -> dict:
    """Compare G u (u^-1 Y u^-1)^{1+z} u G with e^{-2fz} Y~(z), G = |g|^{1/2n}."""
    f = np.broadcast_to(np.asarray(f, dtype=float), gm.f.shape).ravel()
    y = Y_operator(gm, mass).toarray()
    g = np.exp(gm.f).ravel()
    u = np.exp(f)
    inner = y / u[:, None] / u[None, :]
    lhs = (g * u)[:, None] * _power(_spectrum(inner, zero_mode), 1 + z) * (g * u)[None, :]
    rhs = np.exp(-2 * f * z)[:, None] * Y_tilde(gm, mass, z, zero_mode)
    dev = _opnorm(lhs - rhs) / _opnorm(rhs)
    return {
        "n": gm.n,
        "grid": gm.grid,
        "z": [float(np.real(z)), float(np.imag(z))],
        "mass": mass,
        "constant_f": bool(np.ptp(f) == 0),
        "deviation": dev,
    }


def yamabe_invariance_deviation(gm: ConformalMetric, f, phi: Density) -> float:
    """|Q_{e^{2f} g}(phi) - Q_g(phi)| / |Q_g(phi)| for the Yamabe quadratic form Q."""
    base = yamabe_pairing(phi, gm)
    target = gm.rescaled(f)
    # phi keeps its coordinate representative; only the trivialization changes
    moved = yamabe_pairing(phi.retrivialize(target), target)
    return abs(moved - base) / abs(base)
