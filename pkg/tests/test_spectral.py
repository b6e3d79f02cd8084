import itertools
import math
import warnings

import mpmath
import numpy as np
import pytest

from hopf_renorm.errors import CapabilityError, DivergenceWarning, DomainError
from hopf_renorm.spectral import TorusBackend, circle, massless_zeta_expansion


@pytest.fixture(scope="module")
def unit_circle():
    return circle(1.0)


def test_config_roundtrip():
    b = TorusBackend.from_config({"kind": "torus", "dim": 6, "periods": [1] * 6, "mass": 1.0, "cutoff": 6})
    assert b.dim == 6 and b.cutoff == 6 and b.volume == 1.0
    assert TorusBackend.from_config(b.to_config()).to_config() == b.to_config()
    c = TorusBackend.from_config({"kind": "circle", "radius": 2.0})
    assert c.volume == pytest.approx(4 * math.pi)
    with pytest.raises(DomainError):
        TorusBackend.from_config({"kind": "sphere"})
    with pytest.raises(DomainError):
        TorusBackend((1.0, -1.0))


def test_zero_mode_policy():
    assert TorusBackend.unit_torus(2).drops_zero_mode
    assert not TorusBackend.unit_torus(2, mass=0.5).drops_zero_mode
    assert np.min(TorusBackend.unit_torus(2).eigenvalues()) > 0
    assert np.min(TorusBackend.unit_torus(2, mass=0.5).eigenvalues()) == pytest.approx(0.25)


def test_heat_kernel_coefficients():
    flat = TorusBackend((1.0, 2.0))
    assert flat.heat_kernel_expansion(3).coeffs == (2.0, 0.0, 0.0)


def test_orthonormality():
    assert TorusBackend.unit_torus(2).orthonormality_residual() < 1e-10
    assert circle(1.3).orthonormality_residual("real") < 1e-10


def test_green_function_symmetry_and_direct_sum():
    b = circle(1.0, mass=1.0)
    x, y = 0.4, 2.9
    z = 3.0
    g = b.green_function(z, x, y)
    assert g == pytest.approx(b.green_function(z, y, x), abs=1e-15)
    ks = np.arange(-b.cutoff, b.cutoff + 1)
    direct = sum(np.exp(1j * k * (x - y)) / (k * k + 1.0) ** (1 + z) for k in ks) / (2 * math.pi)
    assert abs(g - direct) < 1e-14


def test_green_function_coincident_unit_circle():
    b = TorusBackend.unit_torus(1, mass=1.0).with_cutoff(400)
    oracle = mpmath.nsum(lambda k: (4 * mpmath.pi ** 2 * k ** 2 + 1) ** -2, [-mpmath.inf, mpmath.inf])
    assert abs(b.green_function(1.0, 0.3, 0.3) - float(oracle)) < 1e-10


def test_green_function_coincident_divergence_warning():
    b = TorusBackend.unit_torus(2, mass=1.0)
    with pytest.warns(DivergenceWarning):
        b.green_function(-0.2, [0.1, 0.1], [0.1, 0.1])
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        b.green_function(-0.2, [0.1, 0.1], [0.4, 0.7])


def test_circle_zeta_oracles(unit_circle):
    assert abs(unit_circle.zeta_trace(2) - math.pi ** 4 / 45) < 1e-10
    assert abs(unit_circle.zeta_trace(0) + 1) < 1e-8
    res = unit_circle.zeta_trace_expansion(0.5, 2).coeff(-1)
    assert abs(res - 1) < 1e-6
    # the trace is 2 zeta_R(2s), whose derivative at zero is -2 ln(2 pi)
    assert abs(unit_circle.zeta_trace_expansion(0.0, 2).coeff(1) + 2 * math.log(2 * math.pi)) < 1e-8


@pytest.mark.parametrize("s", [1.6, 2.0, 3.5])
def test_zeta_matches_direct_sum(s):
    b = TorusBackend((1.0, 1.7), mass=0.6)
    cut = 300
    direct = b.direct_zeta(s, cut)
    # shell |k|_inf = n has 8n modes with eigenvalue >= (2 pi n / 1.7)^2
    tail = 8 * (2 * math.pi / 1.7) ** (-2 * s) * cut ** (2 - 2 * s) / (2 * s - 2)
    err = abs(b.zeta_trace(s) - direct)
    assert err < tail + 1e-10


def test_torus_zeta_against_epstein_oracle():
    # Tr (-Delta)^{-s} on the unit square torus is (2 pi)^{-2s} Z(s), Z the square-lattice Epstein zeta
    s = 1.7
    b = TorusBackend.unit_torus(2)
    z4 = 4 * mpmath.zeta(s) * mpmath.dirichlet(s, [0, 1, 0, -1])
    assert abs(b.zeta_trace(s) - float((2 * mpmath.pi) ** (-2 * s) * z4)) < 1e-10


def test_pole_structure():
    b = TorusBackend.unit_torus(3, mass=0.7)
    poles = b.zeta_poles(4)
    assert [p for p, _ in poles] == [1.5, 0.5, -0.5, -1.5]
    for s, res in poles[:2]:
        assert abs(b.zeta_trace_expansion(s, 1).coeff(-1) - res) < 1e-8
    flat = TorusBackend.unit_torus(2)
    assert [p for p, _ in flat.zeta_poles(4)] == [1.0]
    assert flat.zeta_trace_expansion(-1.0, 1).pole_order == 0


def test_expansion_capability():
    with pytest.raises(CapabilityError):
        circle().zeta_trace_expansion(0.0, 20)


def test_massless_expansion_is_cached():
    a = massless_zeta_expansion((1.0,) * 2, 2.0, 3)
    assert a is massless_zeta_expansion((1.0,) * 2, 2.0, 3)


def test_momentum_tensor_selection_rule():
    b = TorusBackend.unit_torus(2, cutoff=2)
    modes = [np.array(k) for k in itertools.product(range(-1, 2), repeat=2)]
    for i, j, k in itertools.product(modes, repeat=3):
        a = b.momentum_tensor(i, j, k)
        if np.any(i + j + k != 0):
            assert a == 0
        else:
            assert abs(a - 1) < 1e-12
            for p in itertools.permutations((i, j, k)):
                assert b.momentum_tensor(*p) == a


def _real_as_exponentials(k, period):
    """Coefficients of the real basis function in the exponential basis e^{2 pi i m x/period}."""
    w = abs(k)
    if k == 0:
        return {0: 1 / math.sqrt(period)}
    amp = math.sqrt(2 / period)
    if k > 0:
        return {w: amp / 2, -w: amp / 2}
    return {w: amp / 2j, -w: -amp / 2j}


def test_momentum_tensor_real_basis():
    b = circle(0.8, cutoff=4)
    period = b.periods[0]
    for idx in itertools.product(range(-3, 4), repeat=3):
        parts = [_real_as_exponentials(k, period) for k in idx]
        oracle = sum(ca * cb * cc for (ma, ca), (mb, cb), (mc, cc)
                     in itertools.product(*(p.items() for p in parts)) if ma + mb + mc == 0) * period
        assert abs(b.momentum_tensor(*idx, basis="real") - oracle.real) < 1e-12
        assert abs(oracle.imag) < 1e-14
