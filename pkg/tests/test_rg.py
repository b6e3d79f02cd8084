import math
import random

import pytest

from conftest import random_character, two_loop_fixture, universe
from hopf_renorm.characters import Character, birkhoff, star_inverse
from hopf_renorm.errors import DomainError, LocalityError
from hopf_renorm.graphs import bubble, triangle
from hopf_renorm.hopf import HopfAlgebra, HopfPolynomial
from hopf_renorm.laurent import LaurentSeries
from hopf_renorm.rg import (
    beta, beta_by_fit, check_locality, flow, local_character, physics_beta_report, scale,
)

C1, D1, B, E = 0.8, -0.3, 1.7, 2.5


@pytest.fixture(scope="module")
def three_loop():
    alg = HopfAlgebra()
    labels = sorted({alg.register(g) for g in universe(3)})
    return alg, labels


def local_fixture(rng, alg, labels):
    residues = {l: rng.uniform(-1, 1) for l in labels}
    regular = {l: [rng.uniform(-1, 1) for _ in range(4)] for l in labels}
    return local_character(alg, residues, regular)


def test_scale_examples():
    alg, lb, lg, gamma = two_loop_fixture(C1, D1, C1 ** 2 / 2, B, E)
    assert scale(gamma, 1.0).max_difference(gamma) == 0
    t = 3.0
    sb = scale(gamma, t)[lb]
    assert sb.coeff(-1) == pytest.approx(C1)
    assert sb.coeff(0) == pytest.approx(D1 + C1 * math.log(t))
    with pytest.raises(DomainError):
        scale(gamma, 0.0)


def test_scale_semigroup(three_loop, rng):
    alg, labels = three_loop
    for _ in range(20):
        g = random_character(alg, labels, rng)
        t1, t2 = rng.uniform(0.2, 5), rng.uniform(0.2, 5)
        composed, direct = scale(scale(g, t1), t2), scale(g, t1 * t2)
        for lab in labels:
            size = max(abs(c) for c in direct[lab].coeffs)
            assert composed[lab].max_difference(direct[lab]) <= 1e-12 * size


def test_locality_gate_on_two_loop_fixture():
    _, lb, lg, good = two_loop_fixture(C1, D1, C1 ** 2 / 2, B, E)
    assert check_locality(good).passed
    a = 1.1
    _, lb, lg, bad = two_loop_fixture(C1, D1, a, B, E)
    for t in (0.5, 2.0, 5.0):
        report = check_locality(bad, t_samples=(t,))
        assert report.deviations[lg] == pytest.approx(abs(2 * a - C1 ** 2) * abs(math.log(t)), rel=1e-12)
        assert report.deviations[lb] < 1e-15
        assert not report.passed
    with pytest.raises(LocalityError) as info:
        beta(bad)
    assert info.value.deviation[lg] > 0


def test_simple_poles_on_primitives_are_local(rng):
    alg = HopfAlgebra()
    lb, lt = alg.register(bubble()), alg.register(triangle())
    g = Character(alg, {lb: LaurentSeries(-1, [rng.random(), rng.random()]),
                        lt: LaurentSeries(-1, [rng.random(), rng.random(), rng.random()])})
    assert check_locality(g).passed


def test_beta_primitive_examples():
    alg = HopfAlgebra()
    lb = alg.register(bubble())
    g = Character(alg, {lb: LaurentSeries(-1, [C1, D1])})
    assert beta(g)[lb] == pytest.approx(C1, abs=1e-15)
    shifted = Character(alg, {lb: LaurentSeries(-1, [C1, D1 + 4.0, 9.0])})
    assert beta(shifted)[lb] == beta(g)[lb]
    regular = Character(alg, {lb: LaurentSeries(0, [1.0, 2.0])})
    assert beta(regular)[lb] == 0


def test_beta_is_loops_times_residue_on_primitives(three_loop, rng):
    alg, labels = three_loop
    prims = [l for l in labels if not alg.reduced_terms(l)]
    assert len(prims) >= 2
    for _ in range(5):
        g = local_fixture(rng, alg, labels)
        b = beta(g)
        for lab in prims:
            assert abs(b[lab] - alg.loops(lab) * g[lab].residue()) < 1e-12


def test_beta_matches_fit(three_loop, rng):
    alg, labels = three_loop
    g = local_fixture(rng, alg, labels)
    exact, fit = beta(g), beta_by_fit(g)
    assert max(abs(exact[l] - fit[l]) for l in labels) < 1e-8


def test_flow_has_no_pole_under_locality(three_loop, rng):
    alg, labels = three_loop
    g = local_fixture(rng, alg, labels)
    for t in (0.5, 3.0):
        f = flow(g, t)
        for lab in labels:
            assert f[lab].minus.chop(1e-9).is_zero()


def test_beta_conjugation_identity(three_loop, rng):
    """beta = g0^{-1} * (Y Res gamma_minus^{*-1}) * g0 with g0 = gamma_plus(0)."""
    alg, labels = three_loop
    g = local_fixture(rng, alg, labels)
    minus, plus = birkhoff(g)
    inv_minus = star_inverse(minus)
    g0 = {l: plus[l].eval_at_zero() for l in labels}

    def g0_of(mono):
        out = 1.0
        for l in mono:
            out *= g0[l]
        return out

    def g0_inv(mono):
        s = alg.antipode(HopfPolynomial({mono: 1}))
        return sum(float(c) * g0_of(m) for m, c in s.items())

    def infinitesimal(mono):
        if len(mono) != 1:
            return 0.0
        return alg.loops(mono[0]) * inv_minus[mono[0]].residue()

    b = beta(g)
    for lab in labels:
        triple, _ = alg.coassociativity_sides(HopfPolynomial.generator(lab))
        want = sum(float(c) * g0_inv(m1) * infinitesimal(m2) * g0_of(m3)
                   for (m1, m2, m3), c in triple.items())
        assert abs(b[lab] - want) < 1e-10


def test_local_character_has_bounded_poles(three_loop):
    alg, labels = three_loop
    g = local_fixture(random.Random(3), alg, labels)
    for lab in labels:
        assert g[lab].pole_order <= alg.loops(lab)
    assert check_locality(g).passed


def test_literature_table():
    rows = {r["tag"]: r for r in physics_beta_report("all")}
    assert rows["phi3"]["beta"] == "-g^3/(128 pi^3)"
    assert rows["phi4"]["beta"] == "3 g^2/(16 pi^2)"
    assert rows["qed"]["beta"] == "e^3/(12 pi^2)"
    assert all("not computed" in r["kind"] for r in rows.values())
    with pytest.raises(DomainError):
        physics_beta_report("gravity")
