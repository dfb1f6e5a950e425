import math

import numpy as np
import pytest

from poly import MPoly, exp_linear
from stability import (Region, Verdict, StabilityError, CERTIFIED_NO, CERTIFIED_YES, PROBABLY_YES,
                       univariate_roots, is_stable_uni, is_stable_multi, ly_check, lp_approximant,
                       validated_radius, is_multiplier_sequence, root_clusters, rouche_disc, residual_tol)

Z = MPoly.variable(0)
Z1 = MPoly.variable(0, 2)
Z2 = MPoly.variable(1, 2)


def test_roots_of_quadratics():
    """Companion roots match the quadratic formula"""
    roots = sorted(univariate_roots(Z * Z + 1), key=lambda r: r.imag)
    np.testing.assert_allclose(roots, [-1j, 1j], atol=1e-14)
    np.testing.assert_allclose(univariate_roots(Z * Z - 2 * Z - 1),
                               [1 - math.sqrt(2), 1 + math.sqrt(2)], rtol=1e-13)


def test_roots_with_multiplicity():
    """A triple root comes back three times"""
    roots = univariate_roots((1 + Z) ** 3)
    assert len(roots) == 3
    np.testing.assert_allclose(roots, [-1, -1, -1], atol=1e-4)


def test_roots_edge_cases():
    """Constants have no roots and zero is rejected"""
    assert len(univariate_roots(MPoly.constant(3.0))) == 0
    with pytest.raises(StabilityError, match="identically zero"):
        univariate_roots(MPoly.zero(1))


def test_is_stable_uni_examples():
    """z+i is stable, z-i is not, 1+2z+2z^2 is not real-rooted"""
    assert is_stable_uni(Z + 1j).outcome == CERTIFIED_YES
    no = is_stable_uni(Z - 1j)
    assert no.outcome == CERTIFIED_NO
    assert abs(no.witness[0] - 1j) < 1e-12
    assert abs(no.value) < 1e-12
    assert is_stable_uni(1 + 2 * Z + 2 * Z * Z, Region.REAL).refuted


def test_is_stable_uni_rejects_zero_and_complex_real_check():
    """Zero input and complex data for a real-rootedness check raise"""
    with pytest.raises(StabilityError):
        is_stable_uni(MPoly.zero(1))
    with pytest.raises(StabilityError):
        is_stable_uni(Z + 1j, "real")


def test_constant_is_stable():
    assert is_stable_uni(MPoly.constant(2.0), "upper").outcome == CERTIFIED_YES


@pytest.mark.parametrize("name, region", [
    ("Lee-Yang", Region.RIGHT), ("lee_yang", Region.RIGHT), ("real_rooted", Region.REAL),
    ("Real-Rooted", Region.REAL), ("upper half plane", Region.UPPER), ("REAL_AXIS", Region.REAL),
])
def test_region_aliases(name, region):
    """Separators and case do not matter in region names"""
    assert Region.parse(name) is region


def test_region_parse_rejects_unknown():
    with pytest.raises(StabilityError):
        Region.parse("left")


def test_multi_counterexample_witness():
    """z1 z2 + 1 vanishes at (i, i), found on the diagonal line"""
    v = is_stable_multi(Z1 * Z2 + 1, "upper", trials=1000, seed=42)
    assert v.outcome == CERTIFIED_NO
    np.testing.assert_allclose(v.witness, [1j, 1j], atol=1e-9)
    assert v.trials == 1
    assert abs((Z1 * Z2 + 1)(v.witness)) < 1e-9


@pytest.mark.parametrize("p", [Z1 + Z2, Z1 * Z2 - 1])
def test_multi_stable_examples(p):
    """Stable bivariate polynomials pass 1000 sampled lines"""
    v = is_stable_multi(p, "upper", trials=1000, seed=42)
    assert v.outcome == PROBABLY_YES
    assert v.trials == 1000 and v.seed == 42


def test_multi_is_deterministic():
    """Same seed, same verdict"""
    p = Z1 * Z1 * Z2 + 3 * Z2 - 1j
    assert is_stable_multi(p, trials=300, seed=9) == is_stable_multi(p, trials=300, seed=9)


def test_multi_rejects_bad_input():
    with pytest.raises(StabilityError):
        is_stable_multi(MPoly.zero(2))
    with pytest.raises(StabilityError):
        is_stable_multi(Z1 + Z2, trials=0)


def test_ly_check_examples():
    """Lee-Yang property on one variable"""
    no = ly_check(Z - 1, trials=200)
    assert no.refuted
    assert no.witness[0].real > 0
    assert ly_check(1 + Z, trials=200).outcome == PROBABLY_YES


def test_ly_check_truncated_cosh():
    """cosh truncated at degree 8 passes on the disc of radius 2"""
    cosh8 = MPoly(1, {(2 * k,): 1.0 / math.factorial(2 * k) for k in range(5)}, max_degree=8)
    assert ly_check(cosh8, trials=200, radius=2.0).passed
    assert 2.0 < validated_radius(cosh8) < 3.0


def test_validated_radius_exact_is_infinite():
    assert validated_radius(1 + Z) == math.inf


def test_lp_approximant_examples():
    """e^z at k=2 gives (1 + z/2)^2; e^(z1+z2) at k=1 gives (1+z1)(1+z2)"""
    e1 = exp_linear([1.0], 64)
    assert lp_approximant(e1, 2).allclose(MPoly.from_coeffs([1, 1, 0.25]))
    e2 = exp_linear([1.0, 1.0], 8)
    assert lp_approximant(e2, 1).allclose((1 + Z1) * (1 + Z2))


def test_lp_approximant_converges_on_polynomials():
    """Large k recovers the coefficients of a polynomial"""
    p = 1 + 3 * Z - 2 * Z ** 3
    assert lp_approximant(p, 10 ** 6).allclose(p, rel=1e-5)


def test_lp_approximant_identity_and_real_rootedness():
    """Approximants of the degree-64 exponential are (1 + z/k)^k and real-rooted"""
    e = exp_linear([1.0], 64)
    for k in range(1, 65):
        fk = lp_approximant(e, k)
        expected = MPoly.from_coeffs([math.comb(k, j) / k ** j for j in range(k + 1)])
        assert fk.allclose(expected, rel=1e-12), k
        assert is_stable_uni(fk, Region.REAL).passed, k


def test_multiplier_sequences():
    """lambda_k = k is a multiplier sequence, (1, 1, 2) is not"""
    assert is_multiplier_sequence(list(range(8))).outcome == CERTIFIED_YES
    assert is_multiplier_sequence([1, 1, 2]).refuted


def test_verdict_dict_roundtrip():
    v = Verdict.no((1j, 2.0), 1e-15, "test", trials=3, seed=1)
    assert Verdict.from_dict(v.to_dict()) == v


def test_rouche_disc_simple_root():
    """A simple root gets a tiny disc holding one root"""
    count, radius = rouche_disc(np.array([1, 0, 1], dtype=complex), 1j)
    assert count == 1
    assert radius < 1e-12


def test_root_clusters_merge_split_copies():
    """Rounding splits a sixfold root; the cluster puts it back together"""
    p = (Z - 1j) ** 6 * (Z + 3)
    clusters = sorted(root_clusters(p.univariate_coeffs()), key=lambda c: c.centre.real)
    assert [c.count for c in clusters] == [1, 6]
    assert abs(clusters[1].centre - 1j) < 1e-8
    assert clusters[1].radius < 1.0


@pytest.mark.parametrize("m", range(2, 11))
def test_multiple_root_in_upper_half_plane_is_refuted(m):
    """(z - i)^m has its zeros in H however many copies there are"""
    p = (Z - 1j) ** m
    v = is_stable_uni(p, Region.UPPER)
    assert v.outcome == CERTIFIED_NO
    assert v.witness[0].imag > 0.5
    assert abs(v.value) <= residual_tol(p)


@pytest.mark.parametrize("m", [2, 5, 9])
def test_multiple_real_root_stays_real(m):
    """A real m-fold root is real-rooted and stable, never a witness"""
    p = (Z + 2) ** m * (Z - 1)
    assert is_stable_uni(p, Region.REAL).outcome == CERTIFIED_YES
    assert is_stable_uni(p, Region.UPPER).outcome == CERTIFIED_YES


@pytest.mark.parametrize("p", [(1 + Z1 + Z2) ** 4, (Z1 * Z2 - 1) ** 3, (Z1 + 2 * Z2) ** 3 * (1 + Z1)])
def test_multi_multiple_real_roots_on_lines(p):
    """Powers of stable polynomials restrict to lines with multiple real roots"""
    v = is_stable_multi(p, "upper", trials=2000, seed=42)
    assert v.outcome == PROBABLY_YES


def test_multi_witness_lies_inside_region():
    """A refuting witness is a zero strictly inside H^n"""
    p = (Z1 * Z2 + 1) ** 2 * (Z1 + Z2)
    v = is_stable_multi(p, "upper", trials=500, seed=7)
    assert v.refuted
    assert min(x.imag for x in v.witness) > 1e-9
    assert abs(p(v.witness)) <= residual_tol(p)


@pytest.mark.parametrize("seed", [1, 2, 3])
def test_products_of_stable_polynomials_stay_stable(seed):
    """Closure under products: p*q is never refuted when p and q pass"""
    rng = np.random.default_rng(seed)
    alpha, beta, gamma = (float(x) for x in rng.uniform(0.5, 2, 3))
    p = alpha * Z1 + beta * Z2 + float(rng.normal())
    q = Z1 * Z2 - gamma
    assert is_stable_multi(p, trials=300, seed=seed).passed
    assert is_stable_multi(q, trials=300, seed=seed).passed
    assert is_stable_multi(p * q, trials=300, seed=seed).passed
    assert is_stable_multi(p * p * q, trials=300, seed=seed).passed


@pytest.mark.parametrize("p", [Z - 1j, (Z + 1j) ** 3 * (Z - 2), Z * Z + 1, (Z + 1) ** 4])
def test_one_variable_lines_agree_with_roots(p):
    """With one variable the line scan and the root check agree"""
    uni = is_stable_uni(p, Region.UPPER)
    multi = is_stable_multi(p, Region.UPPER, trials=200, seed=42)
    assert uni.refuted == multi.refuted
    if multi.refuted:
        assert multi.witness[0].imag > 0
        assert abs(p(multi.witness)) <= residual_tol(p)


@pytest.mark.parametrize("p", [Z1 * Z2 - 1, Z1 + Z2 - 3, (Z1 - 2) * (1 + Z2)])
def test_ly_check_witness_in_right_half_plane(p):
    """Witnesses found after rotation are mapped back into the right half-plane"""
    v = ly_check(p, trials=2000, seed=42)
    assert v.refuted
    assert min(x.real for x in v.witness) > 1e-9
    assert abs(p(v.witness)) <= residual_tol(p)
    assert v.value == p(v.witness)
