import math

import numpy as np
import pytest

from poly import (MPoly, BlockSplit, PolyError, pbinom, indices_up_to, poly_arith, poly_eval,
                  rotate_vars, conj_coeffs, exp_pairing, exp_linear, gaussian_series, parse_poly)

Z = MPoly.variable(0)
Z1 = MPoly.variable(0, 2)
Z2 = MPoly.variable(1, 2)


@pytest.mark.parametrize("beta, alpha, expected", [
    ((3,), (2,), 6),
    ((5, 7), (0, 0), 1),
    ((2, 2), (1, 2), 4),
    ((2, 2), (3, 0), 0),
])
def test_pbinom_examples(beta, alpha, expected):
    """pbinom matches alpha! * prod C(beta_i, alpha_i)"""
    assert pbinom(beta, alpha) == expected


def test_pbinom_length_mismatch():
    """Indices of different length are rejected"""
    with pytest.raises(PolyError):
        pbinom((1, 2), (1,))


def test_pbinom_ratio_increases_to_one():
    """(k)_alpha / k^alpha is at most 1 and nondecreasing in k"""
    for alpha in [(1,), (3,), (2, 1), (4, 2)]:
        prev = 0.0
        for k in range(max(alpha), 40):
            ratio = pbinom((k,) * len(alpha), alpha) / k ** sum(alpha)
            assert ratio <= 1.0
            assert ratio >= prev
            prev = ratio


def test_arith_examples():
    """Products and scaling from the reference table"""
    assert poly_arith(1 + Z, 1 - Z, "mul") == 1 - Z * Z
    assert poly_arith(Z1 + Z2, Z1 - Z2, "mul") == Z1 * Z1 - Z2 * Z2
    assert poly_arith(Z, None, "scale", 2j) == MPoly(1, {(1,): 2j})
    with pytest.raises(PolyError):
        poly_arith(Z, Z, "divide")


def test_nvars_mismatch():
    """Adding polynomials in different rings fails"""
    with pytest.raises(PolyError):
        Z + Z1


def test_zero_terms_are_dropped():
    """Exact cancellation leaves no stored coefficient"""
    p = (Z + 1) - (Z + 1)
    assert p.is_zero
    assert dict(p.terms) == {}


def test_truncated_product():
    """Multiplication keeps only terms inside the smaller bound"""
    a = MPoly.from_coeffs([1, 1, 1], max_degree=3)
    b = MPoly.from_coeffs([1, 1, 1])
    p = a * b
    assert p.max_degree == 3
    assert p.degree == 3
    assert p.coeff((3,)) == 2


def test_block_truncation():
    """With a split, each block's degree is bounded separately"""
    split = BlockSplit(1, 1)
    p = MPoly(2, {(2, 1): 1.0, (1, 3): 1.0, (3, 0): 1.0}, max_degree=2, split=split)
    assert set(p.terms) == {(2, 1)}


@pytest.mark.parametrize("p, point, expected", [
    (1 + Z * Z, (1j,), 0),
    (Z1 * Z2 + 1, (1j, 1j), 0),
    ((1 + Z) ** 3, (1,), 8),
])
def test_eval_examples(p, point, expected):
    """poly_eval on the reference table"""
    assert poly_eval(p, point) == expected


def test_eval_length_mismatch():
    """A point of the wrong length is rejected"""
    with pytest.raises(PolyError):
        poly_eval(Z1, (1.0,))


def test_eval_of_product_is_product_of_evals():
    """Evaluation is multiplicative within 1e-10"""
    rng = np.random.default_rng(3)
    for _ in range(20):
        a = MPoly(2, {tuple(rng.integers(0, 5, 2)): complex(*rng.uniform(-3, 3, 2)) for _ in range(6)})
        b = MPoly(2, {tuple(rng.integers(0, 5, 2)): complex(*rng.uniform(-3, 3, 2)) for _ in range(6)})
        x = tuple(rng.uniform(-1, 1, 2) + 1j * rng.uniform(-1, 1, 2))
        lhs = poly_eval(a * b, x)
        rhs = poly_eval(a, x) * poly_eval(b, x)
        assert abs(lhs - rhs) <= 1e-10 * max(1.0, abs(rhs))


def test_evaluate_many_matches_evaluate():
    """Vectorized evaluation agrees with the scalar path"""
    p = (Z1 + 2 * Z2 + 1j) ** 3
    pts = np.array([[0.5, 1j], [2.0, -1.0], [1 + 1j, 0.0]])
    np.testing.assert_allclose(p.evaluate_many(pts), [p(tuple(row)) for row in pts], rtol=1e-13)


def test_restrict_lines_matches_substitution():
    """Line restriction coefficients reproduce p(a + t v)"""
    p = Z1 * Z2 + Z1 ** 2 - 3 * Z2 + 2
    a = np.array([[0.3, -1.2], [2.0, 0.5]])
    v = np.array([[1.0, 2.0], [0.1, 10.0]])
    rows = p.restrict_lines(a, v)
    for i in range(2):
        for t in (0.0, 0.7, -1.3 + 0.4j):
            direct = p(tuple(a[i] + t * v[i]))
            via = np.polynomial.polynomial.polyval(t, rows[i])
            assert abs(direct - via) <= 1e-12 * (1 + abs(direct))


@pytest.mark.parametrize("p, block, expected", [
    (Z, None, MPoly(1, {(1,): -1j})),
    (1 + Z * Z, None, 1 - Z * Z),
    (Z1 * Z2, None, -(Z1 * Z2)),
    (Z1 * Z2, [1], MPoly(2, {(1, 1): -1j})),
])
def test_rotate_examples(p, block, expected):
    """z -> -iz on the selected block"""
    assert rotate_vars(p, "to_upper", block) == expected


def test_rotations_are_inverse_exactly():
    """to_right undoes to_upper bit for bit"""
    rng = np.random.default_rng(5)
    terms = {tuple(rng.integers(0, 6, 3)): complex(*rng.normal(size=2)) for _ in range(15)}
    p = MPoly(3, terms)
    assert rotate_vars(rotate_vars(p, "to_upper"), "to_right") == p
    with pytest.raises(PolyError):
        rotate_vars(p, "sideways")


def test_conj_examples():
    """Coefficient conjugation"""
    assert conj_coeffs(MPoly(1, {(1,): 1 + 1j})) == MPoly(1, {(1,): 1 - 1j})
    real = 1 + 3 * Z - Z * Z
    assert conj_coeffs(real) == real
    assert conj_coeffs(MPoly(2, {(1, 1): 1j})) == MPoly(2, {(1, 1): -1j})


def test_json_roundtrip_and_merge():
    """Parser merges duplicate terms and output is graded-lex sorted"""
    data = {"nvars": 2, "max_degree": None, "terms": [
        {"alpha": [0, 2], "re": 1.0, "im": 0.0},
        {"alpha": [1, 0], "re": 2.0, "im": 1.0},
        {"alpha": [0, 2], "re": 0.5, "im": 0.0},
    ]}
    p = MPoly.from_dict(data)
    assert p.coeff((0, 2)) == 1.5
    out = p.to_dict()
    assert [t["alpha"] for t in out["terms"]] == [[1, 0], [0, 2]]
    assert MPoly.from_json(p.to_json()) == p


def test_malformed_json_terms():
    """Bad exponents raise PolyError"""
    with pytest.raises(PolyError):
        MPoly.from_dict({"nvars": 1, "terms": [{"alpha": [-1], "re": 1.0}]})
    with pytest.raises(PolyError):
        MPoly.from_dict({"terms": []})


def test_parse_poly_list_is_univariate():
    """A bare list is ascending coefficients"""
    assert parse_poly([1, 2, 2]) == MPoly.from_coeffs([1, 2, 2])


def test_indices_up_to_counts():
    """Number of indices of degree <= D in n variables is C(n + D, n)"""
    for n, D in [(1, 5), (2, 4), (3, 3)]:
        assert len(indices_up_to(n, D)) == math.comb(n + D, n)


def test_series_builders():
    """exp pairing, exp_linear and gaussian_series coefficients"""
    e = exp_pairing(1, 3)
    assert e.coeff((2, 2)) == pytest.approx(0.5)
    assert e.split == BlockSplit(1, 1)
    lin = exp_linear([2.0], 4)
    assert lin.coeff((4,)) == pytest.approx(16 / 24)
    g = gaussian_series(1.0, 6)
    assert g.coeff((4,)) == pytest.approx(1 / 8)
    assert g.coeff((3,)) == 0


def test_to_string():
    """Readable output"""
    assert (1 + 2 * Z + 2 * Z * Z).to_string() == "1 + 2*z0 + 2*z0^2"
    assert MPoly.zero(1).to_string() == "0"
