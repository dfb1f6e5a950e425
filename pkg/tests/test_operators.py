import math

import numpy as np
import pytest

from poly import MPoly, BlockSplit, exp_pairing, gaussian_series, indices_up_to
from stability import Region, is_stable_uni, CERTIFIED_YES
from operators import (TableOp, DiagonalOp, DiffOp, MultOp, ComposeOp, TensorExtendOp, Symbol,
                       OperatorError, DEGENERATE, SYMBOL_STABLE, NOT_PRESERVER,
                       derivative_op, identity_op, op_from_dict, apply_op, symbol, op_from_symbol,
                       lambda_beta, t_beta, op_rank, classify_preserver, formal_adjoint_symbol,
                       dual_symbol, compose_symbol, polya_closed_form)

Z = MPoly.variable(0)
D_DZ = derivative_op()
SPLIT = BlockSplit(1, 1)


def sym(terms, degree):
    return Symbol(MPoly(2, terms), SPLIT, degree)


def test_apply_examples():
    """d/dz, lambda_k = k and (1+z) o d/dz on small inputs"""
    assert apply_op(D_DZ, Z * Z) == 2 * Z
    assert apply_op(DiagonalOp.from_sequence(range(5)), (1 + Z) ** 2) == 2 * Z + 2 * Z * Z
    assert apply_op(ComposeOp(MultOp(1 + Z), D_DZ), Z) == 1 + Z


def test_apply_checks_arity():
    with pytest.raises(OperatorError):
        apply_op(D_DZ, MPoly.variable(0, 2))


def test_compose_checks_chaining():
    with pytest.raises(OperatorError):
        ComposeOp(D_DZ, identity_op(2))


def test_apply_with_degree_truncates():
    assert apply_op(MultOp(1 + Z), Z ** 3, degree=3) == Z ** 3


def test_tensor_extend_leaves_extra_variables_alone():
    """d/dz1 extended to (z1, z2) differentiates only z1"""
    T = TensorExtendOp(D_DZ, 1)
    f = MPoly(2, {(2, 3): 1.0, (0, 1): 4.0})
    assert apply_op(T, f) == MPoly(2, {(1, 3): 2.0})


def test_symbol_examples():
    """Truncated symbols of d/dz, the identity and z d/dz"""
    assert symbol(D_DZ, 3).poly.allclose(MPoly(2, {(0, 1): 1, (1, 2): 1, (2, 3): 0.5}))
    assert symbol(identity_op(), 2).poly.allclose(MPoly(2, {(0, 0): 1, (1, 1): 1, (2, 2): 0.5}))
    diag = DiagonalOp.from_sequence(range(4))
    assert symbol(diag, 3).poly.allclose(MPoly(2, {(1, 1): 1, (2, 2): 1, (3, 3): 0.5}))


@pytest.mark.parametrize("T", [
    D_DZ,
    MultOp(1 + Z),
    DiagonalOp.from_sequence([1, 1, 2]),
    TensorExtendOp(D_DZ, 1),
    TableOp(1, 1, {(0,): Z + 1j, (2,): 3 * Z * Z - 1}),
])
def test_closed_form_symbols_match_generic(T):
    """Closed-form symbols agree with T(exp(z.w)) built term by term"""
    G = symbol(T, 5)
    table = op_from_symbol(G)
    for alpha, out in table.entries.items():
        assert out.allclose(T.apply_monomial(alpha), rel=1e-12)


def test_lambda_beta_examples():
    """exp(zw) polarizes to (1 + zw)^k; beta = 0 keeps a_0; large alpha drops out"""
    zw = MPoly(2, {(1, 1): 1.0})
    assert lambda_beta(exp_pairing(1, 6), (3,)).allclose((1 + zw) ** 3)
    f = MPoly(2, {(0, 0): 2.0, (1, 0): 3.0, (1, 1): 5.0}, split=SPLIT)
    assert lambda_beta(f, (0,)) == MPoly(2, {(0, 0): 2.0, (1, 0): 3.0})
    assert lambda_beta(MPoly(2, {(1, 2): 1.0}, split=SPLIT), (1,)).is_zero


def test_t_beta_identity():
    """Identity polarized at beta = 2 scales z^k by (2)_k"""
    table = t_beta(identity_op(), (2,), 4)
    assert table.entries == {(0,): MPoly.constant(1.0), (1,): 2 * Z, (2,): 2 * Z * Z}


def test_op_rank_examples():
    rank_one = TableOp(1, 1, {(k,): Z + 1j for k in range(5)})
    assert op_rank(identity_op(), 3) == 4
    assert op_rank(rank_one, 4) == 1
    assert op_rank(TableOp(1, 1, {}), 3) == 0


@pytest.mark.slow
def test_classify_derivative():
    """d/dz preserves stability: every polarization of -w exp(-zw) passes"""
    c = classify_preserver(D_DZ, "complex", D=4, trials=10000, seed=42)
    assert c.kind == SYMBOL_STABLE
    assert c.sign == "minus"
    assert not c.refuted


def test_classify_diagonal_counterexample():
    """(1, 1, 2) is not a multiplier sequence: (1+z)^2 maps to 1 + 2z + 2z^2"""
    c = classify_preserver(DiagonalOp.from_sequence([1, 1, 2]), "real", D=4, trials=500, seed=42)
    assert c.kind == NOT_PRESERVER
    assert c.refuted
    assert c.witness_input == (1 + Z) ** 2
    assert c.witness_output == 1 + 2 * Z + 2 * Z * Z
    assert c.to_dict()["witness_strings"] == ["1 + 2*z0 + z0^2", "1 + 2*z0 + 2*z0^2"]


def test_classify_rank_one():
    """P -> P(1) (z + i) is degenerate with a stable factor"""
    T = TableOp(1, 1, {(k,): Z + 1j for k in range(5)})
    c = classify_preserver(T, "complex", D=4, trials=200)
    assert c.kind == DEGENERATE
    assert c.rank == 1
    assert c.factors[0].allclose(Z + 1j, rel=1e-10, abs_tol=1e-12)
    assert c.factor_verdicts[0].outcome == CERTIFIED_YES
    assert not c.refuted


@pytest.mark.parametrize("T", [
    MultOp(1 + Z),
    DiagonalOp.from_sequence(range(5)),
    DiffOp(1 - 2 * Z),
    DiffOp(1 + 0.5 * Z),
    DiffOp(1 + 3 * Z),
])
@pytest.mark.slow
def test_classify_known_preservers(T):
    """Multiplication by a stable factor, z d/dz and 1 + c d/dz are not refuted"""
    assert not classify_preserver(T, "complex", D=4, trials=10000, seed=42).refuted


def test_hermite_poulain():
    """1 + c d/dz keeps real-rooted polynomials real-rooted"""
    rng = np.random.default_rng(2024)
    cs = rng.uniform(-3, 3, 20)
    for _ in range(200):
        p = MPoly.constant(1.0)
        for r in rng.uniform(-5, 5, int(rng.integers(1, 9))):
            p = p * (Z - float(r))
        for c in cs:
            out = apply_op(DiffOp(1 + float(c) * Z), p)
            assert is_stable_uni(out, Region.REAL).outcome == CERTIFIED_YES


def test_formal_adjoint_examples():
    """d/dz and multiplication by z are formal adjoints; coefficients conjugate"""
    D = 5
    adj = formal_adjoint_symbol(symbol(D_DZ, D))
    assert adj.allclose(symbol(MultOp(Z), D - 1))
    assert formal_adjoint_symbol(sym({(1, 2): 1j}, 2)).poly == MPoly(2, {(2, 1): -1j})
    symmetric = sym({(1, 1): 2.0, (2, 0): 1.0, (0, 2): 1.0}, 2)
    assert formal_adjoint_symbol(symmetric).poly == symmetric.poly


def test_dual_symbol_of_identity():
    G = symbol(identity_op(), 6)
    assert dual_symbol(G, [1.7], [1.7]).allclose(G)
    with pytest.raises(OperatorError):
        dual_symbol(G, [0.0], [1.0])


def test_compose_symbol_examples():
    """(d/dz)^2, identity o T and z d/dz"""
    D = 4
    assert compose_symbol(D_DZ, D_DZ, D).allclose(symbol(DiffOp(Z * Z), D))
    T = MultOp(1 + Z)
    assert compose_symbol(identity_op(), T, D).allclose(symbol(T, D))
    assert compose_symbol(MultOp(Z), D_DZ, D).allclose(symbol(DiagonalOp.from_sequence(range(D + 1)), D))


def test_compose_closure():
    """compose_symbol matches the symbol of the composed operator, which is never refuted"""
    pool = [D_DZ, MultOp(1 + Z), DiagonalOp.from_sequence(range(10)),
            DiffOp(1 - 2 * Z), DiffOp(1 + 0.5 * Z), DiffOp(1 + 3 * Z)]
    rng = np.random.default_rng(10)
    for _ in range(20):
        S, T = (pool[int(i)] for i in rng.integers(0, len(pool), 2))
        assert compose_symbol(S, T, 4).allclose(symbol(ComposeOp(S, T), 4))
        assert not classify_preserver(ComposeOp(S, T), "complex", D=4, trials=300, seed=42).refuted


def test_polya_sharpness():
    """exp(a/2 d^2) on exp(b z^2 / 2) with a = b = 1/2 is (2/sqrt 3) exp(z^2 / 3)"""
    f = gaussian_series(0.5, 120)
    out = apply_op(DiffOp(gaussian_series(0.5, 120)), f).truncate(16)
    closed = polya_closed_form(0.5, 0.5, 16)
    assert closed.coeff((2,)) == pytest.approx(2 / math.sqrt(3) / 3)
    assert out.allclose(closed.with_max_degree(None), rel=1e-8)


def test_polya_closed_form_domain():
    with pytest.raises(OperatorError):
        polya_closed_form(1.0, 1.0, 4)


def test_op_from_dict():
    """Table and diagonal operators parse from JSON objects"""
    table = op_from_dict({"kind": "table", "n_in": 1, "m_out": 1,
                          "entries": [{"alpha": [1], "value": [0, 0, 1]}]})
    assert apply_op(table, Z) == Z * Z
    diag = op_from_dict({"kind": "diagonal", "sequence": [1, 1, 2]})
    assert diag.multiplier((2,)) == 2
    with pytest.raises(OperatorError):
        op_from_dict({"kind": "shift"})
    with pytest.raises(OperatorError):
        op_from_dict({"kind": "table", "n_in": 1})


def _random_table(rng, degree=3):
    """Two-variable operator with random complex images of low-degree monomials."""
    entries = {}
    for alpha in indices_up_to(2, degree):
        image = {}
        for _ in range(3):
            gamma = tuple(int(x) for x in rng.integers(0, 3, 2))
            image[gamma] = complex(*rng.normal(size=2))
        entries[alpha] = MPoly(2, image)
    return TableOp(2, 2, entries)


POOL = [D_DZ, MultOp(1 + Z), DiagonalOp.from_sequence(range(6)), DiffOp(1 - 2 * Z), DiffOp(Z * Z + 1j)]


@pytest.mark.parametrize("T", POOL)
@pytest.mark.parametrize("beta", [(0,), (1,), (3,), (6,)])
def test_lambda_commutes_with_symbol(T, beta):
    """Polarizing the z block of G_T gives the symbol of Lambda_beta o T"""
    D = 5
    lhs = lambda_beta(symbol(T, D), beta, block="z")
    rhs = symbol(t_beta(T, beta, D), D).poly
    assert lhs.allclose(rhs, rel=1e-12, abs_tol=1e-14)


def test_lambda_commutes_with_symbol_two_variables():
    rng = np.random.default_rng(3)
    for _ in range(10):
        T = _random_table(rng)
        beta = tuple(int(x) for x in rng.integers(0, 4, 2))
        lhs = lambda_beta(symbol(T, 3), beta, block="z")
        assert lhs.allclose(symbol(t_beta(T, beta, 3), 3).poly, rel=1e-12, abs_tol=1e-14)


def test_apply_op_is_linear():
    """T(a f + b g) = a T(f) + b T(g) for tables and closed-form operators"""
    rng = np.random.default_rng(17)
    Z1, Z2 = MPoly.variable(0, 2), MPoly.variable(1, 2)
    for _ in range(20):
        a, b = (complex(*rng.normal(size=2)) for _ in range(2))
        T = _random_table(rng)
        f = 1 + 2 * Z1 * Z2 - Z2 ** 3 * 1j
        g = Z1 ** 2 - 0.5 * Z2 + 3
        combined = apply_op(T, f.scale(a) + g.scale(b))
        assert combined.allclose(apply_op(T, f).scale(a) + apply_op(T, g).scale(b), rel=1e-12, abs_tol=1e-12)
    f, g = (1 + Z) ** 3, Z ** 4 - 2j * Z
    for T in POOL:
        combined = apply_op(T, f.scale(2 - 1j) + g.scale(0.5j))
        expected = apply_op(T, f).scale(2 - 1j) + apply_op(T, g).scale(0.5j)
        assert combined.allclose(expected, rel=1e-12, abs_tol=1e-12)
