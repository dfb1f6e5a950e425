# operators.py
"""
Linear operators on polynomial rings, their symbols G_T(z, w) = T(exp(z.w)),
the Lambda_beta polarizations and the preserver classification built on them.

Symbols are stored as MPoly in m_out + n_in variables: the output z-block
first, the input w-block after it.
"""
import math
import logging
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from poly import (MPoly, BlockSplit, MultiIndex, PolyError, check_index, index_factorial,
                  index_le, indices_up_to, pbinom, gaussian_series, parse_poly)
from stability import (Region, Verdict, PROBABLY_YES, is_stable_uni, is_stable_multi)
from utils import FockPreserveError, DEFAULT_TOL, ZERO_EPS, trial_rng, complex_from_json, complex_to_json

logger = logging.getLogger(__name__)

RANK_TOL = 1e-9
COUNTEREXAMPLE_STREAM = 7


class OperatorError(FockPreserveError, ValueError):
    """Operator data that does not chain, or a request outside an operator's domain."""


def _combine(nvars, pieces, max_degree=None):
    """Sum (key, value) pieces into an MPoly, dropping rounding-level cancellations."""
    sums, mags = {}, {}
    for key, value in pieces:
        sums[key] = sums.get(key, 0j) + value
        mags[key] = mags.get(key, 0.0) + abs(value)
    return MPoly(nvars, {k: s for k, s in sums.items() if abs(s) > ZERO_EPS * mags[k]}, max_degree)


# --- Operator kinds ---
class LinOp:
    """Base class: subclasses define n_in, m_out and apply_monomial."""
    kind = "abstract"

    @property
    def n_in(self) -> int:
        raise NotImplementedError

    @property
    def m_out(self) -> int:
        raise NotImplementedError

    def apply_monomial(self, alpha: MultiIndex) -> MPoly:
        raise NotImplementedError

    def apply(self, f: MPoly) -> MPoly:
        if f.nvars != self.n_in:
            raise OperatorError(f"{self.kind} operator takes {self.n_in} variables, got {f.nvars}")
        pieces = []
        for alpha, c in f.sorted_terms:
            for gamma, v in self.apply_monomial(alpha).sorted_terms:
                pieces.append((gamma, c * v))
        return _combine(self.m_out, pieces)

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class TableOp(LinOp):
    """T(z^alpha) listed explicitly; unlisted monomials map to zero."""
    inputs: int
    outputs: int
    entries: Mapping[MultiIndex, MPoly] = field(default_factory=dict)
    kind = "table"

    def __post_init__(self):
        clean = {}
        for alpha, out in dict(self.entries).items():
            key = check_index(alpha, self.inputs)
            if out.nvars != self.outputs:
                raise OperatorError(f"table entry {key} has {out.nvars} variables, expected {self.outputs}")
            if not out.is_zero:
                clean[key] = out
        object.__setattr__(self, "entries", clean)

    @property
    def n_in(self):
        return self.inputs

    @property
    def m_out(self):
        return self.outputs

    def apply_monomial(self, alpha):
        return self.entries.get(tuple(alpha), MPoly.zero(self.outputs))

    def to_dict(self):
        return {"kind": self.kind, "n_in": self.inputs, "m_out": self.outputs,
                "entries": [{"alpha": list(a), "value": self.entries[a].to_dict()}
                            for a in sorted(self.entries, key=lambda a: (sum(a), a))]}


@dataclass(frozen=True)
class DiagonalOp(LinOp):
    """Multiplier sequence z^alpha -> lambda_alpha z^alpha (lambda defaults to `default`)."""
    nvars: int
    lam: Mapping[MultiIndex, complex] = field(default_factory=dict)
    default: complex = 0j
    kind = "diagonal"

    def __post_init__(self):
        object.__setattr__(self, "lam", {check_index(a, self.nvars): complex(v)
                                         for a, v in dict(self.lam).items()})

    @classmethod
    def from_sequence(cls, values, default=0j):
        """One-variable multiplier sequence lambda_0, lambda_1, ..."""
        return cls(1, {(k,): v for k, v in enumerate(values)}, default)

    @property
    def n_in(self):
        return self.nvars

    @property
    def m_out(self):
        return self.nvars

    def multiplier(self, alpha):
        return self.lam.get(tuple(alpha), complex(self.default))

    def apply_monomial(self, alpha):
        return MPoly(self.nvars, {tuple(alpha): self.multiplier(alpha)})

    def to_dict(self):
        return {"kind": self.kind, "nvars": self.nvars, "default": complex_to_json(self.default),
                "lambda": [{"alpha": list(a), **complex_to_json(self.lam[a])}
                           for a in sorted(self.lam, key=lambda a: (sum(a), a))]}


@dataclass(frozen=True)
class DiffOp(LinOp):
    """g(d/dz) for a polynomial g (a truncation when g is entire)."""
    g: MPoly
    kind = "diff"

    @property
    def n_in(self):
        return self.g.nvars

    @property
    def m_out(self):
        return self.g.nvars

    def apply_monomial(self, alpha):
        alpha = tuple(alpha)
        terms = {}
        for beta, c in self.g.sorted_terms:
            if index_le(beta, alpha):
                key = tuple(a - b for a, b in zip(alpha, beta))
                terms[key] = terms.get(key, 0j) + c * pbinom(alpha, beta)
        return MPoly(self.g.nvars, terms)

    def to_dict(self):
        return {"kind": self.kind, "g": self.g.to_dict()}


@dataclass(frozen=True)
class MultOp(LinOp):
    """Multiplication by g."""
    g: MPoly
    kind = "mult"

    @property
    def n_in(self):
        return self.g.nvars

    @property
    def m_out(self):
        return self.g.nvars

    def apply_monomial(self, alpha):
        return self.g * MPoly.monomial(alpha)

    def to_dict(self):
        return {"kind": self.kind, "g": self.g.to_dict()}


@dataclass(frozen=True)
class ComposeOp(LinOp):
    """outer o inner."""
    outer: LinOp
    inner: LinOp
    kind = "compose"

    def __post_init__(self):
        if self.inner.m_out != self.outer.n_in:
            raise OperatorError(f"cannot compose: inner has {self.inner.m_out} outputs, "
                                f"outer takes {self.outer.n_in}")

    @property
    def n_in(self):
        return self.inner.n_in

    @property
    def m_out(self):
        return self.outer.m_out

    def apply_monomial(self, alpha):
        return self.outer.apply(self.inner.apply_monomial(alpha))

    def to_dict(self):
        return {"kind": self.kind, "outer": self.outer.to_dict(), "inner": self.inner.to_dict()}


@dataclass(frozen=True)
class TensorExtendOp(LinOp):
    """base acting on the leading variables; extra_vars trailing variables ride along."""
    base: LinOp
    extra_vars: int
    kind = "tensor_extend"

    def __post_init__(self):
        if self.extra_vars < 0:
            raise OperatorError("extra_vars must be >= 0")

    @property
    def n_in(self):
        return self.base.n_in + self.extra_vars

    @property
    def m_out(self):
        return self.base.m_out + self.extra_vars

    def apply_monomial(self, alpha):
        alpha = tuple(alpha)
        head, tail = alpha[:self.base.n_in], alpha[self.base.n_in:]
        out = self.base.apply_monomial(head)
        return MPoly(self.m_out, {gamma + tail: c for gamma, c in out.terms.items()})

    def to_dict(self):
        return {"kind": self.kind, "base": self.base.to_dict(), "extra_vars": self.extra_vars}


def derivative_op(nvars=1, j=0) -> DiffOp:
    """d/dz_j."""
    return DiffOp(MPoly.variable(j, nvars))


def identity_op(nvars=1) -> MultOp:
    return MultOp(MPoly.constant(1.0, nvars))


def op_from_dict(data) -> LinOp:
    try:
        kind = data["kind"]
    except (KeyError, TypeError) as e:
        raise OperatorError(f"operator object needs a 'kind': {e}") from e
    try:
        if kind == "table":
            entries = {tuple(e["alpha"]): parse_poly(e["value"]) for e in data.get("entries", [])}
            return TableOp(int(data["n_in"]), int(data["m_out"]), entries)
        if kind == "diagonal":
            default = complex_from_json(data.get("default", 0))
            if "sequence" in data:
                return DiagonalOp.from_sequence([complex_from_json(v) for v in data["sequence"]], default)
            lam = {tuple(e["alpha"]): complex(float(e.get("re", 0.0)), float(e.get("im", 0.0)))
                   for e in data.get("lambda", [])}
            return DiagonalOp(int(data["nvars"]), lam, default)
        if kind == "diff":
            return DiffOp(parse_poly(data["g"]))
        if kind == "mult":
            return MultOp(parse_poly(data["g"]))
        if kind == "compose":
            return ComposeOp(op_from_dict(data["outer"]), op_from_dict(data["inner"]))
        if kind == "tensor_extend":
            return TensorExtendOp(op_from_dict(data["base"]), int(data["extra_vars"]))
    except (KeyError, TypeError, ValueError) as e:
        if isinstance(e, FockPreserveError):
            raise
        raise OperatorError(f"malformed {kind} operator: {e}") from e
    raise OperatorError(f"unknown operator kind {kind!r}")


def apply_op(T: LinOp, f: MPoly, degree=None) -> MPoly:
    """T(f); with `degree`, terms of total degree above it are dropped."""
    out = T.apply(f)
    return out if degree is None else out.truncate(degree)


# --- Symbols ---
@dataclass(frozen=True)
class Symbol:
    poly: MPoly
    split: BlockSplit
    degree: int

    def __post_init__(self):
        if self.poly.nvars != self.split.nvars:
            raise OperatorError(f"symbol polynomial has {self.poly.nvars} variables, split covers {self.split.nvars}")
        if self.poly.split != self.split:
            object.__setattr__(self, "poly", self.poly.with_split(self.split))

    @property
    def m_out(self):
        return self.split.z_count

    @property
    def n_in(self):
        return self.split.w_count

    def coefficient(self, alpha) -> MPoly:
        """a_alpha(z): the z-polynomial multiplying w^alpha."""
        alpha = tuple(alpha)
        terms = {}
        for key, c in self.poly.terms.items():
            z, w = self.split.parts(key)
            if w == alpha:
                terms[z] = c
        return MPoly(self.m_out, terms)

    def flip_w(self):
        """G(z, -w)."""
        factors = [1.0] * self.m_out + [-1.0] * self.n_in
        return Symbol(self.poly.scale_vars(factors), self.split, self.degree)

    def allclose(self, other, rel=1e-10, abs_tol=1e-14):
        return self.split == other.split and self.poly.allclose(other.poly, rel, abs_tol)

    def to_dict(self):
        return {**self.poly.to_dict(), "z_count": self.m_out, "w_count": self.n_in, "degree": self.degree}

    @classmethod
    def from_dict(cls, data):
        split = BlockSplit(int(data["z_count"]), int(data["w_count"]))
        return cls(MPoly.from_dict(data, split=split), split, int(data.get("degree", 0)))


def _symbol_generic(T: LinOp, D) -> dict:
    terms = {}
    for alpha in indices_up_to(T.n_in, D):
        scale = index_factorial(alpha)
        for gamma, c in T.apply_monomial(alpha).terms.items():
            terms[gamma + alpha] = c / scale
    return terms


def symbol(T: LinOp, D: int) -> Symbol:
    """Truncation of G_T(z, w) to w-degree <= D."""
    D = int(D)
    if D < 0:
        raise OperatorError("symbol degree must be >= 0")
    m, n = T.m_out, T.n_in
    split = BlockSplit(m, n)
    terms = {}
    if isinstance(T, DiffOp):
        # g(w) exp(z.w)
        for beta, c in T.g.sorted_terms:
            for delta in indices_up_to(n, D - sum(beta)):
                key = delta + tuple(b + d for b, d in zip(beta, delta))
                terms[key] = terms.get(key, 0j) + c / index_factorial(delta)
    elif isinstance(T, MultOp):
        # g(z) exp(z.w)
        for beta, c in T.g.sorted_terms:
            for delta in indices_up_to(n, D):
                key = tuple(b + d for b, d in zip(beta, delta)) + delta
                terms[key] = terms.get(key, 0j) + c / index_factorial(delta)
    elif isinstance(T, DiagonalOp):
        for alpha in indices_up_to(n, D):
            lam = T.multiplier(alpha)
            if lam != 0:
                terms[alpha + alpha] = lam / index_factorial(alpha)
    elif isinstance(T, TensorExtendOp):
        # G_base(z, w) exp(z'.w'), variables ordered (z, z', w, w')
        base = symbol(T.base, D)
        bm, bn, k = T.base.m_out, T.base.n_in, T.extra_vars
        for key, c in base.poly.terms.items():
            gamma, alpha = key[:bm], key[bm:]
            for eta in indices_up_to(k, D - sum(alpha)):
                terms[gamma + eta + alpha + eta] = c / index_factorial(eta)
    else:
        terms = _symbol_generic(T, D)
    return Symbol(MPoly(m + n, terms, split=split), split, D)


def op_from_symbol(G: Symbol) -> TableOp:
    """Table operator with T(z^alpha) = alpha! a_alpha(z), |alpha| <= G.degree."""
    entries = {}
    for key, c in G.poly.terms.items():
        z, w = G.split.parts(key)
        entries.setdefault(w, {})[z] = c * index_factorial(w)
    return TableOp(G.n_in, G.m_out, {w: MPoly(G.m_out, t) for w, t in entries.items()})


def lambda_beta(f, beta, split=None, block="w") -> MPoly:
    """Lambda_beta: scale the coefficient of each block monomial x^alpha by pbinom(beta, alpha).

    `f` is an MPoly (its own split, or `split`, or all variables as one block)
    or a Symbol. Terms with alpha not <= beta vanish.
    """
    if isinstance(f, Symbol):
        split, f = f.split, f.poly
    split = split or f.split
    beta = check_index(beta)
    if split is None:
        idx = range(f.nvars)
    else:
        idx = split.block(block)
    idx = list(idx)
    if len(beta) != len(idx):
        raise OperatorError(f"beta has length {len(beta)}, block has {len(idx)} variables")
    terms = {}
    for key, c in f.sorted_terms:
        weight = pbinom(beta, tuple(key[i] for i in idx))
        if weight:
            terms[key] = c * weight
    return MPoly(f.nvars, terms, f.max_degree, f.split)


def t_beta(T: LinOp, beta, D) -> TableOp:
    """Lambda_beta o T as a table over |alpha| <= D (Lambda acts on the outputs)."""
    beta = check_index(beta)
    if len(beta) != T.m_out:
        raise OperatorError(f"beta has length {len(beta)}, operator has {T.m_out} outputs")
    entries = {alpha: lambda_beta(T.apply_monomial(alpha), beta)
               for alpha in indices_up_to(T.n_in, D)}
    return TableOp(T.n_in, T.m_out, entries)


# --- Rank ---
def coefficient_matrix(T: LinOp, D):
    """(rows, cols, M) with M[i, j] = [z^rows[i]] T(z^cols[j]) over |cols[j]| <= D."""
    cols = indices_up_to(T.n_in, D)
    images = [T.apply_monomial(alpha) for alpha in cols]
    rows = sorted({g for img in images for g in img.terms}, key=lambda g: (sum(g), g))
    pos = {g: i for i, g in enumerate(rows)}
    M = np.zeros((len(rows), len(cols)), dtype=complex)
    for j, img in enumerate(images):
        for g, c in img.terms.items():
            M[pos[g], j] = c
    return rows, cols, M


def op_rank(T: LinOp, D, tol=RANK_TOL) -> int:
    """Numerical rank: singular values above tol times the largest."""
    _, _, M = coefficient_matrix(T, D)
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.sum(s > tol * s[0]))


# --- Classification ---
DEGENERATE = "degenerate"
SYMBOL_STABLE = "symbol_stable"
NOT_PRESERVER = "not_preserver"


@dataclass(frozen=True)
class Classification:
    kind: str
    field: str
    degree: int
    rank: int
    sign: str | None = None
    verdict: Verdict | None = None
    factors: tuple = ()
    functionals: tuple = ()
    factor_verdicts: tuple = ()
    witness_input: MPoly | None = None
    witness_output: MPoly | None = None
    polarizations: int = 0

    @property
    def refuted(self) -> bool:
        if self.kind == NOT_PRESERVER:
            return True
        if self.kind == SYMBOL_STABLE:
            return self.verdict is not None and self.verdict.refuted
        # only the rank-one form pins down its factor
        return self.rank == 1 and any(v.refuted for v in self.factor_verdicts)

    def to_dict(self):
        return {
            "kind": self.kind,
            "field": self.field,
            "degree": self.degree,
            "rank": self.rank,
            "sign": self.sign,
            "refuted": self.refuted,
            "verdict": None if self.verdict is None else self.verdict.to_dict(),
            "factors": [q.to_dict() for q in self.factors],
            "factor_strings": [q.to_string() for q in self.factors],
            "functionals": [[{"alpha": list(a), **complex_to_json(w)} for a, w in fn.items()]
                            for fn in self.functionals],
            "factor_verdicts": [v.to_dict() for v in self.factor_verdicts],
            "witness_input": None if self.witness_input is None else self.witness_input.to_dict(),
            "witness_output": None if self.witness_output is None else self.witness_output.to_dict(),
            "witness_strings": None if self.witness_input is None else
            [self.witness_input.to_string(), self.witness_output.to_string()],
            "polarizations": self.polarizations,
        }


def _region(field_name):
    if field_name == "complex":
        return Region.UPPER
    if field_name == "real":
        return Region.REAL
    raise OperatorError(f"field must be 'real' or 'complex', got {field_name!r}")


def _check_poly(p: MPoly, region, trials, seed, tol) -> Verdict:
    if p.nvars == 1:
        return is_stable_uni(p, region, tol)
    return is_stable_multi(p, region, trials, seed, tol)


def _normalized(q: MPoly):
    """q divided by its graded-lex leading coefficient, and that coefficient."""
    lead = q.sorted_terms[-1][1]
    return q.scale(1.0 / lead), lead


def _degenerate(T, D, field_name, rank, trials, seed, tol) -> Classification:
    if rank == 0:
        return Classification(DEGENERATE, field_name, D, 0)
    rows, cols, M = coefficient_matrix(T, D)
    U, s, Vh = np.linalg.svd(M)
    factors, functionals = [], []
    for i in range(rank):
        q = MPoly(T.m_out, {g: U[r, i] for r, g in enumerate(rows)})
        q, lead = _normalized(q)
        weights = s[i] * Vh[i] * lead
        factors.append(q)
        functionals.append({a: complex(w) for a, w in zip(cols, weights) if abs(w) > RANK_TOL * s[0]})
    region = _region(field_name)
    verdicts = []
    if rank == 1:
        q = factors[0]
        if region is Region.REAL and not q.is_real():
            region = Region.UPPER
        verdicts.append(_check_poly(q, region, trials, seed, tol))
    else:
        q, r = factors
        for combo in (q + r.scale(1j), q - r.scale(1j)):
            verdicts.append(_check_poly(combo, Region.UPPER, trials, seed, tol))
    logger.info("[Classify] degenerate operator of rank %d", rank)
    return Classification(DEGENERATE, field_name, D, rank, factors=tuple(factors),
                          functionals=tuple(functionals), factor_verdicts=tuple(verdicts))


def polarization_box(n, D):
    """beta in {1..D}^n with |beta| <= D."""
    return [b for b in indices_up_to(n, D) if all(x >= 1 for x in b)]


def _stable_input(T, rng, field_name, D):
    """Random product of stable linear factors z_j - r, degree <= D."""
    deg = int(rng.integers(1, D + 1))
    p = MPoly.constant(1.0, T.n_in)
    for _ in range(deg):
        j = int(rng.integers(T.n_in))
        re = float(rng.normal(0.0, 2.0))
        im = 0.0 if field_name == "real" or rng.random() < 0.25 else -abs(float(rng.normal(0.0, 2.0)))
        p = p * (MPoly.variable(j, T.n_in) - complex(re, im))
    return p


def find_counterexample(T: LinOp, field_name="complex", D=4, trials=1000, seed=42, tol=DEFAULT_TOL):
    """First stable (real-rooted) input whose image is certified non-stable, or None."""
    region = _region(field_name)
    out_trials = min(trials, 200)

    def probe(p):
        out = T.apply(p)
        if out.is_zero:
            return None
        if region is Region.REAL and not out.is_real():
            raise OperatorError("real field needs an operator with real coefficients")
        verdict = _check_poly(out, region, out_trials, seed, tol)
        return (p, out, verdict) if verdict.refuted else None

    for j in range(T.n_in):
        for d in range(1, D + 1):
            hit = probe((MPoly.variable(j, T.n_in) + 1.0) ** d)
            if hit:
                return hit
    limit = trials if T.m_out == 1 else min(trials, 200)
    for trial in range(limit):
        rng = trial_rng(seed, trial, COUNTEREXAMPLE_STREAM)
        hit = probe(_stable_input(T, rng, field_name, D))
        if hit:
            return hit
    return None


def classify_preserver(T: LinOp, field="complex", D=4, trials=1000, seed=42, tol=DEFAULT_TOL) -> Classification:
    """Truncation-level classification of T as a stability / Laguerre-Polya preserver."""
    region = _region(field)
    rank = op_rank(T, D)
    if rank <= (1 if field == "complex" else 2):
        return _degenerate(T, D, field, rank, trials, seed, tol)

    G = symbol(T, D)
    if field == "real" and not G.poly.is_real():
        raise OperatorError("real field needs an operator with real coefficients")
    betas = polarization_box(T.n_in, D)
    signs = [("minus", G.flip_w())] + ([("plus", G)] if field == "real" else [])
    first_failure = None
    for sign, H in signs:
        failed = None
        for beta in betas:
            P = lambda_beta(H, beta)
            if P.is_zero:
                continue
            verdict = is_stable_multi(P, region, trials, seed, tol)
            if verdict.refuted:
                failed = Verdict.no(verdict.witness, verdict.value, verdict.method,
                                    verdict.trials, verdict.seed, note=f"beta={list(beta)}, sign={sign}")
                break
        if failed is None:
            logger.info("[Classify] symbol (%s sign) passed %d polarizations", sign, len(betas))
            ok = Verdict(PROBABLY_YES, trials=int(trials), seed=int(seed),
                         method="polarized-symbol", note=f"{len(betas)} polarizations")
            return Classification(SYMBOL_STABLE, field, D, rank, sign, ok, polarizations=len(betas))
        first_failure = first_failure or (sign, failed)

    hit = find_counterexample(T, field, D, trials, seed, tol)
    if hit is not None:
        p, out, verdict = hit
        logger.info("[Classify] counterexample %s -> %s", p.to_string(), out.to_string())
        return Classification(NOT_PRESERVER, field, D, rank, first_failure[0], verdict,
                              witness_input=p, witness_output=out, polarizations=len(betas))
    sign, failed = first_failure
    return Classification(SYMBOL_STABLE, field, D, rank, sign, failed, polarizations=len(betas))


# --- Adjoint, dual and composed symbols ---
def formal_adjoint_symbol(G: Symbol) -> Symbol:
    """Swap the z and w blocks and conjugate the coefficients."""
    m, n = G.m_out, G.n_in
    order = list(range(m, m + n)) + list(range(m))
    split = BlockSplit(n, m)
    swapped = G.poly.permute(order, split=split).conj()
    return Symbol(swapped, split, G.degree)


def dual_symbol(G: Symbol, alpha, beta) -> Symbol:
    """Symbol of the Hilbert-space adjoint T*: F_beta -> F_alpha of T: F_alpha -> F_beta.

    G_{T*}(x, y) = conj G_T(conj(y)/beta, alpha*conj(x)).
    """
    alpha = [float(a) for a in getattr(alpha, "beta", alpha)]
    beta = [float(b) for b in getattr(beta, "beta", beta)]
    if len(alpha) != G.n_in or len(beta) != G.m_out:
        raise OperatorError(f"weights of length {len(alpha)}/{len(beta)} do not match "
                            f"symbol blocks {G.n_in}/{G.m_out}")
    if min(alpha + beta) <= 0:
        raise OperatorError("weights must be positive")
    adj = formal_adjoint_symbol(G)
    scaled = adj.poly.scale_vars(alpha + [1.0 / b for b in beta])
    return Symbol(scaled, adj.split, G.degree)


def compose_symbol(S: LinOp, T: LinOp, D) -> Symbol:
    """Symbol of S o T as S applied to G_T with the w variables as spectators."""
    if S.n_in != T.m_out:
        raise OperatorError(f"cannot compose: T has {T.m_out} outputs, S takes {S.n_in}")
    G = symbol(T, D)
    lifted = TensorExtendOp(S, T.n_in).apply(G.poly.with_split(None))
    split = BlockSplit(S.m_out, T.n_in)
    return Symbol(lifted, split, G.degree)


# --- Closed forms ---
def polya_closed_form(a, b, D) -> MPoly:
    """exp(a/2 d^2/dz^2) applied to exp(b z^2 / 2): (1-ab)^(-1/2) exp(b/(1-ab) z^2 / 2)."""
    a, b = float(a), float(b)
    if a * b >= 1:
        raise OperatorError(f"closed form needs ab < 1, got ab = {a * b}")
    return gaussian_series(b / (1 - a * b), D).scale(1.0 / math.sqrt(1 - a * b))
