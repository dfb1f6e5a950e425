# fock.py
"""
Weighted Bargmann-Fock spaces F_beta: norms, inner products, the reproducing
kernel, Gaussian pairings, the integral representation of an operator through
its symbol, the symbol norm bound, M_alpha growth constants and membership
tests for Gaussian-type functions.
"""
import math
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, special

from poly import MPoly, check_index, index_factorial, monomial_value, indices_up_to
from operators import LinOp, symbol, apply_op
from stability import SERIES_TAIL_TOL
from utils import FockPreserveError, trial_rng, complex_from_json, complex_to_json

logger = logging.getLogger(__name__)

EXACT = "exact"
MONTE_CARLO = "monte_carlo"
MC_STREAM = 11
MC_WARN_RATIO = 0.1
RADIAL_POINTS = 64
ANGLE_POINTS = 64
EJ_GRID = 400


class FockError(FockPreserveError, ValueError):
    """Bad weights, quadrature settings or unsupported function forms."""


@dataclass(frozen=True)
class Weight:
    """Strictly positive weight vector beta indexing F_beta."""
    beta: tuple

    def __post_init__(self):
        try:
            values = tuple(float(b) for b in np.atleast_1d(self.beta))
        except (TypeError, ValueError) as e:
            raise FockError(f"bad weight {self.beta!r}: {e}") from e
        if not values or any(not (b > 0 and math.isfinite(b)) for b in values):
            raise FockError(f"weights must be finite and > 0, got {values}")
        object.__setattr__(self, "beta", values)

    @classmethod
    def of(cls, value, n=None):
        """Coerce a Weight, a scalar (broadcast to n) or a sequence."""
        if isinstance(value, Weight):
            w = value
        elif np.ndim(value) == 0:
            w = cls((float(value),) * (n or 1))
        else:
            w = cls(tuple(value))
        if n is not None and len(w) != n:
            raise FockError(f"weight has length {len(w)}, expected {n}")
        return w

    def __len__(self):
        return len(self.beta)

    def __le__(self, other):
        return all(a <= b for a, b in zip(self.beta, other.beta))

    def strictly_below(self, other) -> bool:
        """self << other: every coordinate strictly smaller."""
        return all(a < b for a, b in zip(self.beta, other.beta))

    def power(self, alpha) -> float:
        return math.prod(b ** a for b, a in zip(self.beta, alpha))

    def concat(self, other):
        """beta (+) alpha on the joined variable set."""
        return Weight(self.beta + other.beta)

    def to_list(self):
        return list(self.beta)


@dataclass(frozen=True)
class GaussQuad:
    """How Gaussian integrals are evaluated: exact monomial moments or Monte Carlo."""
    mode: str = EXACT
    samples: int = 20000
    seed: int = 42

    def __post_init__(self):
        if self.mode not in (EXACT, MONTE_CARLO):
            raise FockError(f"unknown quadrature mode {self.mode!r}")
        if self.mode == MONTE_CARLO and int(self.samples) < 2:
            raise FockError("Monte Carlo quadrature needs at least 2 samples")


@dataclass(frozen=True, eq=False)
class GaussianForm:
    """scale * exp(z^T A z) for a symmetric matrix A."""
    matrix: np.ndarray
    scale: complex = 1.0

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.matrix, dtype=complex))
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise FockError(f"GaussianForm needs a square matrix, got shape {A.shape}")
        if not np.allclose(A, A.T):
            raise FockError("GaussianForm matrix must be symmetric")
        object.__setattr__(self, "matrix", A)
        object.__setattr__(self, "scale", complex(self.scale))

    @property
    def nvars(self):
        return self.matrix.shape[0]

    def quadratic(self) -> MPoly:
        """z^T A z as an MPoly."""
        n = self.nvars
        terms = {}
        for i in range(n):
            for j in range(n):
                key = tuple(int(k == i) + int(k == j) for k in range(n))
                terms[key] = terms.get(key, 0j) + self.matrix[i, j]
        return MPoly(n, terms)

    def truncate(self, D) -> MPoly:
        """Series of scale * exp(z^T A z) up to total degree D."""
        q = self.quadratic().with_max_degree(D)
        out = MPoly.constant(1.0, self.nvars, max_degree=D)
        term = out
        for k in range(1, D // 2 + 1):
            term = (term * q).scale(1.0 / k)
            out = out + term
        return out.scale(self.scale)

    def evaluate(self, point) -> complex:
        z = np.asarray(point, dtype=complex)
        return complex(self.scale * np.exp(z @ self.matrix @ z))

    def to_dict(self):
        A = self.matrix
        rows = [[float(x.real) if x.imag == 0 else complex_to_json(x) for x in row] for row in A]
        return {"matrix": rows, "scale": complex_to_json(self.scale)}

    @classmethod
    def from_dict(cls, data):
        try:
            rows = [[complex_from_json(x) for x in row] for row in data["matrix"]]
            return cls(np.array(rows, dtype=complex), complex_from_json(data.get("scale", 1.0)))
        except (KeyError, TypeError, ValueError) as e:
            if isinstance(e, FockPreserveError):
                raise
            raise FockError(f"malformed GaussianForm: {e}") from e


# --- Norms and inner products ---
def _weight_factor(alpha, beta: Weight) -> float:
    return index_factorial(alpha) / beta.power(alpha)


def fock_norm_sq(f: MPoly, beta) -> float:
    """||f||_beta^2 = sum alpha!/beta^alpha |a_alpha|^2."""
    beta = Weight.of(beta, f.nvars)
    return float(sum(_weight_factor(a, beta) * abs(c) ** 2 for a, c in f.sorted_terms))


def fock_inner(f: MPoly, g: MPoly, beta) -> complex:
    """<f, g>_beta, conjugate-linear in g."""
    if f.nvars != g.nvars:
        raise FockError(f"nvars mismatch: {f.nvars} vs {g.nvars}")
    beta = Weight.of(beta, f.nvars)
    total = 0j
    for alpha, a in f.sorted_terms:
        b = g.terms.get(alpha)
        if b is not None:
            total += _weight_factor(alpha, beta) * a * b.conjugate()
    return complex(total)


def reproducing_kernel(w, beta, D) -> MPoly:
    """Truncation of e_beta(z, conj w) = exp(sum beta_j z_j conj(w_j)) at degree D."""
    w = [complex(x) for x in np.atleast_1d(w)]
    beta = Weight.of(beta, len(w))
    scaled = [b * x.conjugate() for b, x in zip(beta.beta, w)]
    terms = {alpha: monomial_value(scaled, alpha) / index_factorial(alpha)
             for alpha in indices_up_to(len(w), D)}
    return MPoly(len(w), terms, max_degree=D)


def reproducing_eval(f: MPoly, w, beta) -> complex:
    """f(w) as <f, e_beta(., conj w)>_beta with the kernel truncated at deg f.

    Terms of the kernel above deg f are orthogonal to f, so the truncation is
    exact. The result equals f(w) only when the kernel and the inner product
    share the same beta.
    """
    w = [complex(x) for x in np.atleast_1d(w)]
    if len(w) != f.nvars:
        raise FockError(f"point has length {len(w)}, expected {f.nvars}")
    return fock_inner(f, reproducing_kernel(w, beta, f.degree), beta)


def gaussian_pair(gamma, delta, alpha) -> float:
    """Integral of w^gamma conj(w)^delta against the Gaussian measure sigma_alpha."""
    gamma, delta = check_index(gamma), check_index(delta)
    if len(gamma) != len(delta):
        raise FockError(f"index lengths differ: {len(gamma)} vs {len(delta)}")
    alpha = Weight.of(alpha, len(gamma))
    if gamma != delta:
        return 0.0
    return _weight_factor(gamma, alpha)


def functional_pairing(phi_hat: MPoly, f: MPoly) -> complex:
    """phi(f) = sum alpha! [w^alpha]phi_hat * f_alpha for a functional given by its transform."""
    if phi_hat.nvars != f.nvars:
        raise FockError(f"nvars mismatch: {phi_hat.nvars} vs {f.nvars}")
    total = 0j
    for alpha, c in f.sorted_terms:
        h = phi_hat.terms.get(alpha)
        if h is not None:
            total += index_factorial(alpha) * h * c
    return complex(total)


# --- Integral representation ---
@dataclass(frozen=True)
class IntegralResult:
    poly: MPoly
    mode: str
    truncation_degree: int
    stderr: dict = field(default_factory=dict)
    samples: int | None = None
    warning: str | None = None

    def to_dict(self):
        return {
            "value": self.poly.to_dict(),
            "value_string": self.poly.to_string(),
            "truncation_degree": self.truncation_degree,
            "mode": self.mode,
            "samples": self.samples,
            "stderr": [{"alpha": list(a), "stderr": float(s)}
                       for a, s in sorted(self.stderr.items(), key=lambda kv: (sum(kv[0]), kv[0]))],
            "warning": self.warning,
        }


def _scaled_symbol_terms(T: LinOp, alpha: Weight, D):
    """(gamma, delta, g_{gamma,delta} * alpha^delta) for G_T(z, alpha w)."""
    G = symbol(T, D)
    out = []
    for key, c in G.poly.sorted_terms:
        gamma, delta = G.split.parts(key)
        out.append((gamma, delta, c * alpha.power(delta)))
    return out


def apply_integral_rep(T: LinOp, f: MPoly, alpha, quad: GaussQuad = None, D=None) -> IntegralResult:
    """T(f)(z) = integral of f(w) G_T(z, alpha conj w) d sigma_alpha(w), truncated at total degree D."""
    quad = quad or GaussQuad()
    if f.nvars != T.n_in:
        raise FockError(f"operator takes {T.n_in} variables, got {f.nvars}")
    alpha = Weight.of(alpha, T.n_in)
    D = f.degree if D is None else int(D)
    if D < f.degree:
        raise FockError(f"symbol degree {D} does not cover deg f = {f.degree}")
    terms = _scaled_symbol_terms(T, alpha, D)

    if quad.mode == EXACT:
        out = {}
        for gamma, delta, g in terms:
            a = f.terms.get(delta)
            if a is None:
                continue
            # the conj(w)^delta factor pairs only with w^delta in f
            out[gamma] = out.get(gamma, 0j) + a * g * gaussian_pair(delta, delta, alpha)
        return IntegralResult(MPoly(T.m_out, out).truncate(D), EXACT, D)

    S = int(quad.samples)
    rng = trial_rng(quad.seed, 0, MC_STREAM)
    sd = np.sqrt(1.0 / (2.0 * np.asarray(alpha.beta)))
    w = rng.normal(size=(S, T.n_in)) * sd + 1j * rng.normal(size=(S, T.n_in)) * sd
    fw = f.evaluate_many(w)
    wbar = np.conj(w)
    acc = {}
    for gamma, delta, g in terms:
        mono = np.ones(S, dtype=complex)
        for j, e in enumerate(delta):
            if e:
                mono = mono * wbar[:, j] ** e
        acc[gamma] = acc.get(gamma, 0) + g * mono
    coeffs, stderr = {}, {}
    for gamma, vals in acc.items():
        if sum(gamma) > D:
            continue
        samples = fw * vals
        coeffs[gamma] = complex(np.mean(samples))
        stderr[gamma] = float(np.sqrt(np.var(samples.real, ddof=1) + np.var(samples.imag, ddof=1)) / np.sqrt(S))
    poly = MPoly(T.m_out, coeffs)
    warning = None
    top = max((abs(c) for c in coeffs.values()), default=0.0)
    worst = max(stderr.values(), default=0.0)
    if top > 0 and worst > MC_WARN_RATIO * top:
        warning = f"Monte Carlo standard error {worst:.3g} is large against coefficients of size {top:.3g}"
        logger.warning("[Integral] %s", warning)
    return IntegralResult(poly, MONTE_CARLO, D, stderr, S, warning)


# --- Symbol norm bound ---
@dataclass(frozen=True)
class GBound:
    lhs: float
    rhs: float
    holds: bool
    truncation_degree: int
    boundary: bool
    symbol_norm: float
    input_norm: float

    def to_dict(self):
        return {"lhs": self.lhs, "rhs": self.rhs, "holds": self.holds,
                "truncation_degree": self.truncation_degree, "boundary": self.boundary,
                "symbol_norm": self.symbol_norm, "input_norm": self.input_norm}


def verify_g_bound(T: LinOp, f: MPoly, alpha, beta, D) -> GBound:
    """Check ||T(f)||_beta <= ||G_T(z, alpha w)||_{beta (+) alpha} ||f||_alpha at truncation D."""
    alpha = Weight.of(alpha, T.n_in)
    beta = Weight.of(beta, T.m_out)
    D = int(D)
    if D < f.degree:
        raise FockError(f"truncation degree {D} does not cover deg f = {f.degree}")
    lhs = math.sqrt(fock_norm_sq(apply_op(T, f), beta))

    joint = beta.concat(alpha)
    layers = {}
    for gamma, delta, g in _scaled_symbol_terms(T, alpha, D):
        layers[sum(delta)] = layers.get(sum(delta), 0.0) + _weight_factor(gamma + delta, joint) * abs(g) ** 2
    sym_sq = sum(layers.values())
    boundary = sym_sq > 0 and layers.get(D, 0.0) > SERIES_TAIL_TOL * sym_sq
    if boundary:
        logger.warning("[GBound] symbol norm not converged at degree %d (top layer %.3g of %.3g)",
                       D, layers.get(D, 0.0), sym_sq)
    sym = math.sqrt(sym_sq)
    fn = math.sqrt(fock_norm_sq(f, alpha))
    rhs = sym * fn
    return GBound(lhs, rhs, lhs <= rhs * (1 + 1e-9), D, bool(boundary), sym, fn)


# --- M_alpha ---
def _neg_log_envelope(g: MPoly, alpha):
    a = np.asarray(alpha.beta)

    def fn(x):
        z = x[0::2] + 1j * x[1::2]
        val = abs(g.evaluate(z))
        if val == 0:
            return np.inf
        return -(math.log(val) - float(a @ np.abs(z) ** 2) / 2)
    return fn


def _search_radius(g: MPoly, alpha) -> float:
    return max(1.0, 2.0 * math.sqrt(g.degree / min(alpha.beta)))


def m_alpha(g, alpha) -> float:
    """sup_z exp(-sum alpha_j |z_j|^2 / 2) |g(z)|; +inf when unbounded.

    For scale * exp(z^T A z), substituting z = S u with S = diag(sqrt(2/alpha))
    turns the exponent into Re(u^T (S A S) u) - |u|^2, and the supremum of
    Re(u^T B u) on the unit sphere is the largest singular value of the
    symmetric B. So M_alpha is |scale| when ||S A S||_2 <= 1 and +inf otherwise,
    for complex and mixed-sign A alike.
    """
    if isinstance(g, GaussianForm):
        alpha = Weight.of(alpha, g.nvars)
        half = np.diag(np.sqrt(2.0 / np.asarray(alpha.beta)))
        norm = float(np.linalg.norm(half @ g.matrix @ half, 2))
        if norm <= 1 + 1e-12:
            return abs(g.scale)
        return math.inf
    if not isinstance(g, MPoly):
        raise FockError(f"m_alpha needs an MPoly or GaussianForm, got {type(g).__name__}")
    alpha = Weight.of(alpha, g.nvars)
    if g.is_zero:
        return 0.0
    if g.degree == 0:
        return abs(g.coeff((0,) * g.nvars))

    n = g.nvars
    R = _search_radius(g, alpha)
    objective = _neg_log_envelope(g, alpha)
    radii = np.linspace(0.0, R, RADIAL_POINTS)
    angles = np.linspace(0.0, 2 * np.pi, ANGLE_POINTS, endpoint=False)
    starts = []
    if n == 1:
        for r in radii:
            for t in angles:
                starts.append(np.array([r * np.cos(t), r * np.sin(t)]))
    else:
        # per-coordinate radial grids along shared phases, plus seeded random directions
        rng = trial_rng(0, 0, MC_STREAM)
        for r in radii:
            for t in angles[::8]:
                for j in range(n):
                    x = np.zeros(2 * n)
                    x[2 * j], x[2 * j + 1] = r * np.cos(t), r * np.sin(t)
                    starts.append(x)
                x = np.zeros(2 * n)
                x[0::2], x[1::2] = r * np.cos(t), r * np.sin(t)
                starts.append(x)
        for _ in range(256):
            z = rng.normal(size=n) + 1j * rng.normal(size=n)
            z *= rng.uniform(0, R) / max(np.linalg.norm(z), 1e-300)
            x = np.zeros(2 * n)
            x[0::2], x[1::2] = z.real, z.imag
            starts.append(x)
    values = np.array([objective(x) for x in starts])
    best = np.argsort(values)[:4]
    best_val = float(values[best[0]])
    for i in best:
        res = optimize.minimize(objective, starts[i], method="Nelder-Mead",
                                options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 4000})
        if res.fun < best_val:
            best_val = float(res.fun)
    if n == 1:
        # golden-section polish of the radial profile at the best angle
        x0 = starts[best[0]]
        theta = math.atan2(x0[1], x0[0])
        r0 = float(np.hypot(*x0))

        def radial(r):
            return objective(np.array([r * math.cos(theta), r * math.sin(theta)]))

        if r0 > 0:
            try:
                r_best = optimize.golden(radial, brack=(0.5 * r0, r0, min(2.0 * r0, 2.0 * R)), tol=1e-8)
                best_val = min(best_val, float(radial(r_best)))
            except (ValueError, RuntimeError) as e:
                logger.debug("[MAlpha] golden-section refinement skipped: %s", e)
    return math.exp(-best_val)


# --- Gaussian membership ---
def _scalar_weight(gamma) -> float:
    return Weight.of(gamma, 1).beta[0]


def gaussian_norm_partial_sums(c, gamma, K) -> np.ndarray:
    """Partial sums of ||exp(c z^2/2)||_gamma^2 = sum C(2k,k) (c/(2 gamma))^(2k), k < K."""
    c, gamma = float(c), _scalar_weight(gamma)
    if c == 0:
        return np.ones(K)
    k = np.arange(K)
    log_terms = special.gammaln(2 * k + 1) - 2 * special.gammaln(k + 1) + 2 * k * math.log(abs(c) / (2 * gamma))
    return np.cumsum(np.exp(log_terms))


def gaussian_norm_sq(c, gamma) -> float:
    """(1 - (c/gamma)^2)^(-1/2); +inf when gamma <= |c|."""
    c, gamma = float(c), _scalar_weight(gamma)
    ratio = (c / gamma) ** 2
    if ratio >= 1:
        return math.inf
    return 1.0 / math.sqrt(1.0 - ratio)


def gaussian_fock_membership(c, gamma) -> bool:
    """Whether exp(c z^2/2) lies in F_gamma (c >= 0)."""
    c, gamma = float(c), _scalar_weight(gamma)
    if c < 0:
        raise FockError(f"c must be >= 0, got {c}")
    member = gamma > c
    if c > 0:
        # C(2k+2,k+1)/C(2k,k) -> 4, so the term ratio tends to (c/gamma)^2
        k = 10 ** 6
        log_ratio = (special.gammaln(2 * k + 3) - 2 * special.gammaln(k + 2)
                     - special.gammaln(2 * k + 1) + 2 * special.gammaln(k + 1)
                     + 2 * math.log(c / (2 * gamma)))
        converges = log_ratio < math.log1p(-1e-5)
        if converges != member:
            logger.warning("[Membership] ratio test disagrees with closed form at c=%g, gamma=%g", c, gamma)
    return member


@dataclass(frozen=True)
class EjMembership:
    member: bool
    alpha_witness: Weight | None
    norm: float
    grid_points: int

    def to_dict(self):
        return {"member": self.member,
                "alpha_witness": None if self.alpha_witness is None else self.alpha_witness.to_list(),
                "norm": self.norm, "grid_points": self.grid_points}


def _check_coupling(A):
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise FockError(f"coupling matrix must be square, got shape {A.shape}")
    if not np.allclose(A, A.T):
        raise FockError("coupling matrix must be symmetric")
    if np.any(A < 0):
        raise FockError("coupling matrix must have nonnegative entries")
    return A


def ej_membership(A, beta, grid=EJ_GRID) -> EjMembership:
    """Search alpha << beta/2 with ||D_alpha^(-1/2) A D_alpha^(-1/2)|| <= 1."""
    A = _check_coupling(A)
    beta = Weight.of(beta, A.shape[0])
    half = np.asarray(beta.beta) / 2.0
    best = math.inf
    # alpha approaches beta/2 from below; the first admissible point is returned
    for s in np.logspace(math.log10(0.5), -12, grid):
        alpha = half * (1.0 - s)
        scale = np.diag(1.0 / np.sqrt(alpha))
        norm = float(np.max(np.abs(np.linalg.eigvalsh(scale @ A @ scale)), initial=0.0))
        best = min(best, norm)
        if norm <= 1.0:
            return EjMembership(True, Weight(tuple(alpha)), norm, grid)
    logger.info("[Membership] no admissible weight on %d grid points (best norm %.6g)", grid, best)
    return EjMembership(False, None, best, grid)
