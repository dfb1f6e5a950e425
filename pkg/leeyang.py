# leeyang.py
"""
Lee-Yang measures and their Fourier-Laplace transforms, Ising partition
functions with pair couplings e_J, fugacity zeros on the unit circle and the
functional composition psi(f) = phi(f g).
"""
import math
import logging
from dataclasses import dataclass, field
from functools import reduce

import numpy as np

from poly import MPoly, index_factorial, indices_up_to, pbinom, parse_poly
from operators import DiffOp, polya_closed_form
from stability import Verdict, ly_check, univariate_roots
from fock import GaussianForm, Weight, functional_pairing, m_alpha
from utils import FockPreserveError, DEFAULT_TOL, complex_from_json, complex_to_json

logger = logging.getLogger(__name__)

MAX_SITES = 20
CIRCLE_TOL = 1e-8
GRID_RE = (0.05, 5.0)
GRID_IM = 5.0
GRID_POINTS = 100
GRID_TOL = 1e-12
SINHC_CUTOFF = 1e-8


class LeeYangError(FockPreserveError, ValueError):
    """Invalid measures, spin models or degree requests."""


class HypothesisError(LeeYangError):
    """A named hypothesis of the composition theorem does not hold."""

    def __init__(self, hypothesis, detail):
        self.hypothesis = hypothesis
        super().__init__(f"hypothesis '{hypothesis}' violated: {detail}")


# --- Measures ---
@dataclass(frozen=True)
class TwoAtom:
    """(delta_a + delta_b) / 2; a and b may be complex."""
    a: complex = 1.0
    b: complex = -1.0
    kind = "two_atom"

    def __post_init__(self):
        object.__setattr__(self, "a", complex(self.a))
        object.__setattr__(self, "b", complex(self.b))

    def coefficient(self, k):
        return (self.a ** k + self.b ** k) / (2 * math.factorial(k))

    def evaluate(self, w):
        w = np.asarray(w, dtype=complex)
        return np.exp((self.a + self.b) / 2 * w) * np.cosh((self.a - self.b) / 2 * w)

    def closed_form(self):
        return f"exp(({_fmt(self.a)} + {_fmt(self.b)})/2*w)*cosh(({_fmt(self.a)} - {_fmt(self.b)})/2*w)"

    def to_dict(self):
        return {"kind": self.kind, "a": _num_json(self.a), "b": _num_json(self.b)}


@dataclass(frozen=True)
class Interval:
    """Lebesgue measure on [a, b]."""
    a: float = -1.0
    b: float = 1.0
    kind = "interval"

    def __post_init__(self):
        if not float(self.a) < float(self.b):
            raise LeeYangError(f"interval needs a < b, got [{self.a}, {self.b}]")
        object.__setattr__(self, "a", float(self.a))
        object.__setattr__(self, "b", float(self.b))

    def coefficient(self, k):
        return (self.b ** (k + 1) - self.a ** (k + 1)) / ((k + 1) * math.factorial(k))

    def evaluate(self, w):
        w = np.asarray(w, dtype=complex)
        half = (self.b - self.a) / 2
        shift = np.exp((self.a + self.b) / 2 * w)
        small = np.abs(w) < SINHC_CUTOFF
        safe = np.where(small, 1.0, w)
        regular = 2.0 / safe * np.sinh(half * safe)
        near_zero = (self.b - self.a) * (1 + (half * w) ** 2 / 6)
        return shift * np.where(small, near_zero, regular)

    def closed_form(self):
        return f"(2/w)*exp(({self.a:g} + {self.b:g})/2*w)*sinh(({self.b:g} - {self.a:g})/2*w)"

    def to_dict(self):
        return {"kind": self.kind, "a": self.a, "b": self.b}


@dataclass(frozen=True)
class Gaussian:
    """exp(-b x^2 / 2) dx."""
    b: float = 1.0
    kind = "gaussian"

    def __post_init__(self):
        if not float(self.b) > 0:
            raise LeeYangError(f"Gaussian needs b > 0, got {self.b}")
        object.__setattr__(self, "b", float(self.b))

    def coefficient(self, k):
        if k % 2:
            return 0.0
        j = k // 2
        return math.sqrt(2 * math.pi / self.b) * (1 / (2 * self.b)) ** j / math.factorial(j)

    def evaluate(self, w):
        w = np.asarray(w, dtype=complex)
        return math.sqrt(2 * math.pi / self.b) * np.exp(w ** 2 / (2 * self.b))

    def closed_form(self):
        return f"sqrt(2*pi/{self.b:g})*exp(w^2/(2*{self.b:g}))"

    def to_dict(self):
        return {"kind": self.kind, "b": self.b}


@dataclass(frozen=True)
class AtomMixture:
    """sum_i weights_i * delta_{points_i}."""
    points: tuple
    weights: tuple
    kind = "atom_mixture"

    def __post_init__(self):
        points = tuple(complex(p) for p in self.points)
        weights = tuple(float(x) for x in self.weights)
        if not points or len(points) != len(weights):
            raise LeeYangError("atom mixture needs matching, non-empty points and weights")
        if any(x < 0 for x in weights):
            raise LeeYangError("atom weights must be nonnegative")
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "weights", weights)

    def coefficient(self, k):
        return sum(x * p ** k for p, x in zip(self.points, self.weights)) / math.factorial(k)

    def evaluate(self, w):
        w = np.asarray(w, dtype=complex)
        return sum(x * np.exp(p * w) for p, x in zip(self.points, self.weights))

    def closed_form(self):
        return " + ".join(f"{x:g}*exp({_fmt(p)}*w)" for p, x in zip(self.points, self.weights))

    def to_dict(self):
        return {"kind": self.kind, "points": [_num_json(p) for p in self.points],
                "weights": list(self.weights)}


def _fmt(c):
    c = complex(c)
    return f"{c.real:g}" if c.imag == 0 else f"({c.real:g}{c.imag:+g}i)"


def _num_json(c):
    c = complex(c)
    return c.real if c.imag == 0 else complex_to_json(c)


def measure_from_dict(data):
    try:
        kind = data["kind"]
        if kind == "two_atom":
            return TwoAtom(complex_from_json(data.get("a", 1.0)), complex_from_json(data.get("b", -1.0)))
        if kind == "interval":
            return Interval(float(data["a"]), float(data["b"]))
        if kind == "gaussian":
            return Gaussian(float(data["b"]))
        if kind == "atom_mixture":
            return AtomMixture(tuple(complex_from_json(p) for p in data["points"]), tuple(data["weights"]))
    except (KeyError, TypeError, ValueError) as e:
        if isinstance(e, FockPreserveError):
            raise
        raise LeeYangError(f"malformed measure {data!r}: {e}") from e
    raise LeeYangError(f"unknown measure kind {kind!r}")


# --- Transforms ---
@dataclass(frozen=True)
class Transform:
    """Fourier-Laplace transform of a measure: closed form plus a degree-D truncation."""
    measure: object
    poly: MPoly
    degree: int

    @property
    def closed_form(self):
        return self.measure.closed_form()

    def evaluate(self, w):
        return self.measure.evaluate(w)

    def zeros(self, K=10):
        return closed_form_zeros(self.measure, K)

    def to_dict(self):
        return {"measure": self.measure.to_dict(), "closed_form": self.closed_form,
                "degree": self.degree, "truncation": self.poly.to_dict(),
                "truncation_string": self.poly.to_string()}


def transform(mu, D) -> Transform:
    D = int(D)
    if D < 0:
        raise LeeYangError("degree must be >= 0")
    poly = MPoly(1, {(k,): mu.coefficient(k) for k in range(D + 1)}, max_degree=D)
    return Transform(mu, poly, D)


def product_transform(measures, D) -> MPoly:
    """Transform of a product measure, one variable per site, total degree <= D."""
    n = len(measures)
    coeffs = [[m.coefficient(k) for k in range(D + 1)] for m in measures]
    terms = {alpha: math.prod(coeffs[j][a] for j, a in enumerate(alpha))
             for alpha in indices_up_to(n, D)}
    return MPoly(n, terms, max_degree=D)


def two_point_eval(a, b, w):
    """(e^{aw} + e^{bw}) / 2 evaluated directly."""
    w = np.asarray(w, dtype=complex)
    return (np.exp(complex(a) * w) + np.exp(complex(b) * w)) / 2


def closed_form_zeros(mu, K=10) -> np.ndarray:
    """Zeros of the closed-form transform with index |k| <= K."""
    if isinstance(mu, TwoAtom):
        if mu.a == mu.b:
            return np.array([], dtype=complex)
        k = np.arange(-K, K)
        return (2 * k + 1) * np.pi * 1j / (mu.a - mu.b)
    if isinstance(mu, Interval):
        k = np.concatenate([np.arange(-K, 0), np.arange(1, K + 1)])
        return 2j * np.pi * k / (mu.b - mu.a)
    if isinstance(mu, Gaussian):
        return np.array([], dtype=complex)
    raise LeeYangError(f"no closed-form zero locus for {mu.kind}")


@dataclass(frozen=True)
class GridCheck:
    holds: bool
    min_abs: float
    argmin: complex
    points: int
    zeros_in_half_plane: int

    def to_dict(self):
        return {"holds": self.holds, "min_abs": self.min_abs, "argmin": complex_to_json(self.argmin),
                "points": self.points, "zeros_in_half_plane": self.zeros_in_half_plane}


def ly_grid_check(mu, points=GRID_POINTS, K=50) -> GridCheck:
    """Nonvanishing of the closed form on a right-half-plane grid plus its zero locus."""
    re = np.linspace(*GRID_RE, points)
    im = np.linspace(-GRID_IM, GRID_IM, points)
    W = re[None, :] + 1j * im[:, None]
    vals = np.abs(mu.evaluate(W))
    i = int(np.argmin(vals))
    min_abs = float(vals.flat[i])
    try:
        inside = int(np.sum(closed_form_zeros(mu, K).real > GRID_TOL))
    except LeeYangError:
        inside = 0
    holds = min_abs > GRID_TOL * float(np.max(vals)) and inside == 0
    logger.info("[LeeYang] grid check on %s: min |transform| = %.3g", mu.kind, min_abs)
    return GridCheck(bool(holds), min_abs, complex(W.flat[i]), points * points, inside)


def two_atom_condition(a, b, tol=1e-12) -> bool:
    """a - b real and Re(a + b) >= 0."""
    a, b = complex(a), complex(b)
    return abs((a - b).imag) <= tol * max(1.0, abs(a - b)) and (a + b).real >= -tol


def gaussian_heat_closed_form(a, b, D) -> MPoly:
    """exp(a d^2/dw^2) applied to exp(w^2 / (2b)), as a degree-D truncation."""
    return polya_closed_form(2 * float(a), 1 / float(b), D)


# --- Spin models ---
@dataclass(frozen=True, eq=False)
class SpinModel:
    J: np.ndarray
    sites: tuple = ()

    def __post_init__(self):
        J = np.atleast_2d(np.asarray(self.J, dtype=float))
        if J.ndim != 2 or J.shape[0] != J.shape[1]:
            raise LeeYangError(f"J must be square, got shape {J.shape}")
        if not np.allclose(J, J.T):
            raise LeeYangError("J must be symmetric")
        if np.any(J < 0):
            raise LeeYangError("J must have nonnegative entries")
        sites = tuple(self.sites) or tuple(TwoAtom() for _ in range(J.shape[0]))
        if len(sites) != J.shape[0]:
            raise LeeYangError(f"{len(sites)} sites for a {J.shape[0]}x{J.shape[0]} coupling")
        object.__setattr__(self, "J", J)
        object.__setattr__(self, "sites", sites)

    @property
    def n(self):
        return self.J.shape[0]

    def to_dict(self):
        return {"J": self.J.tolist(), "sites": [s.to_dict() for s in self.sites]}

    @classmethod
    def from_dict(cls, data):
        try:
            J = data["J"]
            sites = tuple(measure_from_dict(s) for s in data.get("sites", []))
        except (KeyError, TypeError) as e:
            raise LeeYangError(f"malformed spin model: {e}") from e
        return cls(np.asarray(J, dtype=float), sites)


def _enumerate(model: SpinModel):
    """(bits, weights) over all 2^n configurations in ascending index order."""
    for s in model.sites:
        if not (isinstance(s, TwoAtom) and s.a == 1 and s.b == -1):
            raise LeeYangError("exact enumeration needs TwoAtom(1, -1) at every site")
    n = model.n
    if n > MAX_SITES:
        raise LeeYangError(f"{n} sites exceed the enumeration limit of {MAX_SITES}")
    idx = np.arange(2 ** n)
    bits = (idx[:, None] >> np.arange(n)) & 1
    sigma = 2 * bits - 1
    energy = np.einsum("ci,ij,cj->c", sigma, model.J, sigma)
    return bits, np.exp(energy) / 2 ** n


def ising_partition(model: SpinModel) -> MPoly:
    """prod u_j * 2^-n sum_sigma exp(sigma^T J sigma) prod u_j^sigma_j, a polynomial in u."""
    bits, weights = _enumerate(model)
    terms = {tuple(int(2 * b) for b in row): float(wt) for row, wt in zip(bits, weights)}
    return MPoly(model.n, terms)


def partition_series(model: SpinModel, D) -> MPoly:
    """The same transform expanded in w (u_j = e^{w_j}) to total degree D."""
    bits, weights = _enumerate(model)
    sigma = 2 * bits - 1
    terms = {}
    for alpha in indices_up_to(model.n, D):
        parity = np.prod(sigma ** np.asarray(alpha), axis=1)
        terms[alpha] = float(weights @ parity) / index_factorial(alpha)
    return MPoly(model.n, terms, max_degree=D)


@dataclass(frozen=True)
class FugacityZeros:
    zeros: np.ndarray
    max_deviation: float
    direction: tuple
    holds: bool

    def rows(self):
        return [{"re(u)": float(z.real), "im(u)": float(z.imag), "|u|-1": float(abs(z) - 1)}
                for z in self.zeros]

    def to_dict(self):
        return {"zeros": [complex_to_json(z) for z in self.zeros], "max_deviation": self.max_deviation,
                "direction": list(self.direction), "holds": self.holds, "count": len(self.zeros)}


def fugacity_zeros(model: SpinModel, direction=None) -> FugacityZeros:
    """Zeros in u = e^w of the transform restricted to w_j = d_j w."""
    n = model.n
    d = np.ones(n, dtype=int) if direction is None else np.asarray(direction)
    if d.shape != (n,) or np.any(d <= 0) or np.any(d != np.round(d)):
        raise LeeYangError(f"direction must be {n} positive integers, got {direction!r}")
    d = d.astype(int)
    d = d // reduce(math.gcd, d.tolist())
    bits, weights = _enumerate(model)
    exps = 2 * (bits @ d)
    coeffs = np.bincount(exps, weights=weights)
    support = np.nonzero(coeffs)[0]
    g = reduce(math.gcd, support.tolist()) or 1
    reduced = coeffs[::g]
    roots_v = univariate_roots(MPoly.from_coeffs(reduced))
    # u^g = v
    base = roots_v.astype(complex) ** (1.0 / g)
    unity = np.exp(2j * np.pi * np.arange(g) / g)
    zeros = (base[:, None] * unity[None, :]).ravel()
    zeros = zeros[np.lexsort((zeros.imag, zeros.real))]
    dev = float(np.max(np.abs(np.abs(zeros) - 1))) if len(zeros) else 0.0
    logger.info("[LeeYang] %d fugacity zeros, max deviation %.3g", len(zeros), dev)
    return FugacityZeros(zeros, dev, tuple(int(x) for x in d), dev <= CIRCLE_TOL)


# --- e_J convolution and composition ---
def ej_convolve(A, mu0_hat, D) -> MPoly:
    """Transform of e_J(z) d mu_0 as e_J(d/dw) applied to the truncation mu0_hat."""
    if isinstance(mu0_hat, Transform):
        mu0_hat = mu0_hat.poly
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if A.shape != (mu0_hat.nvars, mu0_hat.nvars):
        raise LeeYangError(f"coupling shape {A.shape} does not match {mu0_hat.nvars} variables")
    top = mu0_hat.max_degree if mu0_hat.is_truncated else mu0_hat.degree
    if int(D) > top:
        raise LeeYangError(f"requested degree {D} exceeds the transform truncation {top}")
    ej = GaussianForm(A).truncate(top)
    return DiffOp(ej.with_max_degree(None)).apply(mu0_hat.with_max_degree(None)).truncate(int(D)).with_max_degree(int(D))


@dataclass(frozen=True)
class GlsResult:
    psi_hat: MPoly
    verdict: Verdict
    bound: float
    m_alpha: float
    phi_of_g: complex
    hypotheses: dict = field(default_factory=dict)

    def to_dict(self):
        return {"psi_hat": self.psi_hat.to_dict(), "psi_hat_string": self.psi_hat.to_string(),
                "ly_verdict": self.verdict.to_dict(), "bound": self.bound, "m_alpha": self.m_alpha,
                "phi_of_g": complex_to_json(self.phi_of_g), "hypotheses": self.hypotheses}


def gls_compose(phi_hat, g, alpha, gamma, beta, D, trials=1000, seed=42, tol=DEFAULT_TOL) -> GlsResult:
    """psi(f) = phi(f g): psi_hat(w) = phi(e^{z.w} g(z)) to degree D, with its Lee-Yang check."""
    if isinstance(phi_hat, Transform):
        phi_hat = phi_hat.poly
    n = phi_hat.nvars
    alpha, gamma, beta = Weight.of(alpha, n), Weight.of(gamma, n), Weight.of(beta, n)
    total = Weight(tuple(a + c for a, c in zip(alpha.beta, gamma.beta)))
    if not total <= beta:
        raise HypothesisError("alpha + gamma <= beta", f"{total.to_list()} vs {beta.to_list()}")
    if not isinstance(g, (MPoly, GaussianForm)):
        g = parse_poly(g)
    if g.nvars != n:
        raise LeeYangError(f"g has {g.nvars} variables, phi_hat has {n}")
    M = m_alpha(g, alpha)
    if not math.isfinite(M):
        raise HypothesisError("M_alpha(g) < inf", f"M_alpha(g) is unbounded for alpha={alpha.to_list()}")

    D = int(D)
    top = phi_hat.max_degree if phi_hat.is_truncated else None
    if isinstance(g, GaussianForm):
        if top is None:
            raise LeeYangError("a Gaussian factor needs a truncated phi_hat")
        g = g.truncate(top - D).with_max_degree(None)
    if top is not None and top < D + g.degree:
        raise LeeYangError(f"phi_hat truncated at {top} cannot carry degree {D} with deg g = {g.degree}")

    # psi_alpha = phi(z^alpha g) / alpha! = sum_k g_k (alpha+k)!/alpha! [w^(alpha+k)] phi_hat
    terms = {}
    for a in indices_up_to(n, D):
        acc = 0j
        for k, gk in g.sorted_terms:
            key = tuple(x + y for x, y in zip(a, k))
            h = phi_hat.terms.get(key)
            if h is not None:
                acc += gk * pbinom(key, k) * h
        terms[a] = acc
    psi = MPoly(n, terms, max_degree=D)
    verdict = ly_check(psi, trials, seed, tol)
    bound = math.prod(1 + a / c for a, c in zip(alpha.beta, gamma.beta)) * M ** 2
    hyps = {"alpha + gamma <= beta": True, "M_alpha(g) < inf": True}
    return GlsResult(psi, verdict, bound, M, functional_pairing(phi_hat, g), hyps)
