# poly.py
"""
Sparse multivariate polynomials (and degree-truncated power series) with
complex coefficients.

An MPoly maps exponent tuples to complex coefficients. Values are immutable:
every operation returns a new MPoly. Terms iterate in graded-lex order so
floating-point sums are reproducible.
"""
import json
import math
import logging
from dataclasses import dataclass, field
from functools import cached_property
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

import numpy as np

from utils import FockPreserveError, ZERO_EPS, complex_from_json

logger = logging.getLogger(__name__)

MultiIndex = tuple[int, ...]

# (-i)^k and i^k, exact
_UPPER_UNITS = (1 + 0j, -1j, -1 + 0j, 1j)
_RIGHT_UNITS = (1 + 0j, 1j, -1 + 0j, -1j)


class PolyError(FockPreserveError, ValueError):
    """Malformed polynomial data or mismatched variable counts."""


# --- Multi-index helpers ---
def check_index(alpha, nvars=None) -> MultiIndex:
    """Validate an exponent vector and return it as a tuple."""
    try:
        key = tuple(int(a) for a in alpha)
    except (TypeError, ValueError) as e:
        raise PolyError(f"bad multi-index {alpha!r}: {e}") from e
    if any(a < 0 for a in key):
        raise PolyError(f"negative exponent in {key}")
    if nvars is not None and len(key) != nvars:
        raise PolyError(f"multi-index {key} has length {len(key)}, expected {nvars}")
    return key


def grlex_key(alpha):
    return (sum(alpha), tuple(alpha))


def index_le(alpha, beta) -> bool:
    return all(a <= b for a, b in zip(alpha, beta))


def index_factorial(alpha) -> int:
    return math.prod(math.factorial(a) for a in alpha)


def _weak_compositions(n, d):
    if n == 1:
        yield (d,)
        return
    for first in range(d + 1):
        for rest in _weak_compositions(n - 1, d - first):
            yield (first,) + rest


def indices_up_to(nvars, degree) -> list[MultiIndex]:
    """All multi-indices of length nvars and total degree <= degree, graded-lex."""
    out = []
    for d in range(degree + 1):
        out.extend(sorted(_weak_compositions(nvars, d)))
    return out


def pbinom(beta, alpha) -> int:
    """(beta)_alpha = alpha! * prod C(beta_i, alpha_i); zero if some alpha_i > beta_i."""
    beta = check_index(beta)
    alpha = check_index(alpha)
    if len(beta) != len(alpha):
        raise PolyError(f"pbinom length mismatch: {len(beta)} vs {len(alpha)}")
    return math.prod(math.perm(b, a) for b, a in zip(beta, alpha))


@dataclass(frozen=True)
class BlockSplit:
    """Split of the variables into a leading z-block and a trailing w-block."""
    z_count: int
    w_count: int

    def __post_init__(self):
        if self.z_count < 0 or self.w_count < 0:
            raise PolyError(f"negative block size in {self}")

    @property
    def nvars(self):
        return self.z_count + self.w_count

    def block(self, name):
        """Variable indices of block 'z' or 'w'."""
        if name == "z":
            return range(0, self.z_count)
        if name == "w":
            return range(self.z_count, self.nvars)
        raise PolyError(f"unknown block {name!r}")

    def parts(self, alpha):
        return tuple(alpha[:self.z_count]), tuple(alpha[self.z_count:])


@dataclass(frozen=True, eq=False)
class MPoly:
    """Sparse polynomial; `max_degree` marks a truncated series.

    With a `split`, the truncation bound applies to each block's total degree
    separately; otherwise to the total degree.
    """
    nvars: int
    terms: Mapping[MultiIndex, complex] = field(default_factory=dict)
    max_degree: int | None = None
    split: BlockSplit | None = None

    def __post_init__(self):
        if int(self.nvars) < 1:
            raise PolyError(f"nvars must be positive, got {self.nvars}")
        object.__setattr__(self, "nvars", int(self.nvars))
        if self.max_degree is not None:
            if int(self.max_degree) < 0:
                raise PolyError("max_degree must be >= 0")
            object.__setattr__(self, "max_degree", int(self.max_degree))
        if self.split is not None and self.split.nvars != self.nvars:
            raise PolyError(f"split {self.split} does not cover {self.nvars} variables")
        clean = {}
        for alpha, c in dict(self.terms).items():
            key = check_index(alpha, self.nvars)
            c = complex(c)
            if not (math.isfinite(c.real) and math.isfinite(c.imag)):
                raise PolyError(f"non-finite coefficient at {key}")
            if c == 0 or not self.fits(key):
                continue
            clean[key] = clean.get(key, 0j) + c
        clean = {k: v for k, v in clean.items() if v != 0}
        object.__setattr__(self, "terms", MappingProxyType(clean))

    # --- constructors ---
    @classmethod
    def zero(cls, nvars, max_degree=None, split=None):
        return cls(nvars, {}, max_degree, split)

    @classmethod
    def constant(cls, c, nvars=1, max_degree=None, split=None):
        return cls(nvars, {(0,) * nvars: c}, max_degree, split)

    @classmethod
    def variable(cls, j, nvars=1, max_degree=None, split=None):
        alpha = [0] * nvars
        alpha[j] = 1
        return cls(nvars, {tuple(alpha): 1.0}, max_degree, split)

    @classmethod
    def monomial(cls, alpha, c=1.0, max_degree=None, split=None):
        alpha = check_index(alpha)
        return cls(len(alpha), {alpha: c}, max_degree, split)

    @classmethod
    def from_coeffs(cls, coeffs, max_degree=None):
        """Univariate polynomial from ascending coefficients."""
        return cls(1, {(k,): c for k, c in enumerate(coeffs)}, max_degree)

    # --- inspection ---
    def fits(self, alpha) -> bool:
        """Whether a key respects the truncation bound."""
        if self.max_degree is None:
            return True
        if self.split is None:
            return sum(alpha) <= self.max_degree
        z, w = self.split.parts(alpha)
        return sum(z) <= self.max_degree and sum(w) <= self.max_degree

    @property
    def is_zero(self):
        return not self.terms

    @property
    def is_truncated(self):
        return self.max_degree is not None

    @property
    def degree(self):
        """Total degree; 0 for the zero polynomial."""
        return max((sum(a) for a in self.terms), default=0)

    def var_degree(self, j):
        return max((a[j] for a in self.terms), default=0)

    def block_degree(self, indices):
        return max((sum(a[i] for i in indices) for a in self.terms), default=0)

    def coeff(self, alpha) -> complex:
        return self.terms.get(check_index(alpha, self.nvars), 0j)

    @cached_property
    def sorted_terms(self) -> list[tuple[MultiIndex, complex]]:
        return sorted(self.terms.items(), key=lambda kv: grlex_key(kv[0]))

    def norm1(self) -> float:
        return float(sum(abs(c) for _, c in self.sorted_terms))

    def is_real(self, rel_tol=1e-10) -> bool:
        scale = max((abs(c) for c in self.terms.values()), default=0.0)
        return all(abs(c.imag) <= rel_tol * scale for c in self.terms.values())

    def homogeneous_norms(self) -> dict[int, float]:
        """Sum of |coefficient| per total degree."""
        out = {}
        for alpha, c in self.terms.items():
            d = sum(alpha)
            out[d] = out.get(d, 0.0) + abs(c)
        return out

    # --- rebuilding ---
    def _new(self, terms, max_degree="same", split="same"):
        return MPoly(
            self.nvars if split == "same" or split is None else split.nvars,
            terms,
            self.max_degree if max_degree == "same" else max_degree,
            self.split if split == "same" else split,
        )

    def with_split(self, split):
        return MPoly(self.nvars, self.terms, self.max_degree, split)

    def with_max_degree(self, max_degree):
        return MPoly(self.nvars, self.terms, max_degree, self.split)

    def truncate(self, degree):
        """Drop terms of total degree above `degree` (the result stays exact)."""
        return self._new({a: c for a, c in self.terms.items() if sum(a) <= degree})

    def truncate_block(self, indices, degree):
        """Drop terms whose degree in the given variables exceeds `degree`."""
        idx = list(indices)
        return self._new({a: c for a, c in self.terms.items()
                          if sum(a[i] for i in idx) <= degree})

    def permute(self, order, split=None):
        """Reorder variables: new variable k is old variable order[k]."""
        order = list(order)
        if sorted(order) != list(range(self.nvars)):
            raise PolyError(f"{order} is not a permutation of {self.nvars} variables")
        terms = {tuple(a[i] for i in order): c for a, c in self.terms.items()}
        return MPoly(self.nvars, terms, self.max_degree, split)

    def embed(self, nvars, offset, split=None):
        """Place this polynomial's variables at positions offset.. of a larger ring."""
        if offset < 0 or offset + self.nvars > nvars:
            raise PolyError(f"cannot embed {self.nvars} variables at {offset} into {nvars}")
        pad_left, pad_right = (0,) * offset, (0,) * (nvars - offset - self.nvars)
        terms = {pad_left + a + pad_right: c for a, c in self.terms.items()}
        return MPoly(nvars, terms, self.max_degree, split)

    def conj(self):
        return self._new({a: c.conjugate() for a, c in self.terms.items()})

    def scale_vars(self, factors):
        """p(f_1 z_1, ..., f_n z_n)."""
        factors = [complex(f) for f in factors]
        if len(factors) != self.nvars:
            raise PolyError(f"expected {self.nvars} scale factors, got {len(factors)}")
        terms = {}
        for alpha, c in self.sorted_terms:
            terms[alpha] = c * math.prod(f ** e for f, e in zip(factors, alpha) if e)
        return self._new(terms)

    def map_coeffs(self, fn):
        """Apply fn(alpha, c) to each coefficient."""
        return self._new({a: fn(a, c) for a, c in self.sorted_terms})

    # --- arithmetic ---
    def _check_compatible(self, other):
        if not isinstance(other, MPoly):
            raise PolyError(f"expected MPoly, got {type(other).__name__}")
        if other.nvars != self.nvars:
            raise PolyError(f"nvars mismatch: {self.nvars} vs {other.nvars}")

    def _result_bounds(self, other):
        bounds = [d for d in (self.max_degree, other.max_degree) if d is not None]
        split = self.split if self.split is not None else other.split
        return (min(bounds) if bounds else None), split

    def __add__(self, other):
        if not isinstance(other, MPoly):
            return self + MPoly.constant(other, self.nvars)
        self._check_compatible(other)
        max_degree, split = self._result_bounds(other)
        out = dict(self.terms)
        for alpha, c in other.terms.items():
            if alpha in out:
                a = out[alpha]
                s = a + c
                # cancellation to rounding level counts as zero
                if abs(s) <= ZERO_EPS * (abs(a) + abs(c)):
                    del out[alpha]
                else:
                    out[alpha] = s
            else:
                out[alpha] = c
        return MPoly(self.nvars, out, max_degree, split)

    __radd__ = __add__

    def __neg__(self):
        return self._new({a: -c for a, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c):
        c = complex(c)
        if c == 0:
            return self._new({})
        return self._new({a: c * v for a, v in self.terms.items()})

    def __mul__(self, other):
        if not isinstance(other, MPoly):
            return self.scale(other)
        self._check_compatible(other)
        max_degree, split = self._result_bounds(other)
        probe = MPoly(self.nvars, {}, max_degree, split)
        sums, mags = {}, {}
        for a, ca in self.sorted_terms:
            for b, cb in other.sorted_terms:
                key = tuple(x + y for x, y in zip(a, b))
                if not probe.fits(key):
                    continue
                prod = ca * cb
                sums[key] = sums.get(key, 0j) + prod
                mags[key] = mags.get(key, 0.0) + abs(prod)
        out = {k: s for k, s in sums.items() if abs(s) > ZERO_EPS * mags[k]}
        return MPoly(self.nvars, out, max_degree, split)

    __rmul__ = __mul__

    def __pow__(self, k):
        k = int(k)
        if k < 0:
            raise PolyError("negative powers are not polynomials")
        result = MPoly.constant(1.0, self.nvars, self.max_degree, self.split)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def __eq__(self, other):
        if not isinstance(other, MPoly):
            return NotImplemented
        return self.nvars == other.nvars and dict(self.terms) == dict(other.terms)

    __hash__ = None

    def allclose(self, other, rel=1e-12, abs_tol=0.0) -> bool:
        """Coefficient-wise comparison, relative to each coefficient's size."""
        self._check_compatible(other)
        for alpha in set(self.terms) | set(other.terms):
            a, b = self.terms.get(alpha, 0j), other.terms.get(alpha, 0j)
            if abs(a - b) > max(rel * max(abs(a), abs(b)), abs_tol):
                return False
        return True

    # --- evaluation ---
    def __call__(self, point):
        return self.evaluate(point)

    def evaluate(self, point) -> complex:
        point = [complex(x) for x in point]
        if len(point) != self.nvars:
            raise PolyError(f"point has length {len(point)}, expected {self.nvars}")
        total = 0j
        for alpha, c in self.sorted_terms:
            total += c * monomial_value(point, alpha)
        return total

    def evaluate_many(self, points) -> np.ndarray:
        """Vectorized evaluation at the rows of an (S, nvars) array."""
        pts = np.asarray(points, dtype=complex)
        if pts.ndim != 2 or pts.shape[1] != self.nvars:
            raise PolyError(f"points must have shape (S, {self.nvars})")
        total = np.zeros(pts.shape[0], dtype=complex)
        for alpha, c in self.sorted_terms:
            mono = np.ones(pts.shape[0], dtype=complex)
            for j, e in enumerate(alpha):
                if e:
                    mono = mono * pts[:, j] ** e
            total += c * mono
        return total

    def univariate_coeffs(self) -> np.ndarray:
        """Ascending coefficient array of a one-variable polynomial."""
        if self.nvars != 1:
            raise PolyError(f"expected a univariate polynomial, got {self.nvars} variables")
        out = np.zeros(self.degree + 1, dtype=complex)
        for (k,), c in self.terms.items():
            out[k] = c
        return out

    def restrict_lines(self, base, direction) -> np.ndarray:
        """Coefficients (ascending in t) of t -> p(base + t*direction).

        base and direction are (S, nvars) arrays; the result has shape
        (S, degree + 1), one restricted polynomial per row.
        """
        a = np.atleast_2d(np.asarray(base, dtype=complex))
        v = np.atleast_2d(np.asarray(direction, dtype=complex))
        if a.shape != v.shape or a.shape[1] != self.nvars:
            raise PolyError(f"line data must have shape (S, {self.nvars})")
        samples, deg = a.shape[0], self.degree
        # powers[j][k] = coefficients of (a_j + v_j t)^k, shape (S, k+1)
        powers = []
        for j in range(self.nvars):
            top = self.var_degree(j)
            rows = [np.ones((samples, 1), dtype=complex)]
            for k in range(1, top + 1):
                prev = rows[-1]
                nxt = np.zeros((samples, k + 1), dtype=complex)
                nxt[:, :k] += prev * a[:, j:j + 1]
                nxt[:, 1:] += prev * v[:, j:j + 1]
                rows.append(nxt)
            powers.append(rows)
        out = np.zeros((samples, deg + 1), dtype=complex)
        for alpha, c in self.sorted_terms:
            acc = np.full((samples, 1), c, dtype=complex)
            for j, e in enumerate(alpha):
                if e:
                    acc = _batched_polymul(acc, powers[j][e])
            out[:, :acc.shape[1]] += acc
        return out

    # --- serialization ---
    def to_dict(self) -> dict:
        return {
            "nvars": self.nvars,
            "max_degree": self.max_degree,
            "terms": [{"alpha": list(a), "re": float(c.real), "im": float(c.imag)}
                      for a, c in self.sorted_terms],
        }

    @classmethod
    def from_dict(cls, data, split=None):
        try:
            nvars = int(data["nvars"])
            raw = data.get("terms", [])
            max_degree = data.get("max_degree")
        except (KeyError, TypeError, ValueError) as e:
            raise PolyError(f"malformed polynomial object: {e}") from e
        terms = {}
        for entry in raw:
            try:
                alpha = check_index(entry["alpha"], nvars)
                c = complex(float(entry.get("re", 0.0)), float(entry.get("im", 0.0)))
            except (KeyError, TypeError, ValueError) as e:
                raise PolyError(f"malformed term {entry!r}: {e}") from e
            terms[alpha] = terms.get(alpha, 0j) + c
        return cls(nvars, terms, max_degree, split)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))

    def to_string(self, names=None, digits=6) -> str:
        """Readable form, e.g. '1 + 2*z0 + 2*z0^2'."""
        if self.is_zero:
            return "0"
        names = names or [f"z{j}" for j in range(self.nvars)]
        parts = []
        for alpha, c in self.sorted_terms:
            coef = _format_coeff(c, digits)
            mono = "*".join(names[j] if e == 1 else f"{names[j]}^{e}"
                            for j, e in enumerate(alpha) if e)
            if not mono:
                parts.append(coef)
            elif coef == "1":
                parts.append(mono)
            elif coef == "-1":
                parts.append("-" + mono)
            else:
                parts.append(f"{coef}*{mono}")
        text = " + ".join(parts).replace("+ -", "- ")
        if self.max_degree is not None:
            text += f" + O(deg {self.max_degree + 1})"
        return text

    def __repr__(self):
        return f"MPoly({self.to_string()})"


def _format_coeff(c, digits):
    re, im = round(c.real, digits), round(c.imag, digits)
    if im == 0:
        return f"{re:g}"
    if re == 0:
        return f"{im:g}i"
    return f"({re:g}{im:+g}i)"


def _batched_polymul(x, y):
    """Row-wise product of two stacks of ascending coefficient arrays."""
    out = np.zeros((x.shape[0], x.shape[1] + y.shape[1] - 1), dtype=complex)
    for i in range(x.shape[1]):
        out[:, i:i + y.shape[1]] += x[:, i:i + 1] * y
    return out


def monomial_value(point, alpha) -> complex:
    """prod point_j ** alpha_j for a sequence of Python complex numbers."""
    value = 1 + 0j
    for x, e in zip(point, alpha):
        if e:
            value *= x ** e
    return value


# --- Module-level operations ---
def poly_arith(a: MPoly, b, kind="add", c=None) -> MPoly:
    """kind: 'add', 'mul' or 'scale' (b ignored for 'scale', factor c)."""
    if kind == "add":
        return a + b
    if kind == "mul":
        return a * b
    if kind == "scale":
        return a.scale(b if c is None else c)
    raise PolyError(f"unknown arithmetic kind {kind!r}")


def poly_eval(p: MPoly, point: Sequence) -> complex:
    return p.evaluate(point)


def rotate_vars(p: MPoly, mode="to_upper", block: Iterable[int] | None = None) -> MPoly:
    """Substitute z_j -> -i z_j ('to_upper') or z_j -> i z_j ('to_right') on `block`.

    Coefficients are multiplied by exact powers of i, so applying both modes
    returns the original coefficients bit for bit.
    """
    if mode == "to_upper":
        units = _UPPER_UNITS
    elif mode == "to_right":
        units = _RIGHT_UNITS
    else:
        raise PolyError(f"unknown rotation mode {mode!r}")
    idx = list(range(p.nvars)) if block is None else list(block)
    if any(not 0 <= j < p.nvars for j in idx):
        raise PolyError(f"rotation block {idx} outside {p.nvars} variables")
    return p.map_coeffs(lambda alpha, c: c * units[sum(alpha[j] for j in idx) % 4])


def conj_coeffs(p: MPoly) -> MPoly:
    return p.conj()


def exp_pairing(nvars, degree) -> MPoly:
    """Truncation of exp(z . w) in 2*nvars variables (z first), w-degree <= degree."""
    terms = {}
    for alpha in indices_up_to(nvars, degree):
        terms[alpha + alpha] = 1.0 / index_factorial(alpha)
    return MPoly(2 * nvars, terms, split=BlockSplit(nvars, nvars))


def exp_linear(coeffs, degree) -> MPoly:
    """Truncation of exp(c . z) at total degree `degree`."""
    coeffs = [complex(c) for c in coeffs]
    terms = {}
    for alpha in indices_up_to(len(coeffs), degree):
        terms[alpha] = monomial_value(coeffs, alpha) / index_factorial(alpha)
    return MPoly(len(coeffs), terms, max_degree=degree)


def gaussian_series(c, degree) -> MPoly:
    """Truncation of exp(c z^2 / 2) at degree `degree` (one variable)."""
    c = complex(c)
    terms = {(2 * k,): (c / 2) ** k / math.factorial(k) for k in range(degree // 2 + 1)}
    return MPoly(1, terms, max_degree=degree)


def parse_poly(obj) -> MPoly:
    """MPoly from a parsed JSON object; a bare list is read as ascending univariate coefficients."""
    if isinstance(obj, MPoly):
        return obj
    if isinstance(obj, list):
        return MPoly.from_coeffs([complex_from_json(c) for c in obj])
    return MPoly.from_dict(obj)
