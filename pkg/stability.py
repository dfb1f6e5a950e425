# stability.py
"""
Certification of stability (no zeros in the open upper half-plane product),
real-rootedness and the Lee-Yang property (no zeros in the open right
half-plane product).

Univariate checks are root based and return certified verdicts. Multivariate
checks restrict the polynomial to random lines a + t*v (a real, v positive):
every point of H^n is such a point with t = i, so a line whose restriction has
a root in H yields an explicit witness.
"""
import math
import re
import logging
from dataclasses import dataclass
from enum import Enum

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy import special

from poly import MPoly, rotate_vars, pbinom, index_le
from utils import FockPreserveError, DEFAULT_TOL, complex_to_json, complex_from_json, first_hit, trial_rng

logger = logging.getLogger(__name__)

CERTIFIED_NO = "certified_no"
PROBABLY_YES = "probably_yes"
CERTIFIED_YES = "certified_yes"

REAL_COEFF_TOL = 1e-10
SERIES_TAIL_TOL = 1e-3
V_LOG10_RANGE = (-3.0, 3.0)
LINE_ERR_FACTOR = 8.0
_EPS = np.finfo(float).eps


class StabilityError(FockPreserveError, ValueError):
    """Input a stability check cannot accept (zero polynomial, complex data for a real check)."""


class Region(Enum):
    UPPER = "upper"
    RIGHT = "right"
    REAL = "real"

    @classmethod
    def parse(cls, name):
        if isinstance(name, Region):
            return name
        aliases = {
            "upper": cls.UPPER, "upperhalfplane": cls.UPPER, "stable": cls.UPPER,
            "right": cls.RIGHT, "righthalfplane": cls.RIGHT, "leeyang": cls.RIGHT, "ly": cls.RIGHT,
            "real": cls.REAL, "realaxis": cls.REAL, "realrooted": cls.REAL,
        }
        key = re.sub(r"[\s_-]", "", str(name)).lower()
        if key not in aliases:
            raise StabilityError(f"unknown region {name!r}")
        return aliases[key]

    def margin(self, point):
        """Signed distance of a complex point into the open region."""
        if self is Region.UPPER:
            return point.imag
        if self is Region.RIGHT:
            return point.real
        return abs(point.imag)


@dataclass(frozen=True)
class Verdict:
    outcome: str
    witness: tuple | None = None
    value: complex | None = None
    trials: int | None = None
    seed: int | None = None
    method: str | None = None
    note: str | None = None

    @property
    def refuted(self):
        return self.outcome == CERTIFIED_NO

    @property
    def passed(self):
        return self.outcome != CERTIFIED_NO

    @classmethod
    def no(cls, witness, value, method, trials=None, seed=None, note=None):
        return cls(CERTIFIED_NO, tuple(complex(x) for x in witness), complex(value),
                   trials, seed, method, note)

    def to_dict(self):
        return {
            "outcome": self.outcome,
            "witness": None if self.witness is None else [complex_to_json(x) for x in self.witness],
            "value": complex_to_json(self.value),
            "trials": self.trials,
            "seed": self.seed,
            "method": self.method,
            "note": self.note,
        }

    @classmethod
    def from_dict(cls, data):
        witness = data.get("witness")
        return cls(
            data["outcome"],
            None if witness is None else tuple(complex_from_json(x) for x in witness),
            None if data.get("value") is None else complex_from_json(data["value"]),
            data.get("trials"), data.get("seed"), data.get("method"), data.get("note"),
        )


def residual_tol(p: MPoly, tol=DEFAULT_TOL):
    """Bound on |p(witness)| accepted for a certified witness."""
    return 10.0 * tol * (1.0 + p.norm1())


# --- Univariate roots ---
def _trim(coeffs, scale=None):
    """Drop top coefficients that are zero relative to their rounding scale."""
    coeffs = np.asarray(coeffs, dtype=complex)
    scale = np.abs(coeffs) if scale is None else np.asarray(scale, dtype=float)
    top = len(coeffs) - 1
    while top >= 0 and abs(coeffs[top]) <= 1e-12 * scale[top]:
        top -= 1
    return coeffs[:top + 1]


def roots_from_coeffs(coeffs):
    """Roots of an ascending coefficient array via companion eigenvalues,
    each polished by one Newton step when the step reduces |p|."""
    if len(coeffs) == 0:
        raise StabilityError("identically zero")
    if len(coeffs) == 1:
        return np.zeros(0, dtype=complex)
    roots = np.roots(coeffs[::-1]).astype(complex)
    deriv = npoly.polyder(coeffs)
    polished = []
    for r in roots:
        val = npoly.polyval(r, coeffs)
        slope = npoly.polyval(r, deriv)
        if slope != 0:
            cand = r - val / slope
            if abs(npoly.polyval(cand, coeffs)) < abs(val):
                r = cand
        polished.append(r)
    out = np.array(polished, dtype=complex)
    return out[np.lexsort((out.imag, out.real))]


def univariate_roots(p: MPoly) -> np.ndarray:
    """All deg(p) roots of a one-variable polynomial, with multiplicity."""
    coeffs = _trim(p.univariate_coeffs())
    if len(coeffs) == 0:
        raise StabilityError("identically zero")
    return roots_from_coeffs(coeffs)


_LOG_RHO = np.log(10.0) * np.linspace(-18.0, 6.0, 481)


@dataclass(frozen=True)
class RootCluster:
    """Computed roots enclosed by one disc that holds `count` true roots."""
    centre: complex
    radius: float
    count: int
    size: int


def _taylor_bounds(coeffs, abs_err, centre):
    """Taylor coefficients of p at centre with bounds on their error.

    The bound combines rounding in the shift with abs_err, an absolute
    uncertainty carried by each input coefficient.
    """
    n = len(coeffs) - 1
    idx = np.arange(n + 1)
    gap = idx[:, None] - idx[None, :]
    binom = special.comb(idx[:, None], idx[None, :])
    lower = gap >= 0
    shift = np.where(lower, binom * complex(centre) ** np.maximum(gap, 0), 0)
    spread = np.where(lower, binom * abs(centre) ** np.maximum(gap, 0), 0.0)
    taylor = coeffs @ shift
    err = 4 * (n + 1) * _EPS * (np.abs(coeffs) @ spread) + abs_err @ spread
    return taylor, err


def rouche_disc(coeffs, centre, abs_err=None):
    """(count, radius) of the smallest disc around centre on which one Taylor
    term dominates all others after error bounds; the disc then holds exactly
    `count` roots. Returns (0, inf) when no term dominates.
    """
    coeffs = np.asarray(coeffs, dtype=complex)
    n = len(coeffs) - 1
    abs_err = np.zeros(n + 1) if abs_err is None else np.asarray(abs_err, dtype=float)
    taylor, err = _taylor_bounds(coeffs, abs_err, centre)
    upper = np.abs(taylor) + err
    lower = np.abs(taylor) - err
    log_rho = _LOG_RHO + math.log(max(1.0, abs(centre)))
    powers = np.arange(n + 1)[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.log(upper)[:, None] + powers * log_rho[None, :]
        lead = np.where(lower > 0, np.log(np.where(lower > 0, lower, 1.0)), -np.inf)
        mask = np.eye(n + 1, dtype=bool)[:, :, None]
        rest = special.logsumexp(np.where(mask, -np.inf, terms[None, :, :]), axis=1)
    ok = lead[:, None] + powers * log_rho[None, :] > rest + 1e-12
    ok[0] = False
    hits = np.argwhere(ok.T)
    if len(hits) == 0:
        return 0, math.inf
    g, k = hits[0]
    return int(k), float(np.exp(log_rho[g]))


def root_clusters(coeffs, abs_err=None):
    """Group computed roots into clusters with Rouche discs.

    A disc around a computed root that holds k > 1 roots absorbs the other
    computed roots inside it; the cluster is then re-centred at their mean,
    which is stable under the splitting of a multiple root.
    """
    coeffs = np.asarray(coeffs, dtype=complex)
    roots = roots_from_coeffs(coeffs)
    free = list(range(len(roots)))
    clusters = []
    while free:
        first = roots[free[0]]
        count, radius = rouche_disc(coeffs, first, abs_err)
        members = [i for i in free if abs(roots[i] - first) <= radius] if count else [free[0]]
        centre = complex(np.mean(roots[members]))
        if len(members) > 1:
            count2, radius2 = rouche_disc(coeffs, centre, abs_err)
            if count2:
                count, radius = count2, radius2
                members = [i for i in free if abs(roots[i] - centre) <= radius] or members
                centre = complex(np.mean(roots[members]))
        clusters.append(RootCluster(centre, radius, count, len(members)))
        taken = set(members)
        free = [i for i in free if i not in taken]
    return clusters


def offending_roots(coeffs, region: Region, tol, abs_err=None):
    """Clusters whose centre lies inside the region, deepest first, and the
    number of roots no disc could enclose.

    Returns ([(margin, centre, radius)], undecided).
    """
    hits, undecided = [], 0
    for cluster in root_clusters(coeffs, abs_err):
        margin = region.margin(cluster.centre)
        if margin <= tol:
            continue
        if cluster.count == 0:
            undecided += cluster.size
            continue
        hits.append((margin, cluster.centre, cluster.radius))
    hits.sort(key=lambda h: (-h[0], h[1].real, h[1].imag))
    return hits, undecided


def is_stable_uni(p: MPoly, region=Region.UPPER, tol=DEFAULT_TOL) -> Verdict:
    """Certified verdict for a one-variable polynomial.

    Roots come in Rouche clusters. A cluster counts as inside the region when
    its centre is; a multiple root on the boundary therefore stays on the
    boundary however far rounding splits its computed copies.
    """
    region = Region.parse(region)
    if p.nvars != 1:
        raise StabilityError(f"is_stable_uni needs one variable, got {p.nvars}")
    if p.is_zero:
        raise StabilityError("identically zero")
    if region is Region.REAL and not p.is_real(REAL_COEFF_TOL):
        raise StabilityError("real-rootedness is only defined for real coefficients; "
                             "use the upper half-plane check for complex data")
    coeffs = p.univariate_coeffs()
    if len(coeffs) == 1:
        return Verdict(CERTIFIED_YES, method="constant")
    hits, undecided = offending_roots(coeffs, region, tol)
    if hits:
        _, root, _ = hits[0]
        logger.debug("[Stability] root %s inside %s region", root, region.value)
        return Verdict.no((root,), p((root,)), method="companion-eigenvalues+rouche-clusters")
    if undecided:
        logger.warning("[Stability] %d root(s) without an enclosing disc", undecided)
        return Verdict(PROBABLY_YES, method="companion-eigenvalues",
                       note=f"{undecided} root(s) inside the region could not be enclosed")
    return Verdict(CERTIFIED_YES, method="companion-eigenvalues+rouche-clusters")


# --- Truncated series ---
def validated_radius(f: MPoly, tail_tol=SERIES_TAIL_TOL) -> float:
    """Radius on which zeros of a series truncation are trusted.

    The first dropped homogeneous degree is extrapolated from the geometric
    rate of the last two nonzero degrees; R is where that estimate reaches
    tail_tol times the size of f near the origin. Exact polynomials get inf.
    """
    if not f.is_truncated:
        return math.inf
    norms = {d: c for d, c in f.homogeneous_norms().items() if c > 0}
    if not norms:
        return 0.0
    degrees = sorted(norms)
    top = degrees[-1]
    if top == 0:
        return math.inf
    scale = abs(f.coeff((0,) * f.nvars)) or max(norms.values())
    if len(degrees) >= 2:
        prev = degrees[-2]
        step = top - prev
        rate = (norms[top] / norms[prev]) ** (1.0 / step)
    else:
        step, rate = 1, norms[top] ** (1.0 / top)
    nxt = max(top + step, f.max_degree + 1)
    lead = norms[top] * rate ** (nxt - top)
    if lead <= 0:
        return math.inf
    return (tail_tol * scale / lead) ** (1.0 / nxt)


# --- Multivariate Monte Carlo ---
def _line_samples(nvars, start, stop, seed):
    """(a, v) rows for trials start..stop-1; trial 0 is the diagonal line."""
    a = np.zeros((stop - start, nvars))
    v = np.ones((stop - start, nvars))
    lo, hi = V_LOG10_RANGE
    for row, trial in enumerate(range(start, stop)):
        if trial == 0:
            continue
        rng = trial_rng(seed, trial)
        a[row] = rng.standard_cauchy(nvars)
        v[row] = 10.0 ** rng.uniform(lo, hi, nvars)
    return a, v


def _screen(coeff_rows, tol):
    """Indices of rows whose companion eigenvalues reach into H (batched)."""
    flagged = []
    by_degree = {}
    for i, row in enumerate(coeff_rows):
        by_degree.setdefault(len(row) - 1, []).append(i)
    for deg, rows in by_degree.items():
        if deg < 1:
            continue
        stack = np.array([coeff_rows[i] for i in rows])
        monic = stack[:, :-1] / stack[:, -1:]
        comp = np.zeros((len(rows), deg, deg), dtype=complex)
        if deg > 1:
            comp[:, np.arange(1, deg), np.arange(deg - 1)] = 1.0
        comp[:, :, -1] = -monic
        eig = np.linalg.eigvals(comp)
        hit = np.max(eig.imag, axis=1) > tol
        flagged.extend(i for i, h in zip(rows, hit) if h)
    return sorted(flagged)


def _scan_lines(q: MPoly, trials, seed, tol, radius, outside):
    """First (trial, witness) in H^n found on sampled lines, or None.

    A root t of a restriction is a witness only when its whole Rouche disc,
    pushed through t -> a + t*v, stays more than tol inside H^n. Restricted
    coefficients carry rounding from the line substitution, so clusters that
    straddle the real axis never qualify.
    """
    n = q.nvars
    abs_q = MPoly(n, {a: abs(c) for a, c in q.terms.items()})
    tol_res = residual_tol(q, tol)
    err_scale = LINE_ERR_FACTOR * (q.degree + n + 1) * _EPS

    def check_chunk(start, stop):
        a, v = _line_samples(n, start, stop, seed)
        rows = q.restrict_lines(a, v)
        scale = abs_q.restrict_lines(np.abs(a), v).real
        coeff_rows = [_trim(rows[i], scale[i]) for i in range(len(rows))]
        skipped = 0
        for i in _screen_rows(coeff_rows, tol):
            coeffs = coeff_rows[i]
            abs_err = err_scale * scale[i][:len(coeffs)]
            hits, _ = offending_roots(coeffs, Region.UPPER, tol, abs_err)
            for _, t, rho in hits:
                if np.min(v[i]) * (t.imag - rho) <= tol:
                    continue
                z = a[i] + t * v[i]
                if np.max(np.abs(z)) > radius:
                    skipped += 1
                    continue
                value = q(tuple(z))
                if abs(value) > tol_res:
                    logger.debug("[Stability] trial %d: residual %.3g above %.3g", start + i, abs(value), tol_res)
                    continue
                return start + i, tuple(complex(x) for x in z), value
        outside[start] = skipped
        return None

    return first_hit(check_chunk, trials)


def _screen_rows(coeff_rows, tol):
    """Screen rows, ignoring identically-zero restrictions."""
    live = [i for i, c in enumerate(coeff_rows) if len(c) > 1]
    flagged = _screen([coeff_rows[i] for i in live], tol)
    return [live[j] for j in flagged]


def is_stable_multi(p: MPoly, region=Region.UPPER, trials=1000, seed=42,
                    tol=DEFAULT_TOL, radius=None) -> Verdict:
    """Monte Carlo line-restriction check; CertifiedNo carries a witness point."""
    region = Region.parse(region)
    if p.is_zero:
        raise StabilityError("identically zero")
    if int(trials) < 1:
        raise StabilityError("trials must be >= 1")
    trials = int(trials)
    if region is Region.REAL and not p.is_real(REAL_COEFF_TOL):
        raise StabilityError("real stability is only defined for real coefficients")
    if radius is None:
        radius = validated_radius(p)

    q = rotate_vars(p, "to_upper") if region is Region.RIGHT else p
    outside = {}
    hit = _scan_lines(q, trials, seed, tol, radius, outside)
    method = f"line-restriction/{region.value}"
    if hit is None:
        skipped = sum(outside.values())
        note = None
        if skipped:
            note = f"{skipped} zero(s) outside validated region (R={radius:.4g})"
        logger.info("[Stability] %d trials passed (seed %d)", trials, seed)
        return Verdict(PROBABLY_YES, trials=trials, seed=int(seed), method=method, note=note)

    trial, z, _ = hit
    if region is Region.RIGHT:
        z = tuple(-1j * x for x in z)
    logger.info("[Stability] witness found on trial %d", trial)
    return Verdict.no(z, p(z), method=method, trials=trial + 1, seed=int(seed))


def ly_check(f: MPoly, trials=1000, seed=42, tol=DEFAULT_TOL, radius=None) -> Verdict:
    """Lee-Yang check: no zeros with every variable in the open right half-plane."""
    return is_stable_multi(f, Region.RIGHT, trials, seed, tol, radius)


# --- Approximants ---
def lp_approximant(f: MPoly, k: int) -> MPoly:
    """f_k = sum over gamma <= (k,...,k) of (k)_gamma / k^|gamma| * a_gamma z^gamma."""
    k = int(k)
    if k < 1:
        raise StabilityError("k must be >= 1")
    box = (k,) * f.nvars
    terms = {}
    for gamma, c in f.sorted_terms:
        if not index_le(gamma, box):
            continue
        terms[gamma] = pbinom(box, gamma) / k ** sum(gamma) * c
    covered = f.max_degree is None or f.max_degree >= k * f.nvars
    return MPoly(f.nvars, terms, None if covered else f.max_degree)


def is_multiplier_sequence(lambdas, degree=None, tol=DEFAULT_TOL) -> Verdict:
    """Truncation-level Polya-Schur test for a real sequence lambda_0, lambda_1, ...

    The Jensen polynomials sum_k C(n,k) lambda_k x^k, n = 1..degree, must be
    real-rooted with all zeros of one sign.
    """
    lam = [complex(x) for x in lambdas]
    if any(abs(x.imag) > REAL_COEFF_TOL * max(1.0, abs(x)) for x in lam):
        raise StabilityError("multiplier sequences are real")
    lam = [x.real for x in lam]
    degree = len(lam) - 1 if degree is None else int(degree)
    for n in range(1, degree + 1):
        jensen = MPoly.from_coeffs([math.comb(n, k) * (lam[k] if k < len(lam) else 0.0)
                                    for k in range(n + 1)])
        if jensen.is_zero:
            continue
        verdict = is_stable_uni(jensen, Region.REAL, tol)
        if verdict.refuted:
            return Verdict.no(verdict.witness, verdict.value, "jensen-polynomials", note=f"n={n}")
        roots = univariate_roots(jensen)
        if np.any(roots.real > tol) and np.any(roots.real < -tol):
            pos = complex(roots[np.argmax(roots.real)])
            return Verdict.no((pos,), jensen((pos,)), "jensen-polynomials",
                              note=f"n={n}: zeros of both signs")
    return Verdict(CERTIFIED_YES, method="jensen-polynomials", note=f"n<={degree}")
