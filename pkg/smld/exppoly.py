"""Exponential polynomials Σ c x^d e^(μx), real root isolation and recurrences."""

import logging
import math
from fractions import Fraction

import numpy as np
import sympy

from smld.errors import ContractError
from smld.matrix_power import MatrixPower, is_glnplus

logger = logging.getLogger(__name__)

merge_tol = 1e-12
zero_rtol = 1e-12


class ZeroFunction(ContractError):
    pass


class TolTooCoarse(ContractError):
    pass


class NotPositiveSpectrum(ContractError):
    pass


def _rational(value: float | int | Fraction) -> Fraction | None:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, np.integer)):
        return Fraction(int(value))
    if isinstance(value, sympy.Rational):
        return Fraction(int(value.p), int(value.q))
    if isinstance(value, (float, np.floating)) and math.isfinite(value):
        return Fraction(float(value))
    return None


class Term(object):
    """A single term c·x^d·e^(μx).

    When e^μ is a known rational ``base`` terms are merged exactly on it.

    Attributes:
        c: coefficient, a float or fraction
        mu: exponential rate
        d: polynomial degree
        base: e^μ as a fraction, or None
    """

    def __init__(
        self,
        c: float | Fraction,
        mu: float,
        d: int = 0,
        base: Fraction | None = None,
    ):
        if d < 0:
            raise ValueError("Term: degree must be non-negative.")
        self.c = c
        self.mu = float(mu)
        self.d = int(d)
        self.base = base

    def __repr__(self) -> str:  # pragma: no cover
        return f"Term({self.c}·x^{self.d}·e^({self.mu:.6g}x))"

    def key(self) -> tuple[float, int]:
        return (self.mu, self.d)


def _same_rate(a: Term, b: Term) -> bool:
    if a.base is not None and b.base is not None:
        return a.base == b.base
    return abs(a.mu - b.mu) <= merge_tol * max(1.0, abs(a.mu))


def _exactish(a: object) -> bool:
    return isinstance(a, (Fraction, int, np.integer))


def _add_coeff(a: float | Fraction, b: float | Fraction) -> float | Fraction:
    if _exactish(a) and _exactish(b):
        return Fraction(a) + Fraction(b)
    return float(a) + float(b)


def _mul_coeff(a: float | Fraction, b: float | Fraction) -> float | Fraction:
    if _exactish(a) and _exactish(b):
        return Fraction(a) * Fraction(b)
    return float(a) * float(b)


class ExpPoly(object):
    """Exponential polynomial Σ_k c_k x^(d_k) e^(μ_k x).

    Terms are canonical: sorted by (μ, d), with distinct (μ, d) pairs and no
    zero coefficients. The empty sum is the zero function.
    """

    def __init__(self, terms: list[Term] | None = None):
        self.terms = self._canonical(terms or [])

    @staticmethod
    def _canonical(terms: list[Term]) -> list[Term]:
        merged: list[Term] = []
        for term in sorted(terms, key=Term.key):
            for other in merged:
                if other.d == term.d and _same_rate(other, term):
                    other.c = _add_coeff(other.c, term.c)
                    if other.base != term.base:
                        other.base = None
                    break
            else:
                merged.append(Term(term.c, term.mu, term.d, term.base))
        return sorted([t for t in merged if t.c != 0], key=Term.key)

    @classmethod
    def constant(cls, c: float | Fraction) -> "ExpPoly":
        return cls([Term(c, 0.0, 0, Fraction(1))])

    @classmethod
    def exponential(
        cls, c: float | Fraction, base: float | Fraction, d: int = 0
    ) -> "ExpPoly":
        """c·x^d·base^x for a positive base."""
        if base <= 0:
            raise ValueError("ExpPoly.exponential: base must be positive.")
        rational = _rational(base)
        return cls([Term(c, math.log(base), d, rational)])

    def __repr__(self) -> str:  # pragma: no cover
        return "ExpPoly(" + " + ".join(repr(t) for t in self.terms) + ")"

    def __len__(self) -> int:
        return len(self.terms)

    def is_zero(self) -> bool:
        return len(self.terms) == 0

    @property
    def weight(self) -> int:
        """Σ (d_k + 1), bounding the number of real zeros by weight - 1."""
        return sum(t.d + 1 for t in self.terms)

    def __add__(self, other: "ExpPoly | float") -> "ExpPoly":
        if not isinstance(other, ExpPoly):
            other = ExpPoly.constant(other)
        return ExpPoly(self.terms + other.terms)

    __radd__ = __add__

    def __neg__(self) -> "ExpPoly":
        return ExpPoly([Term(-t.c, t.mu, t.d, t.base) for t in self.terms])

    def __sub__(self, other: "ExpPoly | float") -> "ExpPoly":
        if not isinstance(other, ExpPoly):
            other = ExpPoly.constant(other)
        return self + (-other)

    def __mul__(self, other: "ExpPoly | float | Fraction") -> "ExpPoly":
        if not isinstance(other, ExpPoly):
            return ExpPoly(
                [Term(_mul_coeff(t.c, other), t.mu, t.d, t.base) for t in self.terms]
            )
        terms = []
        for a in self.terms:
            for b in other.terms:
                base = None
                if a.base is not None and b.base is not None:
                    base = a.base * b.base
                terms.append(Term(_mul_coeff(a.c, b.c), a.mu + b.mu, a.d + b.d, base))
        return ExpPoly(terms)

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "ExpPoly":
        if k < 0:
            raise ValueError("ExpPoly: only non-negative integer powers.")
        out = ExpPoly.constant(Fraction(1))
        for _ in range(k):
            out = out * self
        return out

    def substitute(self, scale: int | float, shift: int | float) -> "ExpPoly":
        """The function x ↦ f(scale·x + shift)."""
        exact = _is_int(scale) and _is_int(shift)
        terms = []
        for t in self.terms:
            if exact and t.base is not None:
                factor: float | Fraction = t.base ** int(shift)
                base = t.base ** int(scale)
            else:
                factor = math.exp(t.mu * shift)
                base = None
            for i in range(t.d + 1):
                binom = math.comb(t.d, i)
                if exact:
                    coef = Fraction(binom) * Fraction(int(scale)) ** i
                    coef *= Fraction(int(shift)) ** (t.d - i)
                else:
                    coef = binom * float(scale) ** i * float(shift) ** (t.d - i)
                c = _mul_coeff(_mul_coeff(t.c, factor), coef)
                terms.append(Term(c, t.mu * scale, i, base))
        return ExpPoly(terms)

    def differentiate(self) -> "ExpPoly":
        """(c, μ, d) ↦ (cμ, μ, d) + (cd, μ, d - 1)."""
        terms = []
        for t in self.terms:
            if t.mu != 0.0:
                terms.append(Term(float(t.c) * t.mu, t.mu, t.d, t.base))
            if t.d > 0:
                c = _mul_coeff(t.c, t.d)
                terms.append(Term(c, t.mu, t.d - 1, t.base))
        return ExpPoly(terms)

    def shift_rate(self, mu: float) -> "ExpPoly":
        """Multiplies by e^(-μx), which leaves the zero set unchanged."""
        keep = mu == 0.0
        return ExpPoly(
            [Term(t.c, t.mu - mu, t.d, t.base if keep else None) for t in self.terms]
        )

    def _parts(self, x: np.ndarray, rate: float) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        parts = np.zeros((len(self.terms),) + x.shape)
        for i, t in enumerate(self.terms):
            with np.errstate(over="ignore", invalid="ignore"):
                parts[i] = float(t.c) * np.power(x, t.d) * np.exp((t.mu - rate) * x)
        return parts

    def __call__(self, x: float | np.ndarray) -> float | np.ndarray:
        return self.evaluate(x)

    def evaluate(self, x: float | np.ndarray) -> float | np.ndarray:
        if self.is_zero():
            return np.zeros_like(np.asarray(x, dtype=float))[()]
        return np.sum(self._parts(x, 0.0), axis=0)[()]

    def max_rate(self) -> float:
        return max((t.mu for t in self.terms), default=0.0)

    def scaled(self, x: float | np.ndarray) -> float | np.ndarray:
        """f(x)·e^(-μ_max x), free of overflow for large x."""
        if self.is_zero():
            return np.zeros_like(np.asarray(x, dtype=float))[()]
        return np.sum(self._parts(x, self.max_rate()), axis=0)[()]

    def scaled_magnitude(self, x: float | np.ndarray) -> float | np.ndarray:
        """Σ |c x^d e^(μx)|·e^(-μ_max x), the scale of cancellation."""
        if self.is_zero():
            return np.zeros_like(np.asarray(x, dtype=float))[()]
        return np.sum(np.abs(self._parts(x, self.max_rate())), axis=0)[()]

    def is_zero_at(self, x: float, rtol: float = zero_rtol) -> bool:
        return bool(abs(self.scaled(x)) <= rtol * self.scaled_magnitude(x))

    def to_list(self) -> list[dict]:
        return [{"c": float(t.c), "mu": t.mu, "d": t.d} for t in self.terms]

    @classmethod
    def from_list(cls, data: list[dict]) -> "ExpPoly":
        return cls([Term(float(t["c"]), float(t["mu"]), int(t["d"])) for t in data])


def _sympy_rational(x: float) -> sympy.Rational:
    f = Fraction(float(x))
    return sympy.Rational(f.numerator, f.denominator)


def _is_int(x: int | float) -> bool:
    return isinstance(x, (int, np.integer)) or (
        isinstance(x, float) and x.is_integer()
    )


def _falling_factorial_coeffs(j: int) -> list[Fraction]:
    """Coefficients of C(x, j) as a polynomial in x, lowest degree first."""
    poly = [Fraction(1)]
    for i in range(j):
        shifted = [Fraction(0)] + poly
        for k in range(len(poly)):
            shifted[k] -= i * poly[k]
        poly = shifted
    return [c / math.factorial(j) for c in poly]


def from_linear_orbit(
    g: np.ndarray | list, v: np.ndarray | list, w: np.ndarray | list
) -> ExpPoly:
    """The exponential polynomial x ↦ wᵀ·E(x, g)·v.

    On each Jordan block, (λI + J)^x has entries C(x, j)·λ^(x-j) on the j-th
    super-diagonal, each a polynomial in x times e^(x ln λ). Rational Jordan
    data gives exact coefficients and rational bases.

    Args:
        g: matrix in GL+
        v: right vector
        w: left vector

    Returns:
        the exponential polynomial
    """
    power = MatrixPower(g)
    d = power.decomposition
    v = np.asarray(v, dtype=float).reshape(-1)
    w = np.asarray(w, dtype=float).reshape(-1)

    if d.exact is not None:
        p, eigenvalues = d.exact
        vs = sympy.Matrix([_sympy_rational(x) for x in v])
        ws = sympy.Matrix([_sympy_rational(x) for x in w])
        left = [_rational(x) for x in (ws.T * p)]
        right = [_rational(x) for x in (p.inv() * vs)]
        lams = [_rational(lam) for lam in eigenvalues]
    else:
        left = list(w @ d.transform_inverse)
        right = list(d.transform @ v)
        lams = list(d.eigenvalues)

    terms = []
    for (start, size, _), lam in zip(d.blocks(), lams):
        for j in range(size):
            pairs = [(left[start + i], right[start + i + j]) for i in range(size - j)]
            weight = sum(_mul_coeff(u, z) for u, z in pairs)
            if weight == 0:
                continue
            weight = _mul_coeff(weight, lam ** (-j))
            base = lam if isinstance(lam, Fraction) else None
            for deg, c in enumerate(_falling_factorial_coeffs(j)):
                if c != 0:
                    terms.append(Term(_mul_coeff(weight, c), math.log(lam), deg, base))
    return ExpPoly(terms)


class RootBracket(object):
    """An interval [lo, hi] containing exactly one real zero.

    Attributes:
        lo: lower bound
        hi: upper bound
        tangential: the zero does not change sign
    """

    def __init__(self, lo: float, hi: float, tangential: bool = False):
        self.lo = lo
        self.hi = hi
        self.tangential = tangential

    def __repr__(self) -> str:  # pragma: no cover
        flag = ", tangential" if self.tangential else ""
        return f"RootBracket([{self.lo:.12g}, {self.hi:.12g}]{flag})"

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.lo + self.hi)


def _sign(ep: ExpPoly, x: float) -> int:
    if ep.is_zero_at(x):
        return 0
    return 1 if ep.scaled(x) > 0.0 else -1


def _bisect(ep: ExpPoly, lo: float, hi: float, slo: int, tol: float) -> RootBracket:
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        s = _sign(ep, mid)
        if s == 0:
            return RootBracket(mid, mid)
        if s == slo:
            lo = mid
        else:
            hi = mid
    return RootBracket(lo, hi)


def _isolate(ep: ExpPoly, lo: float, hi: float, tol: float) -> list[RootBracket]:
    ep = ep.shift_rate(ep.terms[0].mu)
    if len(ep.terms) == 1:
        t = ep.terms[0]
        if t.d > 0 and lo <= 0.0 <= hi:
            return [RootBracket(0.0, 0.0, tangential=t.d % 2 == 0)]
        return []

    critical = _isolate(ep.differentiate(), lo, hi, tol)
    for a, b in zip(critical[:-1], critical[1:]):
        if a.hi >= b.lo:
            raise TolTooCoarse(
                f"isolate_zeros: critical brackets [{a.lo}, {a.hi}] and "
                f"[{b.lo}, {b.hi}] cannot be separated at tol {tol}."
            )

    roots: list[RootBracket] = []
    # f is monotone between consecutive critical brackets
    edges = [lo] + [x for c in critical for x in (c.lo, c.hi)] + [hi]
    signs = [_sign(ep, x) for x in edges]
    touched = [False] * len(edges)

    if signs[0] == 0:
        roots.append(RootBracket(lo, lo))
        touched[0] = True
    for i, c in enumerate(critical):
        ia, ib = 1 + 2 * i, 2 + 2 * i
        if _sign(ep, c.midpoint) == 0 or signs[ia] == 0 or signs[ib] == 0:
            tangential = signs[ia] * signs[ib] > 0
            roots.append(RootBracket(c.lo, c.hi, tangential=tangential))
            touched[ia] = touched[ib] = True
        elif signs[ia] * signs[ib] < 0:
            roots.append(_bisect(ep, c.lo, c.hi, signs[ia], tol))
    if signs[-1] == 0 and not touched[-1] and hi > lo:
        roots.append(RootBracket(hi, hi))
        touched[-1] = True

    for k in range(0, len(edges), 2):
        a, b = edges[k], edges[k + 1]
        if touched[k] or touched[k + 1] or b <= a:
            continue
        if signs[k] * signs[k + 1] < 0:
            roots.append(_bisect(ep, a, b, signs[k], tol))
    return sorted(roots, key=lambda r: r.lo)


def isolate_zeros(
    ep: ExpPoly, lo: float, hi: float, tol: float = 1e-10
) -> list[RootBracket]:
    """Isolates every real zero of ``ep`` in [lo, hi].

    Rolle recursion: after dividing by e^(μ_min x) the derivative has a
    strictly smaller weight Σ(d_k + 1); between consecutive zeros of the
    derivative the function is monotone, so sign changes bisect to single
    zeros. At most ``weight - 1`` brackets are returned.

    Args:
        ep: a non-zero exponential polynomial
        lo: interval start
        hi: interval end
        tol: bracket width

    Returns:
        disjoint brackets sorted by position

    Raises:
        ZeroFunction: ep has no terms
        TolTooCoarse: critical brackets overlap at this tolerance
    """
    if ep.is_zero():
        raise ZeroFunction("isolate_zeros: function is identically zero.")
    if hi < lo:
        raise ValueError("isolate_zeros: empty interval.")
    roots = _isolate(ep, lo, hi, tol)
    logger.debug(f"isolated {len(roots)} zeros on [{lo}, {hi}], weight {ep.weight}")
    return roots


def companion_matrix(coeffs: list[float]) -> np.ndarray:
    """Companion matrix of a_n = c_1 a_(n-1) + ... + c_k a_(n-k).

    Acts on states (a_n, ..., a_(n+k-1)).
    """
    k = len(coeffs)
    c = np.zeros((k, k))
    c[:-1, 1:] = np.eye(k - 1)
    c[-1] = np.asarray(coeffs, dtype=float)[::-1]
    return c


def recurrence_terms(coeffs: list, init: list, n_max: int) -> list[Fraction]:
    """Exact terms a_0..a_(n_max) of a linear recurrence."""
    cs = [_rational(c) for c in coeffs]
    values = [_rational(a) for a in init]
    while len(values) <= n_max:
        values.append(sum(c * values[-1 - i] for i, c in enumerate(cs)))
    return values[: n_max + 1]


def recurrence_zero_set(
    coeffs: list, init: list, n_max: int, tol: float = 1e-10
) -> list[int]:
    """Zeros n ≤ n_max of a_n = c_1 a_(n-1) + ... + c_k a_(n-k).

    The sequence is the exponential polynomial e_1ᵀ·E(n, C)·init of its
    companion matrix C. All real zeros on [0, n_max] are isolated and integers
    near them are confirmed by exact evaluation of the recurrence.

    Args:
        coeffs: c_1..c_k
        init: a_0..a_(k-1)
        n_max: last index
        tol: bracket width

    Returns:
        sorted list of zero indices

    Raises:
        NotPositiveSpectrum: if C is not in GL+
    """
    if len(coeffs) == 0 or len(coeffs) != len(init):
        raise ValueError(
            "recurrence_zero_set: need as many initial values as coefficients."
        )
    c = companion_matrix(coeffs)
    if not is_glnplus(c):
        raise NotPositiveSpectrum(
            "recurrence_zero_set: characteristic roots are not all real and positive."
        )
    e1 = np.zeros(len(coeffs))
    e1[0] = 1.0
    ep = from_linear_orbit(c, init, e1)
    if ep.is_zero():
        return list(range(n_max + 1))

    brackets = isolate_zeros(ep, 0.0, float(n_max), tol)
    candidates = set()
    for bracket in brackets:
        lo = max(0, math.ceil(bracket.lo - 1e-6))
        hi = min(n_max, math.floor(bracket.hi + 1e-6))
        candidates.update(range(lo, hi + 1))
    if len(candidates) == 0:
        return []

    values = recurrence_terms(coeffs, init, max(candidates))
    return sorted(n for n in candidates if values[n] == 0)
