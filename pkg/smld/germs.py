"""Univariate germs fixing 0 as truncated power series, and their normal forms.

Series are held as coefficient arrays ``c[0..K]`` with ``c[0] = 0``. When every
coefficient is a small rational the arithmetic is exact, using
:class:`fractions.Fraction` in object arrays, otherwise floats are used.
"""

import logging
import math
from fractions import Fraction
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from smld.errors import ContractError
from smld.monomial import MonomialMap, normalize_scale

logger = logging.getLogger(__name__)

default_order = 16
exact_max_denominator = 2**20
unit_tol = 1e-12

abel_max_iter = 200000
abel_table_size = 64


class NotInvertible(ContractError):
    pass


class NotParabolic(ContractError):
    pass


class SideNotAttracting(ContractError):
    pass


class NoConvergence(ContractError):
    pass


def _exact_value(v: object) -> Fraction | None:
    if isinstance(v, Fraction):
        return v
    if isinstance(v, (int, np.integer)):
        return Fraction(int(v))
    if isinstance(v, str):
        return Fraction(v)
    if isinstance(v, (float, np.floating)) and math.isfinite(v):
        f = Fraction(float(v))
        return f if f.denominator <= exact_max_denominator else None
    return None


def _zeros(size: int, exact: bool) -> np.ndarray:
    if exact:
        return np.array([Fraction(0)] * size, dtype=object)
    return np.zeros(size)


def _mul(a: np.ndarray, b: np.ndarray, order: int, exact: bool) -> np.ndarray:
    """Product of two coefficient arrays truncated to ``order``."""
    out = _zeros(order + 1, exact)
    nb = min(b.size, order + 1)
    for i in range(min(a.size, order + 1)):
        if a[i] == 0:
            continue
        m = min(nb, order + 1 - i)
        out[i : i + m] += a[i] * b[:m]
    return out


class Germ(object):
    """Truncated power series Σ c_k x^k, k = 1..K, fixing the origin.

    Coefficients may be ints, floats, :class:`fractions.Fraction` or strings
    such as ``"1/3"``.

    Attributes:
        order: truncation order K
        exact: True if coefficients are held as fractions
    """

    def __init__(
        self,
        coeffs: list | np.ndarray,
        order: int | None = None,
        exact: bool | None = None,
    ):
        values = list(coeffs)
        if order is None:
            order = max(default_order, len(values))
        if order < 1:
            raise ValueError("Germ: order must be at least 1.")
        values = values[:order] + [0] * (order - len(values))

        rationals = [_exact_value(v) for v in values]
        if exact is None:
            exact = all(r is not None for r in rationals)
        if exact:
            if any(r is None for r in rationals):
                raise ValueError("Germ: coefficients are not small rationals.")
            series = np.array([Fraction(0)] + rationals, dtype=object)
        else:
            floats = [
                float(Fraction(v)) if isinstance(v, str) else float(v) for v in values
            ]
            series = np.array([0.0] + floats)
        self._set(series, exact)

    def _set(self, series: np.ndarray, exact: bool) -> None:
        self.series = series
        self.exact = exact
        self.order = series.size - 1
        self._float = [float(c) for c in series]

    @classmethod
    def from_series(cls, series: np.ndarray, exact: bool) -> "Germ":
        germ = cls.__new__(cls)
        if exact:
            series = np.array([Fraction(c) for c in series], dtype=object)
        else:
            series = np.asarray(series, dtype=float)
        series[0] = 0
        germ._set(series, exact)
        return germ

    @classmethod
    def identity(cls, order: int = default_order) -> "Germ":
        return cls([1], order=order)

    def __repr__(self) -> str:  # pragma: no cover
        terms = [f"{c}x^{k}" for k, c in enumerate(self.series) if c != 0]
        return "Germ(" + (" + ".join(terms) if terms else "0") + ")"

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Germ) or other.order != self.order:
            return False
        return all(a == b for a, b in zip(self.series, other.series))

    @property
    def coeffs(self) -> np.ndarray:
        """Coefficients c_1..c_K."""
        return self.series[1:]

    def __call__(self, x: float | np.ndarray) -> float | np.ndarray:
        if np.ndim(x) == 0:
            return _horner(self._float, float(x))
        return np.polyval(self._float[::-1], np.asarray(x, dtype=float))

    def _coerce(self, other: "Germ") -> tuple[np.ndarray, np.ndarray, bool, int]:
        order = min(self.order, other.order)
        exact = self.exact and other.exact
        a, b = self.series[: order + 1], other.series[: order + 1]
        if not exact:
            a, b = a.astype(float), b.astype(float)
        return a, b, exact, order

    def __add__(self, other: "Germ") -> "Germ":
        a, b, exact, _ = self._coerce(other)
        return Germ.from_series(a + b, exact)

    def __sub__(self, other: "Germ") -> "Germ":
        a, b, exact, _ = self._coerce(other)
        return Germ.from_series(a - b, exact)

    def __neg__(self) -> "Germ":
        return Germ.from_series(-self.series, self.exact)

    def __mul__(self, other: "Germ | float | Fraction | int") -> "Germ":
        if isinstance(other, Germ):
            a, b, exact, order = self._coerce(other)
            return Germ.from_series(_mul(a, b, order, exact), exact)
        scalar = _exact_value(other) if self.exact else None
        if scalar is None:
            return Germ.from_series(self.series.astype(float) * float(other), False)
        return Germ.from_series(self.series * scalar, True)

    __rmul__ = __mul__

    def valuation(self) -> int | None:
        """Index of the first non-zero coefficient, None for the zero series."""
        nonzero = [k for k, c in enumerate(self.series) if c != 0]
        return nonzero[0] if nonzero else None

    def truncate(self, order: int) -> "Germ":
        series = self.series[: order + 1]
        if series.size < order + 1:
            pad = _zeros(order + 1 - series.size, self.exact)
            series = np.concatenate([series, pad])
        return Germ.from_series(series, self.exact)

    def compose(self, other: "Germ") -> "Germ":
        """f∘g truncated to the common order, by Horner's scheme."""
        a, b, exact, order = self._coerce(other)
        result = _zeros(order + 1, exact)
        for k in range(order, 0, -1):
            result[0] += a[k]
            result = _mul(result, b, order, exact)
        return Germ.from_series(result, exact)

    def invert(self) -> "Germ":
        """Compositional inverse, by repeated correction g ← g - (f∘g - x) / c_1."""
        c1 = self.series[1]
        if c1 == 0:
            raise NotInvertible("series_invert: linear coefficient is zero.")
        identity = Germ.identity(self.order)
        if not self.exact:
            identity = Germ.from_series(identity.series, False)
        scale = Fraction(1) / c1 if self.exact else 1.0 / float(c1)
        inverse = identity * scale
        for _ in range(self.order):
            error = self.compose(inverse) - identity
            if all(c == 0 for c in error.series):
                break
            inverse = inverse - error * scale
        return inverse

    def to_list(self) -> list[float | str]:
        """Coefficients for serialization, non-dyadic fractions as strings."""
        out: list[float | str] = []
        for c in self.coeffs:
            if self.exact and Fraction(float(c)) != c:
                out.append(str(c))
            else:
                out.append(float(c))
        return out


def _horner(coeffs: list[float], x: float) -> float:
    r = 0.0
    for c in reversed(coeffs):
        r = r * x + c
    return r


def series_compose(f: Germ, g: Germ) -> Germ:
    """f∘g truncated to order K."""
    return f.compose(g)


def series_invert(f: Germ) -> Germ:
    """The compositional inverse of ``f``.

    Raises:
        NotInvertible: if c_1 = 0
    """
    return f.invert()


def square_germ(f: Germ) -> Germ:
    """f∘f truncated to order K."""
    return f.compose(f)


def is_involution(f: Germ) -> bool:
    """Test if f∘f is the identity to order K, within ``unit_tol`` for floats."""
    square = square_germ(f)
    identity = Germ.identity(square.order)
    if f.exact:
        return square == identity
    return bool(np.all(np.abs(np.subtract(square._float, identity._float)) <= unit_tol))


class FixedPointClass(object):
    """Type of the fixed point at the origin.

    Attributes:
        kind: one of 'zero', 'superattracting', 'hyperbolic', 'indifferent'
        value: N, λ or σ respectively, None for 'zero'
    """

    kinds = ["zero", "superattracting", "hyperbolic", "indifferent"]

    def __init__(self, kind: str, value: int | float | Fraction | None = None):
        if kind not in FixedPointClass.kinds:
            raise ValueError(f"FixedPointClass: unknown kind '{kind}'.")
        self.kind = kind
        self.value = value

    def __repr__(self) -> str:  # pragma: no cover
        return f"FixedPointClass({self.kind}, {self.value})"

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FixedPointClass):
            return False
        return self.kind == other.kind and self.value == other.value


def classify_germ(f: Germ) -> FixedPointClass:
    v = f.valuation()
    if v is None:
        return FixedPointClass("zero")
    if v >= 2:
        return FixedPointClass("superattracting", v)
    c1 = f.series[1]
    if abs(abs(float(c1)) - 1.0) <= (0.0 if f.exact else unit_tol):
        return FixedPointClass("indifferent", 1 if c1 > 0 else -1)
    return FixedPointClass("hyperbolic", c1)


def koenigs(f: Germ) -> Germ:
    """Koenigs linearization α with α∘f = λ·α.

    The n-th coefficient solves (λ - λ^n) α_n = Σ_{k<n} α_k [f^k]_n.

    Args:
        f: germ with 0 < |f'(0)| ≠ 1

    Returns:
        α, tangent to the identity
    """
    fpc = classify_germ(f)
    if fpc.kind != "hyperbolic":
        raise ValueError(f"koenigs: germ is {fpc.kind}, not hyperbolic.")
    lam = fpc.value
    order, exact = f.order, f.exact

    powers = [None, f.series]
    for k in range(2, order + 1):
        powers.append(_mul(powers[-1], f.series, order, exact))

    alpha = _zeros(order + 1, exact)
    alpha[1] = 1
    for n in range(2, order + 1):
        rest = sum(alpha[k] * powers[k][n] for k in range(1, n))
        alpha[n] = rest / (lam - lam**n)
    return Germ.from_series(alpha, exact)


def boettcher(f: Germ) -> tuple[Germ, int]:
    """Böttcher coordinate α with α∘f = σ·α^N.

    The leading coefficient comes from :func:`smld.monomial.normalize_scale`
    applied to c_N·x^N, and σ = sgn(c_N). Higher coefficients are solved at
    degree N + k - 1, where α_k enters linearly through σ N α_1^(N-1) α_k.

    Args:
        f: germ with valuation N ≥ 2

    Returns:
        α and σ
    """
    fpc = classify_germ(f)
    if fpc.kind != "superattracting":
        raise ValueError(f"boettcher: germ is {fpc.kind}, not superattracting.")
    n = fpc.value
    cn = f.series[n]
    sigma = 1 if cn > 0 else -1
    mu, _ = normalize_scale(MonomialMap([[n]], [float(cn)]))
    alpha1: float | Fraction = 1.0 / float(mu[0])

    exact = f.exact
    if exact:
        candidate = Fraction(alpha1).limit_denominator(exact_max_denominator)
        if candidate ** (n - 1) == abs(cn):
            alpha1 = candidate
        else:
            exact = False
    order = f.order
    work = order + n - 1
    series = f.series if exact else f.series.astype(float)
    fw = np.concatenate([series, _zeros(work - order, exact)])

    powers = [None, fw]
    for _ in range(2, work // n + 1):
        powers.append(_mul(powers[-1], fw, work, exact))

    alpha = _zeros(work + 1, exact)
    alpha[1] = alpha1
    denominator = sigma * n * alpha1 ** (n - 1)
    for k in range(2, order + 1):
        degree = n + k - 1
        lhs = sum(alpha[m] * powers[m][degree] for m in range(1, min(k, len(powers))))
        partial = alpha.copy()
        for _ in range(n - 1):
            partial = _mul(partial, alpha, work, exact)
        alpha[k] = (lhs - sigma * partial[degree]) / denominator
    return Germ.from_series(alpha[: order + 1], exact), sigma


def _generator(f: Germ, order: int) -> np.ndarray:
    """Formal vector field v with f = exp(v d/dx) x, to ``order``."""
    fs = f.series[: order + 1].astype(float)
    v = np.zeros(order + 1)
    x = np.zeros(order + 1)
    x[1] = 1.0
    for k in range(2, order + 1):
        total = np.zeros(order + 1)
        term = x.copy()
        for m in range(1, order):
            derivative = np.zeros(order + 1)
            derivative[:-1] = term[1:] * np.arange(1, order + 1)
            term = _mul(v, derivative, order, False) / m
            if not np.any(term):
                break
            if m >= 2:
                total += term
        v[k] = fs[k] - total[k]
    return v


class AbelCoordinate(object):
    """Abel coordinate ψ with ψ(f(x)) = ψ(x) + 1 on one attracting side.

    The leading model ψ₀ integrates 1/v for the formal generator v of f,
    ψ₀(x) = -1/(p·a·x^p) + ... + β log|x|, and is refined by the limit
    ψ(x) = ψ₀(f^k(x)) - k, stopping once ψ₀ solves the Abel equation to
    ``tol / 100`` along the orbit. The inverse uses a table of ψ on the validity
    interval and bisection.

    Attributes:
        germ: f
        side: +1 or -1
        contact: p, with f(x) - x = a·x^(p+1) + ...
        leading: a
        x_max: end of the validity interval (0, x_max] on the side
        tol: Abel equation tolerance
    """

    def __init__(
        self,
        germ: Germ,
        side: int,
        tol: float = 1e-8,
        x_max: float | None = None,
        step: Callable[[float], float] | None = None,
        max_iter: int = abel_max_iter,
    ):
        if side not in (1, -1):
            raise ValueError("AbelCoordinate: side must be +1 or -1.")
        fpc = classify_germ(germ)
        if fpc.kind != "indifferent" or fpc.value != 1:
            raise NotParabolic(f"abel_coordinate: multiplier is not +1 ({fpc}).")
        offset = germ - Germ.identity(germ.order)
        threshold = 0.0 if germ.exact else unit_tol
        nonzero = [
            k for k in range(2, offset.order + 1) if abs(offset.series[k]) > threshold
        ]
        if len(nonzero) == 0:
            raise NotParabolic("abel_coordinate: germ is the identity.")
        v = nonzero[0]

        self.germ = germ
        self.side = side
        self.tol = tol
        self.max_iter = max_iter
        self.contact = v - 1
        self.leading = float(offset.series[v])
        self.step = step if step is not None else germ

        p, a = self.contact, self.leading
        if (side > 0 and a >= 0) or (side < 0 and a * (-1) ** (p + 1) <= 0):
            raise SideNotAttracting(
                f"abel_coordinate: side {side:+d} is repelling for a = {a:.6g}."
            )

        order = min(germ.order, 4 * p + 4)
        vector = _generator(germ, order)
        w = vector[p + 1 :] / a
        u = np.zeros(w.size)
        u[0] = 1.0
        for i in range(1, w.size):
            u[i] = -np.dot(w[1 : i + 1], u[i - 1 :: -1])
        self._terms = [(i - p, u[i] / (a * (i - p))) for i in range(u.size) if i != p]
        self._log = u[p] / a if p < u.size else 0.0

        self.x_max = self._validity(x_max)
        self._r_stop = self._stop_radius()

        xs = side * self.x_max * np.geomspace(1.0, 1e-3, abel_table_size)
        self._table_x = xs
        self._table_psi = np.array([self(x) for x in xs])
        logger.debug(
            f"abel coordinate p={p}, a={a:.6g}, x_max={self.x_max:.3g}, "
            f"stop radius {self._r_stop:.3g}"
        )

    def _validity(self, x_max: float | None) -> float:
        if x_max is None:
            tail = [
                abs(c) ** (1.0 / k)
                for k, c in enumerate(self.germ._float)
                if k >= 2 and c != 0
            ]
            x_max = 0.5 * min(1.0, 1.0 / max(tail)) if tail else 0.5
        for _ in range(20):
            xs = self.side * np.linspace(x_max / 64.0, x_max, 64)
            ys = np.array([self.step(x) for x in xs])
            if np.all(self.side * ys > 0.0) and np.all(self.side * ys < self.side * xs):
                if np.all(np.diff(ys) * np.diff(xs) > 0.0):
                    return x_max
            x_max *= 0.5
        raise SideNotAttracting("abel_coordinate: no attracting interval found.")

    def _stop_radius(self) -> float:
        threshold = self.tol * 1e-2
        z = self.side * self.x_max
        for _ in range(self.max_iter):
            fz = self.step(z)
            if abs(self.defect(z)) <= threshold and abs(self.defect(fz)) <= threshold:
                return abs(z)
            z = fz
        raise NoConvergence(
            f"abel_coordinate: leading model not accurate within {self.max_iter} steps."
        )

    def leading_model(self, x: float) -> float:
        """ψ₀(x)."""
        total = self._log * math.log(abs(x))
        for e, c in self._terms:
            total += c * x**e
        return total

    def defect(self, x: float) -> float:
        """ψ₀(f(x)) - ψ₀(x) - 1."""
        return self.leading_model(self.step(x)) - self.leading_model(x) - 1.0

    def __call__(self, x: float) -> float:
        x = float(x)
        if self.side * x <= 0.0:
            raise ValueError("AbelCoordinate: point is not on the chosen side.")
        z, k = x, 0
        while abs(z) > self._r_stop:
            z = self.step(z)
            k += 1
            if k > self.max_iter:
                raise NoConvergence("AbelCoordinate: iteration limit exceeded.")
        return self.leading_model(z) - k

    def inverse(self, s: float) -> float:
        """The point z on the side with ψ(z) = s."""
        table_psi = self._table_psi
        if s < table_psi[0] - self.tol:
            raise ValueError("AbelCoordinate: value is outside the validity interval.")
        if s <= table_psi[0]:
            return float(self._table_x[0])
        if s > table_psi[-1]:
            j = int(math.ceil(s - table_psi[-1]))
            z = self.inverse(s - j)
            for _ in range(j):
                z = self.step(z)
            return z

        i = int(np.searchsorted(table_psi, s))
        if table_psi[i] == s:
            return float(self._table_x[i])
        lo, hi = self._table_x[i - 1], self._table_x[i]
        return brentq(
            lambda z: self(z) - s,
            lo,
            hi,
            xtol=1e-15 * abs(hi),
            rtol=4.0 * np.finfo(float).eps,
        )


def abel_coordinate(
    f: Germ, side: int = 1, tol: float = 1e-8, **kwargs
) -> AbelCoordinate:
    """Builds the Abel coordinate of a parabolic germ.

    Args:
        f: germ with f'(0) = 1, not the identity
        side: +1 or -1, must be attracting
        tol: tolerance of the Abel equation
        **kwargs: passed to :class:`AbelCoordinate`

    Raises:
        NotParabolic, SideNotAttracting, NoConvergence
    """
    return AbelCoordinate(f, side, tol, **kwargs)
