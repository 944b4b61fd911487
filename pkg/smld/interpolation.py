"""Product systems and real-variable interpolation of their orbits."""

import logging
import math
from fractions import Fraction
from typing import Callable

import bottleneck as bn
import numpy as np
from scipy.optimize import brentq

from smld.errors import ContractError, SMLDError
from smld.exppoly import ExpPoly, from_linear_orbit
from smld.germs import (
    AbelCoordinate,
    FixedPointClass,
    Germ,
    NotParabolic,
    boettcher,
    classify_germ,
    is_involution,
    koenigs,
    square_germ,
)
from smld.matrix_power import MatrixPower, SpectrumError, is_glnplus
from smld.monomial import (
    MonomialMap,
    MonomialOrbit,
    NotStrong,
    OutsideBasin,
    apply_monomial,
)

logger = logging.getLogger(__name__)

safe_radius = 1.0
series_radius = 1e-3  # conjugacy series are evaluated inside this radius
iter_slack = 2  # multiple of the steps needed at the linear rate
iter_margin = 64
boettcher_max_iter = 10000
infinity_tol = 1e-12

abel_kws = {"tol": 1e-8}


class DomainEscape(ContractError):
    pass


class InfinityCrossing(ContractError):
    pass


class UnsupportedGerm(ContractError):
    pass


def _invert_monotone(
    func: Callable[[float], float], target: float, a: float, b: float
) -> float:
    """Solves func(z) = target for a monotone func on [a, b]."""
    lo, hi = min(a, b), max(a, b)
    flo, fhi = func(lo) - target, func(hi) - target
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if flo * fhi > 0.0:  # rounding at the ends of the bracket
        return lo if abs(flo) < abs(fhi) else hi
    scale = max(abs(lo), abs(hi))
    return brentq(
        lambda z: func(z) - target,
        lo,
        hi,
        xtol=max(4.0 * np.finfo(float).eps * scale, 1e-300),
        rtol=4.0 * np.finfo(float).eps,
    )


class Factor(object):
    """One independent factor of a product system."""

    kind = ""

    @property
    def dimension(self) -> int:
        raise NotImplementedError

    def apply(self, point: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def orbit(self, point: np.ndarray) -> "FactorOrbit":
        raise NotImplementedError


class UnivariateFactor(Factor):
    """A univariate germ acting on one coordinate.

    Attributes:
        germ: the truncated power series, evaluated as a polynomial
    """

    kind = "germ"

    def __init__(self, germ: Germ):
        self.germ = germ

    def __repr__(self) -> str:  # pragma: no cover
        return f"UnivariateFactor({self.germ!r})"

    @property
    def dimension(self) -> int:
        return 1

    def apply(self, point: np.ndarray) -> np.ndarray:
        return np.array([self.germ(float(point[0]))])

    def orbit(self, point: np.ndarray, abel_kws: dict | None = None) -> "FactorOrbit":
        """Picks the interpolant matching the fixed point type of the germ."""
        germ = self.germ
        a = float(point[0])
        fpc = classify_germ(germ)
        if a == 0.0 or fpc.kind == "zero":
            return PeriodicOrbit(self, point, 1, 0 if a == 0.0 else 1)
        if germ == Germ.identity(germ.order):
            return PeriodicOrbit(self, point, 1, 0)
        if fpc.kind == "indifferent" and is_involution(germ):
            return PeriodicOrbit(self, point, 2, 0)
        if fpc.kind == "hyperbolic":
            return KoenigsOrbit(self, point, fpc)
        if fpc.kind == "superattracting":
            return BoettcherOrbit(self, point, fpc)
        return AbelOrbit(self, point, fpc, abel_kws)


class MonomialFactor(Factor):
    """A strong monomial map acting on a block of coordinates."""

    kind = "monomial"

    def __init__(self, map: MonomialMap):
        if not map.strong:
            raise NotStrong(
                "MonomialFactor: exponent matrix does not have a positive spectrum."
            )
        self.map = map

    def __repr__(self) -> str:  # pragma: no cover
        return f"MonomialFactor({self.map!r})"

    @property
    def dimension(self) -> int:
        return self.map.n

    def apply(self, point: np.ndarray) -> np.ndarray:
        return apply_monomial(self.map, point)

    def orbit(self, point: np.ndarray) -> "FactorOrbit":
        return MonomialFactorOrbit(self, point)


def _dehomogenize(v: np.ndarray) -> np.ndarray:
    w = v[-1]
    if abs(w) <= infinity_tol * max(1.0, float(np.max(np.abs(v)))):
        raise InfinityCrossing(
            "projective_power: point reaches the hyperplane at infinity."
        )
    return v[:-1] / w


class ProjectiveFactor(Factor):
    """A Möbius map x ↦ (A x + b) / (cᵀx + d) in the last-coordinate chart.

    Attributes:
        matrix: the (d + 1) x (d + 1) representing matrix h in GL+
    """

    kind = "projective"

    def __init__(self, h: np.ndarray | list):
        h = np.asarray(h, dtype=float)
        if h.ndim != 2 or h.shape[0] != h.shape[1] or h.shape[0] < 2:
            raise ValueError("ProjectiveFactor: matrix must be square, at least 2x2.")
        if not is_glnplus(h):
            raise SpectrumError(
                "ProjectiveFactor: matrix does not have a positive real spectrum."
            )
        self.matrix = h
        self.power = MatrixPower(h)

    def __repr__(self) -> str:  # pragma: no cover
        return f"ProjectiveFactor({self.matrix.tolist()})"

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0] - 1

    def apply(self, point: np.ndarray) -> np.ndarray:
        return _dehomogenize(self.matrix @ np.append(point, 1.0))

    def orbit(self, point: np.ndarray) -> "FactorOrbit":
        return ProjectiveFactorOrbit(self, point)


def projective_power(
    h: np.ndarray | list, x: float, point: np.ndarray | list
) -> np.ndarray:
    """Applies E(x, h) to (point : 1) and dehomogenizes by the last coordinate.

    Args:
        h: matrix in GL+
        x: real exponent
        point: affine point of dimension len(h) - 1

    Returns:
        the image point

    Raises:
        InfinityCrossing: the image lies on the hyperplane at infinity
    """
    h = np.asarray(h, dtype=float)
    point = np.asarray(point, dtype=float).reshape(-1)
    if point.size != h.shape[0] - 1:
        raise ValueError("projective_power: point dimension does not match matrix.")
    if not is_glnplus(h):
        raise SpectrumError("projective_power: matrix is not in GL+.")
    return _dehomogenize(MatrixPower(h)(x) @ np.append(point, 1.0))


class FactorOrbit(object):
    """Interpolants of one factor's orbit, one per residue modulo q.

    With g = f^q and bases b_r = f^(t + r)(a), the interpolant of residue r
    satisfies value(r, m) = g^m(b_r) at integers and
    value(r, y + 1) = g(value(r, y)). Subclasses evaluate it for every real
    y ≥ 0 through the conjugacy of g to its normal form. g is iterated only to
    bring a point into the domain of a series.

    Attributes:
        factor: the factor
        point: its starting block a
        modulus: q
        transient: t
        bases: b_0..b_(q-1)
    """

    def __init__(
        self, factor: Factor, point: np.ndarray, modulus: int, transient: int
    ):
        self.factor = factor
        self.point = np.asarray(point, dtype=float).reshape(-1)
        self.modulus = modulus
        self.transient = transient
        x = self.point
        for _ in range(transient):
            x = factor.apply(x)
        self.bases = []
        for _ in range(modulus):
            self.bases.append(x)
            x = factor.apply(x)

    def step(self, x: np.ndarray) -> np.ndarray:
        for _ in range(self.modulus):
            x = self.factor.apply(x)
        return x

    def _step_scalar(self, z: float) -> float:
        return float(self.step(np.array([z]))[0])

    def interpolate(self, r: int, y: float) -> np.ndarray:
        raise NotImplementedError

    def value(self, r: int, y: float) -> np.ndarray:
        if y < 0.0:
            raise ValueError("FactorOrbit: y must be non-negative.")
        return self.interpolate(r, float(y))

    def closed_form(self, r: int) -> tuple[list[ExpPoly], ExpPoly | None] | None:
        """Exponential polynomial coordinates of residue r as functions of y.

        Returns numerators and a common denominator (None for 1), or None when
        the orbit has no such closed form.
        """
        return None


class PeriodicOrbit(FactorOrbit):
    """Orbits that are periodic after the transient: the identity, involutions,
    the zero germ and the fixed point itself."""

    def interpolate(self, r: int, y: float) -> np.ndarray:
        return self.bases[r]

    def closed_form(self, r: int) -> tuple[list[ExpPoly], None]:
        b = float(self.bases[r][0])
        return [ExpPoly.constant(Fraction(b)) if b != 0.0 else ExpPoly()], None


class KoenigsOrbit(FactorOrbit):
    """Hyperbolic germs, interpolated through the Koenigs coordinate.

    Negative multipliers are handled through the square. The coordinate is
    A(z) = Λ^(-k) α(g^k(z)) with |g^k(z)| below ``series_radius``, and the
    interpolant solves A(z) = Λ^y A(b_r) for z between 0 and b_r.

    Attributes:
        multiplier: Λ = λ^q > 0
        alpha: Koenigs series of g
        linear: the germ is exactly λx
    """

    def __init__(
        self, factor: UnivariateFactor, point: np.ndarray, fpc: FixedPointClass
    ):
        lam = fpc.value
        if abs(lam) > 1.0:
            raise OutsideBasin(
                f"KoenigsOrbit: multiplier {float(lam):.6g} is repelling."
            )
        q = 2 if lam < 0 else 1
        super().__init__(factor, point, q, 0)
        germ = factor.germ if q == 1 else square_germ(factor.germ)
        self.multiplier = float(lam) ** q
        self._exact_multiplier = Fraction(lam) ** q
        self.alpha = koenigs(germ)
        self.linear = all(c == 0 for c in factor.germ.series[2:])

    def iteration_limit(self, z: float) -> int:
        """Steps allowed for ``z`` to reach ``series_radius``.

        A slack multiple of log(radius / |z|) / log Λ, the count at the linear
        rate, plus a margin.
        """
        if abs(z) <= series_radius:
            return 0
        steps = math.log(series_radius / abs(z)) / math.log(self.multiplier)
        return iter_slack * math.ceil(steps) + iter_margin

    def coordinate(self, z: float) -> float:
        limit = self.iteration_limit(z)
        k = 0
        while abs(z) > series_radius:
            z = self._step_scalar(z)
            k += 1
            if k > limit or not math.isfinite(z) or abs(z) > safe_radius:
                raise OutsideBasin("KoenigsOrbit: point is not attracted to 0.")
        return self.alpha(z) / self.multiplier**k

    def interpolate(self, r: int, y: float) -> np.ndarray:
        b = float(self.bases[r][0])
        if self.linear or b == 0.0:
            return np.array([b * self.multiplier**y])
        target = self.coordinate(b) * self.multiplier**y
        return np.array([_invert_monotone(self.coordinate, target, 0.0, b)])

    def closed_form(self, r: int) -> tuple[list[ExpPoly], None] | None:
        if not self.linear:
            return None
        b = Fraction(float(self.bases[r][0]))
        if b == 0:
            return [ExpPoly()], None
        return [ExpPoly.exponential(b, self._exact_multiplier)], None


class BoettcherOrbit(FactorOrbit):
    """Superattracting germs, interpolated through the Böttcher coordinate.

    In the coordinate A(z) = sgn(z)|α(f^k(z))|^(N^-k) the orbit is an orbit of
    the monomial map w ↦ σw^N, interpolated by :class:`MonomialOrbit`, and the
    interpolant solves A(z) = W_r(y) for z between 0 and b_r.

    Sign changes take the modulus and transient of the sign orbit of the
    normal form: an even N fixes the sign after one step (transient 1), an
    odd N with σ = -1 alternates it (modulus 2).

    Attributes:
        degree: N
        sigma: σ
        alpha: Böttcher series
        normal: the monomial map σ·x^N
    """

    def __init__(
        self, factor: UnivariateFactor, point: np.ndarray, fpc: FixedPointClass
    ):
        self.factor = factor
        self.degree = int(fpc.value)
        self.alpha, self.sigma = boettcher(factor.germ)
        self.normal = MonomialMap([[self.degree]], [self.sigma])

        start = MonomialOrbit(self.normal, [self.coordinate(float(point[0]))])
        super().__init__(factor, point, start.period, start.transient)
        self._orbits = [
            MonomialOrbit(self.normal, [self.coordinate(float(b[0]))], start.period)
            for b in self.bases
        ]

    def coordinate(self, z: float) -> float:
        if z == 0.0:
            return 0.0
        k, w = 0, z
        while abs(w) > series_radius:
            w = float(self.factor.germ(w))
            k += 1
            if k > boettcher_max_iter or not math.isfinite(w) or abs(w) > safe_radius:
                raise OutsideBasin("BoettcherOrbit: point is not attracted to 0.")
        magnitude = abs(self.alpha(w)) ** (float(self.degree) ** (-k))
        return math.copysign(magnitude, z)

    def interpolate(self, r: int, y: float) -> np.ndarray:
        b = float(self.bases[r][0])
        if b == 0.0:
            return np.array([0.0])
        target = float(self._orbits[r](y)[0])
        return np.array([_invert_monotone(self.coordinate, target, 0.0, b)])


class AbelOrbit(FactorOrbit):
    """Parabolic germs, interpolated as ψ⁻¹(ψ(b_r) + s).

    Multiplier -1 uses the square, whose multiplier is +1.

    Attributes:
        coordinates: one Abel coordinate per residue, None for a zero base
    """

    def __init__(
        self,
        factor: UnivariateFactor,
        point: np.ndarray,
        fpc: FixedPointClass,
        kws: dict | None = None,
    ):
        q = 1 if fpc.value == 1 else 2
        super().__init__(factor, point, q, 0)
        germ = factor.germ if q == 1 else square_germ(factor.germ)
        options = dict(abel_kws, **(kws or {}))

        self.coordinates: list[AbelCoordinate | None] = []
        for b in self.bases:
            b = float(b[0])
            if b == 0.0:
                self.coordinates.append(None)
                continue
            try:
                side = 1 if b > 0 else -1
                coordinate = AbelCoordinate(
                    germ, side, x_max=abs(b), step=self._step_scalar, **options
                )
            except NotParabolic as e:
                raise UnsupportedGerm(
                    f"AbelOrbit: square of the germ is not parabolic ({e})."
                ) from e
            if coordinate.x_max < abs(b):
                raise OutsideBasin(
                    f"AbelOrbit: {b:.6g} is outside the attracting interval."
                )
            self.coordinates.append(coordinate)

    def interpolate(self, r: int, y: float) -> np.ndarray:
        coordinate = self.coordinates[r]
        if coordinate is None:
            return np.array([0.0])
        b = float(self.bases[r][0])
        return np.array([coordinate.inverse(coordinate(b) + y)])


class MonomialFactorOrbit(FactorOrbit):
    """Monomial factors: one :class:`MonomialOrbit` of Φ^B per base b_r."""

    def __init__(self, factor: MonomialFactor, point: np.ndarray):
        start = MonomialOrbit(factor.map, point)
        super().__init__(factor, point, start.period, start.transient)
        self.interpolants = [
            MonomialOrbit(factor.map, b, self.modulus) for b in self.bases
        ]

    def interpolate(self, r: int, y: float) -> np.ndarray:
        return self.interpolants[r](y)

    def closed_form(self, r: int) -> tuple[list[ExpPoly], None] | None:
        if np.any(self.bases[r] != 0.0):
            return None
        return [ExpPoly() for _ in range(self.factor.dimension)], None


class ProjectiveFactorOrbit(FactorOrbit):
    """Projective factors: E(y, h) applied to (b : 1)."""

    def __init__(self, factor: ProjectiveFactor, point: np.ndarray):
        super().__init__(factor, point, 1, 0)

    def interpolate(self, r: int, y: float) -> np.ndarray:
        return _dehomogenize(self.factor.power(y) @ np.append(self.bases[r], 1.0))

    def closed_form(self, r: int) -> tuple[list[ExpPoly], ExpPoly]:
        h = self.factor.matrix
        v = np.append(self.bases[r], 1.0)
        unit = np.eye(h.shape[0])
        numerators = [from_linear_orbit(h, v, unit[i]) for i in range(h.shape[0] - 1)]
        return numerators, from_linear_orbit(h, v, unit[-1])


class ProductSystem(object):
    """The product map Φ = f_1 × ... × f_k of independent factors.

    Attributes:
        factors: ordered factors
        radius: safe box half-width
    """

    def __init__(self, factors: list[Factor], radius: float = safe_radius):
        if len(factors) == 0:
            raise ValueError("ProductSystem: at least one factor is required.")
        self.factors = factors
        self.radius = radius
        offsets = np.cumsum([0] + [f.dimension for f in factors])
        self.slices = [slice(a, b) for a, b in zip(offsets[:-1], offsets[1:])]

    def __repr__(self) -> str:  # pragma: no cover
        return f"ProductSystem({self.factors!r})"

    @property
    def dimension(self) -> int:
        return self.slices[-1].stop

    def _check(self, point: np.ndarray | list) -> np.ndarray:
        point = np.asarray(point, dtype=float).reshape(-1)
        if point.size != self.dimension:
            raise ValueError(
                f"ProductSystem: point has dimension {point.size}, "
                f"expected {self.dimension}."
            )
        return point

    def _escaped(self, point: np.ndarray) -> bool:
        return bool(np.any(~np.isfinite(point)) or np.any(np.abs(point) > self.radius))

    def apply(self, point: np.ndarray | list) -> np.ndarray:
        point = self._check(point)
        parts = [f.apply(point[s]) for f, s in zip(self.factors, self.slices)]
        return np.concatenate(parts)

    def orbit(self, a: np.ndarray | list, n: int) -> np.ndarray:
        """Points Φ^0(a)..Φ^n(a) as an array of shape (n + 1, dimension).

        Raises:
            DomainEscape: a coordinate leaves the box |x| ≤ radius
        """
        if n < 0:
            raise ValueError("ProductSystem.orbit: n must be non-negative.")
        x = self._check(a)
        out = np.empty((n + 1, self.dimension))
        for i in range(n + 1):
            if i > 0:
                x = self.apply(x)
            if self._escaped(x):
                raise DomainEscape(
                    f"iterate: orbit leaves the safe box at step {i}: {x.tolist()}."
                )
            out[i] = x
        return out

    def iterate(self, a: np.ndarray | list, n: int) -> np.ndarray:
        return self.orbit(a, n)[-1]


def iterate(system: ProductSystem, a: np.ndarray | list, n: int) -> np.ndarray:
    """Φ^n(a) by direct iteration, checking the safe box at every step."""
    return system.iterate(a, n)


class InterpolationBundle(object):
    """Interpolants G_0..G_(N-1) with G_j(m) = Φ^(Nm + j + t)(a).

    Factor i, with modulus q_i and transient t_i, contributes its interpolant
    of residue r_i = (j + t - t_i) mod q_i at y = (N x + j + t - t_i - r_i) / q_i.

    Attributes:
        system: the product system
        point: a
        orbits: per factor interpolants
        modulus: N, the lcm of the factor moduli
        transient: t, the largest factor transient
    """

    def __init__(
        self, system: ProductSystem, point: np.ndarray, orbits: list[FactorOrbit]
    ):
        self.system = system
        self.point = point
        self.orbits = orbits
        self.modulus = math.lcm(*[o.modulus for o in orbits])
        self.transient = max(o.transient for o in orbits)

    def __repr__(self) -> str:  # pragma: no cover
        return f"InterpolationBundle(N={self.modulus}, t={self.transient})"

    def _offsets(self, j: int) -> list[tuple[int, int]]:
        if not 0 <= j < self.modulus:
            raise ValueError(f"InterpolationBundle: residue {j} out of range.")
        out = []
        for o in self.orbits:
            shift = j + self.transient - o.transient
            r = shift % o.modulus
            out.append((r, (shift - r) // o.modulus))
        return out

    @property
    def base_point(self) -> np.ndarray:
        """Φ^t(a)."""
        return self.evaluate(0, 0.0)

    @property
    def evaluators(self) -> list[Callable[[float], np.ndarray]]:
        return [lambda x, j=j: self.evaluate(j, x) for j in range(self.modulus)]

    def evaluate(self, j: int, x: float) -> np.ndarray:
        if x < 0.0:
            raise ValueError("InterpolationBundle: x must be non-negative.")
        values = []
        for o, (r, shift) in zip(self.orbits, self._offsets(j)):
            scale = self.modulus // o.modulus
            y = scale * x + shift
            values.append(o.value(r, y))
        return np.concatenate(values)

    def grid(self, j: int, x_max: float, samples: int) -> tuple[np.ndarray, np.ndarray]:
        """G_j on the grid k / samples, 0 ≤ k / samples ≤ x_max.

        Each fractional offset is evaluated once and advanced by Φ^N, using
        G_j(x + 1) = Φ^N(G_j(x)).
        """
        count = int(math.floor(x_max * samples + 1e-9)) + 1
        xs = np.arange(count) / samples
        points = np.empty((count, self.system.dimension))
        for u in range(min(samples, count)):
            z = self.evaluate(j, u / samples)
            for k in range(u, count, samples):
                if k > u:
                    for _ in range(self.modulus):
                        z = self.system.apply(z)
                points[k] = z
        return xs, points

    def closed_form(self, j: int) -> list[tuple[list[ExpPoly], ExpPoly | None]] | None:
        """Per factor exponential polynomial coordinates of G_j in x.

        Returns None unless every factor has a closed form.
        """
        out = []
        for o, (r, shift) in zip(self.orbits, self._offsets(j)):
            form = o.closed_form(r)
            if form is None:
                return None
            numerators, denominator = form
            scale = self.modulus // o.modulus
            numerators = [e.substitute(scale, shift) for e in numerators]
            if denominator is not None:
                denominator = denominator.substitute(scale, shift)
            out.append((numerators, denominator))
        return out


def build_bundle(
    system: ProductSystem, a: np.ndarray | list, abel_kws: dict | None = None
) -> InterpolationBundle:
    """Builds the interpolation bundle of the orbit of ``a``.

    Args:
        system: product system
        a: starting point
        abel_kws: options for parabolic factors, see :class:`AbelCoordinate`

    Returns:
        the bundle, N the lcm and t the max of the factor moduli and transients

    Raises:
        OutsideBasin, NotStrong, UnsupportedGerm and the errors of the factors
    """
    a = system._check(a)
    orbits = []
    for factor, s in zip(system.factors, system.slices):
        if isinstance(factor, UnivariateFactor):
            orbits.append(factor.orbit(a[s], abel_kws=abel_kws))
        else:
            orbits.append(factor.orbit(a[s]))
    bundle = InterpolationBundle(system, a, orbits)
    logger.info(
        f"bundle with modulus {bundle.modulus}, transient {bundle.transient}, "
        f"factor orbits {[type(o).__name__ for o in orbits]}"
    )
    return bundle


def evaluate_bundle(bundle: InterpolationBundle, j: int, x: float) -> np.ndarray:
    """G_j(x)."""
    return bundle.evaluate(j, x)


class BundleReport(object):
    """Agreement of a bundle with direct iteration.

    Attributes:
        deviations: max |G_j(m) - Φ^(Nm + j + t)(a)|, shape (N, m_max + 1)
        max_deviation: largest deviation, nan if nothing was compared
        tol: tolerance
        passed: max_deviation ≤ tol and no errors
        errors: messages of failed evaluations
    """

    def __init__(self, deviations: np.ndarray, tol: float, errors: list[str]):
        self.deviations = deviations
        self.tol = tol
        self.errors = errors
        if np.all(np.isnan(deviations)):
            self.max_deviation = np.nan
        else:
            self.max_deviation = float(bn.nanmax(deviations))
        self.passed = len(errors) == 0 and bool(self.max_deviation <= tol)

    def __repr__(self) -> str:  # pragma: no cover
        return f"BundleReport(max={self.max_deviation:.3g}, passed={self.passed})"

    def to_dict(self) -> dict:
        return {
            "max_deviation": self.max_deviation,
            "tol": self.tol,
            "passed": self.passed,
            "errors": self.errors,
        }


def verify_bundle(
    bundle: InterpolationBundle,
    system: ProductSystem | None = None,
    a: np.ndarray | list | None = None,
    m_max: int = 20,
    tol: float = 1e-8,
) -> BundleReport:
    """Compares G_j(m) with Φ^(Nm + j + t)(a) for 0 ≤ m ≤ m_max.

    Errors during evaluation are recorded in the report and never raised.
    """
    system = system if system is not None else bundle.system
    a = a if a is not None else bundle.point
    n, t = bundle.modulus, bundle.transient
    deviations = np.full((n, m_max + 1), np.nan)
    errors: list[str] = []
    try:
        orbit = system.orbit(a, n * m_max + n - 1 + t)
    except SMLDError as e:
        return BundleReport(deviations, tol, [str(e)])

    for j in range(n):
        for m in range(m_max + 1):
            try:
                value = bundle.evaluate(j, float(m))
            except SMLDError as e:
                errors.append(f"G_{j}({m}): {e}")
                continue
            deviations[j, m] = np.max(np.abs(value - orbit[n * m + j + t]))
    report = BundleReport(deviations, tol, errors)
    logger.debug(f"verify_bundle: {report!r}")
    return report
