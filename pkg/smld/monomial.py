"""Monomial maps λ·x^M, their sign dynamics and orbit interpolation."""

import logging
import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import sympy

from smld.errors import ContractError
from smld.matrix_power import MatrixPower, is_glnplus

logger = logging.getLogger(__name__)

root_of_unity_order = 12
basin_iterations = 60
max_sign_states = 2**20
sign_chunk_size = 2**16


class NotStrong(ContractError):
    pass


class OutsideBasin(ContractError):
    pass


class SingularSystem(ContractError):
    pass


class DimensionTooLarge(ContractError):
    pass


class MonomialMap(object):
    """The map x ↦ λ·x^M, component i being λ_i Π_j x_j^M_ij.

    Exponents are non-negative integers with det(M) ≠ 0 and no eigenvalue of M
    a root of unity of order up to ``root_of_unity_order``.

    Attributes:
        exponents: M
        scale: λ
    """

    def __init__(self, exponents: np.ndarray | list, scale: np.ndarray | list):
        m = np.asarray(exponents)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
            raise ValueError("MonomialMap: exponent matrix must be square.")
        if not np.all(np.equal(np.mod(m, 1), 0)) or np.any(m < 0):
            raise ValueError("MonomialMap: exponents must be non-negative integers.")
        self.exponents = m.astype(np.int64)

        self.scale = np.asarray(scale, dtype=float).reshape(-1)
        if self.scale.size != self.n:
            raise ValueError("MonomialMap: scale and exponent dimensions differ.")
        if np.any(self.scale == 0.0):
            raise ValueError("MonomialMap: scale components must be non-zero.")

        exact = sympy.Matrix(self.exponents.tolist())
        if exact.det() == 0:
            raise ValueError("MonomialMap: exponent matrix is singular.")
        power = sympy.eye(self.n)
        for k in range(1, root_of_unity_order + 1):
            power = power * exact
            if (power - sympy.eye(self.n)).det() == 0:
                raise ValueError(
                    f"MonomialMap: exponent matrix has a root of unity of order {k} "
                    "as an eigenvalue."
                )

    def __repr__(self) -> str:  # pragma: no cover
        return f"MonomialMap(M={self.exponents.tolist()}, λ={self.scale.tolist()})"

    def __call__(self, point: np.ndarray) -> np.ndarray:
        return apply_monomial(self, point)

    @property
    def n(self) -> int:
        return self.exponents.shape[0]

    @property
    def strong(self) -> bool:
        return is_glnplus(self.exponents)

    @property
    def scale_sign(self) -> np.ndarray:
        return np.sign(self.scale).astype(int)


def apply_monomial(map: MonomialMap, point: np.ndarray | list) -> np.ndarray:
    """Evaluates λ_i Π_j x_j^M_ij, with 0^0 = 1.

    Args:
        map: the monomial map
        point: array of shape (n,) or (k, n)

    Returns:
        image, same shape as point
    """
    point = np.asarray(point, dtype=float)
    if point.shape[-1] != map.n:
        raise ValueError("apply_monomial: point dimension does not match map.")
    powers = np.power(point[..., None, :], map.exponents)
    return map.scale * np.prod(powers, axis=-1)


def sign_map(
    exponents: np.ndarray, s: np.ndarray, scale_sign: np.ndarray | None = None
) -> np.ndarray:
    """Image of a sign vector in {-1, 0, 1}^n under x ↦ λ·x^M."""
    m = np.asarray(exponents, dtype=np.int64)
    s = np.asarray(s, dtype=int)
    if scale_sign is None:
        scale_sign = np.ones(m.shape[0], dtype=int)
    flips = (m @ (s == -1).astype(np.int64)) % 2
    out = np.asarray(scale_sign, dtype=int) * np.where(flips == 1, -1, 1)
    zeroed = (m @ (s == 0).astype(np.int64)) > 0
    out[zeroed] = 0
    return out


class SignOrbit(object):
    """Orbit of a sign vector under the induced sign map.

    Attributes:
        start: initial sign vector
        preperiod: steps before entering the cycle
        period: minimal cycle length
        trajectory: the first preperiod + period sign vectors
    """

    def __init__(
        self,
        start: np.ndarray,
        preperiod: int,
        period: int,
        trajectory: list[np.ndarray],
    ):
        self.start = start
        self.preperiod = preperiod
        self.period = period
        self.trajectory = trajectory

    def at(self, k: int) -> np.ndarray:
        if k >= self.preperiod:
            k = self.preperiod + (k - self.preperiod) % self.period
        return self.trajectory[k]


def sign_orbit(
    exponents: np.ndarray | list,
    s: np.ndarray | list,
    scale_sign: np.ndarray | list | None = None,
) -> SignOrbit:
    """Iterates a sign vector until it repeats.

    Component i flips parity by Σ_j M_ij [s_j = -1] mod 2, then takes the sign
    of the scale. Components fed by a zero become zero.

    Args:
        exponents: M, non-negative integers
        s: sign vector with entries in {-1, 0, 1}
        scale_sign: sgn(λ), defaults to all plus

    Returns:
        the sign orbit
    """
    s = np.asarray(s, dtype=int)
    seen: dict[tuple, int] = {}
    trajectory: list[np.ndarray] = []
    current = s
    while tuple(current) not in seen:
        seen[tuple(current)] = len(trajectory)
        trajectory.append(current)
        current = sign_map(exponents, current, scale_sign)
    preperiod = seen[tuple(current)]
    return SignOrbit(s, preperiod, len(trajectory) - preperiod, trajectory)


def _sign_successors(
    exponents: np.ndarray, negative: np.ndarray, lo: int, hi: int
) -> np.ndarray:
    n = exponents.shape[0]
    states = np.arange(lo, hi, dtype=np.int64)
    bits = ((states[:, None] >> np.arange(n)) & 1).astype(np.int64)
    parity = (bits @ (exponents % 2).T) % 2
    parity ^= negative
    return parity @ (np.int64(1) << np.arange(n, dtype=np.int64))


def sign_period_B(
    exponents: np.ndarray | list,
    scale_sign: np.ndarray | list | None = None,
    max_states: int | None = None,
    workers: int | None = None,
) -> int:
    """The lcm of all cycle lengths of the sign map on {±1}^n.

    Sign vectors are encoded as bitmasks (bit j set for a negative
    component). Successors are computed in chunks, optionally on a thread pool,
    and cycles are found on the resulting functional graph.

    Args:
        exponents: M
        scale_sign: sgn(λ), defaults to all plus
        max_states: enumeration limit, defaults to ``max_sign_states``
        workers: threads used for the successor table

    Returns:
        B

    Raises:
        DimensionTooLarge: if 2^n exceeds the limit
    """
    m = np.asarray(exponents, dtype=np.int64)
    n = m.shape[0]
    if max_states is None:
        max_states = max_sign_states
    if 2**n > max_states:
        raise DimensionTooLarge(
            f"sign_period_B: 2^{n} sign states exceed the limit of {max_states}."
        )
    if scale_sign is None:
        negative = np.zeros(n, dtype=np.int64)
    else:
        negative = (np.asarray(scale_sign) < 0).astype(np.int64)

    total = 2**n
    bounds = [
        (lo, min(lo + sign_chunk_size, total))
        for lo in range(0, total, sign_chunk_size)
    ]
    if workers is not None and workers > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            chunks = list(
                pool.map(lambda b: _sign_successors(m, negative, *b), bounds)
            )
    else:
        chunks = [_sign_successors(m, negative, *b) for b in bounds]
    successor = np.concatenate(chunks)

    # states in the image of successor^(2^n) are exactly the cyclic states
    image = successor.copy()
    for _ in range(n + 1):
        image = image[image]
    cyclic = np.unique(image)

    visited = np.zeros(total, dtype=bool)
    period = 1
    for state in cyclic:
        if visited[state]:
            continue
        length = 0
        current = state
        while not visited[current]:
            visited[current] = True
            current = successor[current]
            length += 1
        period = math.lcm(period, length)
    logger.debug(f"sign period of {m.tolist()} is {period}")
    return period


def normalize_scale(
    map: MonomialMap, samples: int = 16, seed: int = 0
) -> tuple[np.ndarray, MonomialMap]:
    """Conjugates λ·x^M to sgn(λ)·x^M by the scaling x ↦ x / μ.

    Solves (M - I) log μ = -log|λ| using the exact inverse of the integer
    matrix (M - I), then verifies μ⁻¹·(λ·(μ·x)^M) = sgn(λ)·x^M on random
    points.

    Args:
        map: the monomial map
        samples: number of verification points
        seed: seed of the verification points

    Returns:
        μ, and the normalised map

    Raises:
        SingularSystem: if M - I is singular or the identity fails
    """
    shifted = sympy.Matrix(map.exponents.tolist()) - sympy.eye(map.n)
    if shifted.det() == 0:
        raise SingularSystem("normalize_scale: M - I is singular.")
    inverse = shifted.inv()

    magnitude = np.abs(map.scale)
    mu = np.ones(map.n)
    for i in range(map.n):
        for j in range(map.n):
            mu[i] *= magnitude[j] ** float(-inverse[i, j])

    normalized = MonomialMap(map.exponents, map.scale_sign)

    rng = np.random.default_rng(seed)
    x = rng.uniform(0.2, 0.9, size=(samples, map.n))
    x *= rng.choice([-1.0, 1.0], size=x.shape)
    lhs = apply_monomial(map, mu * x) / mu
    rhs = apply_monomial(normalized, x)
    if not np.allclose(lhs, rhs, rtol=1e-10, atol=0.0):
        raise SingularSystem("normalize_scale: conjugation identity does not hold.")
    return mu, normalized


class MonomialOrbit(object):
    """Real-variable interpolant of the orbit of a point under a monomial map.

    In the normalised coordinates y = x / μ the orbit after the sign transient
    t is F(x) = s ⊙ exp(E(x, M^B) ln|b|) on the non-zero components of
    b = Φ^t(a) and 0 elsewhere, so that F(0) = Φ^t(a) and
    F(x + 1) = Φ^B(F(x)).

    Attributes:
        map: the monomial map
        point: a
        mu: normalising scale
        transient: t
        period: B
        base: Φ^t(a)
        support: indices of the non-zero components of the base
    """

    def __init__(
        self, map: MonomialMap, a: np.ndarray | list, period: int | None = None
    ):
        self.map = map
        self.point = np.asarray(a, dtype=float).reshape(-1)
        if self.point.size != map.n:
            raise ValueError("MonomialOrbit: point dimension does not match map.")
        self.mu, self.normalized = normalize_scale(map)

        y = self.point / self.mu
        signs = sign_orbit(map.exponents, np.sign(y).astype(int), map.scale_sign)
        self.transient = signs.preperiod

        natural = math.lcm(sign_period_B(map.exponents, map.scale_sign), signs.period)
        power = np.linalg.matrix_power(map.exponents, natural)
        if not is_glnplus(power) and is_glnplus(power @ power):
            natural *= 2
        if period is None:
            period = natural
        elif period % natural != 0:
            raise ValueError(
                f"MonomialOrbit: period {period} is not a multiple of {natural}."
            )
        self.period = period

        for _ in range(self.transient):
            y = apply_monomial(self.normalized, y)
        self._check_basin(y)

        self.base = self.mu * y
        self.support = np.flatnonzero(y)
        self.signs = np.sign(y)
        self._log_base = np.log(np.abs(y[self.support]))

        power = np.linalg.matrix_power(self.map.exponents, self.period)
        block = power[np.ix_(self.support, self.support)]
        if self.support.size > 0 and not is_glnplus(block):
            raise NotStrong(
                f"MonomialOrbit: M^{self.period} restricted to the support is not "
                "in GL+."
            )
        self._power = MatrixPower(block) if self.support.size > 0 else None

    def _check_basin(self, y: np.ndarray) -> None:
        norms = [np.max(np.abs(y))]
        for _ in range(basin_iterations):
            y = apply_monomial(self.normalized, y)
            norms.append(np.max(np.abs(y)))
        norms = np.array(norms)
        if norms[0] >= 1.0 or np.any(np.diff(norms) > 0.0):
            raise OutsideBasin(
                f"MonomialOrbit: point {self.point.tolist()} is not in the "
                "attracting basin."
            )

    def __call__(self, x: float) -> np.ndarray:
        if x < 0.0:
            raise ValueError("MonomialOrbit: x must be non-negative.")
        out = np.zeros(self.map.n)
        if self._power is not None:
            exponent = self._power(x) @ self._log_base
            out[self.support] = self.signs[self.support] * np.exp(exponent)
        return self.mu * out

    def iterate(self, n: int) -> np.ndarray:
        """Φ^n(a) by direct application."""
        x = self.point
        for _ in range(n):
            x = apply_monomial(self.map, x)
        return x


def interpolate_monomial_orbit(
    map: MonomialMap, a: np.ndarray | list, x: float
) -> np.ndarray:
    """F(x) with F(0) = Φ^t(a) and F(x + 1) = Φ^B(F(x)).

    See Also:
        :class:`MonomialOrbit`
    """
    return MonomialOrbit(map, a)(x)
