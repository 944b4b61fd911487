"""Return sets {n : H(Φ^n(a)) = 0} as finite sets plus arithmetic progressions."""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction

import bottleneck as bn
import numpy as np
from scipy.optimize import brentq

from smld.errors import ContractError, InvariantError
from smld.exppoly import ExpPoly, isolate_zeros
from smld.interpolation import (
    InterpolationBundle,
    ProductSystem,
    UnivariateFactor,
    build_bundle,
)
from smld.matrix_power import ConditioningError

logger = logging.getLogger(__name__)

default_tol = 1e-10
samples_per_unit = 8
max_samples_per_unit = 1024
bracket_tol = 1e-10
integer_tol = 1e-6  # distance from a refined root to the integer it reports

grid_kws = {
    "samples_per_unit": samples_per_unit,
    "max_samples_per_unit": max_samples_per_unit,
}


class InconsistentVerdict(InvariantError):
    pass


class TrichotomyViolation(InvariantError):
    pass


class UnsupportedSystem(ContractError):
    pass


class Variety(object):
    """The zero set of H(x) = Σ_k c_k x^(e_k).

    Terms are kept as given, so that H = x - x is a valid, identically
    vanishing variety.

    Attributes:
        terms: list of (exponents, coefficient)
        n: number of variables
        scale: max |c_k|
    """

    def __init__(self, terms: list[tuple[list[int], float]]):
        if len(terms) == 0:
            raise ValueError("Variety: at least one term is required.")
        self.terms = [(tuple(int(e) for e in exponents), c) for exponents, c in terms]
        self.n = len(self.terms[0][0])
        if any(len(e) != self.n for e, _ in self.terms):
            raise ValueError("Variety: terms have different numbers of variables.")
        if any(e < 0 for exponents, _ in self.terms for e in exponents):
            raise ValueError("Variety: exponents must be non-negative.")
        if all(c == 0 for _, c in self.terms):
            raise ValueError("Variety: at least one coefficient must be non-zero.")
        self.scale = max(abs(float(c)) for _, c in self.terms)
        self._exponents = np.array([e for e, _ in self.terms], dtype=float)
        self._coeffs = np.array([float(c) for _, c in self.terms])

    def __repr__(self) -> str:  # pragma: no cover
        return f"Variety({self.terms})"

    @property
    def degree(self) -> int:
        return max(sum(e) for e, _ in self.terms)

    def _monomials(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        if points.shape[-1] != self.n:
            raise ValueError("Variety: point dimension does not match.")
        return self._coeffs * np.prod(
            np.power(points[..., None, :], self._exponents), axis=-1
        )

    def __call__(self, points: np.ndarray) -> float | np.ndarray:
        """H at a point, or at each row of an array of points."""
        return np.sum(self._monomials(points), axis=-1)[()]

    def magnitude(self, points: np.ndarray) -> float | np.ndarray:
        """Σ_k |c_k x^(e_k)|, the scale of cancellation in H."""
        return np.sum(np.abs(self._monomials(points)), axis=-1)[()]

    def hits(self, points: np.ndarray, tol: float = default_tol) -> np.ndarray:
        """|H(x)| ≤ tol·Σ_k |c_k x^(e_k)|, per point."""
        return np.abs(self(points)) <= tol * self.magnitude(points)


def compute_hits(
    system: ProductSystem,
    a: np.ndarray | list,
    H: Variety,
    n_max: int,
    tol: float = default_tol,
) -> list[int]:
    """Indices 0 ≤ n ≤ n_max where Φ^n(a) lies on the variety, by iteration.

    Raises:
        DomainEscape: the orbit leaves the safe box
    """
    orbit = system.orbit(a, n_max)
    return [int(n) for n in np.flatnonzero(H.hits(orbit, tol))]


class ClassVerdict(object):
    """Behaviour of the residue class n = Nm + j + t, in terms of m.

    Attributes:
        residue: j
        kind: 'finite', 'cofinite' or 'all'
        values: sorted zeros m for 'finite'
        start: first m of the eventually-zero tail for 'cofinite', 0 for 'all'
        certified: the verdict was obtained exactly from an exponential polynomial
        sign_changes: sign changes of H(G_j) on the sampled grid, if sampled
        roots: refined zeros of H(G_j) on the sampled grid, if sampled
    """

    kinds = ["finite", "cofinite", "all"]

    def __init__(
        self,
        residue: int,
        kind: str,
        values: list[int] | None = None,
        start: int | None = None,
        certified: bool = False,
        sign_changes: int | None = None,
        roots: list[float] | None = None,
    ):
        if kind not in ClassVerdict.kinds:
            raise ValueError(f"ClassVerdict: unknown kind '{kind}'.")
        self.residue = residue
        self.kind = kind
        self.values = sorted(set(values or []))
        self.start = 0 if kind == "all" else start
        self.certified = certified
        self.sign_changes = sign_changes
        self.roots = roots

    def __repr__(self) -> str:  # pragma: no cover
        if self.kind == "finite":
            return f"ClassVerdict({self.residue}, finite {self.values})"
        return f"ClassVerdict({self.residue}, {self.kind} from {self.start})"

    def to_dict(self) -> dict:
        return {
            "residue": self.residue,
            "kind": self.kind,
            "values": self.values,
            "start": self.start,
            "certified": self.certified,
        }


def _exact(c: float | Fraction) -> Fraction:
    return c if isinstance(c, Fraction) else Fraction(float(c))


def compose_closed_form(
    closed: list[tuple[list[ExpPoly], ExpPoly | None]], H: Variety
) -> ExpPoly:
    """H(G_j(x)) as an exponential polynomial.

    Projective blocks are cleared of their denominator w by multiplying with
    w^D, D the largest degree of H in the block's variables. The zero set is
    unchanged since w does not vanish along the orbit.
    """
    blocks = []
    offset = 0
    for numerators, denominator in closed:
        blocks.append((offset, numerators, denominator))
        offset += len(numerators)
    if offset != H.n:
        raise ValueError("compose_closed_form: dimension does not match variety.")

    degrees = [
        max(sum(e[o : o + len(nums)]) for e, _ in H.terms) for o, nums, _ in blocks
    ]
    total = ExpPoly()
    for exponents, c in H.terms:
        term = ExpPoly.constant(_exact(c))
        for (o, nums, den), degree in zip(blocks, degrees):
            local = exponents[o : o + len(nums)]
            for num, e in zip(nums, local):
                if e > 0:
                    term = term * num**e
            if den is not None and degree > sum(local):
                term = term * den ** (degree - sum(local))
        total = total + term
    return total


def _class_hits(
    hits: set[int], j: int, transient: int, modulus: int, count: int
) -> list[int]:
    return [m for m in range(count) if modulus * m + j + transient in hits]


def _tail_start(flags: np.ndarray) -> int | None:
    """First index from which every flag is set, None if the last one is not."""
    if flags.size == 0 or not flags[-1]:
        return None
    unset = np.flatnonzero(~flags)
    return 0 if unset.size == 0 else int(unset[-1]) + 1


def _refine(func, lo: float, hi: float) -> float:
    """A zero of func in [lo, hi], or the end nearer to one without a sign change."""
    flo, fhi = func(lo), func(hi)
    if flo == 0.0 or fhi == 0.0 or flo * fhi > 0.0:
        return float(lo if abs(flo) <= abs(fhi) else hi)
    return brentq(func, lo, hi, xtol=bracket_tol)


class ClassGrid(object):
    """h_j = H(G_j) sampled with ``samples`` points per unit on [0, x_max].

    Attributes:
        samples: points per unit
        xs: sample positions
        h: h_j at the samples
        near: samples that are hits of the variety
        brackets: i with opposite signs at samples i and i + 1, both not hits
        runs: (first, last) sample index of each run of hits
    """

    def __init__(
        self,
        bundle: InterpolationBundle,
        j: int,
        H: Variety,
        x_max: float,
        samples: int,
        tol: float,
    ):
        self.samples = samples
        self.xs, points = bundle.grid(j, x_max, samples)
        self.h = H(points)
        self.near = H.hits(points, tol)

        far = np.flatnonzero(~self.near)
        signs = np.sign(self.h[far])
        flips = (np.diff(far) == 1) & (signs[1:] * signs[:-1] < 0)
        self.brackets = far[:-1][flips]
        self.sign_changes = int(np.count_nonzero(signs[1:] * signs[:-1] < 0))

        padded = np.concatenate([[False], self.near, [False]])
        edges = np.flatnonzero(np.diff(padded.astype(int)))
        self.runs = list(zip(edges[::2], edges[1::2] - 1))

    @property
    def zero_count(self) -> int:
        return len(self.brackets) + len(self.runs)

    def run_root(self, first: int, last: int, func) -> float:
        """A zero of h_j in a run of hits, bracketed by its neighbours if possible."""
        lo, hi = first - 1, last + 1
        if lo >= 0 and hi < self.h.size and self.h[lo] * self.h[hi] < 0.0:
            return _refine(func, self.xs[lo], self.xs[hi])
        return float(self.xs[first + int(np.argmin(np.abs(self.h[first : last + 1])))])


def _stable_grid(
    bundle: InterpolationBundle,
    j: int,
    H: Variety,
    x_max: float,
    tol: float,
    samples: int,
    max_samples: int,
) -> ClassGrid:
    """Doubles the sampling density until the zero count repeats."""
    grid = ClassGrid(bundle, j, H, x_max, samples, tol)
    while True:
        if 2 * grid.samples > max_samples:
            raise ConditioningError(
                f"analyze_class: zero count of class {j} is not stable at "
                f"{grid.samples} samples per unit."
            )
        finer = ClassGrid(bundle, j, H, x_max, 2 * grid.samples, tol)
        if finer.zero_count == grid.zero_count:
            return finer
        logger.debug(
            f"class {j}: {grid.zero_count} zeros at {grid.samples} samples, "
            f"{finer.zero_count} at {finer.samples}"
        )
        grid = finer


def analyze_class(
    bundle: InterpolationBundle,
    j: int,
    H: Variety,
    x_max: float,
    tol: float = default_tol,
    hits: list[int] | None = None,
    **kwargs,
) -> ClassVerdict:
    """Analyzes h_j(x) = H(G_j(x)) on [0, x_max].

    When every factor has an exponential polynomial closed form, h_j is one
    too: it is identically zero ('all', certified) or its integer zeros are
    found by :func:`isolate_zeros`. Otherwise h_j is sampled on a grid starting
    at ``samples_per_unit`` points per unit, doubled until the count of sign
    changes and runs of hits repeats. The class is 'cofinite' from m_0 only if
    |h_j| ≤ tol·scale at every sample beyond m_0 and the hit oracle agrees at
    every integer beyond m_0. Otherwise each zero is refined with
    :func:`scipy.optimize.brentq` and the integers among the roots are the
    zeros of the class. Such verdicts are not certified.

    Args:
        bundle: interpolation bundle
        j: residue, 0 ≤ j < N
        H: the variety
        x_max: end of the interval
        tol: relative hit tolerance
        hits: oracle hits, computed by iteration if None
        **kwargs: options updating ``grid_kws``

    Returns:
        verdict for the class

    Raises:
        ConditioningError: the zero count is not stable at
            ``max_samples_per_unit``
    """
    n, t = bundle.modulus, bundle.transient
    if not 0 <= j < n:
        raise ValueError(f"analyze_class: residue {j} out of range.")
    if x_max < 0.0:
        return ClassVerdict(j, "finite", [], certified=True)
    options = grid_kws.copy()
    options.update(kwargs)
    count = int(math.floor(x_max + 1e-9)) + 1

    closed = bundle.closed_form(j)
    if closed is not None:
        ep = compose_closed_form(closed, H)
        if ep.is_zero():
            logger.debug(f"class {j}: exponential polynomial vanishes identically")
            return ClassVerdict(j, "all", certified=True)
        values = set()
        for bracket in isolate_zeros(ep, 0.0, float(x_max), bracket_tol):
            lo = max(0, math.ceil(bracket.lo - 1e-6))
            hi = min(count - 1, math.floor(bracket.hi + 1e-6))
            values.update(m for m in range(lo, hi + 1) if ep.is_zero_at(m, tol))
        logger.debug(f"class {j}: exponential polynomial zeros {sorted(values)}")
        return ClassVerdict(j, "finite", sorted(values), certified=True)

    if hits is None:
        last = n * (count - 1) + j + t
        hits = compute_hits(bundle.system, bundle.point, H, last, tol)
    oracle = set(_class_hits(set(hits), j, t, n, count))

    grid = _stable_grid(
        bundle,
        j,
        H,
        x_max,
        tol,
        int(options["samples_per_unit"]),
        int(options["max_samples_per_unit"]),
    )
    xs, h = grid.xs, grid.h

    on_integers = np.array([m in oracle for m in range(count)], dtype=bool)
    grid_start = _tail_start(grid.near)
    oracle_start = _tail_start(on_integers)
    if grid_start is not None and oracle_start is not None:
        m0 = max(oracle_start, int(math.ceil(xs[grid_start] - 1e-9)))
        if m0 < count:
            tail = float(bn.nanmax(np.abs(h[xs >= m0])))
            logger.info(
                f"class {j}: eventually zero from m = {m0} (uncertified, "
                f"largest tail value {tail:.3g})"
            )
            kind = "all" if m0 == 0 else "cofinite"
            return ClassVerdict(j, kind, start=m0, sign_changes=grid.sign_changes)

    def func(x: float) -> float:
        return float(H(bundle.evaluate(j, x)))

    roots = [_refine(func, xs[i], xs[i + 1]) for i in grid.brackets]
    roots.extend(grid.run_root(first, last, func) for first, last in grid.runs)
    values = set()
    for root in roots:
        m = int(round(root))
        if abs(root - m) > integer_tol or not 0 <= m < count:
            continue
        if grid.near[m * grid.samples]:
            values.add(m)
    logger.debug(f"class {j}: {len(roots)} roots at {grid.samples} samples per unit")
    return ClassVerdict(
        j, "finite", sorted(values), sign_changes=grid.sign_changes, roots=sorted(roots)
    )


class Progression(object):
    """The progression {start + N k : k ≥ 0}.

    Attributes:
        residue: start mod N
        start: first element
        certified: from a certified class verdict
    """

    def __init__(self, residue: int, start: int, certified: bool = False):
        self.residue = residue
        self.start = start
        self.certified = certified

    def __repr__(self) -> str:  # pragma: no cover
        return f"Progression({self.start} mod {self.residue})"

    def to_dict(self) -> dict:
        return {"residue": self.residue, "start": self.start}


class ReturnSetDecomposition(object):
    """A hit set as exceptional points plus progressions with modulus N.

    The decomposition describes the hits on [0, n_max] only.

    Attributes:
        modulus: N
        transient: t
        exceptional: sorted hits not covered by a progression
        progressions: sorted by start
        certified: per residue class, whether its verdict is certified
        n_max: end of the range
    """

    def __init__(
        self,
        modulus: int,
        transient: int,
        exceptional: list[int],
        progressions: list[Progression],
        certified: list[bool],
        n_max: int,
    ):
        self.modulus = modulus
        self.transient = transient
        self.exceptional = exceptional
        self.progressions = sorted(progressions, key=lambda p: p.start)
        self.certified = certified
        self.n_max = n_max

    def __repr__(self) -> str:  # pragma: no cover
        return (
            f"ReturnSetDecomposition(N={self.modulus}, "
            f"exceptional={self.exceptional}, progressions={self.progressions})"
        )

    def regenerate(self, n_max: int | None = None) -> list[int]:
        """The hit set described by the decomposition on [0, n_max]."""
        n_max = self.n_max if n_max is None else n_max
        out = {n for n in self.exceptional if n <= n_max}
        for p in self.progressions:
            out.update(range(p.start, n_max + 1, self.modulus))
        return sorted(out)

    def to_dict(self) -> dict:
        return {
            "modulus": self.modulus,
            "transient": self.transient,
            "exceptional": self.exceptional,
            "progressions": [p.to_dict() for p in self.progressions],
            "certified": self.certified,
            "n_max": self.n_max,
        }


def decompose(
    hits: list[int],
    verdicts: list[ClassVerdict],
    modulus: int,
    n_max: int,
    transient: int = 0,
) -> ReturnSetDecomposition:
    """Combines class verdicts and oracle hits into a decomposition.

    Every verdict is checked against the hits of its class. Progression starts
    are moved back over earlier hits of the same residue.

    Args:
        hits: oracle hit indices on [0, n_max]
        verdicts: one per residue class
        modulus: N
        n_max: end of the range
        transient: t, class j holds the indices N m + j + t

    Returns:
        the decomposition

    Raises:
        InconsistentVerdict: a verdict contradicts the hits
    """
    if sorted(v.residue for v in verdicts) != list(range(modulus)):
        raise ValueError("decompose: verdicts must cover every residue once.")
    hit_set = set(hits)
    progressions = []
    for v in sorted(verdicts, key=lambda v: v.residue):
        first = v.residue + transient
        count = max(0, (n_max - first) // modulus + 1)
        oracle = _class_hits(hit_set, v.residue, transient, modulus, count)
        if v.kind == "finite":
            expected = [m for m in v.values if m < count]
            if oracle != expected:
                raise InconsistentVerdict(
                    f"decompose: class {v.residue} has hits {oracle}, "
                    f"verdict {expected}."
                )
            continue
        missing = [m for m in range(v.start, count) if m not in set(oracle)]
        if len(missing) > 0:
            raise InconsistentVerdict(
                f"decompose: class {v.residue} is {v.kind} from {v.start} but "
                f"misses {missing[:5]}."
            )
        start = first + modulus * v.start
        while start - modulus >= 0 and start - modulus in hit_set:
            start -= modulus
        progressions.append(Progression(start % modulus, start, v.certified))

    covered = set()
    for p in progressions:
        covered.update(range(p.start, n_max + 1, modulus))
    exceptional = sorted(n for n in hit_set if n not in covered and n <= n_max)
    certified = [v.certified for v in sorted(verdicts, key=lambda v: v.residue)]
    decomposition = ReturnSetDecomposition(
        modulus, transient, exceptional, progressions, certified, n_max
    )
    if decomposition.regenerate() != sorted(n for n in hit_set if n <= n_max):
        raise InconsistentVerdict("decompose: reconstruction differs from hits.")
    return decomposition


def return_set(
    system: ProductSystem,
    a: np.ndarray | list,
    H: Variety,
    n_max: int,
    tol: float = default_tol,
    workers: int | None = None,
    abel_kws: dict | None = None,
    **kwargs,
) -> ReturnSetDecomposition:
    """Computes and decomposes the return set of ``a`` to the variety.

    Residue classes are analyzed concurrently, on ``workers`` threads.

    Args:
        system: product system
        a: starting point
        H: the variety
        n_max: end of the range
        tol: relative hit tolerance
        workers: thread count, one per class if None
        abel_kws: options for parabolic factors
        **kwargs: options updating ``grid_kws``
    """
    if n_max < 0:
        raise ValueError("return_set: n_max must be non-negative.")
    bundle = build_bundle(system, a, abel_kws=abel_kws)
    hits = compute_hits(system, a, H, n_max, tol)
    n, t = bundle.modulus, bundle.transient

    def analyze(j: int) -> ClassVerdict:
        x_max = (n_max - t - j) / n
        return analyze_class(bundle, j, H, x_max, tol, hits=hits, **kwargs)

    if workers == 1 or n == 1:
        verdicts = [analyze(j) for j in range(n)]
    else:
        with ThreadPoolExecutor(max_workers=workers or n) as pool:
            verdicts = list(pool.map(analyze, range(n)))
    for v in verdicts:
        logger.debug(f"verdict {v!r}")
    decomposition = decompose(hits, verdicts, n, n_max, t)
    logger.info(f"return set {decomposition!r}")
    return decomposition


def trichotomy_check(
    system: ProductSystem,
    a: np.ndarray | list,
    H: Variety,
    n_max: int,
    tol: float = default_tol,
    **kwargs,
) -> tuple[str, ReturnSetDecomposition]:
    """Labels the return set of univariate factors with |f'(0)| ≤ 1.

    The return set is 'All', 'Evens', 'Odds' or 'Finite'. Hits past the
    first N + t indices must agree with the label.

    Returns:
        label and decomposition

    Raises:
        UnsupportedSystem: a factor is not a univariate germ with |f'(0)| ≤ 1
        TrichotomyViolation: the decomposition fits no label
    """
    for factor in system.factors:
        if not isinstance(factor, UnivariateFactor):
            raise UnsupportedSystem(
                "trichotomy_check: all factors must be univariate."
            )
        if abs(float(factor.germ.series[1])) > 1.0:
            raise UnsupportedSystem(
                "trichotomy_check: multipliers must satisfy |f'(0)| ≤ 1."
            )

    decomposition = return_set(system, a, H, n_max, tol, **kwargs)
    n, t = decomposition.modulus, decomposition.transient
    if n not in (1, 2):
        raise TrichotomyViolation(f"trichotomy_check: modulus {n} is not 1 or 2.")

    residues = {p.start % 2 for p in decomposition.progressions} if n == 2 else set()
    if len(decomposition.progressions) == 0:
        label = "Finite"
    elif n == 1 or residues == {0, 1}:
        label = "All"
    elif residues == {0}:
        label = "Evens"
    else:
        label = "Odds"

    if label != "Finite":
        hits = set(decomposition.regenerate())
        for i in range(n + t, n_max + 1):
            expected = (
                label == "All"
                or (label == "Evens" and i % 2 == 0)
                or (label == "Odds" and i % 2 == 1)
            )
            if (i in hits) != expected:
                raise TrichotomyViolation(
                    f"trichotomy_check: index {i} contradicts label {label}."
                )
    logger.info(f"trichotomy label {label}")
    return label, decomposition
