"""Real Jordan decomposition and real powers of matrices with positive spectrum."""

import logging
from fractions import Fraction

import numpy as np
import sympy

from smld.errors import ContractError

logger = logging.getLogger(__name__)

cluster_tol = 100.0  # multiple of eps^(1/n) grouping perturbed eigenvalues
rank_tol = 1e-9  # singular value threshold for kernel dimensions
split_tol = 1e-12  # kernel threshold confirming a group is one eigenvalue
exact_max_dim = 8
exact_max_denominator = 2**20


class SpectrumError(ContractError):
    pass


class ConditioningError(ContractError):
    pass


def _as_square(g: np.ndarray | list, name: str) -> np.ndarray:
    g = np.asarray(g, dtype=float)
    if g.ndim != 2 or g.shape[0] != g.shape[1] or g.shape[0] == 0:
        raise ValueError(f"{name}: matrix must be square and non-empty.")
    return g


def _is_single_eigenvalue(g: np.ndarray, mu: float, multiplicity: int) -> bool:
    """Test if (g - μI)^k has a numerical kernel of dimension exactly k."""
    scale = max(1.0, np.linalg.norm(g, 2))
    a = np.linalg.matrix_power(g - mu * np.eye(g.shape[0]), multiplicity)
    s = np.linalg.svd(a, compute_uv=False)
    return int(np.count_nonzero(s <= split_tol * scale**multiplicity)) == multiplicity


def _split_cluster(g: np.ndarray, members: np.ndarray) -> list[np.ndarray]:
    """Splits a group of eigenvalues into numerically single eigenvalues.

    A group that fails the kernel test is cut at its largest gap.
    """
    if members.size == 1:
        return [members]
    mu = complex(np.mean(members))
    if abs(mu.imag) <= split_tol and _is_single_eigenvalue(g, mu.real, members.size):
        return [members]
    gaps = np.abs(np.diff(members))
    cut = int(np.argmax(gaps)) + 1
    return _split_cluster(g, members[:cut]) + _split_cluster(g, members[cut:])


def _eigenvalue_clusters(g: np.ndarray) -> list[tuple[complex, int]]:
    """Groups eigenvalues split apart by rounding of defective blocks.

    Eigenvalues closer than the rounding split of an n x n Jordan block are
    grouped, and a group is kept only if (g - μI)^k has a k-dimensional
    kernel at its mean μ. Every other eigenvalue stands on its own.

    Returns:
        list of (mean eigenvalue, multiplicity)
    """
    w = np.linalg.eigvals(g)
    w = w[np.lexsort((w.imag, w.real))]
    n = w.size
    scale = max(1.0, np.linalg.norm(g, 2))
    radius = cluster_tol * np.finfo(float).eps ** (1.0 / n) * scale

    groups: list[list[complex]] = [[w[0]]]
    for value in w[1:]:
        if min(abs(value - v) for v in groups[-1]) <= radius:
            groups[-1].append(value)
        else:
            groups.append([value])

    clusters = []
    for group in groups:
        for members in _split_cluster(g, np.array(group)):
            clusters.append((complex(np.mean(members)), members.size))
    return clusters


def is_glnplus(g: np.ndarray | list, tol: float = 1e-8) -> bool:
    """Test if all eigenvalues of ``g`` are real and positive.

    Each eigenvalue is tested on its own, except that the eigenvalues of a
    numerically defective block are replaced by their mean.

    Args:
        g: square matrix
        tol: tolerance on the imaginary part and the positivity margin

    Returns:
        True if ``g`` is in GL+
    """
    g = _as_square(g, "is_glnplus")
    if not np.all(np.isfinite(g)):
        return False
    for value, _ in _eigenvalue_clusters(g):
        if abs(value.imag) > tol or value.real <= tol:
            return False
    return True


def gen_binomial(x: float | Fraction, j: int) -> float | Fraction:
    """Generalised binomial coefficient x(x-1)...(x-j+1)/j!.

    Exact if ``x`` is a :class:`fractions.Fraction`.
    """
    if j < 0:
        raise ValueError("gen_binomial: 'j' must be non-negative.")
    r = Fraction(1) if isinstance(x, Fraction) else 1.0
    for i in range(j):
        r = r * (x - i) / (i + 1)
    return r


def jordan_matrix(partition: list[int], eigenvalues: list[float]) -> np.ndarray:
    """The direct sum of blocks (λ_i I + J) in the given order."""
    n = sum(partition)
    out = np.zeros((n, n))
    i = 0
    for size, lam in zip(partition, eigenvalues):
        out[i : i + size, i : i + size] = lam * np.eye(size) + np.eye(size, k=1)
        i += size
    return out


def block_power(lam: float, size: int, x: float) -> np.ndarray:
    """Real power of a single Jordan block.

    exp(x ln λ) Σ_j C(x, j) λ^-j J^j for j < size.
    """
    out = np.zeros((size, size))
    for j in range(size):
        out += gen_binomial(x, j) * lam ** (-j) * np.eye(size, k=j)
    return np.exp(x * np.log(lam)) * out


class JordanDecomposition(object):
    """Real Jordan data of a matrix g.

    The transform satisfies ``h g h⁻¹ = ⊕ (λ_i I + J)`` with blocks ordered by
    non-increasing size, then non-increasing eigenvalue.

    Attributes:
        partition: block sizes
        eigenvalues: eigenvalue of each block
        transform: h
        transform_inverse: h⁻¹, whose columns are Jordan chains of g
        exact: exact sympy data (h⁻¹, eigenvalues) or None
    """

    def __init__(
        self,
        partition: list[int],
        eigenvalues: list[float],
        transform: np.ndarray,
        transform_inverse: np.ndarray,
        exact: tuple[sympy.Matrix, list[sympy.Rational]] | None = None,
    ):
        self.partition = list(partition)
        self.eigenvalues = list(eigenvalues)
        self.transform = transform
        self.transform_inverse = transform_inverse
        self.exact = exact

    def __repr__(self) -> str:  # pragma: no cover
        return (
            f"JordanDecomposition(partition={self.partition}, "
            f"eigenvalues={self.eigenvalues})"
        )

    @property
    def n(self) -> int:
        return sum(self.partition)

    def blocks(self) -> list[tuple[int, int, float]]:
        """List of (start index, size, eigenvalue) for each block."""
        out = []
        start = 0
        for size, lam in zip(self.partition, self.eigenvalues):
            out.append((start, size, lam))
            start += size
        return out

    def jordan_matrix(self) -> np.ndarray:
        return jordan_matrix(self.partition, self.eigenvalues)


def _rational_entries(g: np.ndarray) -> list[list[Fraction]] | None:
    rows = []
    for row in g:
        values = []
        for v in row:
            f = Fraction(float(v))
            if f.denominator > exact_max_denominator:
                return None
            values.append(f)
        rows.append(values)
    return rows


def _exact_jordan(g: np.ndarray) -> JordanDecomposition | None:
    """Exact Jordan form for small rational matrices with rational spectrum."""
    if g.shape[0] > exact_max_dim:
        return None
    rows = _rational_entries(g)
    if rows is None:
        return None

    m = sympy.Matrix(
        [[sympy.Rational(v.numerator, v.denominator) for v in row] for row in rows]
    )
    lam = sympy.Symbol("lam")
    roots = sympy.roots(m.charpoly(lam).as_expr(), lam, filter="Q")
    if sum(roots.values()) != m.shape[0] or any(r <= 0 for r in roots):
        return None

    p, j = m.jordan_form()
    chains = []
    start = 0
    n = m.shape[0]
    while start < n:
        size = 1
        while start + size < n and j[start + size - 1, start + size] == 1:
            size += 1
        chains.append((size, j[start, start], p[:, start : start + size]))
        start += size
    chains.sort(key=lambda c: (-c[0], -c[1]))

    p_sorted = sympy.Matrix.hstack(*[c[2] for c in chains])
    h = p_sorted.inv()
    eigenvalues = [c[1] for c in chains]
    logger.debug(f"exact jordan form, partition {[c[0] for c in chains]}")
    return JordanDecomposition(
        [c[0] for c in chains],
        [float(e) for e in eigenvalues],
        np.array(h.tolist(), dtype=float),
        np.array(p_sorted.tolist(), dtype=float),
        exact=(p_sorted, eigenvalues),
    )


def _kernel(a: np.ndarray, threshold: float) -> np.ndarray:
    _, s, vh = np.linalg.svd(a)
    rank = int(np.count_nonzero(s > threshold))
    return vh[rank:].T


def _numeric_chains(
    g: np.ndarray, lam: float, multiplicity: int
) -> list[tuple[int, float, np.ndarray]]:
    n = g.shape[0]
    a = g - lam * np.eye(n)
    scale = max(1.0, np.linalg.norm(g, 2))

    kernels = [np.zeros((n, 0))]
    power = np.eye(n)
    while kernels[-1].shape[1] < multiplicity:
        power = power @ a
        k = len(kernels)
        kernel = _kernel(power, rank_tol * scale**k)
        if kernel.shape[1] <= kernels[-1].shape[1] or k > multiplicity:
            raise ConditioningError(
                f"jordan_real: kernel chain for eigenvalue {lam:.6g} does not "
                f"reach its multiplicity {multiplicity}."
            )
        kernels.append(kernel)
    if kernels[-1].shape[1] != multiplicity:
        raise ConditioningError(
            f"jordan_real: kernel dimension {kernels[-1].shape[1]} of eigenvalue "
            f"{lam:.6g} differs from multiplicity {multiplicity}."
        )

    nullity = [k.shape[1] for k in kernels]
    max_size = len(kernels) - 1
    ge = [nullity[s] - nullity[s - 1] for s in range(1, max_size + 1)] + [0]

    chains: list[tuple[int, float, np.ndarray]] = []
    for size in range(max_size, 0, -1):
        count = ge[size - 1] - ge[size]
        if count == 0:
            continue
        existing = [
            np.linalg.matrix_power(a, c[0] - size) @ c[2][:, -1] for c in chains
        ]
        q = np.column_stack([kernels[size - 1], *existing])
        w = kernels[size]
        if q.shape[1] > 0:
            u, s, _ = np.linalg.svd(q, full_matrices=False)
            u = u[:, s > rank_tol * s[0]]
            w = w - u @ (u.T @ w)
        u, _, _ = np.linalg.svd(w, full_matrices=False)
        for top in u[:, :count].T:
            columns = [top]
            for _ in range(size - 1):
                columns.insert(0, a @ columns[0])
            chains.append((size, lam, np.column_stack(columns)))
    return chains


def _simple_chains(
    g: np.ndarray, lam: float, multiplicity: int
) -> list[tuple[int, float, np.ndarray]]:
    """Eigenvectors of the ``multiplicity`` eigenvalues nearest λ, as 1x1 blocks."""
    w, v = np.linalg.eig(g)
    nearest = np.argsort(np.abs(w - lam))[:multiplicity]
    return [(1, float(w[i].real), v[:, i : i + 1].real) for i in nearest]


def jordan_real(
    g: np.ndarray | list, tol: float = 1e-8, exact: bool | None = None
) -> JordanDecomposition:
    """Real Jordan decomposition of a matrix in GL+.

    Small matrices with rational entries and rational spectrum are decomposed
    exactly with :mod:`sympy`. Otherwise eigenvalues are clustered and Jordan
    chains are built from the kernels of powers of (g - λI).

    Args:
        g: square matrix
        tol: spectrum tolerance and relative reconstruction tolerance
        exact: force (True) or disable (False) the exact path, None for auto

    Returns:
        the decomposition

    Raises:
        SpectrumError: an eigenvalue is complex or non-positive
        ConditioningError: the reconstruction defect exceeds ``tol * ‖g‖``
    """
    g = _as_square(g, "jordan_real")
    if not is_glnplus(g, tol):
        raise SpectrumError("jordan_real: matrix has complex or non-positive spectrum.")

    if exact is not False:
        decomposition = _exact_jordan(g)
        if decomposition is not None:
            return decomposition
        if exact:
            raise ValueError("jordan_real: exact path requested for non-rational data.")

    chains: list[tuple[int, float, np.ndarray]] = []
    for value, multiplicity in _eigenvalue_clusters(g):
        try:
            chains.extend(_numeric_chains(g, value.real, multiplicity))
        except ConditioningError:
            if multiplicity == 1:
                raise
            logger.debug(f"splitting eigenvalue {value.real:.6g} into 1x1 blocks")
            chains.extend(_simple_chains(g, value.real, multiplicity))
    chains.sort(key=lambda c: (-c[0], -c[1]))

    p = np.column_stack([c[2] for c in chains])
    if np.linalg.cond(p) > 1.0 / np.finfo(float).eps:
        raise ConditioningError("jordan_real: transform is singular.")
    h = np.linalg.inv(p)
    partition = [c[0] for c in chains]
    eigenvalues = [c[1] for c in chains]

    defect = np.linalg.norm(h @ g @ p - jordan_matrix(partition, eigenvalues))
    if defect > tol * max(1.0, np.linalg.norm(g)):
        raise ConditioningError(
            f"jordan_real: reconstruction defect {defect:.3g} exceeds tolerance."
        )
    logger.debug(f"numeric jordan form, partition {partition}, defect {defect:.3g}")
    return JordanDecomposition(partition, eigenvalues, h, p)


def _is_integer(x: float | int | Fraction) -> bool:
    if isinstance(x, (int, np.integer, Fraction)):
        return Fraction(x).denominator == 1
    return float(x).is_integer()


class MatrixPower(object):
    """The interpolated power function x ↦ E(x, g).

    Caches the Jordan decomposition of ``g``; calling the object with a real
    ``x`` returns the matrix E(x, g), which agrees with ``g^x`` at integers and
    satisfies ``E(x + 1, g) = g E(x, g)``.

    Attributes:
        matrix: g
        decomposition: Jordan data of g
    """

    def __init__(self, g: np.ndarray | list, tol: float = 1e-8):
        self.matrix = _as_square(g, "MatrixPower")
        self.decomposition = jordan_real(self.matrix, tol)

    def __call__(self, x: float) -> np.ndarray:
        d = self.decomposition
        if d.exact is not None and _is_integer(x):
            return self._exact_power(int(x))

        jx = np.zeros((d.n, d.n))
        for start, size, lam in d.blocks():
            jx[start : start + size, start : start + size] = block_power(lam, size, x)
        return d.transform_inverse @ jx @ d.transform

    def _exact_power(self, m: int) -> np.ndarray:
        p, eigenvalues = self.decomposition.exact
        jm = sympy.zeros(p.shape[0], p.shape[0])
        for (start, size, _), lam in zip(self.decomposition.blocks(), eigenvalues):
            for j in range(size):
                coef = sympy.binomial(m, j) * lam ** (m - j)
                for i in range(size - j):
                    jm[start + i, start + i + j] = coef
        return np.array((p * jm * p.inv()).tolist(), dtype=float)


def real_power(g: np.ndarray | list, x: float, tol: float = 1e-8) -> np.ndarray:
    """The real power E(x, g) of a matrix in GL+.

    Computed blockwise from the Jordan decomposition as
    ``h⁻¹ [⊕ exp(x ln λ_i) Σ_j C(x, j) λ_i^-j J^j] h``.

    Args:
        g: square matrix in GL+
        x: real exponent
        tol: tolerance passed to :func:`jordan_real`

    Returns:
        E(x, g)

    See Also:
        :class:`MatrixPower` for repeated evaluation
    """
    return MatrixPower(g, tol)(x)
