"""Brute-force hit sets {(m, n) : H(g1^m g2^n a) = 0} of two commuting maps."""

import argparse
import itertools

import numpy as np

from smld.matrix_power import MatrixPower
from smld.returnset import Variety


def hit_set(
    g1: np.ndarray,
    g2: np.ndarray,
    a: np.ndarray,
    H: Variety,
    n_max: int,
    tol: float = 1e-10,
) -> np.ndarray:
    """All (m, n) in [0, n_max]^2 with g1^m g2^n a on the variety.

    Returns:
        array of shape (k, 2), sorted
    """
    if not np.allclose(g1 @ g2, g2 @ g1):
        raise ValueError("hit_set: maps do not commute.")
    p1, p2 = MatrixPower(g1), MatrixPower(g2)
    points = np.array(
        [p1(m) @ p2(n) @ a for m, n in itertools.product(range(n_max + 1), repeat=2)]
    )
    hits = H.hits(points, tol)
    return np.argwhere(hits.reshape(n_max + 1, n_max + 1))


def interpolation_defect(
    g1: np.ndarray, g2: np.ndarray, a: np.ndarray, hits: np.ndarray
) -> float:
    """Deviation of E(x, g1) E(y, g2) a from the iterates at the hits."""
    p1, p2 = MatrixPower(g1), MatrixPower(g2)
    defect = 0.0
    for m, n in hits:
        iterate = np.linalg.matrix_power(g1, m) @ np.linalg.matrix_power(g2, n) @ a
        value = p1(float(m)) @ p2(float(n)) @ a
        scale = 1.0 + np.max(np.abs(iterate))
        defect = max(defect, float(np.max(np.abs(value - iterate)) / scale))
    return defect


if __name__ == "__main__":
    parser = argparse.ArgumentParser()
    parser.add_argument("--n-max", type=int, default=12, help="Last index per map.")
    parser.add_argument("--tol", type=float, default=1e-10, help="Hit tolerance.")
    args = parser.parse_args()

    # (2 + J) and (3 + J) commute, x / y grows by 1/2 per g1 and 1/3 per g2
    g1 = np.array([[2.0, 1.0], [0.0, 2.0]])
    g2 = np.array([[3.0, 1.0], [0.0, 3.0]])
    a = np.array([0.0, 1.0])
    H = Variety([([1, 0], 1), ([0, 1], -2)])

    hits = hit_set(g1, g2, a, H, args.n_max, args.tol)
    grid = np.full((args.n_max + 1, args.n_max + 1), ".")
    grid[hits[:, 0], hits[:, 1]] = "x"
    print("m \\ n " + " ".join(f"{n % 10}" for n in range(args.n_max + 1)))
    for m, row in enumerate(grid):
        print(f"{m:5d} " + " ".join(row))
    print(f"hits: {hits.tolist()}")
    print(f"interpolation defect: {interpolation_defect(g1, g2, a, hits):.3g}")
