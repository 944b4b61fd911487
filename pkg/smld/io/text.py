"""Orbit tables as csv."""

import importlib.metadata
import logging
from pathlib import Path

import numpy as np

logger = logging.getLogger(__name__)


def _version() -> str:
    try:
        return importlib.metadata.version("smld")
    except importlib.metadata.PackageNotFoundError:  # pragma: no cover
        return "unknown"


def write_orbit_csv(
    path: Path | str,
    orbit: np.ndarray,
    values: np.ndarray | None = None,
    format: str = "%.17g",
) -> None:
    """Writes an orbit as columns n, x1..xd and optionally H.

    Args:
        path: path to output csv
        orbit: points, shape (n + 1, d)
        values: H at each point
        format: number format of the coordinates
    """
    orbit = np.atleast_2d(np.asarray(orbit, dtype=float))
    columns = ["n"] + [f"x{i + 1}" for i in range(orbit.shape[1])]
    data = np.column_stack([np.arange(orbit.shape[0]), orbit])
    if values is not None:
        columns.append("H")
        data = np.column_stack([data, np.asarray(values, dtype=float)])

    np.savetxt(
        Path(path),
        data,
        delimiter=",",
        comments="",
        header=f"# smld orbit {_version()}\n" + ",".join(columns),
        fmt=["%d"] + [format] * (data.shape[1] - 1),
    )
    logger.info(f"wrote {orbit.shape[0]} orbit points to '{path}'")


def read_orbit_csv(path: Path | str) -> tuple[np.ndarray, np.ndarray | None]:
    """Reads a table written by :func:`write_orbit_csv`.

    Returns:
        orbit and H values, or None if the table has no H column
    """
    path = Path(path)
    with path.open("r") as fp:
        header = [line for line in fp if not line.startswith("#")][0]
    columns = header.strip().split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=2, ndmin=2)
    if columns[-1] == "H":
        return data[:, 1:-1], data[:, -1]
    return data[:, 1:], None
