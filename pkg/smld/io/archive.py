"""Save and restore runs as hdf5 archives."""

import importlib.metadata
import json
from pathlib import Path

import h5py
import numpy as np


def flatten_dict(d: dict, prefix: str = "", sep: str = "/") -> dict:
    flat = {}
    for k, v in d.items():
        newk = prefix + sep + k if prefix else k
        if isinstance(v, dict):
            flat.update(flatten_dict(v, newk, sep))
        else:
            flat[newk] = v
    return flat


def _attribute(value: object) -> object:
    """hdf5 attributes cannot hold None, nested lists or dicts."""
    if value is None or isinstance(value, (list, dict)):
        return json.dumps(value)
    return value


def save_archive(
    path: Path | str,
    config: dict,
    report: dict,
    orbit: np.ndarray | None = None,
    values: np.ndarray | None = None,
) -> None:
    """Stores the job document, its report and the orbit table.

    Args:
        path: path to the archive, overwritten
        config: the job document as parsed json
        report: the report document
        orbit: orbit points, shape (n + 1, d)
        values: H along the orbit
    """
    with h5py.File(path, "w") as h5:
        try:
            h5.attrs["version"] = importlib.metadata.version("smld")
        except importlib.metadata.PackageNotFoundError:  # pragma: no cover
            h5.attrs["version"] = "unknown"
        h5.attrs["config"] = json.dumps(config, sort_keys=True)

        report_group = h5.create_group("report")
        for key, val in flatten_dict(report).items():
            report_group.attrs[key] = _attribute(val)

        if orbit is not None:
            h5.create_dataset("orbit", data=np.asarray(orbit), compression="gzip")
        if values is not None:
            h5.create_dataset("values", data=np.asarray(values), compression="gzip")


def load_archive(path: Path | str) -> dict:
    """Reads an archive written by :func:`save_archive`.

    Returns:
        dict with 'config', 'report' (flattened keys), 'orbit' and 'values'
    """
    with h5py.File(path, "r") as h5:
        report = {}
        for key, val in h5["report"].attrs.items():
            if isinstance(val, str) and (val[:1] in ("[", "{") or val == "null"):
                val = json.loads(val)
            elif isinstance(val, np.generic):
                val = val.item()
            report[key] = val
        return {
            "version": h5.attrs["version"],
            "config": json.loads(h5.attrs["config"]),
            "report": report,
            "orbit": h5["orbit"][:] if "orbit" in h5 else None,
            "values": h5["values"][:] if "values" in h5 else None,
        }
