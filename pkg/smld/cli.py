"""Batch jobs: parsing json job documents, running them and rendering reports."""

import json
import logging
import math
from pathlib import Path

import numpy as np

from smld.errors import ContractError, InvariantError, SMLDError
from smld.exppoly import recurrence_zero_set
from smld.germs import (
    Germ,
    abel_coordinate,
    boettcher,
    classify_germ,
    is_involution,
    koenigs,
    square_germ,
)
from smld.interpolation import ProductSystem, build_bundle, verify_bundle
from smld.io.archive import save_archive
from smld.io.serialize import (
    FormatError,
    germ_from_list,
    germ_to_list,
    matrix_from_list,
    recurrence_from_dict,
    system_from_dict,
    variety_from_dict,
)
from smld.io.text import write_orbit_csv
from smld.matrix_power import MatrixPower
from smld.returnset import Variety, return_set, trichotomy_check

logger = logging.getLogger(__name__)

modes = ["matpow", "linearize", "orbit", "returnset", "recseq-zeros", "trichotomy"]

required_fields = {
    "matpow": ["g", "x"],
    "linearize": ["germ"],
    "orbit": ["system", "a", "n_max"],
    "returnset": ["system", "a", "variety", "n_max"],
    "recseq-zeros": ["recurrence", "n_max"],
    "trichotomy": ["system", "a", "variety", "n_max"],
}

default_x_max = 10.0
default_m_max = 20
functional_samples = 16

exit_codes = {"ok": 0, "parse": 2, "validation": 3, "contract": 4, "invariant": 5}


class ParseError(SMLDError):
    """The job document is not valid json."""


class ValidationError(SMLDError):
    """The job document does not match the schema."""


class JobConfig(object):
    """A validated job.

    Attributes:
        mode: one of ``modes``
        document: the parsed json document
        system: product system, for system modes
        a: starting point
        variety: H, if given
        n_max: last iteration index
        x_max: end of the interval sampled by the functional equation check
        tol: tolerance, the mode default if None
        seed: seed of random samples
    """

    def __init__(self, mode: str, document: dict):
        self.mode = mode
        self.document = document
        self.system: ProductSystem | None = None
        self.a: np.ndarray | None = None
        self.variety: Variety | None = None
        self.n_max: int | None = None
        self.x_max = default_x_max
        self.tol: float | None = None
        self.seed = 0
        self.m_max = default_m_max
        self.workers: int | None = None

    def __repr__(self) -> str:  # pragma: no cover
        return f"JobConfig({self.mode})"


def _positive_int(document: dict, key: str) -> int:
    value = document[key]
    if not isinstance(value, int) or isinstance(value, bool) or value <= 0:
        raise ValidationError(f".{key}: expected a positive integer")
    return value


def _positive_number(document: dict, key: str) -> float:
    value = document[key]
    if (
        not isinstance(value, (int, float))
        or isinstance(value, bool)
        or not math.isfinite(value)
        or value <= 0
    ):
        raise ValidationError(f".{key}: expected a positive number")
    return float(value)


def parse_config(text: str | bytes) -> JobConfig:
    """Parses and validates a job document.

    Args:
        text: utf-8 json

    Returns:
        the job

    Raises:
        ParseError: malformed json
        ValidationError: a field is missing or invalid, named by its path
    """
    try:
        document = json.loads(text)
    except (json.JSONDecodeError, UnicodeDecodeError) as e:
        raise ParseError(f"parse_config: {e}") from e
    if not isinstance(document, dict):
        raise ValidationError(".: expected a json object")

    mode = document.get("mode")
    if mode not in modes:
        raise ValidationError(f".mode: expected one of {', '.join(modes)}")
    if "a" not in document and isinstance(document.get("system"), dict):
        if "a" in document["system"]:
            document = {**document, "a": document["system"]["a"]}
    for key in required_fields[mode]:
        if key not in document:
            raise ValidationError(f".{key}: missing required field")

    config = JobConfig(mode, document)
    try:
        if "n_max" in document:
            config.n_max = _positive_int(document, "n_max")
        if "m_max" in document:
            config.m_max = _positive_int(document, "m_max")
        if "order" in document:
            _positive_int(document, "order")
        if "workers" in document:
            config.workers = _positive_int(document, "workers")
        if "tol" in document:
            config.tol = _positive_number(document, "tol")
        if "x_max" in document:
            config.x_max = _positive_number(document, "x_max")
        if "seed" in document:
            seed = document["seed"]
            if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
                raise ValidationError(".seed: expected a non-negative integer")
            config.seed = seed

        if mode == "matpow":
            matrix_from_list(document["g"], ".g")
            if not isinstance(document["x"], (int, float)) or isinstance(
                document["x"], bool
            ):
                raise ValidationError(".x: expected a number")
        elif mode == "linearize":
            germ_from_list(document["germ"], ".germ", document.get("order"))
            if document.get("side", 1) not in (1, -1):
                raise ValidationError(".side: expected 1 or -1")
        elif mode == "recseq-zeros":
            recurrence_from_dict(document["recurrence"], ".recurrence")

        if "system" in document:
            fields = {k: v for k, v in document["system"].items() if k != "a"}
            config.system, _ = system_from_dict(fields, ".system")
            config.a = _point(document["a"], config.system)
        if "variety" in document:
            config.variety = variety_from_dict(document["variety"], ".variety")
            system = config.system
            if system is not None and config.variety.n != system.dimension:
                raise ValidationError(
                    f".variety: expected {system.dimension} variables, "
                    f"got {config.variety.n}"
                )
    except FormatError as e:
        raise ValidationError(str(e)) from e
    except AttributeError as e:
        raise ValidationError(".system: expected an object") from e
    return config


def _point(data: object, system: ProductSystem) -> np.ndarray:
    if not isinstance(data, list) or not all(
        isinstance(x, (int, float)) and not isinstance(x, bool) for x in data
    ):
        raise ValidationError(".a: expected a list of numbers")
    if len(data) != system.dimension:
        raise ValidationError(
            f".a: expected {system.dimension} coordinates, got {len(data)}"
        )
    return np.array(data, dtype=float)


def _number(x: float) -> str:
    if not math.isfinite(x):
        return "null"
    return format(x, ".17g")


def render(value: object) -> str:
    """Deterministic json: sorted keys, floats with 17 significant digits."""
    if isinstance(value, dict):
        items = [
            json.dumps(str(k)) + ": " + render(v) for k, v in sorted(value.items())
        ]
        return "{" + ", ".join(items) + "}"
    if isinstance(value, (list, tuple, np.ndarray)):
        return "[" + ", ".join(render(v) for v in value) + "]"
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return _number(float(value))
    if value is None:
        return "null"
    return json.dumps(str(value))


def _run_matpow(config: JobConfig) -> dict:
    g = matrix_from_list(config.document["g"], ".g")
    power = MatrixPower(g, tol=config.tol or 1e-8)
    d = power.decomposition
    return {
        "power": power(config.document["x"]),
        "partition": d.partition,
        "eigenvalues": [float(x) for x in d.eigenvalues],
        "exact": d.exact is not None,
    }


def _run_linearize(config: JobConfig) -> dict:
    doc = config.document
    germ = germ_from_list(doc["germ"], ".germ", doc.get("order"))
    fpc = classify_germ(germ)
    value = None if fpc.value is None else float(fpc.value)
    report: dict = {"class": fpc.kind, "value": value, "order": germ.order}

    if fpc.kind == "hyperbolic":
        report["alpha"] = germ_to_list(koenigs(germ))
    elif fpc.kind == "superattracting":
        alpha, sigma = boettcher(germ)
        report.update({"alpha": germ_to_list(alpha), "sigma": sigma})
    elif fpc.kind == "indifferent":
        if germ == Germ.identity(germ.order) or is_involution(germ):
            report["period"] = 1 if fpc.value == 1 else 2
            return report
        if fpc.value == -1:
            germ = square_germ(germ)
            report["square"] = germ_to_list(germ)
        psi = abel_coordinate(germ, doc.get("side", 1), tol=config.tol or 1e-8)
        xs = psi.side * np.linspace(psi.x_max / 32.0, psi.x_max, 32)
        report.update(
            {
                "contact": psi.contact,
                "leading": psi.leading,
                "x_max": psi.x_max,
                "max_defect": max(abs(psi(psi.step(x)) - psi(x) - 1.0) for x in xs),
            }
        )
    return report


def _run_orbit(config: JobConfig) -> dict:
    tol = config.tol or 1e-8
    bundle = build_bundle(config.system, config.a)
    verification = verify_bundle(bundle, m_max=config.m_max, tol=tol)

    rng = np.random.default_rng(config.seed)
    defect = 0.0
    for x in rng.uniform(0.0, config.x_max, functional_samples):
        for j in range(bundle.modulus):
            z = bundle.evaluate(j, x)
            for _ in range(bundle.modulus):
                z = config.system.apply(z)
            defect = max(defect, float(np.max(np.abs(bundle.evaluate(j, x + 1) - z))))
    return {
        "modulus": bundle.modulus,
        "transient": bundle.transient,
        "base_point": bundle.base_point,
        "verification": verification.to_dict(),
        "functional_equation": defect,
        "passed": verification.passed and defect <= tol,
    }


def _run_returnset(config: JobConfig) -> dict:
    decomposition = return_set(
        config.system,
        config.a,
        config.variety,
        config.n_max,
        tol=config.tol or 1e-10,
        workers=config.workers,
    )
    return decomposition.to_dict()


def _run_trichotomy(config: JobConfig) -> dict:
    label, decomposition = trichotomy_check(
        config.system, config.a, config.variety, config.n_max, tol=config.tol or 1e-10
    )
    return {"label": label, "decomposition": decomposition.to_dict()}


def _run_recseq(config: JobConfig) -> dict:
    coeffs, init = recurrence_from_dict(config.document["recurrence"], ".recurrence")
    zeros = recurrence_zero_set(coeffs, init, config.n_max, tol=config.tol or 1e-10)
    return {"zeros": zeros}


runners = {
    "matpow": _run_matpow,
    "linearize": _run_linearize,
    "orbit": _run_orbit,
    "returnset": _run_returnset,
    "recseq-zeros": _run_recseq,
    "trichotomy": _run_trichotomy,
}


def run(
    config: JobConfig,
    orbit_out: Path | str | None = None,
    archive: Path | str | None = None,
) -> tuple[dict, int]:
    """Runs a job.

    Args:
        config: validated job
        orbit_out: path for the orbit csv of system modes
        archive: path for an hdf5 archive of the run

    Returns:
        the report and the exit code, 0 on success, 4 for contract and 5 for
        invariant errors
    """
    logger.info(f"running {config.mode} job")
    try:
        report = runners[config.mode](config)
    except ContractError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return {"error": str(e), "type": type(e).__name__}, exit_codes["contract"]
    except InvariantError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return {"error": str(e), "type": type(e).__name__}, exit_codes["invariant"]

    orbit, values = None, None
    if config.system is not None and (orbit_out is not None or archive is not None):
        n_max = config.n_max if config.n_max is not None else default_m_max
        try:
            orbit = config.system.orbit(config.a, n_max)
        except ContractError as e:
            logger.error(f"{type(e).__name__}: {e}")
            return {"error": str(e), "type": type(e).__name__}, exit_codes["contract"]
        if config.variety is not None:
            values = config.variety(orbit)
        if orbit_out is not None:
            write_orbit_csv(orbit_out, orbit, values)
    if archive is not None:
        save_archive(archive, config.document, report, orbit, values)
        logger.info(f"archived run to '{archive}'")
    return report, exit_codes["ok"]
