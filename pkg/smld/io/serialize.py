"""JSON codecs for matrices, maps, germs, product systems and varieties.

Decoders take the path of the value inside the document and report it in
:class:`FormatError` messages, e.g. ``.system.factors[1].M``.
"""

from fractions import Fraction
from numbers import Real

import numpy as np

from smld.exppoly import ExpPoly
from smld.germs import Germ
from smld.interpolation import (
    Factor,
    MonomialFactor,
    ProductSystem,
    ProjectiveFactor,
    UnivariateFactor,
)
from smld.monomial import MonomialMap
from smld.returnset import Variety


class FormatError(ValueError):
    """A document does not match the expected schema.

    Attributes:
        path: location of the offending value
    """

    def __init__(self, path: str, message: str):
        super().__init__(f"{path or '.'}: {message}")
        self.path = path


def _is_number(x: object) -> bool:
    return isinstance(x, Real) and not isinstance(x, bool)


def require(data: dict, key: str, path: str = "") -> object:
    if not isinstance(data, dict):
        raise FormatError(path, "expected an object")
    if key not in data:
        raise FormatError(f"{path}.{key}", "missing required field")
    return data[key]


def vector_from_list(data: object, path: str = "") -> np.ndarray:
    if not isinstance(data, list) or len(data) == 0:
        raise FormatError(path, "expected a non-empty list of numbers")
    for i, x in enumerate(data):
        if not _is_number(x):
            raise FormatError(f"{path}[{i}]", "expected a number")
    return np.array(data, dtype=float)


def matrix_from_list(data: object, path: str = "") -> np.ndarray:
    """Row-major square matrix."""
    if not isinstance(data, list) or len(data) == 0:
        raise FormatError(path, "expected a non-empty list of rows")
    rows = [vector_from_list(row, f"{path}[{i}]") for i, row in enumerate(data)]
    if any(row.size != len(rows) for row in rows):
        raise FormatError(path, "matrix is not square")
    return np.stack(rows)


def matrix_to_list(m: np.ndarray) -> list[list[float]]:
    return np.asarray(m, dtype=float).tolist()


def germ_from_list(data: object, path: str = "", order: int | None = None) -> Germ:
    """Coefficients c_1, c_2, ... as numbers or fraction strings like "1/3"."""
    if not isinstance(data, list) or len(data) == 0:
        raise FormatError(path, "expected a non-empty list of coefficients")
    for i, c in enumerate(data):
        if isinstance(c, str):
            try:
                Fraction(c)
            except ValueError:
                raise FormatError(f"{path}[{i}]", f"invalid fraction '{c}'")
        elif not _is_number(c):
            raise FormatError(f"{path}[{i}]", "expected a number or fraction string")
    return Germ(data, order=order)


def germ_to_list(germ: Germ) -> list[float | str]:
    values = germ.to_list()
    while len(values) > 1 and values[-1] == 0:
        values.pop()
    return values


def monomial_from_dict(data: object, path: str = "") -> MonomialMap:
    m = matrix_from_list(require(data, "M", path), f"{path}.M")
    scale = vector_from_list(require(data, "lambda", path), f"{path}.lambda")
    try:
        return MonomialMap(m, scale)
    except ValueError as e:
        raise FormatError(path, str(e))


def monomial_to_dict(map: MonomialMap) -> dict:
    return {"M": map.exponents.tolist(), "lambda": map.scale.tolist()}


def factor_from_dict(data: object, path: str = "") -> Factor:
    kind = require(data, "kind", path)
    try:
        if kind == "germ":
            coeffs = require(data, "coeffs", path)
            order = data.get("order", None)
            return UnivariateFactor(germ_from_list(coeffs, f"{path}.coeffs", order))
        if kind == "monomial":
            return MonomialFactor(monomial_from_dict(data, path))
        if kind == "projective":
            h = matrix_from_list(require(data, "h", path), f"{path}.h")
            return ProjectiveFactor(h)
    except ValueError as e:
        if isinstance(e, FormatError):
            raise
        raise FormatError(path, str(e))
    raise FormatError(f"{path}.kind", f"unknown factor kind '{kind}'")


def factor_to_dict(factor: Factor) -> dict:
    if isinstance(factor, UnivariateFactor):
        return {"kind": "germ", "coeffs": germ_to_list(factor.germ)}
    if isinstance(factor, MonomialFactor):
        return {"kind": "monomial", **monomial_to_dict(factor.map)}
    if isinstance(factor, ProjectiveFactor):
        return {"kind": "projective", "h": matrix_to_list(factor.matrix)}
    raise ValueError(f"factor_to_dict: unknown factor {factor!r}")


def system_from_dict(
    data: object, path: str = ""
) -> tuple[ProductSystem, np.ndarray | None]:
    """Product system and, if present, its starting point ``a``."""
    factors = require(data, "factors", path)
    if not isinstance(factors, list) or len(factors) == 0:
        raise FormatError(f"{path}.factors", "expected a non-empty list")
    system = ProductSystem(
        [factor_from_dict(f, f"{path}.factors[{i}]") for i, f in enumerate(factors)]
    )
    a = None
    if "a" in data:
        a = vector_from_list(data["a"], f"{path}.a")
        if a.size != system.dimension:
            raise FormatError(
                f"{path}.a", f"expected {system.dimension} coordinates, got {a.size}"
            )
    return system, a


def system_to_dict(system: ProductSystem, a: np.ndarray | None = None) -> dict:
    data: dict = {"factors": [factor_to_dict(f) for f in system.factors]}
    if a is not None:
        data["a"] = np.asarray(a, dtype=float).tolist()
    return data


def variety_from_dict(data: object, path: str = "") -> Variety:
    terms = require(data, "terms", path)
    if not isinstance(terms, list) or len(terms) == 0:
        raise FormatError(f"{path}.terms", "expected a non-empty list")
    parsed = []
    for i, term in enumerate(terms):
        p = f"{path}.terms[{i}]"
        exponents = require(term, "exponents", p)
        c = require(term, "c", p)
        if not isinstance(exponents, list) or not all(
            isinstance(e, int) and not isinstance(e, bool) and e >= 0
            for e in exponents
        ):
            raise FormatError(f"{p}.exponents", "expected non-negative integers")
        if not _is_number(c):
            raise FormatError(f"{p}.c", "expected a number")
        parsed.append((exponents, c))
    try:
        return Variety(parsed)
    except ValueError as e:
        raise FormatError(path, str(e))


def variety_to_dict(variety: Variety) -> dict:
    return {"terms": [{"exponents": list(e), "c": float(c)} for e, c in variety.terms]}


def exppoly_from_list(data: object, path: str = "") -> ExpPoly:
    if not isinstance(data, list):
        raise FormatError(path, "expected a list of terms")
    for i, term in enumerate(data):
        for key in ["c", "mu", "d"]:
            if not _is_number(require(term, key, f"{path}[{i}]")):
                raise FormatError(f"{path}[{i}].{key}", "expected a number")
    return ExpPoly.from_list(data)


def recurrence_from_dict(data: object, path: str = "") -> tuple[list, list]:
    """Coefficients c_1..c_k and initial values a_0..a_(k-1)."""
    coeffs = vector_from_list(require(data, "coeffs", path), f"{path}.coeffs")
    init = vector_from_list(require(data, "init", path), f"{path}.init")
    if coeffs.size != init.size:
        raise FormatError(path, "coeffs and init must have the same length")
    return list(data["coeffs"]), list(data["init"])
