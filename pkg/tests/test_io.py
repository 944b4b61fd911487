from pathlib import Path

import numpy as np
import pytest

from smld.germs import Germ
from smld.interpolation import (
    MonomialFactor,
    ProjectiveFactor,
    UnivariateFactor,
)
from smld.io.archive import flatten_dict, load_archive, save_archive
from smld.io.serialize import (
    FormatError,
    exppoly_from_list,
    factor_from_dict,
    factor_to_dict,
    germ_from_list,
    germ_to_list,
    matrix_from_list,
    recurrence_from_dict,
    system_from_dict,
    system_to_dict,
    variety_from_dict,
    variety_to_dict,
)
from smld.io.text import read_orbit_csv, write_orbit_csv
from smld.matrix_power import SpectrumError
from smld.monomial import NotStrong

system_document = {
    "factors": [
        {"kind": "germ", "coeffs": ["1/2", 1]},
        {"kind": "monomial", "M": [[2, 1], [1, 1]], "lambda": [1.0, -1.0]},
        {"kind": "projective", "h": [[1.0, 0.0], [1.0, 1.0]]},
    ],
    "a": [1.0, 0.5, -0.5, 1.0],
}


def test_io_orbit_csv(tmp_path: Path):
    orbit = np.array([[1.0, 0.5], [0.5, 1.0 / 3.0], [0.25, 0.1]])
    values = np.array([0.0, 1e-300, -2.5])
    path = tmp_path.joinpath("orbit.csv")
    write_orbit_csv(path, orbit, values)

    lines = path.read_text().splitlines()
    assert lines[0].startswith("# smld orbit")
    assert lines[1] == "n,x1,x2,H"
    assert lines[2].startswith("0,1,0.5,")
    assert len(lines) == 5

    result, result_values = read_orbit_csv(path)
    assert np.all(result == orbit)
    assert np.all(result_values == values)

    write_orbit_csv(path, orbit[:, :1])
    result, result_values = read_orbit_csv(path)
    assert result.shape == (3, 1)
    assert result_values is None


def test_io_matrix_from_list():
    assert np.all(matrix_from_list([[1, 2], [3, 4]]) == [[1.0, 2.0], [3.0, 4.0]])
    with pytest.raises(FormatError, match=r"^.g: matrix is not square"):
        matrix_from_list([[1, 2], [3]], ".g")
    with pytest.raises(FormatError, match=r"^.g\[1\]\[0\]: expected a number"):
        matrix_from_list([[1, 2], ["a", 4]], ".g")
    with pytest.raises(FormatError):
        matrix_from_list([], ".g")


def test_io_germ():
    germ = germ_from_list(["1/3", 0.5], ".germ")
    assert germ.exact
    assert germ_to_list(germ) == ["1/3", 0.5]
    assert germ_to_list(Germ([0])) == [0.0]
    assert germ_from_list([1, 1], order=4).order == 4

    with pytest.raises(FormatError, match=r"^.germ\[0\]: invalid fraction"):
        germ_from_list(["1/x"], ".germ")
    with pytest.raises(FormatError, match=r"^.germ\[1\]"):
        germ_from_list([1, True], ".germ")
    with pytest.raises(FormatError):
        germ_from_list([], ".germ")


def test_io_system():
    system, a = system_from_dict(system_document, ".system")
    assert system.dimension == 4
    assert isinstance(system.factors[0], UnivariateFactor)
    assert isinstance(system.factors[1], MonomialFactor)
    assert isinstance(system.factors[2], ProjectiveFactor)
    assert np.all(a == [1.0, 0.5, -0.5, 1.0])

    document = system_to_dict(system, a)
    assert document["factors"][0] == {"kind": "germ", "coeffs": [0.5, 1.0]}
    assert document["factors"][1] == system_document["factors"][1]
    assert document["a"] == system_document["a"]

    system, a = system_from_dict({"factors": system_document["factors"][:1]})
    assert a is None
    assert factor_to_dict(system.factors[0])["kind"] == "germ"


def test_io_system_errors():
    with pytest.raises(FormatError, match=r"^.system.factors: missing"):
        system_from_dict({}, ".system")
    with pytest.raises(FormatError, match=r"^.system.factors: expected"):
        system_from_dict({"factors": []}, ".system")
    document = {"factors": [{"kind": "germ", "coeffs": [0.5]}], "a": [1, 2]}
    with pytest.raises(FormatError, match=r"^.system.a: expected 1 coordinates"):
        system_from_dict(document, ".system")
    with pytest.raises(FormatError, match=r"^.f.kind: unknown factor kind"):
        factor_from_dict({"kind": "rational"}, ".f")
    with pytest.raises(FormatError, match=r"^.f.M"):
        factor_from_dict({"kind": "monomial", "M": [[1, 2]], "lambda": [1]}, ".f")
    with pytest.raises(FormatError, match=r"^.f: MonomialMap"):
        factor_from_dict(
            {"kind": "monomial", "M": [[1, 1], [1, 1]], "lambda": [1, 1]}, ".f"
        )
    with pytest.raises(FormatError, match=r"^.f: expected an object"):
        factor_from_dict([1, 2], ".f")
    with pytest.raises(NotStrong):
        factor_from_dict({"kind": "monomial", "M": [[0, 1], [1, 1]], "lambda": [1, 1]})
    with pytest.raises(SpectrumError):
        factor_from_dict({"kind": "projective", "h": [[0, -1], [1, 0]]})


def test_io_variety():
    document = {
        "terms": [{"exponents": [2, 0], "c": 1}, {"exponents": [0, 1], "c": -1}]
    }
    variety = variety_from_dict(document, ".variety")
    assert variety.n == 2
    assert variety_to_dict(variety) == {
        "terms": [{"exponents": [2, 0], "c": 1.0}, {"exponents": [0, 1], "c": -1.0}]
    }

    with pytest.raises(FormatError, match=r"^.variety.terms\[0\].exponents"):
        variety_from_dict({"terms": [{"exponents": [-1], "c": 1}]}, ".variety")
    with pytest.raises(FormatError, match=r"^.variety.terms\[0\].c: missing"):
        variety_from_dict({"terms": [{"exponents": [1]}]}, ".variety")
    with pytest.raises(FormatError, match=r"^.variety: Variety"):
        variety_from_dict({"terms": [{"exponents": [1], "c": 0}]}, ".variety")


def test_io_exppoly_and_recurrence():
    ep = exppoly_from_list([{"c": 2.0, "mu": 0.0, "d": 1}], ".ep")
    assert np.isclose(ep(1.5), 3.0)
    with pytest.raises(FormatError, match=r"^.ep\[0\].mu"):
        exppoly_from_list([{"c": 2.0, "mu": "a", "d": 1}], ".ep")

    recurrence = {"coeffs": [3, -2], "init": [7, 6]}
    assert recurrence_from_dict(recurrence) == ([3, -2], [7, 6])
    with pytest.raises(FormatError, match="same length"):
        recurrence_from_dict({"coeffs": [3, -2], "init": [7]}, ".recurrence")


def test_io_flatten_dict():
    assert flatten_dict({"a": {"b": 1, "c": {"d": 2}}, "e": 3}) == {
        "a/b": 1,
        "a/c/d": 2,
        "e": 3,
    }


def test_io_archive(tmp_path: Path):
    path = tmp_path.joinpath("run.h5")
    config = {"mode": "returnset", "n_max": 10}
    report = {
        "modulus": 2,
        "exceptional": [1],
        "progressions": [{"residue": 0, "start": 4}],
        "certified": [True, False],
        "verification": {"passed": True, "max_deviation": 0.5, "errors": []},
        "value": None,
        "label": "Evens",
    }
    orbit = np.linspace(0.0, 1.0, 12).reshape(6, 2)
    save_archive(path, config, report, orbit, orbit[:, 0])

    data = load_archive(path)
    assert data["config"] == config
    assert data["report"]["modulus"] == 2
    assert data["report"]["exceptional"] == [1]
    assert data["report"]["progressions"] == [{"residue": 0, "start": 4}]
    assert data["report"]["verification/passed"] is True
    assert data["report"]["verification/max_deviation"] == 0.5
    assert data["report"]["verification/errors"] == []
    assert data["report"]["value"] is None
    assert data["report"]["label"] == "Evens"
    assert np.all(data["orbit"] == orbit)
    assert np.all(data["values"] == orbit[:, 0])

    save_archive(path, config, {"zeros": [3]})
    data = load_archive(path)
    assert data["orbit"] is None
    assert data["report"] == {"zeros": [3]}
