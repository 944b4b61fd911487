import io
import json
from pathlib import Path

import numpy as np
import pytest

from smld.__main__ import main, parse_args
from smld.cli import ParseError, ValidationError, parse_config, render, run
from smld.io.archive import load_archive
from smld.io.text import read_orbit_csv

x_minus_one = {"terms": [{"exponents": [1], "c": 1}, {"exponents": [0], "c": -1}]}


def job(mode: str, **fields) -> str:
    return json.dumps({"mode": mode, **fields})


def germ_system(*coeffs) -> dict:
    return {"factors": [{"kind": "germ", "coeffs": list(coeffs)}]}


def test_parse_config():
    config = parse_config(job("orbit", system=germ_system(0.5), a=[1.0], n_max=5))
    assert config.mode == "orbit"
    assert config.system.dimension == 1
    assert np.all(config.a == [1.0])
    assert config.n_max == 5
    assert config.tol is None
    assert config.seed == 0

    system = {**germ_system(0.5), "a": [0.25]}
    config = parse_config(job("orbit", system=system, n_max=5, tol=1e-6, seed=3))
    assert np.all(config.a == [0.25])
    assert config.tol == 1e-6
    assert config.seed == 3

    recurrence = {"coeffs": [1], "init": [0]}
    config = parse_config(job("recseq-zeros", recurrence=recurrence, n_max=4))
    assert config.system is None


def test_parse_config_errors():
    with pytest.raises(ParseError):
        parse_config("{")
    with pytest.raises(ValidationError, match=r"^\.: expected a json object"):
        parse_config("[1]")
    with pytest.raises(ValidationError, match=r"^\.mode"):
        parse_config(job("fly"))
    with pytest.raises(ValidationError, match=r"^\.a: missing required field"):
        parse_config(job("orbit", system=germ_system(0.5), n_max=5))
    with pytest.raises(ValidationError, match=r"^\.x: missing required field"):
        parse_config(job("matpow", g=[[2]]))
    with pytest.raises(ValidationError, match=r"^\.x: expected a number"):
        parse_config(job("matpow", g=[[2]], x="1"))
    with pytest.raises(ValidationError, match=r"^\.side"):
        parse_config(job("linearize", germ=[1, -1], side=2))
    with pytest.raises(ValidationError, match=r"^\.order"):
        parse_config(job("linearize", germ=[1, -1], order=0))


@pytest.mark.parametrize("key, value", [("n_max", 0), ("n_max", True), ("n_max", 1.5)])
def test_parse_config_bad_n_max(key: str, value: object):
    document = {"mode": "orbit", "system": germ_system(0.5), "a": [1.0], key: value}
    with pytest.raises(ValidationError, match=r"^\.n_max: expected a positive"):
        parse_config(json.dumps(document))


def test_parse_config_bad_system():
    with pytest.raises(ValidationError, match=r"^\.tol"):
        parse_config(job("orbit", system=germ_system(0.5), a=[1.0], n_max=5, tol=-1))
    with pytest.raises(ValidationError, match=r"^\.system\.factors\[0\]\.kind"):
        parse_config(job("orbit", system={"factors": [{}]}, a=[1.0], n_max=5))
    with pytest.raises(ValidationError, match=r"^\.a: expected 1 coordinates"):
        parse_config(job("orbit", system=germ_system(0.5), a=[1.0, 2.0], n_max=5))
    with pytest.raises(ValidationError, match=r"^\.variety: expected 1 variables"):
        variety = {"terms": [{"exponents": [1, 0], "c": 1}]}
        parse_config(
            job("returnset", system=germ_system(-1), a=[1.0], variety=variety, n_max=5)
        )


def test_render():
    value = {"b": 1, "a": [0.1, float("nan"), True, None, "x"]}
    expected = '{"a": [0.10000000000000001, null, true, null, "x"], "b": 1}'
    assert render(value) == expected
    assert render(np.array([1.5, 2.0])) == "[1.5, 2]"
    assert render({"n": np.int64(3), "f": np.float64(-0.25)}) == '{"f": -0.25, "n": 3}'
    assert render(value) == render(dict(reversed(list(value.items()))))
    assert json.loads(render({"inf": float("inf")})) == {"inf": None}


def test_run_matpow():
    report, code = run(parse_config(job("matpow", g=[[2, 0], [0, 3]], x=0.5)))
    assert code == 0
    assert np.allclose(report["power"], np.diag(np.sqrt([2.0, 3.0])))
    assert np.allclose(sorted(report["eigenvalues"]), [2.0, 3.0])
    assert report["exact"] is True

    report, _ = run(parse_config(job("matpow", g=[[2, 1], [0, 2]], x=3)))
    assert np.all(np.array(report["power"]) == [[8.0, 12.0], [0.0, 8.0]])
    assert report["partition"] == [2]


def test_run_linearize():
    report, code = run(parse_config(job("linearize", germ=[0.5])))
    assert code == 0
    assert report["class"] == "hyperbolic"
    assert report["value"] == 0.5
    assert report["alpha"] == [1.0]

    report, _ = run(parse_config(job("linearize", germ=[0, 1])))
    assert report["class"] == "superattracting"
    assert report["value"] == 2.0
    assert report["alpha"] == [1.0]
    assert report["sigma"] == 1

    report, _ = run(parse_config(job("linearize", germ=[-1])))
    assert report["class"] == "indifferent"
    assert report["period"] == 2

    involution = [(-1) ** k for k in range(1, 9)]  # -x / (1 + x)
    report, _ = run(parse_config(job("linearize", germ=involution, order=8)))
    assert report["period"] == 2
    assert "contact" not in report


def test_run_linearize_parabolic():
    report, code = run(parse_config(job("linearize", germ=[1, -1])))
    assert code == 0
    assert report["class"] == "indifferent"
    assert report["value"] == 1.0
    assert report["contact"] == 1
    assert report["leading"] == -1.0
    assert report["max_defect"] < 1e-6

    report, _ = run(parse_config(job("linearize", germ=[-1, 1])))
    assert report["value"] == -1.0
    assert report["square"][:3] == [1.0, 0.0, -2.0]
    assert report["contact"] == 2


def test_run_orbit():
    config = parse_config(job("orbit", system=germ_system(0.5), a=[1.0], n_max=10))
    report, code = run(config)
    assert code == 0
    assert report["modulus"] == 1
    assert report["transient"] == 0
    assert report["verification"]["passed"]
    assert report["functional_equation"] < 1e-8
    assert report["passed"]


def test_run_returnset(tmp_path: Path):
    config = parse_config(
        job("returnset", system=germ_system(-1), a=[1.0], variety=x_minus_one, n_max=20)
    )
    orbit_out = tmp_path.joinpath("orbit.csv")
    archive = tmp_path.joinpath("run.h5")
    report, code = run(config, orbit_out=orbit_out, archive=archive)
    assert code == 0
    assert report["modulus"] == 2
    assert report["exceptional"] == []
    assert report["progressions"] == [{"residue": 0, "start": 0}]
    assert report["n_max"] == 20

    orbit, values = read_orbit_csv(orbit_out)
    assert orbit.shape == (21, 1)
    assert np.all(orbit[::2, 0] == 1.0)
    assert np.all(orbit[1::2, 0] == -1.0)
    assert np.all(values[::2] == 0.0)

    data = load_archive(archive)
    assert data["config"]["mode"] == "returnset"
    assert data["report"]["modulus"] == 2
    assert data["report"]["progressions"] == [{"residue": 0, "start": 0}]
    assert data["orbit"].shape == (21, 1)


def test_run_returnset_golden():
    variety = {"terms": [{"exponents": [1], "c": 1}, {"exponents": [0], "c": -0.3}]}
    config = parse_config(
        job("returnset", system=germ_system(-1), a=[0.3], variety=variety, n_max=50)
    )
    report, code = run(config)
    assert code == 0
    assert report["modulus"] == 2
    assert report["progressions"] == [{"residue": 0, "start": 0}]
    assert report["exceptional"] == []


def test_run_trichotomy():
    system = germ_system(-1)
    config = parse_config(
        job("trichotomy", system=system, a=[1.0], variety=x_minus_one, n_max=20)
    )
    report, code = run(config)
    assert code == 0
    assert report["label"] == "Evens"
    assert report["decomposition"]["modulus"] == 2


def test_run_recseq():
    recurrence = {"coeffs": [3, -2], "init": [7, 6]}
    config = parse_config(job("recseq-zeros", recurrence=recurrence, n_max=10))
    report, code = run(config)
    assert code == 0
    assert report == {"zeros": [3]}


def test_run_errors():
    config = parse_config(job("orbit", system=germ_system(2), a=[0.1], n_max=5))
    report, code = run(config)
    assert code == 4
    assert report["type"] == "OutsideBasin"
    assert "error" in report

    cat_map = {"kind": "monomial", "M": [[2, 1], [1, 1]], "lambda": [1, 1]}
    cat = {"factors": [cat_map]}
    variety = {"terms": [{"exponents": [1, 0], "c": 1}]}
    config = parse_config(
        job("trichotomy", system=cat, a=[0.5, 0.5], variety=variety, n_max=5)
    )
    report, code = run(config)
    assert code == 4
    assert report["type"] == "UnsupportedSystem"


def test_main(tmp_path: Path, capsys: pytest.CaptureFixture):
    path = tmp_path.joinpath("job.json")
    recurrence = {"coeffs": [3, -2], "init": [7, 6]}
    path.write_text(job("recseq-zeros", recurrence=recurrence, n_max=2))

    assert main(["--config", str(path)]) == 0
    assert json.loads(capsys.readouterr().out) == {"zeros": []}

    assert main(["--config", str(path), "--n-max", "10"]) == 0
    assert json.loads(capsys.readouterr().out) == {"zeros": [3]}


def test_main_stdin(monkeypatch: pytest.MonkeyPatch, capsys: pytest.CaptureFixture):
    text = job("linearize", germ=[0.5])
    monkeypatch.setattr("sys.stdin", io.StringIO(text))
    assert main([]) == 0
    assert json.loads(capsys.readouterr().out)["class"] == "hyperbolic"


def test_main_exit_codes(tmp_path: Path, capsys: pytest.CaptureFixture):
    path = tmp_path.joinpath("job.json")

    path.write_text("{mode")
    assert main(["--config", str(path)]) == 2

    path.write_text(job("orbit", system=germ_system(0.5), n_max=5))
    assert main(["--config", str(path)]) == 3
    assert ".a: missing required field" in capsys.readouterr().err

    path.write_text(job("orbit", system=germ_system(2), a=[0.1], n_max=5))
    assert main(["--config", str(path)]) == 4
    assert json.loads(capsys.readouterr().out)["type"] == "OutsideBasin"

    weak = {"factors": [{"kind": "monomial", "M": [[0, 1], [1, 1]], "lambda": [1, 1]}]}
    path.write_text(job("orbit", system=weak, a=[0.5, 0.5], n_max=5))
    assert main(["--config", str(path)]) == 4


def test_parse_args(tmp_path: Path):
    with pytest.raises(SystemExit):
        parse_args(["--config", str(tmp_path.joinpath("missing.json"))])
    with pytest.raises(SystemExit):
        parse_args(["--tol", "0"])
    with pytest.raises(SystemExit):
        parse_args(["--n-max", "-1"])
    args = parse_args(["--seed", "4", "--archive", "out.h5"])
    assert args.seed == 4
    assert args.archive == Path("out.h5")


def test_main_log_level(
    tmp_path: Path, monkeypatch: pytest.MonkeyPatch, capsys: pytest.CaptureFixture
):
    path = tmp_path.joinpath("job.json")
    path.write_text(job("linearize", germ=[0.5]))

    monkeypatch.setenv("SMLD_LOG", "loud")
    assert main(["--config", str(path)]) == 0
    err = capsys.readouterr().err
    assert "unknown SMLD_LOG level 'loud', using info" in err
    assert "running linearize job" in err

    monkeypatch.setenv("SMLD_LOG", "quiet")
    assert main(["--config", str(path)]) == 0
    assert capsys.readouterr().err == ""
