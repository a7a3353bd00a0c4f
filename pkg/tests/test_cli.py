import json
import math

import pytest
from hypothesis import given, settings, strategies as st

from frontlab import cli
from frontlab.errors import ConfigurationError
from frontlab.speed_lab import SweepRecord


def run(capsys, *argv):
    code = cli.run(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def write(tmp_path, text, name="c.cfg"):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


def test_minimal_config(tmp_path):
    cfg = cli.load_config(write(tmp_path, "flow = cellular\np = 1,0\nA = 8,16\n"))
    assert cfg.flow == "cellular" and cfg.p == (1.0, 0.0) and cfg.A_list == [8.0, 16.0]
    assert cfg.sl == 1.0 and cfg.solver.n == 256 and cfg.n_seeds == 100


def test_inline_params_and_alias(tmp_path):
    cfg = cli.load_config(write(tmp_path, "flow = catseye delta=0.5\n"))
    assert cfg.flow == "cats_eye" and cfg.params == {"delta": 0.5}
    cfg = cli.load_config(write(tmp_path, "flow = cats_eye\n[params]\ndelta = 0.25\n[solver]\nn = 128\n"))
    assert cfg.params == {"delta": 0.25} and cfg.solver.n == 128


def test_validation_lists_everything(tmp_path):
    with pytest.raises(ConfigurationError) as e:
        cli.load_config(write(tmp_path, "flow = cellular\np = 0,0\nA = 4,2\nspeed = 3\n"))
    msg = str(e.value)
    assert "p must be nonzero" in msg and "strictly increasing" in msg and "'speed'" in msg


def test_parse_error_position(tmp_path):
    with pytest.raises(cli.ConfigParseError) as e:
        cli.load_config(write(tmp_path, "flow = cellular\n  [solver\n"))
    assert (e.value.line, e.value.col) == (2, 10)
    with pytest.raises(cli.ConfigParseError) as e:
        cli.load_config(write(tmp_path, "flow = cellular\njunk\n"))
    assert e.value.line == 2


def rec(**kw):
    base = dict(flow="shear", params="amplitude=1.0", p1=1.0, p2=0.0, sl=1.0, A=4.0, n=64,
                cfl=0.4, t_final=0.5, sT=4.9, slope_residual=1e-5, converged=True, wall_ms=12.5)
    base.update(kw)
    return SweepRecord(**base)


def test_records_empty_and_header(tmp_path):
    p = tmp_path / "r.csv"
    cli.write_records([], p)
    assert p.read_bytes() == (",".join(cli.HEADER) + "\n").encode()


def test_records_roundtrip(tmp_path):
    p = tmp_path / "r.csv"
    rs = [rec(A=float(a), sT=math.pi * a) for a in range(1, 6)]
    cli.write_records(rs, p)
    text = p.read_bytes()
    assert text.count(b"\n") == 6 and b"\r" not in text and text.endswith(b"\n")
    assert cli.read_records(p) == rs


@settings(max_examples=50, deadline=None)
@given(st.floats(allow_nan=False, allow_infinity=False), st.floats(0, 1e6), st.booleans())
def test_roundtrip_bit_exact(sT, A, conv):
    import tempfile, os
    r = rec(sT=sT, A=A, converged=conv)
    with tempfile.TemporaryDirectory() as d:
        p = os.path.join(d, "r.csv")
        cli.write_records([r], p)
        back = cli.read_records(p)[0]
    assert back == r


def test_speed_zero(capsys):
    code, out, _ = run(capsys, "speed", "--flow", "zero", "--p", "0,1", "--A", "100", "--grid", "64")
    assert code == 0
    d = json.loads(out)
    assert abs(d["sT"] - 1) <= 2 / 64 and out.count("\n") == 1


def test_usage_errors(capsys):
    assert run(capsys, "bogus")[0] == 2
    assert run(capsys, "speed", "--flow", "nope")[0] == 2
    assert run(capsys, "speed", "--flow", "zero", "--p", "0,0")[0] == 2
    assert run(capsys, "fit")[0] == 2
    code, _, err = run(capsys, "speed", "--grid", "100")
    assert code == 2 and "power of two" in err


def test_domain_error(capsys, tmp_path):
    code, _, err = run(capsys, "fit", "--in", str(tmp_path / "missing.csv"))
    assert code == 1 and "missing.csv" in err


def test_sweep_fit_pipeline(capsys, tmp_path):
    out = tmp_path / "s.csv"
    code, txt, _ = run(capsys, "sweep", "--flow", "shear", "--p", "1,0", "--A", "4,8,16,32",
                       "--grid", "64", "--no-timing", "--out", str(out))
    assert code == 0 and json.loads(txt)["rows"] == 4
    assert len(out.read_text().splitlines()) == 5
    code, txt, _ = run(capsys, "fit", "--in", str(out))
    assert code == 0 and json.loads(txt)["selected"] == "linear"


def test_jobs_byte_identical(capsys, tmp_path, monkeypatch):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["sweep", "--flow", "shear", "--A", "1,2,3", "--grid", "64", "--t-final", "0.2", "--no-timing"]
    assert run(capsys, *args, "--jobs", "1", "--out", str(a))[0] == 0
    monkeypatch.setenv("FRONTLAB_JOBS", "3")
    assert run(capsys, *args, "--out", str(b))[0] == 0
    assert a.read_bytes() == b.read_bytes()


def test_other_commands(capsys, tmp_path):
    code, out, _ = run(capsys, "integrals", "--A", "10,1000")
    assert code == 0 and len(json.loads(out)["I"]) == 2
    code, out, _ = run(capsys, "mintime", "--flow", "zero", "--A", "1", "--grid", "64")
    assert code == 0 and json.loads(out)["T"] == [pytest.approx(1.0)]
    code, out, _ = run(capsys, "validate", "--flow", "cellular")
    assert code == 0 and json.loads(out)["stagnation_points"] == 8
    code, out, _ = run(capsys, "orbits", "--flow", "shear", "--n-seeds", "4", "--t-max", "3",
                       "--out", str(tmp_path / "o.csv"))
    assert code == 0 and json.loads(out)["case"] == "Case1"
    assert (tmp_path / "o.csv").read_text().startswith("seed,t,x1,x2\n")
    code, out, _ = run(capsys, "scan", "--flow", "zero", "--A", "2", "--grid", "64",
                       "--t-final", "0.2", "--plot", str(tmp_path / "scan.dat"))
    assert code == 0 and json.loads(out)["audit_passed"]


def test_config_file_with_flag_override(capsys, tmp_path):
    p = write(tmp_path, "flow = zero\np = 1,0\nA = 5\n[solver]\nn = 64\nt_final = 0.2\n")
    code, out, _ = run(capsys, "speed", "--config", str(p), "--p", "0,1")
    d = json.loads(out)
    assert code == 0 and d["p"] == [0.0, 1.0] and d["t_final"] == 0.2
