import csv
import io
import json
import math
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from monopole_qm import IntegratorConfig, Params, evolve, saturate
from monopole_qm.cli import EVOLVE_COLUMNS, main
from monopole_qm.config import ConfigError, parse_config

HERE = Path(__file__).parent
CONFIGS = HERE / "configs"
GOLDEN = HERE / "golden"

UNIT = json.loads((CONFIGS / "unit.json").read_text())


def run(argv, capsys):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def write_config(tmp_path, doc, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc, indent=2) if not isinstance(doc, str) else doc)
    return path


def variant(**updates):
    doc = json.loads(json.dumps(UNIT))
    for dotted, value in updates.items():
        node = doc
        keys = dotted.split("__")
        for k in keys[:-1]:
            node = node[k]
        if value is None:
            del node[keys[-1]]
        else:
            node[keys[-1]] = value
    return doc


GOLDEN_CASES = [
    (["stationary", "--config", CONFIGS / "unit.json"], "stationary.csv"),
    (["evolve", "--config", CONFIGS / "unit.json"], "evolve.csv"),
    (["veff", "--config", CONFIGS / "unit.json", "--z-min", "-2", "--z-max", "2", "--n", "9"],
     "veff.csv"),
    (["veff", "--config", CONFIGS / "unit.json", "--z-min", "-2", "--z-max", "2", "--n", "9",
      "--mode", "original", "--format", "json"], "veff_original.json"),
    (["oracle-check", "--config", CONFIGS / "constant.json"], "oracle_check.csv"),
    (["jacobiator", "--config", CONFIGS / "jacobi.json"], "jacobiator.txt"),
]


@pytest.mark.parametrize("argv, golden", GOLDEN_CASES, ids=[g for _, g in GOLDEN_CASES])
def test_golden_bytes(argv, golden, tmp_path, capsys):
    out_path = tmp_path / golden
    code, _, _ = run(argv + ["--output", out_path], capsys)
    assert code == 0
    assert out_path.read_bytes() == (GOLDEN / golden).read_bytes()
    # stdout path produces the same bytes
    code, out, _ = run(argv, capsys)
    assert out.encode() == (GOLDEN / golden).read_bytes()


def test_stationary_roundtrip(capsys):
    code, out, _ = run(["stationary", "--config", CONFIGS / "unit.json"], capsys)
    assert code == 0
    row = next(csv.DictReader(io.StringIO(out)))
    assert float(row["dpx2"]) == pytest.approx(0.15, abs=1e-15)
    assert float(row["dz2"]) == 0.5
    assert float(row["residual"]) < 1e-12
    expected = saturate([0, 0, 0.3, 0.2, 0.2, 0], Params())
    values = [float(row[k]) for k in list(row)[:-1]]
    assert values == expected.as_vector().tolist()


def test_stationary_json(capsys):
    code, out, _ = run(["stationary", "--config", CONFIGS / "unit.json", "--format", "json"], capsys)
    doc = json.loads(out)
    assert doc["moments"]["dpz2"] == 0.5
    assert doc["mode"] == "corrected"


def test_evolve_roundtrip(capsys):
    code, out, _ = run(["evolve", "--config", CONFIGS / "unit.json"], capsys)
    assert code == 0
    lines = out.splitlines()
    assert tuple(lines[0].split(",")) == EVOLVE_COLUMNS
    assert len(EVOLVE_COLUMNS) == 1 + 6 + 21 + 3
    rows = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]])
    traj = evolve(saturate([0, 0, 0.3, 0.2, 0.2, 0], Params()), Params(), IntegratorConfig(1.0))
    idx = list(range(0, len(traj), 10))
    if idx[-1] != len(traj) - 1:
        idx.append(len(traj) - 1)
    assert np.array_equal(rows[:, 0], traj.times[idx])
    assert np.array_equal(rows[:, 1:28], traj.values[idx])
    assert np.array_equal(rows[:, 28:], traj.monitors[idx])


def test_evolve_zero_time(tmp_path, capsys):
    cfg = write_config(tmp_path, variant(integrator__t_end=0))
    code, out, _ = run(["evolve", "--config", cfg], capsys)
    lines = out.splitlines()
    assert code == 0 and len(lines) == 2
    initial = saturate([0, 0, 0.3, 0.2, 0.2, 0], Params()).as_vector()
    assert [float(v) for v in lines[1].split(",")[1:28]] == initial.tolist()


def test_evolve_harmonic_period(capsys):
    code, out, _ = run(["evolve", "--config", CONFIGS / "harmonic.json"], capsys)
    last = out.splitlines()[-1].split(",")
    assert float(last[0]) == 2 * math.pi
    assert float(last[3]) == pytest.approx(1.0, abs=1e-7)


def test_evolve_energy_column(tmp_path, capsys):
    cfg = write_config(tmp_path, variant(integrator__t_end=10, output__stride=1))
    code, out, _ = run(["evolve", "--config", cfg], capsys)
    e = np.array([float(ln.split(",")[28]) for ln in out.splitlines()[1:]])
    assert np.max(np.abs(e - e[0])) / abs(e[0]) < 1e-8


def test_evolve_json(tmp_path, capsys):
    cfg = write_config(tmp_path, variant(integrator__t_end=0.1))
    code, out, _ = run(["evolve", "--config", cfg, "--format", "json"], capsys)
    doc = json.loads(out)
    assert doc["columns"] == list(EVOLVE_COLUMNS)
    assert len(doc["rows"][0]) == 31


def test_veff_flags(capsys):
    code, out, _ = run(["veff", "--config", CONFIGS / "unit.json", "--n", "3"], capsys)
    lines = out.splitlines()
    assert lines[1:4] == ["-1.0,1.5", "0.0,0.5", "1.0,1.5"]
    report = json.loads(lines[-1][2:])
    assert report["minimum_z"] == 0.0
    assert report["kink"]["derivative_jump"] == 1.0
    code, out, _ = run(["veff", "--config", CONFIGS / "unit.json", "--n", "3", "--mode", "original"],
                       capsys)
    assert json.loads(out.splitlines()[-1][2:])["shift_delta_z"] == -0.5


def test_oracle_check_free_particle(capsys):
    code, out, _ = run(["oracle-check", "--config", CONFIGS / "free.json"], capsys)
    assert code == 0
    err = float(out.splitlines()[1].split(",")[0])
    assert err < 1e-13


def test_jacobiator_outputs(tmp_path, capsys):
    code, out, _ = run(["jacobiator", "--config", CONFIGS / "unit.json"], capsys)
    assert out == "-1\n"
    cfg = write_config(tmp_path, variant(field={"type": "constant_z", "b0": 2.5}))
    code, out, _ = run(["jacobiator", "--config", cfg], capsys)
    assert out == "0\n"
    code, out, _ = run(["jacobiator", "--config", CONFIGS / "jacobi.json"], capsys)
    assert out == "-12\n"


def test_output_path_from_config(tmp_path, capsys):
    target = tmp_path / "from_config.csv"
    cfg = write_config(tmp_path, variant(output__path=str(target)))
    code, out, _ = run(["stationary", "--config", cfg], capsys)
    assert code == 0 and out == ""
    assert target.read_bytes() == (GOLDEN / "stationary.csv").read_bytes()


ERROR_CASES = [
    # (id, config document or raw text, argv tail, expected exit, message fragment)
    ("missing-config-flag", None, ["stationary"], 1, "--config"),
    ("unknown-subcommand", UNIT, ["explode"], 1, "invalid choice"),
    ("bad-json", '{\n  "particle": {"mass": 1,,}\n}', ["stationary"], 1, ":2:"),
    ("unknown-key", variant(trap={"omega": 1, "omgea": 2}), ["stationary"], 1, "omgea"),
    ("nonpositive-mass", variant(particle={"mass": 0, "charge": 1}), ["stationary"], 1, "mass"),
    ("bad-field-type", variant(field={"type": "dipole", "mu": 1}), ["stationary"], 1, "field"),
    ("negative-variance", variant(initial_state__moments=[-1] + [0] * 20), ["evolve"], 1,
     "negative variance"),
    ("evolve-no-integrator", variant(integrator=None), ["evolve"], 1, "integrator"),
    ("veff-bad-range", UNIT, ["veff", "--z-min", "1", "--z-max", "-1"], 1, "z-min"),
    ("veff-bad-n", UNIT, ["veff", "--n", "1"], 1, "--n"),
    ("veff-bad-mode", UNIT, ["veff", "--mode", "signed"], 1, "invalid choice"),
    ("oracle-linear-field", UNIT, ["oracle-check"], 1, "constant_z"),
    ("stationary-kink", variant(initial_state__mean__z=0), ["stationary"], 2, "kink"),
    ("stationary-no-trap", variant(trap={"omega": 0}), ["stationary"], 2, "omega"),
    ("veff-no-trap", variant(trap={"omega": 0}), ["veff"], 2, "omega"),
    ("original-negative-field", variant(initial_state__mean__z=-0.3),
     ["stationary", "--mode", "original"], 2, "negative"),
    ("evolve-underflow",
     variant(integrator={"t_end": 1, "rel_tol": 1e-300, "abs_tol": 1e-300, "dt_min": 0.05,
                         "dt_max": 0.1}), ["evolve"], 2, "underflow"),
]


@pytest.mark.parametrize("case", ERROR_CASES, ids=[c[0] for c in ERROR_CASES])
def test_exit_codes(case, tmp_path, capsys):
    _, doc, tail, expected, fragment = case
    argv = [tail[0]]
    if doc is not None:
        argv += ["--config", write_config(tmp_path, doc)]
    argv += tail[1:]
    code, out, err = run(argv, capsys)
    assert code == expected
    assert fragment in err


def test_missing_config_file(capsys):
    code, _, err = run(["stationary", "--config", "/nonexistent/cfg.json"], capsys)
    assert code == 1 and "cannot read" in err


def test_unknown_key_reports_line(tmp_path, capsys):
    text = (CONFIGS / "unit.json").read_text().replace('"hbar": 1,', '"hbar": 1,\n  "hbarr": 2,')
    cfg = write_config(tmp_path, text)
    code, _, err = run(["stationary", "--config", cfg], capsys)
    assert code == 1
    line = text.splitlines().index('  "hbarr": 2,') + 1
    assert f"cfg.json:{line}:" in err


def test_evolve_abort_flushes_partial_output(tmp_path, capsys):
    doc = variant(integrator={"t_end": 1, "rel_tol": 1e-300, "abs_tol": 1e-300, "dt_min": 0.05,
                              "dt_max": 0.1})
    code, out, _ = run(["evolve", "--config", write_config(tmp_path, doc)], capsys)
    lines = out.splitlines()
    assert code == 2
    assert lines[0].startswith("t,x,")
    assert len(lines) == 3
    assert lines[-1] == "# ABORTED t=0.0"


def test_parse_config_defaults():
    cfg = parse_config(json.dumps({"particle": {"mass": 2, "charge": 1}, "trap": {"omega": 1},
                                   "field": {"type": "constant_z", "b0": 1}, "hbar": 0.5}))
    assert cfg.params.mass == 2.0 and cfg.params.hbar == 0.5
    assert cfg.integrator is None and cfg.output_format == "csv" and cfg.stride == 1
    with pytest.raises(ConfigError):
        cfg.initial_state()


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "monopole_qm", "jacobiator", "--config",
                           str(CONFIGS / "unit.json")], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout == "-1\n"
    proc = subprocess.run([sys.executable, "-m", "monopole_qm", "stationary"],
                          capture_output=True, text=True)
    assert proc.returncode == 1
