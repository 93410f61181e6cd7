import csv
import filecmp
import os
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cssim import cli
from cssim import identities as ids
from cssim.config import ConfigError, format_config, load_config, parse_config_text
from cssim.model import ModelParams
from cssim.solver import DataConfig, GridConfig, HypConfig, OutputConfig, RunConfig, TimeConfig, read_checkpoint

CONFIGS = Path(__file__).resolve().parents[1] / "configs"

BASE = """\
[model]
model = {model}
[params]
kappa = 1.0
{mass} = 1.0
[data]
epsilon = {eps}
radius_R = 1.0
[grid]
n = {n}
half_width = {hw}
[time]
t_end = {t_end}
diag_every = 5
{extra}
[output]
out_dir = {out}
"""


def write_cfg(tmp_path, name="c.cfg", model="csh_abelian", eps=0.01, n=48, hw=4.8, t_end=1.0, extra="", out=None):
    mass = "m" if model.startswith("csd") else "v"
    text = BASE.format(model=model, mass=mass, eps=eps, n=n, hw=hw, t_end=t_end, extra=extra,
                       out=out or tmp_path / "out")
    p = tmp_path / name
    p.write_text(text)
    return p


# parsing

finite = lambda lo, hi: st.floats(lo, hi, allow_nan=False, allow_infinity=False)


@st.composite
def run_configs(draw):
    model = draw(st.sampled_from(["csh_abelian", "csh_adjoint_su2", "csh_adjoint_su3", "csd_abelian"]))
    R, t_end = draw(finite(0.1, 3)), draw(finite(0.1, 30))
    n, margin = draw(st.integers(16, 512)), draw(st.integers(0, 6))
    if 2 * margin >= n:
        margin = 0
    hw = (R + t_end + draw(finite(0.01, 5))) / (1 - 2 * margin / n)
    taus = tuple(sorted(draw(st.lists(finite(R * 1.01, R * 1.5), max_size=3))))
    t_need = max([(tau**2 + R**2) / (2 * R) - 2 * R for tau in taus], default=0.0)
    return RunConfig(
        model=model,
        params=ModelParams(model, draw(finite(0.1, 10)), draw(finite(0.01, 5)), draw(st.booleans())),
        data=DataConfig(draw(finite(0, 1)), R, draw(st.sampled_from(["bump", "charged"])), draw(finite(-3, 3))),
        grid=GridConfig(n, hw),
        time=TimeConfig(max(t_end, t_need), draw(finite(0.05, 2)), draw(st.integers(1, 100))),
        hyperboloid=HypConfig(taus, draw(st.integers(2, 99)), draw(st.integers(2, 99)), draw(st.integers(1, 4))),
        output=OutputConfig(draw(st.sampled_from(["out", "out/run 1", "/tmp/x"])), draw(st.booleans())),
        seed=draw(st.integers(0, 2**31)),
        margin_cells=margin,
        escape_tol=draw(finite(1e-12, 1)),
    )


@given(run_configs())
def test_format_parse_round_trip(cfg):
    try:
        cfg.validate()
    except ValueError:
        return  # t_end pushed past the box by a late tau
    text = format_config(cfg)
    assert parse_config_text(text) == cfg
    assert format_config(parse_config_text(text)) == text


def test_shipped_configs_parse():
    for p in sorted(CONFIGS.glob("*.cfg")):
        cfg = load_config(p)
        assert parse_config_text(format_config(cfg)) == cfg


@pytest.mark.parametrize("text, line, msg", [
    ("[model]\nmodel = csh_abelian\n[bogus]\n", 3, "unknown section"),
    ("[model]\nmodel = csh_abelian\n[grid]\nn = 12.5\n", 4, "cannot parse"),
    ("[model]\nmodel = csh_abelian\nfoo = 1\n", 3, "unknown key"),
    ("kappa = 1\n", 1, "outside any section"),
    ("[model]\nmodel = csh_abelian\nmodel = csd_abelian\n", 3, "duplicate key"),
    ("[model]\n\n# comment\njust words\n", 4, "expected key = value"),
    ("[params\n", 1, "malformed section"),
])
def test_parse_errors_carry_line_numbers(text, line, msg):
    with pytest.raises(ConfigError) as e:
        parse_config_text(text, "x.cfg")
    assert f"x.cfg:{line}:" in str(e.value) and msg in str(e.value)


def test_semantic_errors_are_named(tmp_path):
    with pytest.raises(ConfigError, match="missing required keys: .*radius_R"):
        parse_config_text("[model]\nmodel = csh_abelian\n")
    with pytest.raises(ConfigError, match="unknown model"):
        load_config(write_cfg(tmp_path, model="csh_u7"))
    # L < R + t_end is rejected before any work is done
    with pytest.raises(ConfigError, match="half_width"):
        load_config(write_cfg(tmp_path, hw=4.0, t_end=3.5))
    text = write_cfg(tmp_path).read_text().replace("v = 1.0", "v = 1.0\nm = 1.0")
    with pytest.raises(ConfigError, match="does not apply"):
        parse_config_text(text)
    with pytest.raises(ConfigError, match="needs t_end"):
        load_config(write_cfg(tmp_path, extra="[hyperboloid]\ntaus = 5.0"))


# subcommands and exit codes

def test_run_vacuum_exit_zero_and_all_zero(tmp_path, capsys):
    cfg = write_cfg(tmp_path, eps=0.0)
    assert cli.main(["run", str(cfg)]) == cli.EXIT_OK
    with open(tmp_path / "out" / "diagnostics.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert rows
    for r in rows:
        assert all(float(v) == 0 for k, v in r.items() if k not in ("step", "t"))


def test_run_outputs_and_golden_headers(tmp_path):
    cfg = write_cfg(tmp_path, t_end=3.0, n=64, hw=6.4, extra="[hyperboloid]\ntaus = 2.0, 2.5")
    assert cli.main(["run", str(cfg)]) == 0
    lines = (tmp_path / "out" / "diagnostics.csv").read_text().splitlines()
    assert lines[0] == ("step,t,sigma_energy,charge_0,constraint_resid_max,constraint_resid_l2,"
                        "constraint_source_max,b_consistency,sup_decay,sup_covT_decay")
    widths = {len(l.split(",")) for l in lines}
    assert widths == {10}
    t = [float(l.split(",")[1]) for l in lines[1:]]
    assert np.all(np.diff(t) > 0) and abs(t[-1] - 3.0) < 1e-12
    # 17 significant digits round-trip doubles
    assert all(format(float(c), ".17g") == c for l in lines[1:] for c in l.split(",")[1:])
    hyp = (tmp_path / "out" / "hyperboloid.csv").read_text().splitlines()
    assert hyp[0] == ("tau,hyp_energy,weighted_L2,weighted_L2_cosh,weighted_Linf_cosh,ks_ratio,"
                      "ode_quantity_axis,ode_quantity_mid")
    assert [l.split(",")[0] for l in hyp[1:]] == ["2", "2.5"]


def test_golden_headers_other_models(tmp_path):
    cfg = write_cfg(tmp_path, model="csd_abelian", t_end=0.2)
    assert cli.main(["run", str(cfg)]) == 0
    head = (tmp_path / "out" / "diagnostics.csv").read_text().splitlines()[0]
    assert head.endswith("sup_decay,sup_covT_decay,dirac_resid_max")


def test_runs_are_byte_identical(tmp_path):
    outs = []
    for k in range(2):
        out = tmp_path / f"run{k}"
        cfg = write_cfg(tmp_path, name=f"c{k}.cfg", t_end=3.0, n=64, hw=6.4, out=out,
                        extra="[hyperboloid]\ntaus = 2.0\n[output]\ndump_state = true")
        outs.append(out)
        assert cli.main(["run", str(cfg)]) == 0
    for name in ("diagnostics.csv", "hyperboloid.csv", "state_initial.bin", "state_final.bin"):
        assert filecmp.cmp(outs[0] / name, outs[1] / name, shallow=False)


def test_threads_do_not_change_output(tmp_path, monkeypatch):
    outs = []
    for k, threads in enumerate(["1", "3"]):
        monkeypatch.setenv("CSSIM_THREADS", threads)
        out = tmp_path / f"run{k}"
        assert cli.main(["run", str(write_cfg(tmp_path, name=f"c{k}.cfg", out=out))]) == 0
        outs.append(out)
    assert filecmp.cmp(outs[0] / "diagnostics.csv", outs[1] / "diagnostics.csv", shallow=False)


@pytest.mark.parametrize("raw, expect", [("", 1), ("1", 1), ("2", min(2, os.cpu_count() or 1)), ("100000", os.cpu_count())])
def test_thread_count(monkeypatch, raw, expect):
    monkeypatch.setenv("CSSIM_THREADS", raw)
    assert cli.thread_count() == expect


@pytest.mark.parametrize("raw", ["0", "-2", "many"])
def test_bad_thread_count_is_config_error(tmp_path, monkeypatch, raw):
    monkeypatch.setenv("CSSIM_THREADS", raw)
    assert cli.main(["run", str(write_cfg(tmp_path))]) == cli.EXIT_CONFIG


def test_exit_code_config_errors(tmp_path, capsys):
    assert cli.main(["run", str(tmp_path / "missing.cfg")]) == cli.EXIT_CONFIG
    bad = tmp_path / "bad.cfg"
    bad.write_text("[model]\nmodel = csh_abelian\n[grid]\nn = lots\n")
    assert cli.main(["initdata", str(bad)]) == cli.EXIT_CONFIG
    assert "bad.cfg:4" in capsys.readouterr().err


def test_exit_code_numerical_abort(tmp_path, capsys):
    # a box barely wider than R + t_end and a hair-trigger escape threshold
    cfg = write_cfg(tmp_path, n=64, hw=2.4, t_end=1.0, extra="escape_tol = 1e-8")
    assert cli.main(["run", str(cfg)]) == cli.EXIT_ABORT
    assert "support reached the boundary" in capsys.readouterr().err


def test_exit_code_identity_failure(monkeypatch, capsys):
    bad = ids.SuiteReport(rows=[ids.IdentityRow("x", "g", "u1", "FAIL", 1.0, 1)])
    monkeypatch.setattr(cli, "identity_suite", lambda *a, **k: bad)
    assert cli.main(["verify"]) == cli.EXIT_IDENTITY
    assert "overall: FAIL" in capsys.readouterr().out


def test_verify_abelian_only(capsys):
    assert cli.main(["verify", "--seed", "2", "--trials", "2", "--abelian-only"]) == 0
    out = capsys.readouterr().out
    assert "SKIPPED u1" in out and "overall: PASS" in out


def test_initdata_reports_and_writes(tmp_path, capsys):
    cfg = write_cfg(tmp_path, n=96, hw=4.8)
    assert cli.main(["initdata", str(cfg)]) == 0
    out = dict(l.split(" = ", 1) for l in capsys.readouterr().out.splitlines())
    assert float(out["constraint_resid_max"]) < 1e-8 * 0.01**2
    assert abs(float(out["charge"]) - float(out["charge_from_source"])) < 1e-12
    state, meta = read_checkpoint(tmp_path / "out" / "initdata.bin")
    assert meta["model"] == "csh_abelian" and state.phi.shape == (1, 96, 96)


def test_initdata_vacuum_and_su2(tmp_path, capsys):
    assert cli.main(["initdata", str(write_cfg(tmp_path, eps=0.0))]) == 0
    out = dict(l.split(" = ", 1) for l in capsys.readouterr().out.splitlines())
    assert float(out["constraint_resid_max"]) == 0 and float(out["charge"]) == 0
    assert cli.main(["initdata", str(write_cfg(tmp_path, model="csh_adjoint_su2"))]) == 0
    out = dict(l.split(" = ", 1) for l in capsys.readouterr().out.splitlines())
    assert int(out["picard_iterations"]) <= 10


def test_console_script(tmp_path):
    r = subprocess.run([sys.executable, "-m", "cssim.cli", "run", str(write_cfg(tmp_path, eps=0.0))],
                       capture_output=True, text=True)
    assert r.returncode == 0
    r = subprocess.run([sys.executable, "-m", "cssim.cli", "bogus"], capture_output=True, text=True)
    assert r.returncode == 2  # argparse usage error
