import csv
import io
import json
import math
import subprocess
import sys

import pytest

from purcell_bpf import __version__
from purcell_bpf.cli import EXIT_COMPUTE, EXIT_CONFIG, EXIT_OK, main

SUBCOMMANDS = ["synth", "sparams", "ldos", "decay", "t1", "scaling", "tline"]


def _run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def _rows(text):
    return list(csv.reader(io.StringIO(text)))


def _write(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return str(p)


SMALL = {"sweeps": {"frequency": {"start": 5.0e9, "stop": 7.0e9, "points": 41}}}


def test_synth_table_row(capsys):
    code, out, _ = _run(capsys, "synth", "--order", "6", "--insertion-loss", "20")
    assert code == EXIT_OK
    rows = _rows(out)
    assert rows[0] == ["k [1]", "product [g_k*g_k+1]", "rate_name [label]", "rate [Hz]"]
    products = [float(r[1]) for r in rows[1:]]
    for got, want in zip(products, [618.3, 2.734, 2.734, 1.868, 0.911, 0.196, 0.259]):
        assert got == pytest.approx(want, rel=2e-3)


def test_synth_single_pole(capsys):
    code, out, _ = _run(capsys, "synth", "--order", "1", "--insertion-loss", "0")
    assert code == EXIT_OK
    assert [round(float(r[1]), 3) for r in _rows(out)[1:]] == [2.0, 2.0]


def test_synth_zero_order_is_usage_error(capsys):
    code, _, err = _run(capsys, "synth", "--order", "0")
    assert code == EXIT_CONFIG
    assert "order" in err


def test_unknown_subcommand_is_usage_error(capsys):
    with pytest.raises(SystemExit) as info:
        main(["frobnicate"])
    assert info.value.code == EXIT_CONFIG


@pytest.mark.parametrize("il,expected_db", [(0, 0.0), (20, -20.0)])
def test_sparams_center(capsys, tmp_path, il, expected_db):
    cfg = {
        "filter": {"insertion_loss_db": il},
        "sweeps": {"frequency": {"start": 5.9e9, "stop": 6.1e9, "points": 3}},
    }
    code, out, _ = _run(capsys, "--config", _write(tmp_path, cfg), "sparams")
    assert code == EXIT_OK
    rows = _rows(out)
    assert rows[0][:4] == ["frequency [Hz]", "|S21| [dB]", "arg S21 [rad]", "|S11| [dB]"]
    assert float(rows[2][0]) == pytest.approx(6e9)
    assert float(rows[2][1]) == pytest.approx(expected_db, abs=1e-6)


def test_sparams_tline_shows_harmonic_band(capsys, tmp_path):
    cfg = {"filter": {"insertion_loss_db": 0}, "sweeps": {"frequency": {"start": 9e9, "stop": 15e9, "points": 6001}}}
    code, out, _ = _run(capsys, "--config", _write(tmp_path, cfg), "--source", "tline", "sparams")
    assert code == EXIT_OK
    rows = _rows(out)
    assert rows[0][-1] == "singular_stub [bool]"
    assert max(float(r[1]) for r in rows[1:]) > -3


def test_touchstone_export(tmp_path, capsys):
    cfg = _write(tmp_path, SMALL)
    code, _, _ = _run(capsys, "--config", cfg, "--out", str(tmp_path / "o"), "--format", "touchstone", "sparams")
    assert code == EXIT_OK
    lines = (tmp_path / "o" / "sparams.s2p").read_text().splitlines()
    assert lines[1] == "# HZ S RI R 50"
    data = [list(map(float, l.split())) for l in lines[2:]]
    assert len(data) == 41 and all(len(d) == 9 for d in data)
    for d in data:
        s11 = complex(d[1], d[2])
        s21 = complex(d[3], d[4])
        assert abs(s11) ** 2 + abs(s21) ** 2 == pytest.approx(1.0, abs=1e-9)


def test_touchstone_rejected_for_non_sparam_commands(capsys):
    code, _, err = _run(capsys, "--format", "touchstone", "ldos")
    assert code == EXIT_CONFIG
    assert "touchstone" in err


def test_ldos_columns_integrate_to_one(capsys, tmp_path):
    cfg = {"sweeps": {"frequency": {"start": 0.5e9, "stop": 11.5e9, "points": 200001}}}
    code, out, _ = _run(capsys, "--config", _write(tmp_path, cfg), "ldos")
    assert code == EXIT_OK
    rows = _rows(out)
    assert rows[0][0] == "frequency [Hz]" and all(h.endswith("[1/Hz]") for h in rows[0][1:])
    f = [float(r[0]) for r in rows[1:]]
    rho2 = [float(r[2]) for r in rows[1:]]
    area = sum(0.5 * (rho2[i] + rho2[i + 1]) * (f[i + 1] - f[i]) for i in range(len(f) - 1))
    assert area == pytest.approx(1.0, abs=0.01)


def test_decay_summary_and_conservation(tmp_path, capsys):
    code, out, _ = _run(capsys, "--out", str(tmp_path), "decay")
    assert code == EXIT_OK
    meta = json.loads((tmp_path / "decay.meta.json").read_text())
    summary = meta["summary"]
    assert summary["emitted_share_output"] > 0.5
    assert summary["conservation_error"] < 1e-6
    assert summary["fitted_rate_hz"] == pytest.approx(summary["golden_rule_rate_hz"], rel=0.1)
    rows = _rows((tmp_path / "decay.csv").read_text())
    assert rows[0][-1] == "total [1]"
    assert all(abs(float(r[-1]) - 1) < 1e-6 for r in rows[1:])
    assert len(rows) == 402


def test_t1_bare_column_and_fit(capsys, tmp_path):
    cfg = {
        "filter": {"order": 4},
        "chain": {"intrinsic_t1_s": 20e-6},
        "sweeps": {
            "detuning": {"start": -1.0e9, "stop": -0.4e9, "points": 20},
            "fit_window_hz": [0.4e9, 1.0e9],
        },
    }
    code, out, err = _run(capsys, "--config", _write(tmp_path, cfg), "--model", "rwa", "t1")
    assert code == EXIT_OK
    rows = _rows(out)
    head = rows[0]
    assert head == [
        "qubit_frequency [Hz]",
        "detuning [Hz]",
        "T1 [s]",
        "T1_bare [s]",
        "T1_with_intrinsic [s]",
        "gap [bool]",
    ]
    first = rows[1]
    d = 2 * math.pi * float(first[1])
    bare = d**2 / ((2 * math.pi * 15e6) * (2 * math.pi * 100e6) ** 2)
    assert float(first[3]) == pytest.approx(bare, rel=1e-12)
    t1, combined = float(first[2]), float(first[4])
    assert combined == pytest.approx(1 / (1 / t1 + 1 / 20e-6), rel=1e-12)
    assert "fit_exponent" in err


def test_t1_empty_sweep_writes_header_only(capsys, tmp_path):
    cfg = {"sweeps": {"detuning": {"start": -1e9, "stop": -0.4e9, "points": 0}}}
    code, out, _ = _run(capsys, "--config", _write(tmp_path, cfg), "t1")
    assert code == EXIT_OK
    rows = _rows(out)
    assert len(rows) == 1 and rows[0][0] == "qubit_frequency [Hz]"


def test_scaling_reports_exponents(capsys, tmp_path):
    cfg = {"scaling": {"orders": [2, 3], "insertion_losses_db": [50]}}
    code, out, _ = _run(capsys, "--config", _write(tmp_path, cfg), "scaling")
    assert code == EXIT_OK
    rows = _rows(out)
    assert [float(r[2]) for r in rows[1:]] == pytest.approx([5.28, 7.15], abs=0.02)


def test_tline_design_table(capsys, tmp_path):
    cfg = {"filter": {"order": 4, "insertion_loss_db": 0, "center_frequency_hz": 5.7e9, "bandwidth_hz": 5e8}}
    code, out, err = _run(capsys, "--config", _write(tmp_path, cfg), "tline")
    assert code == EXIT_OK
    rows = _rows(out)
    assert rows[0] == ["n [1]", "Z0J [1]", "phi [rad]", "theta [rad]"]
    assert float(rows[1][1]) == pytest.approx(0.4243, abs=1e-4)
    assert "theta_residual = " in err


def test_tline_sweep_tables(tmp_path, capsys):
    code, _, _ = _run(capsys, "--config", _write(tmp_path, SMALL), "--out", str(tmp_path / "o"), "tline")
    assert code == EXIT_OK
    names = sorted(p.name for p in (tmp_path / "o").iterdir())
    assert "tline.csv" in names and "tline_sparams.csv" in names and "tline_tap.csv" in names


def test_tline_unrealizable_is_computation_error(capsys, tmp_path):
    cfg = {"filter": {"order": 6, "insertion_loss_db": 20, "center_frequency_hz": 6e9, "bandwidth_hz": 3e9}}
    code, _, err = _run(capsys, "--config", _write(tmp_path, cfg), "tline")
    assert code == EXIT_COMPUTE
    assert "Z0*J_6" in err


@pytest.mark.parametrize(
    "cfg",
    [
        {"filter": {"order": "six"}},
        {"filtr": {}},
        {"sweeps": {"frequency": {"start": 1, "stop": 2}}},
        {"chain": {"model": "exact"}},
    ],
)
def test_schema_violations(capsys, tmp_path, cfg):
    code, _, err = _run(capsys, "--config", _write(tmp_path, cfg), "synth")
    assert code == EXIT_CONFIG
    assert err.startswith("error: config error")


def test_missing_and_malformed_config(capsys, tmp_path):
    assert _run(capsys, "--config", str(tmp_path / "nope.json"), "synth")[0] == EXIT_CONFIG
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert _run(capsys, "--config", str(bad), "synth")[0] == EXIT_CONFIG


def test_flags_accepted_after_subcommand(capsys, tmp_path):
    code, out, _ = _run(capsys, "sparams", "--config", _write(tmp_path, SMALL), "--source", "tline", "--format", "json")
    assert code == EXIT_OK
    data = json.loads(out)
    assert [c["name"] for c in data["columns"]][:2] == ["frequency", "|S21|"]
    assert all(c["unit"] for c in data["columns"])


@pytest.mark.parametrize("cmd", SUBCOMMANDS)
def test_deterministic_output(tmp_path, capsys, cmd):
    cfg = _write(tmp_path, {**SMALL, "scaling": {"orders": [2], "insertion_losses_db": [20]}, "decay": {"horizon_s": 2e-7, "records": 21}})
    texts = []
    for run in ("a", "b"):
        out = tmp_path / run
        assert main(["--config", cfg, "--out", str(out), cmd]) == EXIT_OK
        texts.append({p.name: p.read_bytes() for p in sorted(out.iterdir()) if not p.name.endswith(".meta.json")})
        meta = json.loads(next(out.glob("*.meta.json")).read_text())
        assert meta["toolkit_version"] == __version__ and "timestamp" in meta
    capsys.readouterr()
    assert texts[0] == texts[1] and texts[0]


def test_module_entry_point():
    out = subprocess.run(
        [sys.executable, "-m", "purcell_bpf", "synth", "--order", "2", "--insertion-loss", "0"],
        capture_output=True,
        text=True,
    )
    assert out.returncode == 0
    assert out.stdout.splitlines()[1].startswith("0,1.41421356")
