import csv
import io
import json
import math
from dataclasses import replace

import numpy as np
import pytest

from qswitch.bench import Axis, SweepResult
from qswitch.cli import COMMANDS, config_hash, config_to_dict, emit, load_baseline_text, main, parse_config
from qswitch.egs import evaluate_egs
from qswitch.errors import ConfigError
from qswitch.hwmodel import HardwareProfile
from qswitch.memswitch import DEFAULT_SEED, Estimator, evaluate_mem

SMALL = {
    "estimator": "mc",
    "n_samples": 3000,
    "K_range": [1, 12],
    "beta_axis": [0.01, 0.05, 0.1],
    "L_axis": [0.1, 1.0],
    "f_axis": [1e6, 1e7],
    "scenarios": [{"name": "baseline", "overrides": {}}, {"name": "f_1GHz", "overrides": {"pulse_rate": 1e9}}],
}


def run_cli(tmp_path, capsys, command, config=None, *extra):
    args = [command]
    if config is not None:
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(config))
        args.append(str(path))
    status = main([*args, *extra])
    captured = capsys.readouterr()
    return status, captured.out.strip(), captured.err.strip()


def summary_fields(line):
    return dict(part.split("=", 1) for part in line.split())


def test_bundled_baseline():
    cfg = parse_config(load_baseline_text())
    p = cfg.profile
    assert (p.n_clients, p.multiplex, p.bsm_budget) == (6, (3,) * 6, 8)
    assert (p.detector_eff, p.p_bsa, p.p_swap, p.attenuation, p.link_length) == (0.9, 0.5, 1.0, 0.2, 1.0)
    assert (p.gate_eff_mem, p.gate_eff_switch, p.beta, p.light_speed) == (0.85, 0.85, 0.03, 2e8)
    assert (p.tau_c, p.tau_a, p.pulse_rate, p.coherence_time, p.q_bsm) == (2e-6, 3e-6, 1e7, 5e-4, 0.97)
    assert cfg.seed == DEFAULT_SEED


def test_empty_document_equals_baseline():
    assert parse_config("") == parse_config(load_baseline_text())
    assert parse_config("{}") == parse_config("  \n")


def test_invariant_violation_names_field():
    with pytest.raises(ConfigError) as info:
        parse_config('{"profile": {"detector_eff": 1.2}}')
    assert info.value.field == "profile.detector_eff"
    assert "detector_eff" in str(info.value)


@pytest.mark.parametrize(
    "text, field",
    [
        ('{"bogus": 1}', "bogus"),
        ('{"profile": {"bogus": 1}}', "profile.bogus"),
        ('{"n_samples": 0}', "n_samples"),
        ('{"K_range": [5, 2]}', "K_range"),
        ('{"estimator": "fast"}', "estimator"),
        ('{"profile": {"n_clients": true}}', "profile.n_clients"),
        ('{"seed": -3}', "seed"),
    ],
)
def test_rejections(text, field):
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert info.value.field == field


def test_syntax_error_position():
    with pytest.raises(ConfigError) as info:
        parse_config('{\n  "seed": 1,\n  "K" 3\n}')
    assert (info.value.line, info.value.column) == (3, 7)


def test_config_round_trip():
    cfg = parse_config(json.dumps({**SMALL, "profile": {"beta": 0.07, "multiplex": [1, 2, 3, 3, 2, 1]}, "out": "x.csv"}))
    again = parse_config(json.dumps(config_to_dict(cfg)))
    assert again == cfg
    assert again.profile == cfg.profile


def test_config_hash_tracks_semantic_fields():
    cfg = parse_config("")
    h = config_hash(cfg)
    assert config_hash(replace(cfg, workers=8, out="elsewhere.json", format="json")) == h
    for change in (
        {"seed": 1},
        {"n_samples": 5},
        {"estimator": "mc"},
        {"K": 12},
        {"profile": cfg.profile.replace(beta=0.031)},
        {"beta_axis": (0.01,)},
    ):
        assert config_hash(replace(cfg, **change)) != h


def test_emit_csv_single_cell_and_masking():
    res = SweepResult(
        axes=[Axis("K", (30,)), Axis("L", (0.1,))],
        metrics={"rate": np.array([[1.0 / 3.0]]), "u": np.array([[np.nan]])},
    )
    text = emit(res, "csv").decode()
    lines = text.split("\n")
    assert lines[-1] == "" and len(lines) == 3
    assert lines[0] == "K,L,rate,u"
    row = next(csv.reader(io.StringIO(lines[1])))
    assert row[0] == "30" and float(row[2]) == 1.0 / 3.0 and row[3] == ""
    assert "\r" not in text
    doc = json.loads(emit(res, "json", {"seed": 5, "config_hash": "ab"}))
    assert doc["shape"] == [1, 1]
    assert doc["metrics"]["u"] == [None]
    assert doc["metadata"]["seed"] == 5 and doc["metadata"]["config_hash"] == "ab"


def test_emit_is_row_major():
    res = SweepResult(axes=[Axis("a", (1, 2)), Axis("b", (10, 20, 30))], metrics={"x": np.arange(6.0).reshape(2, 3)})
    rows = list(csv.reader(io.StringIO(emit(res, "csv").decode())))[1:]
    assert [r[:2] for r in rows] == [["1", "10"], ["1", "20"], ["1", "30"], ["2", "10"], ["2", "20"], ["2", "30"]]
    assert json.loads(emit(res, "json"))["metrics"]["x"] == [0, 1, 2, 3, 4, 5]


def test_egs_command(tmp_path, capsys):
    out = tmp_path / "egs.csv"
    status, line, _ = run_cli(tmp_path, capsys, "egs", None, "--out", str(out))
    assert status == 0
    fields = summary_fields(line)
    assert abs(float(fields["rate_total"]) - 5.083e4) <= 10
    assert abs(float(fields["fidelity_e2e"]) - 0.8703) <= 1e-4
    rows = list(csv.DictReader(io.StringIO(out.read_text())))
    m = evaluate_egs(HardwareProfile())
    assert float(rows[0]["rate_total"]) == m.rate_total
    assert float(rows[0]["fidelity_e2e"]) == m.fidelity_e2e


def test_emax_command(tmp_path, capsys):
    status, line, _ = run_cli(tmp_path, capsys, "emax", {"caps": [3, 3, 3, 3, 3, 3], "budget": 8}, "--out", str(tmp_path / "e.csv"))
    fields = summary_fields(line)
    assert status == 0 and fields["emax"] == "8"
    total = sum(int(item.split(":")[1]) for item in fields["witness"].split(","))
    assert total == 8


def test_compare_prints_signed_delta(tmp_path, capsys):
    status, line, _ = run_cli(tmp_path, capsys, "compare", {"beta": 0.10}, "--out", str(tmp_path / "c.json"), "--format", "json")
    fields = summary_fields(line)
    assert status == 0 and fields["delta_U_NGT"][0] in "+-"
    doc = json.loads((tmp_path / "c.json").read_text())
    assert math.copysign(1, doc["metrics"]["delta_U_NGT"][0]) == float(fields["delta_U_NGT"][0] + "1")


def test_mem_command_matches_library(tmp_path, capsys):
    cfg = {"K": 12, "estimator": "mc", "n_samples": 5000, "seed": 77}
    status, _, _ = run_cli(tmp_path, capsys, "mem", cfg, "--out", str(tmp_path / "m.json"), "--format", "json")
    assert status == 0
    doc = json.loads((tmp_path / "m.json").read_text())
    m = evaluate_mem(HardwareProfile(), 12, "block", Estimator.mc(5000, 77))
    assert doc["metrics"]["rate_total"] == [m.rate_total]
    assert doc["metrics"]["fidelity_e2e"] == [m.fidelity_e2e]
    assert doc["metadata"]["seed"] == 77


def test_overrides_and_errors(tmp_path, capsys):
    status, line, _ = run_cli(tmp_path, capsys, "mem", {"estimator": "mc", "n_samples": 100}, "--seed", "3", "--samples", "200", "--out", str(tmp_path / "m.json"), "--format", "json")
    assert status == 0
    meta = json.loads((tmp_path / "m.json").read_text())["metadata"]
    assert meta["config"]["seed"] == 3 and meta["config"]["n_samples"] == 200
    status, _, err = run_cli(tmp_path, capsys, "egs", {"profile": {"detector_eff": 1.2}})
    assert status != 0 and err.startswith("error=ConfigError field=profile.detector_eff")
    status, _, err = run_cli(tmp_path, capsys, "egs", None, "--out", str(tmp_path / "missing" / "x.csv"))
    assert status != 0 and err.startswith("error=")


@pytest.mark.parametrize("command", COMMANDS)
def test_commands_byte_identical_across_workers(tmp_path, capsys, command):
    blobs = set()
    for fmt in ("csv", "json"):
        outputs = []
        for workers in (1, 2, 8, 1):
            out = tmp_path / f"{command}-{workers}-{len(outputs)}.{fmt}"
            status, _, err = run_cli(tmp_path, capsys, command, {**SMALL, "workers": workers}, "--out", str(out), "--format", fmt)
            assert status == 0, err
            outputs.append(out.read_bytes())
        assert len(set(outputs)) == 1
        blobs.add(outputs[0])
    assert len(blobs) == 2
