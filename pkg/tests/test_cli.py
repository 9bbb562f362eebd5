import json
import os

import numpy as np
import pytest

from ddregister.cli import main, read_csv, write_csv


def run_cli(*args) -> int:
    return main([str(a) for a in args])


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


def test_resonances_command(tmp_path):
    out = tmp_path / "r"
    assert run_cli("resonances", "--qubit", "q1", "--orders", "1,2", "--out-dir", out) == 0
    data = read_json(out / "resonances_q1.json")
    assert data["qubit"] == "q1"
    k2 = data["orders"][1]
    assert k2["conditional"]["m"] == 3
    assert k2["conditional"]["t_refined_us"] == pytest.approx(7.081, rel=5e-3)
    manifest = read_json(out / "manifest.json")
    assert manifest["command"] == "resonances"
    assert "resonances_q1.json" in manifest["outputs"]


def test_calibrate_table_command(tmp_path):
    out = tmp_path / "c"
    assert run_cli("calibrate", "--gate", "table", "--out-dir", out) == 0
    table = read_json(out / "calibration_table.json")
    assert len(table) == 9
    by_key = {(r["gate"], r["targets"][0]): r for r in table}
    assert by_key[("CX", "q1")]["repeats"] == 7


def test_design_parallel_command(tmp_path):
    out = tmp_path / "d"
    assert run_cli("design-parallel", "--qubits", "q1,q2,q3", "--out-dir", out) == 0
    data = read_json(out / "design.json")
    assert data["t_us"] == pytest.approx(2.472, rel=5e-3)
    assert data["repeats"] == 6
    assert data["residual_spectator"] == "q4"


def test_design_parallel_domain_error_exit_code(tmp_path, capsys):
    out = tmp_path / "bad"
    code = run_cli("design-parallel", "--qubits", "q1,q3", "--out-dir", out)
    assert code == 1
    assert "no parallel entangler" in capsys.readouterr().err


def test_argument_error_exit_code():
    with pytest.raises(SystemExit) as exc:
        run_cli("design-parallel")  # missing --qubits
    assert exc.value.code == 2


def test_scan_alignment_and_metrics(tmp_path):
    out = tmp_path / "s"
    assert (
        run_cli(
            "scan", "--kind", "alignment", "--t-min", 2.4, "--t-max", 2.5, "--t-step", 0.01,
            "--out-dir", out,
        )
        == 0
    )
    header, rows = read_csv(out / "alignment.csv")
    assert header[0] == "t_us"
    assert "dot_q1" in header and "phi_q4" in header
    assert len(rows) == 11

    out2 = tmp_path / "m"
    assert (
        run_cli(
            "scan", "--kind", "metrics", "--qubits", "q1,q2,q3",
            "--t-min", 2.46, "--t-max", 2.48, "--t-step", 0.005,
            "--n-min", 1, "--n-max", 8, "--out-dir", out2,
        )
        == 0
    )
    manifest = read_json(out2 / "manifest.json")
    assert manifest["argmax"]["repeats"] == 6


def test_simulate_mqc_ideal_and_fit(tmp_path):
    out = tmp_path / "mqc"
    assert (
        run_cli(
            "simulate", "mqc", "--mode", "bipartite", "--qubits", "q1",
            "--backend", "ideal", "--phi-max", 12.56, "--phi-step", 0.5236,
            "--out-dir", out,
        )
        == 0
    )
    fit = read_json(out / "fit.json")
    assert fit["tones"][0]["frequency"] == pytest.approx(1.0, abs=0.02)
    header, rows = read_csv(out / "mqc.csv")
    assert header == ["phi_rad", "p0_electron"]
    assert len(rows) >= 8


def test_simulate_repeat_and_gatefid_roundtrip(tmp_path):
    out = tmp_path / "rep"
    assert (
        run_cli(
            "simulate", "repeat", "--kind", "cx", "--qubits", "q1",
            "--backend", "ideal", "--n-values", "0,4,8,12", "--out-dir", out,
        )
        == 0
    )
    header, rows = read_csv(out / "repeat.csv")
    assert header[:2] == ["N_E", "z_e"]
    out2 = tmp_path / "fit"
    assert (
        run_cli("fit", "gatefid", "--in", out / "repeat.csv", "--m", 2, "--out-dir", out2) == 0
    )
    fit = read_json(out2 / "gatefit.json")
    assert fit["eps_gate"] == pytest.approx(0.0, abs=0.005)


def test_fit_mqc_rejects_wrong_schema(tmp_path):
    bad = tmp_path / "bad.csv"
    write_csv(bad, ["x", "y"], [[0.0, 1.0]])
    assert run_cli("fit", "mqc", "--in", bad, "--out-dir", tmp_path / "o") == 1


def test_csv_roundtrip_17_digits(tmp_path):
    path = tmp_path / "t.csv"
    values = [np.pi, 1 / 3, 2.4713182769296824e-7, 123456.789012345678]
    write_csv(path, ["a", "b", "c", "d"], [values])
    _, rows = read_csv(path)
    assert rows[0] == values  # exact float round-trip


def test_outputs_bitwise_reproducible(tmp_path):
    args = [
        "simulate", "mqc", "--mode", "bipartite", "--qubits", "q2",
        "--backend", "compiled", "--phi-max", 6.29, "--phi-step", 0.5236, "--seed", 3,
    ]
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert run_cli(*args, "--out-dir", out1) == 0
    assert run_cli(*args, "--out-dir", out2) == 0
    for name in ("mqc.csv", "fit.json"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


def test_scan_field_command(tmp_path):
    out = tmp_path / "f"
    assert (
        run_cli("scan-field", "--b-min", 330, "--b-max", 346, "--b-step", 2, "--out-dir", out) == 0
    )
    header, rows = read_csv(out / "fieldscan.csv")
    assert header[0] == "field_gauss"
    manifest = read_json(out / "manifest.json")
    assert "recommended_fields_gauss" in manifest
